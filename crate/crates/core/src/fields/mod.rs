//! Periodic grid fields and the algebra the solver is built from.
//!
//! Scalar, vector and rank-2 tensor fields all store their components as
//! [`ScalarField`]s on a shared [`GridSpec`]. Values are row-major with `z`
//! fastest. All operations are pure and produce new fields; reductions use a
//! fixed sequential order so results do not depend on thread count.

mod grid;
pub mod snapshot;
mod spectral;

pub use grid::{make_grid, GridSpec};
pub use spectral::{dealias, from_spectral, to_spectral, SpectralField};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Wraps raw row-major values. Panics when the length does not match the grid.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count does not match grid");
        ScalarField { grid, values }
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let [x, y, z] = grid.coords(i);
                f(x, y, z)
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise binary operation. Panics on grid mismatch; the checked
    /// variants live on [`Field`].
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise product without dealiasing.
    pub fn mul_raw(&self, other: &ScalarField) -> ScalarField {
        self.zip_with(other, |a, b| a * b)
    }

    /// Pointwise product followed by two-thirds truncation.
    pub fn mul_dealiased(&self, other: &ScalarField) -> ScalarField {
        from_spectral(&dealias(&to_spectral(&self.mul_raw(other))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let z = ScalarField::zeros(grid);
        VectorField {
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn constant(grid: GridSpec, c: [f64; 3]) -> Self {
        VectorField {
            comps: c.map(|ci| ScalarField::constant(grid, ci)),
        }
    }

    /// Panics when the components live on different grids.
    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Self {
        assert!(x.grid == y.grid && y.grid == z.grid, "component grid mismatch");
        VectorField { comps: [x, y, z] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut out = VectorField::zeros(grid);
        for i in 0..grid.len() {
            let [x, y, z] = grid.coords(i);
            let v = f(x, y, z);
            for (c, vc) in out.comps.iter_mut().zip(v) {
                c.values[i] = vc;
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.comps[0].grid
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.comps[i]
    }

    pub fn x(&self) -> &ScalarField {
        &self.comps[0]
    }

    pub fn y(&self) -> &ScalarField {
        &self.comps[1]
    }

    pub fn z(&self) -> &ScalarField {
        &self.comps[2]
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.comps[0].values[idx],
            self.comps[1].values[idx],
            self.comps[2].values[idx],
        ]
    }

    /// Pointwise `|v|^2`.
    pub fn magnitude_sq(&self) -> ScalarField {
        let g = *self.grid();
        let values = (0..g.len())
            .map(|i| {
                let [a, b, c] = self.at(i);
                a * a + b * b + c * c
            })
            .collect();
        ScalarField::from_values(g, values)
    }

    /// Largest pointwise magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.magnitude_sq().max().max(0.0).sqrt()
    }

    /// Pointwise dot product, not dealiased.
    pub fn dot_raw(&self, other: &VectorField) -> ScalarField {
        let mut acc = self.comps[0].mul_raw(&other.comps[0]);
        for i in 1..3 {
            let p = self.comps[i].mul_raw(&other.comps[i]);
            acc.values.iter_mut().zip(&p.values).for_each(|(a, b)| *a += b);
        }
        acc
    }

    /// Pointwise cross product, not dealiased.
    pub fn cross_raw(&self, other: &VectorField) -> VectorField {
        let a = &self.comps;
        let b = &other.comps;
        let term = |i: usize, j: usize| {
            let g = a[i].grid;
            let values = (0..g.len())
                .map(|n| a[i].values[n] * b[j].values[n] - a[j].values[n] * b[i].values[n])
                .collect();
            ScalarField::from_values(g, values)
        };
        VectorField::new(term(1, 2), term(2, 0), term(0, 1))
    }

    /// Every component multiplied by the scalar field, not dealiased.
    pub fn scale_by_raw(&self, s: &ScalarField) -> VectorField {
        VectorField {
            comps: [
                self.comps[0].mul_raw(s),
                self.comps[1].mul_raw(s),
                self.comps[2].mul_raw(s),
            ],
        }
    }
}

/// Rank-2 tensor field, not assumed symmetric. Component `(i, j)` is stored at `3 i + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    comps: [ScalarField; 9],
}

impl TensorField {
    pub fn zeros(grid: GridSpec) -> Self {
        TensorField {
            comps: std::array::from_fn(|_| ScalarField::zeros(grid)),
        }
    }

    pub fn from_components(comps: [ScalarField; 9]) -> Self {
        let g = comps[0].grid;
        assert!(comps.iter().all(|c| c.grid == g), "component grid mismatch");
        TensorField { comps }
    }

    /// `f * I`.
    pub fn isotropic(f: &ScalarField) -> Self {
        let z = ScalarField::zeros(f.grid);
        TensorField {
            comps: std::array::from_fn(|k| if k % 4 == 0 { f.clone() } else { z.clone() }),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.comps[0].grid
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[3 * i + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut ScalarField {
        &mut self.comps[3 * i + j]
    }

    pub fn transpose(&self) -> TensorField {
        TensorField {
            comps: std::array::from_fn(|k| self.comps[3 * (k % 3) + k / 3].clone()),
        }
    }
}

/// Shared algebra for scalar, vector and tensor fields.
pub trait Field: Clone + Sized {
    fn components(&self) -> &[ScalarField];
    fn components_mut(&mut self) -> &mut [ScalarField];

    fn field_grid(&self) -> &GridSpec {
        self.components()[0].grid()
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        self.field_grid().check_same(other.field_grid())
    }

    /// `a * x + self`. No fused multiply-add, so `a = 0` and `a = 1` reproduce
    /// the inputs exactly.
    fn axpy(&self, a: f64, x: &Self) -> Result<Self> {
        self.check_grid(x)?;
        Ok(self.axpy_unchecked(a, x))
    }

    fn axpy_unchecked(&self, a: f64, x: &Self) -> Self {
        let mut out = self.clone();
        for (o, xc) in out.components_mut().iter_mut().zip(x.components()) {
            o.values
                .iter_mut()
                .zip(&xc.values)
                .for_each(|(y, &xv)| *y += a * xv);
        }
        out
    }

    fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.zip_components(other, |a, b| a + b))
    }

    fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.zip_components(other, |a, b| a - b))
    }

    /// Pointwise (component by component) product.
    fn mul(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.zip_components(other, |a, b| a * b))
    }

    fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in out.components_mut() {
            c.values.iter_mut().for_each(|v| *v *= a);
        }
        out
    }

    fn zip_components(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (o, b) in out.components_mut().iter_mut().zip(other.components()) {
            o.values
                .iter_mut()
                .zip(&b.values)
                .for_each(|(a, &bv)| *a = f(*a, bv));
        }
        out
    }

    /// Volume-weighted discrete L2 norm over all components.
    fn norm_l2(&self) -> f64 {
        let dv = self.field_grid().cell_volume();
        let sum: f64 = self
            .components()
            .iter()
            .map(|c| c.values.iter().map(|v| v * v).sum::<f64>())
            .sum();
        (sum * dv).sqrt()
    }

    /// Largest absolute value over all components.
    fn norm_linf(&self) -> f64 {
        self.components()
            .iter()
            .flat_map(|c| c.values.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn is_finite(&self) -> bool {
        self.components()
            .iter()
            .all(|c| c.values.iter().all(|v| v.is_finite()))
    }

    /// Two-thirds truncation applied to every component.
    fn dealiased(&self) -> Self {
        let mut out = self.clone();
        for c in out.components_mut() {
            *c = from_spectral(&dealias(&to_spectral(c)));
        }
        out
    }
}

impl Field for ScalarField {
    fn components(&self) -> &[ScalarField] {
        std::slice::from_ref(self)
    }
    fn components_mut(&mut self) -> &mut [ScalarField] {
        std::slice::from_mut(self)
    }
}

impl Field for VectorField {
    fn components(&self) -> &[ScalarField] {
        &self.comps
    }
    fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.comps
    }
}

impl Field for TensorField {
    fn components(&self) -> &[ScalarField] {
        &self.comps
    }
    fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.comps
    }
}

/// Free-function form of [`Field::axpy`]: `a * x + y`.
pub fn axpy<F: Field>(a: f64, x: &F, y: &F) -> Result<F> {
    y.axpy(a, x)
}

pub fn norm_l2<F: Field>(f: &F) -> f64 {
    f.norm_l2()
}

pub fn norm_linf<F: Field>(f: &F) -> f64 {
    f.norm_linf()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid64() -> GridSpec {
        make_grid([64, 64, 1], [2.0 * PI; 3]).unwrap()
    }

    #[test]
    fn axpy_identities() {
        let g = grid64();
        let x = ScalarField::from_fn(g, |x, y, _| x.sin() * y.cos() + 0.3);
        let y = ScalarField::from_fn(g, |x, _, _| (2.0 * x).cos());
        assert_eq!(axpy(0.0, &x, &y).unwrap(), y);
        assert_eq!(axpy(1.0, &x, &ScalarField::zeros(g)).unwrap(), x);
        let five = axpy(
            2.0,
            &ScalarField::constant(g, 1.0),
            &ScalarField::constant(g, 3.0),
        )
        .unwrap();
        assert!(five.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = ScalarField::zeros(grid64());
        let b = ScalarField::zeros(make_grid([32, 32, 1], [2.0 * PI; 3]).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch { .. })));
        assert!(matches!(axpy(1.0, &a, &b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn norms() {
        let g = make_grid([64, 64, 64], [2.0 * PI; 3]).unwrap();
        assert_eq!(ScalarField::zeros(g).norm_l2(), 0.0);
        let s = ScalarField::from_fn(g, |x, _, _| x.sin());
        let expected = ((2.0 * PI).powi(3) / 2.0).sqrt();
        assert!((s.norm_l2() - expected).abs() < 1e-12);
        assert_eq!(ScalarField::constant(g, -2.5).norm_linf(), 2.5);

        let v = VectorField::constant(grid64(), [0.0, -3.0, 1.0]);
        assert_eq!(v.norm_linf(), 3.0);
    }

    #[test]
    fn planar_sine_norm_matches_closed_form() {
        let s = ScalarField::from_fn(grid64(), |x, _, _| x.sin());
        let expected = ((2.0 * PI).powi(3) / 2.0).sqrt();
        assert!((s.norm_l2() - expected).abs() < 1e-12);
    }

    #[test]
    fn cross_and_dot() {
        let g = grid64();
        let a = VectorField::constant(g, [1.0, 0.0, 0.0]);
        let b = VectorField::constant(g, [0.0, 1.0, 0.0]);
        let c = a.cross_raw(&b);
        assert_eq!(c.at(17), [0.0, 0.0, 1.0]);
        assert!(a.dot_raw(&b).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tensor_transpose() {
        let g = grid64();
        let mut t = TensorField::zeros(g);
        *t.get_mut(0, 1) = ScalarField::constant(g, 2.0);
        let tt = t.transpose();
        assert_eq!(tt.get(1, 0).values()[0], 2.0);
        assert_eq!(tt.get(0, 1).values()[0], 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn add_commutes_bitwise(seed in 0u64..1000) {
            let g = make_grid([8, 8, 1], [1.0; 3]).unwrap();
            let a = ScalarField::from_fn(g, |x, y, _| (seed as f64 * 0.37 + x * 3.1).sin() * y);
            let b = ScalarField::from_fn(g, |x, y, _| (seed as f64 * 0.11 - y).cos() + x);
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        }
    }
}
