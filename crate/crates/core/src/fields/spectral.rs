use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::{GridSpec, ScalarField};

/// Below this many points per transform the line loop stays sequential.
const PAR_THRESHOLD: usize = 1 << 14;

/// Fourier coefficients of a scalar field in the same row-major layout.
///
/// The forward transform is unnormalized; the inverse divides by the number
/// of points. Parseval therefore reads `sum |f|^2 = sum |c|^2 / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of the signed mode `(kx, ky, kz)`.
    pub fn mode(&self, k: [i64; 3]) -> Complex64 {
        let g = &self.grid;
        let idx = g.index(
            g.storage_of_mode(0, k[0]),
            g.storage_of_mode(1, k[1]),
            g.storage_of_mode(2, k[2]),
        );
        self.coeffs[idx]
    }

    /// Volume-weighted L2 norm of the physical field, computed from coefficients.
    pub fn norm_l2(&self) -> f64 {
        let n = self.grid.len() as f64;
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (sum * self.grid.cell_volume() / n).sqrt()
    }

    /// Applies `f(index, [mx, my, mz], coeff)` in place, where `m*` are storage
    /// positions along each axis.
    pub fn for_each_mode(&mut self, mut f: impl FnMut([usize; 3], &mut Complex64)) {
        let [nx, ny, nz] = self.grid.dims();
        let mut idx = 0;
        for mx in 0..nx {
            for my in 0..ny {
                for mz in 0..nz {
                    f([mx, my, mz], &mut self.coeffs[idx]);
                    idx += 1;
                }
            }
        }
    }

    /// Returns a new field with every coefficient mapped through `f`.
    pub fn map_modes(&self, mut f: impl FnMut([usize; 3], Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        out.for_each_mode(|m, c| *c = f(m, *c));
        out
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, Arc<Plans>>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    if let Some(p) = map.get(&n) {
        return p.clone();
    }
    let p = Arc::new(Plans {
        forward: planner.plan_fft(n, FftDirection::Forward),
        inverse: planner.plan_fft(n, FftDirection::Inverse),
    });
    map.insert(n, p.clone());
    p
}

/// In-place 1D transforms along every line of `axis`. Strided axes are
/// gathered into contiguous lines, transformed in one batch and scattered back.
fn transform_axis(data: &mut [Complex64], dims: [usize; 3], axis: usize, inverse: bool) {
    let n = dims[axis];
    if n == 1 {
        return;
    }
    let p = plans(n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    let total = data.len();
    let batch = |buf: &mut [Complex64]| {
        if total >= PAR_THRESHOLD {
            buf.par_chunks_mut(n * 64.min(total / n))
                .for_each(|lines| fft.process(lines));
        } else {
            fft.process(buf);
        }
    };

    if axis == 2 {
        batch(data);
        return;
    }
    // index = (o * n + m) * inner + r
    let inner: usize = dims[axis + 1..].iter().product();
    let outer = total / (n * inner);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for o in 0..outer {
        for m in 0..n {
            let src = &data[(o * n + m) * inner..(o * n + m + 1) * inner];
            for (r, &c) in src.iter().enumerate() {
                buf[(o * inner + r) * n + m] = c;
            }
        }
    }
    batch(&mut buf);
    for o in 0..outer {
        for m in 0..n {
            let dst = &mut data[(o * n + m) * inner..(o * n + m + 1) * inner];
            for (r, c) in dst.iter_mut().enumerate() {
                *c = buf[(o * inner + r) * n + m];
            }
        }
    }
}

/// Forward 3D discrete Fourier transform (unnormalized).
pub fn to_spectral(f: &ScalarField) -> SpectralField {
    let grid = *f.grid();
    if f.values().iter().all(|&v| v == 0.0) {
        return SpectralField::zeros(grid);
    }
    let mut coeffs: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for axis in (0..3).rev() {
        transform_axis(&mut coeffs, grid.dims(), axis, false);
    }
    SpectralField { grid, coeffs }
}

/// Inverse 3D transform, keeping the real part.
pub fn from_spectral(s: &SpectralField) -> ScalarField {
    let grid = s.grid;
    if s.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
        return ScalarField::zeros(grid);
    }
    let mut data = s.coeffs.clone();
    for axis in 0..3 {
        transform_axis(&mut data, grid.dims(), axis, true);
    }
    let scale = 1.0 / grid.len() as f64;
    ScalarField::from_values(grid, data.into_iter().map(|c| c.re * scale).collect())
}

/// True when the storage position survives the two-thirds rule on every axis.
#[inline]
pub(crate) fn retained(grid: &GridSpec, m: [usize; 3]) -> bool {
    (0..3).all(|a| {
        let n = grid.dims()[a];
        n == 1 || 3 * grid.mode(a, m[a]).unsigned_abs() as usize <= n
    })
}

/// Zeroes every mode with `|k_i| > n_i / 3` on some active axis.
pub fn dealias(s: &SpectralField) -> SpectralField {
    let grid = s.grid;
    s.map_modes(|m, c| {
        if retained(&grid, m) {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
