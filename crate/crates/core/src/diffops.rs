//! Spectral differential operators on periodic fields.
//!
//! Every derivative is a multiplication by `i k` in Fourier space, with the
//! Nyquist mode mapped to zero. Second derivatives reuse the same wavenumbers,
//! so discrete identities such as `div curl = 0`, `curl grad = 0` and
//! `curl curl = grad div - lap` hold to rounding for any input field.
//!
//! Nonlinear operators return two-thirds dealiased results. Operands are
//! expected to share a grid; mismatches panic.
//!
//! Velocity-gradient convention: `(grad v)_ij = d_i v_j` and
//! `(div sigma)_i = sum_j d_j sigma_ij`.

use num_complex::Complex64;

use crate::fields::{
    from_spectral, to_spectral, Field, ScalarField, SpectralField, TensorField,
    VectorField,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spectral derivative along `axis`.
pub fn spectral_deriv(s: &SpectralField, axis: usize) -> SpectralField {
    let g = *s.grid();
    if !g.is_active(axis) {
        return SpectralField::zeros(g);
    }
    s.map_modes(|m, c| c * I * g.deriv_wavenumber(axis, m[axis]))
}

/// `sum_a k_a^2` at a storage position, using derivative wavenumbers.
fn k_squared(s: &SpectralField, m: [usize; 3]) -> f64 {
    let g = s.grid();
    (0..3)
        .map(|a| {
            let k = g.deriv_wavenumber(a, m[a]);
            k * k
        })
        .sum()
}

fn spectral3(v: &VectorField) -> [SpectralField; 3] {
    [to_spectral(v.x()), to_spectral(v.y()), to_spectral(v.z())]
}

/// Physical-space derivative of a scalar field.
pub fn deriv(f: &ScalarField, axis: usize) -> ScalarField {
    from_spectral(&spectral_deriv(&to_spectral(f), axis))
}

pub fn grad(f: &ScalarField) -> VectorField {
    let s = to_spectral(f);
    VectorField::new(
        from_spectral(&spectral_deriv(&s, 0)),
        from_spectral(&spectral_deriv(&s, 1)),
        from_spectral(&spectral_deriv(&s, 2)),
    )
}

pub fn div(v: &VectorField) -> ScalarField {
    let s = spectral3(v);
    let mut acc = spectral_deriv(&s[0], 0);
    for a in 1..3 {
        let d = spectral_deriv(&s[a], a);
        acc.coeffs_mut()
            .iter_mut()
            .zip(d.coeffs())
            .for_each(|(x, y)| *x += y);
    }
    from_spectral(&acc)
}

pub fn curl(v: &VectorField) -> VectorField {
    let s = spectral3(v);
    let diff = |i: usize, a: usize, j: usize, b: usize| {
        // d_a s_i - d_b s_j
        let mut p = spectral_deriv(&s[i], a);
        let q = spectral_deriv(&s[j], b);
        p.coeffs_mut()
            .iter_mut()
            .zip(q.coeffs())
            .for_each(|(x, y)| *x -= y);
        from_spectral(&p)
    };
    VectorField::new(diff(2, 1, 1, 2), diff(0, 2, 2, 0), diff(1, 0, 0, 1))
}

fn laplacian_scalar(f: &ScalarField) -> ScalarField {
    let s = to_spectral(f);
    let lap = s.map_modes(|m, c| -c * k_squared(&s, m));
    from_spectral(&lap)
}

/// Componentwise Laplacian of a scalar, vector or tensor field.
pub fn laplacian<F: Field>(f: &F) -> F {
    let mut out = f.clone();
    for c in out.components_mut() {
        *c = laplacian_scalar(c);
    }
    out
}

/// Zero-mean solution of `lap(phi) = f`. Modes where the discrete Laplacian
/// vanishes (the mean and pure Nyquist modes) are dropped.
pub fn inverse_laplacian(f: &ScalarField) -> ScalarField {
    let s = to_spectral(f);
    let mut out = s.clone();
    out.for_each_mode(|m, c| {
        let k2 = k_squared(&s, m);
        *c = if k2 > 0.0 { -*c / k2 } else { Complex64::new(0.0, 0.0) };
    });
    from_spectral(&out)
}

/// `curl curl v`, evaluated in Fourier space as `k x (k x v)` with the sign of
/// two derivatives, i.e. `grad div v - lap v`.
pub fn curl_curl(v: &VectorField) -> VectorField {
    let s = spectral3(v);
    let g = *v.grid();
    let comp = |i: usize| {
        let mut out = SpectralField::zeros(g);
        let mut idx = 0;
        let coeffs: Vec<&[Complex64]> = s.iter().map(|x| x.coeffs()).collect();
        out.for_each_mode(|m, c| {
            let k = [
                g.deriv_wavenumber(0, m[0]),
                g.deriv_wavenumber(1, m[1]),
                g.deriv_wavenumber(2, m[2]),
            ];
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let kdotv = k[0] * coeffs[0][idx] + k[1] * coeffs[1][idx] + k[2] * coeffs[2][idx];
            // (ik)(ik . v) - (ik . ik) v = -k (k . v) + k^2 v
            *c = coeffs[i][idx] * k2 - kdotv * k[i];
            idx += 1;
        });
        from_spectral(&out)
    };
    VectorField::new(comp(0), comp(1), comp(2))
}

/// Velocity gradient tensor, `(grad v)_ij = d_i v_j`.
pub fn grad_vector(v: &VectorField) -> TensorField {
    let s = spectral3(v);
    TensorField::from_components(std::array::from_fn(|k| {
        let (i, j) = (k / 3, k % 3);
        from_spectral(&spectral_deriv(&s[j], i))
    }))
}

/// Row divergence of a tensor field, `(div sigma)_i = sum_j d_j sigma_ij`.
pub fn div_tensor(sigma: &TensorField) -> VectorField {
    let g = *sigma.grid();
    let row = |i: usize| {
        let mut acc = SpectralField::zeros(g);
        for j in 0..3 {
            let d = spectral_deriv(&to_spectral(sigma.get(i, j)), j);
            acc.coeffs_mut()
                .iter_mut()
                .zip(d.coeffs())
                .for_each(|(x, y)| *x += y);
        }
        from_spectral(&acc)
    };
    VectorField::new(row(0), row(1), row(2))
}

/// Hessian of each velocity component: `hess[k][(i, j)] = d_i d_j v_k`.
fn hessians(v: &VectorField) -> [TensorField; 3] {
    std::array::from_fn(|k| {
        let s = to_spectral(v.comp(k));
        let d: [SpectralField; 3] = std::array::from_fn(|i| spectral_deriv(&s, i));
        TensorField::from_components(std::array::from_fn(|p| {
            let (i, j) = (p / 3, p % 3);
            from_spectral(&spectral_deriv(&d[i], j))
        }))
    })
}

/// Accumulates `out += a * b` pointwise.
fn fma_into(out: &mut ScalarField, a: &ScalarField, b: &ScalarField) {
    out.values_mut()
        .iter_mut()
        .zip(a.values().iter().zip(b.values()))
        .for_each(|(o, (x, y))| *o += x * y);
}

/// `(v . grad) w`, dealiased.
pub fn vector_advection(v: &VectorField, w: &VectorField) -> VectorField {
    let gw = grad_vector(w);
    let g = *v.grid();
    let mut out = VectorField::zeros(g);
    for k in 0..3 {
        for i in 0..3 {
            fma_into(out.comp_mut(k), v.comp(i), gw.get(i, k));
        }
    }
    out.dealiased()
}

/// `(v . grad) f` for a scalar field, dealiased.
pub fn scalar_advection(v: &VectorField, f: &ScalarField) -> ScalarField {
    let gf = grad(f);
    let mut out = ScalarField::zeros(*f.grid());
    for i in 0..3 {
        fma_into(&mut out, v.comp(i), gf.comp(i));
    }
    out.dealiased()
}

/// `result_k = sum_ij sigma_ij d_i d_j v_k`, dealiased.
pub fn hessian_contract(v: &VectorField, sigma: &TensorField) -> VectorField {
    let h = hessians(v);
    let mut out = VectorField::zeros(*v.grid());
    for (k, hk) in h.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                fma_into(out.comp_mut(k), sigma.get(i, j), hk.get(i, j));
            }
        }
    }
    out.dealiased()
}

/// `(v v) : grad grad w = sum_ij v_i v_j d_i d_j w`, dealiased once after the
/// cubic product.
pub fn double_advection(v: &VectorField, w: &VectorField) -> VectorField {
    let h = hessians(w);
    let g = *v.grid();
    let mut out = VectorField::zeros(g);
    for i in 0..3 {
        for j in 0..3 {
            let vv = v.comp(i).mul_raw(v.comp(j));
            for (k, hk) in h.iter().enumerate() {
                fma_into(out.comp_mut(k), &vv, hk.get(i, j));
            }
        }
    }
    out.dealiased()
}

/// Pointwise dot product, dealiased.
pub fn dot(a: &VectorField, b: &VectorField) -> ScalarField {
    a.dot_raw(b).dealiased()
}

/// Pointwise cross product, dealiased.
pub fn cross(a: &VectorField, b: &VectorField) -> VectorField {
    a.cross_raw(b).dealiased()
}

/// `f v`, dealiased.
pub fn scale_by(v: &VectorField, f: &ScalarField) -> VectorField {
    v.scale_by_raw(f).dealiased()
}

/// Helmholtz split `v = solenoidal + grad(potential)`.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub solenoidal: VectorField,
    /// Zero-mean solution of `lap(potential) = div v`.
    pub potential: ScalarField,
}

pub fn leray_project(v: &VectorField) -> ProjectionResult {
    let s = spectral3(v);
    let g = *v.grid();
    let mut phi = SpectralField::zeros(g);
    let mut sol: [SpectralField; 3] = std::array::from_fn(|_| SpectralField::zeros(g));
    let mut idx = 0;
    phi.for_each_mode(|m, p| {
        let k = [
            g.deriv_wavenumber(0, m[0]),
            g.deriv_wavenumber(1, m[1]),
            g.deriv_wavenumber(2, m[2]),
        ];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let vh = [s[0].coeffs()[idx], s[1].coeffs()[idx], s[2].coeffs()[idx]];
        if k2 > 0.0 {
            let divh = I * (k[0] * vh[0] + k[1] * vh[1] + k[2] * vh[2]);
            *p = -divh / k2;
            for a in 0..3 {
                sol[a].coeffs_mut()[idx] = vh[a] - I * k[a] * *p;
            }
        } else {
            for a in 0..3 {
                sol[a].coeffs_mut()[idx] = vh[a];
            }
        }
        idx += 1;
    });
    let [sx, sy, sz] = sol;
    ProjectionResult {
        solenoidal: VectorField::new(from_spectral(&sx), from_spectral(&sy), from_spectral(&sz)),
        potential: from_spectral(&phi),
    }
}

/// Residual of `curl(v x E) = (E . grad) v - (v . grad) E + v div E - E div v`,
/// with every product dealiased.
pub fn identity_residual_triple(v: &VectorField, e: &VectorField) -> VectorField {
    let lhs = curl(&cross(v, e));
    let rhs = vector_advection(e, v)
        .sub(&vector_advection(v, e))
        .and_then(|r| r.add(&scale_by(v, &div(e))))
        .and_then(|r| r.sub(&scale_by(e, &div(v))))
        .expect("shared grid");
    lhs.sub(&rhs).expect("shared grid")
}

/// Residual of `(v . grad) v = grad(|v|^2 / 2) - v x curl v`.
pub fn gromeka_lamb_residual(v: &VectorField) -> VectorField {
    let adv = vector_advection(v, v);
    let head = grad(&v.magnitude_sq().dealiased().scale(0.5));
    let lamb = cross(v, &curl(v));
    adv.sub(&head.sub(&lamb).expect("shared grid"))
        .expect("shared grid")
}

/// Keeps only modes with `|k_i| <= kmax` on every active axis. Used to build
/// band-limited test inputs.
pub fn band_limit<F: Field>(f: &F, kmax: usize) -> F {
    let mut out = f.clone();
    for c in out.components_mut() {
        let s = to_spectral(c);
        let g = *s.grid();
        let t = s.map_modes(|m, x| {
            let keep = (0..3).all(|a| g.mode(a, m[a]).unsigned_abs() as usize <= kmax);
            if keep {
                x
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        *c = from_spectral(&t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn g64() -> GridSpec {
        make_grid([64, 64, 1], [2.0 * PI; 3]).unwrap()
    }

    fn g3d() -> GridSpec {
        make_grid([16, 16, 16], [2.0 * PI, 3.0, 4.0]).unwrap()
    }

    fn noise(g: GridSpec, seed: u64, kmax: usize) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut comp = || {
            ScalarField::from_values(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        };
        let v = VectorField::new(comp(), comp(), comp());
        band_limit(&v, kmax)
    }

    fn close(a: &VectorField, b: &VectorField, tol: f64) {
        let err = a.sub(b).unwrap().norm_linf();
        assert!(err < tol, "error {err:e} >= {tol:e}");
    }

    #[test]
    fn grad_of_constant_is_zero() {
        let g = grad(&ScalarField::constant(g64(), 4.2));
        assert!(g.norm_linf() < 1e-13);
    }

    #[test]
    fn curl_by_hand() {
        let g = g64();
        let v = VectorField::from_fn(g, |x, y, _| [-y.sin(), x.sin(), 0.0]);
        let expected = VectorField::from_fn(g, |x, y, _| [0.0, 0.0, x.cos() + y.cos()]);
        close(&curl(&v), &expected, 1e-12);
    }

    #[test]
    fn div_curl_and_curl_grad_vanish() {
        for g in [g64(), g3d()] {
            let v = noise(g, 1, g.dims()[0] / 2);
            assert!(div(&curl(&v)).norm_linf() < 1e-12);
            let f = noise(g, 2, g.dims()[0] / 2).into_components()[0].clone();
            assert!(curl(&grad(&f)).norm_linf() < 1e-12);
        }
    }

    #[test]
    fn curl_curl_identity() {
        for g in [g64(), g3d()] {
            // full-band noise, Nyquist included
            let v = noise(g, 3, 1000);
            let lhs = curl_curl(&v);
            let rhs = grad(&div(&v)).sub(&laplacian(&v)).unwrap();
            let rel = lhs.sub(&rhs).unwrap().norm_l2() / lhs.norm_l2();
            assert!(rel < 1e-12, "{rel:e}");
            let twice = curl(&curl(&v));
            assert!(twice.sub(&lhs).unwrap().norm_l2() / lhs.norm_l2() < 1e-12);
        }
    }

    #[test]
    fn curl_curl_cases() {
        let g = g64();
        let v = VectorField::from_fn(g, |_, y, _| [y.sin(), 0.0, 0.0]);
        close(&curl_curl(&v), &v, 1e-12);
        let sol = leray_project(&noise(g, 4, 16)).solenoidal;
        close(&curl_curl(&sol), &laplacian(&sol).scale(-1.0), 1e-12);
        let f = ScalarField::from_fn(g, |x, y, _| (x + 2.0 * y).sin());
        assert!(curl_curl(&grad(&f)).norm_linf() < 1e-12);
    }

    #[test]
    fn advection_cases() {
        let g = g64();
        let zero = VectorField::zeros(g);
        let w = noise(g, 5, 10);
        assert_eq!(vector_advection(&zero, &w).norm_linf(), 0.0);
        assert!(vector_advection(&w, &VectorField::constant(g, [1.0, 2.0, 3.0])).norm_linf() < 1e-13);
        let ex = VectorField::constant(g, [1.0, 0.0, 0.0]);
        let sx = VectorField::from_fn(g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let cx = VectorField::from_fn(g, |x, _, _| [x.cos(), 0.0, 0.0]);
        close(&vector_advection(&ex, &sx), &cx, 1e-12);
    }

    #[test]
    fn hessian_contract_cases() {
        let g = g64();
        let sx = VectorField::from_fn(g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let eye = TensorField::isotropic(&ScalarField::constant(g, 1.0));
        close(&hessian_contract(&sx, &eye), &sx.scale(-1.0), 1e-12);
        assert!(hessian_contract(&sx, &TensorField::zeros(g)).norm_linf() == 0.0);
        let uniform = VectorField::constant(g, [1.0, -2.0, 0.5]);
        assert!(hessian_contract(&uniform, &eye).norm_linf() < 1e-13);
    }

    #[test]
    fn double_advection_cases() {
        let g = g64();
        let sx = VectorField::from_fn(g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let ex = VectorField::constant(g, [1.0, 0.0, 0.0]);
        close(&double_advection(&ex, &sx), &sx.scale(-1.0), 1e-12);
        assert_eq!(double_advection(&VectorField::zeros(g), &sx).norm_linf(), 0.0);
        let uniform = VectorField::constant(g, [0.3, 0.1, 0.0]);
        assert!(double_advection(&noise(g, 6, 8), &uniform).norm_linf() < 1e-13);
    }

    #[test]
    fn projection_cases() {
        let g = g64();
        let sol = VectorField::from_fn(g, |x, y, _| [y.sin(), x.cos(), 0.3]);
        let p = leray_project(&sol);
        close(&p.solenoidal, &sol, 1e-12);
        assert!(p.potential.norm_linf() < 1e-12);

        let f = ScalarField::from_fn(g, |x, _, _| x.sin());
        let p = leray_project(&grad(&f));
        assert!(p.solenoidal.norm_linf() < 1e-12);
        assert!(p.potential.sub(&f).unwrap().norm_linf() < 1e-12);
    }

    #[test]
    fn projection_properties() {
        for g in [g64(), g3d()] {
            let v = noise(g, 7, 1000);
            let p = leray_project(&v);
            assert!(div(&p.solenoidal).norm_linf() < 1e-12);
            let rebuilt = p.solenoidal.add(&grad(&p.potential)).unwrap();
            assert!(rebuilt.sub(&v).unwrap().norm_l2() / v.norm_l2() < 1e-12);
            let twice = leray_project(&p.solenoidal).solenoidal;
            assert!(twice.sub(&p.solenoidal).unwrap().norm_linf() < 1e-13);
            assert!(p.potential.mean().abs() < 1e-14);
        }
    }

    #[test]
    fn vector_identity_residuals() {
        let g = g64();
        let v = noise(g, 8, 16);
        let e = noise(g, 9, 16);
        assert!(identity_residual_triple(&v, &VectorField::zeros(g)).norm_linf() < 1e-14);
        assert!(identity_residual_triple(&v, &v).norm_linf() < 1e-12);
        assert!(identity_residual_triple(&v, &e).norm_linf() < 1e-10);

        assert!(gromeka_lamb_residual(&VectorField::constant(g, [1.0, 2.0, 0.0])).norm_linf() < 1e-13);
        let f = ScalarField::from_fn(g, |x, _, _| x.sin());
        assert!(gromeka_lamb_residual(&grad(&f)).norm_linf() < 1e-10);
        assert!(gromeka_lamb_residual(&v).norm_linf() < 1e-10);

        let g3 = g3d();
        let v3 = noise(g3, 10, 4);
        let e3 = noise(g3, 11, 4);
        assert!(identity_residual_triple(&v3, &e3).norm_linf() < 1e-10);
        assert!(gromeka_lamb_residual(&v3).norm_linf() < 1e-10);
    }

    #[test]
    fn identities_hold_on_full_dealiased_band() {
        // two-thirds band (|k| <= 21 on n = 64) keeps quadratic products exact
        let g = g64();
        let v = noise(g, 12, 21);
        let e = noise(g, 13, 21);
        assert!(identity_residual_triple(&v, &e).norm_linf() < 1e-10);
        assert!(gromeka_lamb_residual(&v).norm_linf() < 1e-10);
    }

    #[test]
    fn operators_are_deterministic() {
        let v = noise(g3d(), 14, 1000);
        assert_eq!(curl(&v), curl(&v));
        assert_eq!(leray_project(&v).solenoidal, leray_project(&v).solenoidal);
    }

    #[test]
    fn inverse_laplacian_inverts() {
        let g = g64();
        let f = ScalarField::from_fn(g, |x, y, _| (2.0 * x).sin() * y.cos());
        // lap(sin 2x cos y) = -5 sin 2x cos y
        let phi = inverse_laplacian(&f);
        let expected = f.scale(-0.2);
        assert!(phi.sub(&expected).unwrap().norm_linf() < 1e-15);
        let n = noise(g, 15, 20);
        let c = n.comp(0).map(|x| x - n.comp(0).mean());
        assert!(laplacian(&inverse_laplacian(&c)).sub(&c).unwrap().norm_linf() < 1e-12);
    }
}
