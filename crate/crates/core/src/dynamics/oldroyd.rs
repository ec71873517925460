//! Upper-convected (Oldroyd) time rates for vector and tensor densities.

use crate::diffops::{div, div_tensor, grad, grad_vector};
use crate::fields::{Field, ScalarField, TensorField, VectorField};

/// `(v . grad) E - (E . grad) v + (div v) E`, dealiased.
fn convected_terms(e: &VectorField, v: &VectorField) -> VectorField {
    let ge = grad_vector(e);
    let gv = grad_vector(v);
    let dv = div(v);
    let g = *e.grid();
    let mut out = VectorField::zeros(g);
    for k in 0..3 {
        let vals = out.comp_mut(k).values_mut();
        for (n, o) in vals.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..3 {
                acc += v.comp(i).values()[n] * ge.get(i, k).values()[n];
                acc -= e.comp(i).values()[n] * gv.get(i, k).values()[n];
            }
            *o = acc + dv.values()[n] * e.comp(k).values()[n];
        }
    }
    out.dealiased()
}

/// Vector upper-convected rate `dE_partial + v.grad E - E.grad v + (div v) E`.
pub fn upper_convected_vector(
    e: &VectorField,
    v: &VectorField,
    de_partial: &VectorField,
) -> VectorField {
    de_partial
        .add(&convected_terms(e, v))
        .expect("shared grid")
}

/// Tensor upper-convected rate
/// `dsigma_partial + v.grad sigma - L sigma - sigma L^T + sigma div v`,
/// with `L_ik = d_k v_i`.
pub fn upper_convected_tensor(
    sigma: &TensorField,
    v: &VectorField,
    dsigma_partial: &TensorField,
) -> TensorField {
    let g = *sigma.grid();
    let gv = grad_vector(v); // gv(k, i) = d_k v_i = L_ik
    let dv = div(v);
    let grads: Vec<VectorField> = (0..9).map(|c| grad(sigma.get(c / 3, c % 3))).collect();
    let mut out = TensorField::zeros(g);
    for i in 0..3 {
        for j in 0..3 {
            let mut vals = vec![0.0; g.len()];
            for (n, o) in vals.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += v.comp(k).values()[n] * grads[3 * i + j].comp(k).values()[n];
                    acc -= gv.get(k, i).values()[n] * sigma.get(k, j).values()[n];
                    acc -= sigma.get(i, k).values()[n] * gv.get(k, j).values()[n];
                }
                *o = acc + sigma.get(i, j).values()[n] * dv.values()[n];
            }
            *out.get_mut(i, j) = ScalarField::from_values(g, vals);
        }
    }
    dsigma_partial
        .add(&out.dealiased())
        .expect("shared grid")
}

/// `div(tensor rate of sigma) - vector rate of (div sigma)`, both with zero
/// partial time derivatives. Analytically equal to `-sum_ij sigma_ij d_i d_j v`.
pub fn oldroyd_discrepancy(sigma: &TensorField, v: &VectorField) -> VectorField {
    let g = *sigma.grid();
    let tensor_rate = upper_convected_tensor(sigma, v, &TensorField::zeros(g));
    let vector_rate = upper_convected_vector(&div_tensor(sigma), v, &VectorField::zeros(g));
    div_tensor(&tensor_rate)
        .sub(&vector_rate)
        .expect("shared grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::{band_limit, hessian_contract, leray_project};
    use crate::fields::{make_grid, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn g64() -> GridSpec {
        make_grid([64, 64, 1], [2.0 * PI; 3]).unwrap()
    }

    fn noise_scalar(g: GridSpec, rng: &mut ChaCha8Rng, kmax: usize) -> ScalarField {
        let f = ScalarField::from_values(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        band_limit(&f, kmax)
    }

    #[test]
    fn vector_rate_trivial_cases() {
        let g = g64();
        let e = VectorField::from_fn(g, |x, y, _| [x.sin(), y.cos(), 0.0]);
        let d = VectorField::from_fn(g, |x, _, _| [0.0, 0.0, x.cos()]);
        let zero = VectorField::zeros(g);
        assert!(upper_convected_vector(&e, &zero, &d).sub(&d).unwrap().norm_linf() < 1e-15);
        assert!(upper_convected_vector(&zero, &e, &d).sub(&d).unwrap().norm_linf() < 1e-15);
    }

    #[test]
    fn vector_rate_by_hand() {
        let g = g64();
        let v = VectorField::from_fn(g, |_, y, _| [y.sin(), 0.0, 0.0]);
        let e = VectorField::from_fn(g, |_, y, _| [0.0, y.sin(), 0.0]);
        let r = upper_convected_vector(&e, &v, &VectorField::zeros(g));
        let expected = VectorField::from_fn(g, |_, y, _| [-y.sin() * y.cos(), 0.0, 0.0]);
        assert!(r.sub(&expected).unwrap().norm_linf() < 1e-12);
    }

    #[test]
    fn tensor_rate_trivial_cases() {
        let g = g64();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = TensorField::from_components(std::array::from_fn(|_| noise_scalar(g, &mut rng, 8)));
        let d = TensorField::isotropic(&noise_scalar(g, &mut rng, 8));
        let zero_v = VectorField::zeros(g);
        let r = upper_convected_tensor(&sigma, &zero_v, &d);
        assert!(r.sub(&d).unwrap().norm_linf() < 1e-14);
        let v = VectorField::from_fn(g, |x, y, _| [y.sin(), x.cos(), 0.0]);
        let r = upper_convected_tensor(&TensorField::zeros(g), &v, &d);
        assert!(r.sub(&d).unwrap().norm_linf() < 1e-14);
    }

    #[test]
    fn tensor_rate_of_isotropic_field() {
        // sigma = f I, v solenoidal: v.grad f I - f (L + L^T)
        let g = g64();
        let f = ScalarField::from_fn(g, |x, y, _| (x + y).cos());
        let v = VectorField::from_fn(g, |x, y, _| [y.sin(), x.sin(), 0.0]);
        let r = upper_convected_tensor(&TensorField::isotropic(&f), &v, &TensorField::zeros(g));
        let expected = TensorField::from_components(std::array::from_fn(|c| {
            let (i, j) = (c / 3, c % 3);
            ScalarField::from_fn(g, |x, y, _| {
                let fv = (x + y).cos();
                let vgradf = -(x + y).sin() * (y.sin() + x.sin());
                // L = [[0, cos y], [cos x, 0]] with L_ik = d_k v_i
                let l = |a: usize, b: usize| match (a, b) {
                    (0, 1) => y.cos(),
                    (1, 0) => x.cos(),
                    _ => 0.0,
                };
                let iso = if i == j { vgradf } else { 0.0 };
                iso - fv * (l(i, j) + l(j, i))
            })
        }));
        assert!(r.sub(&expected).unwrap().norm_linf() < 1e-12);
    }

    #[test]
    fn discrepancy_is_minus_hessian_contraction() {
        for (g, kmax) in [
            (g64(), 10usize),
            (make_grid([12, 12, 12], [2.0 * PI, 2.0, 3.0]).unwrap(), 2),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let sigma =
                TensorField::from_components(std::array::from_fn(|_| noise_scalar(g, &mut rng, kmax)));
            let v = VectorField::new(
                noise_scalar(g, &mut rng, kmax),
                noise_scalar(g, &mut rng, kmax),
                noise_scalar(g, &mut rng, kmax),
            );
            // compressible v on purpose: the identity does not need div v = 0
            let d = oldroyd_discrepancy(&sigma, &v);
            let h = hessian_contract(&v, &sigma);
            let res = d.add(&h).unwrap().norm_linf();
            assert!(res < 1e-9 * h.norm_linf().max(1.0), "{res:e}");

            let sol = leray_project(&v).solenoidal;
            let res = oldroyd_discrepancy(&sigma, &sol)
                .add(&hessian_contract(&sol, &sigma))
                .unwrap()
                .norm_linf();
            assert!(res < 1e-9);
        }
    }

    #[test]
    fn discrepancy_vanishes_for_uniform_velocity_gradient() {
        let g = g64();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sigma = TensorField::from_components(std::array::from_fn(|_| noise_scalar(g, &mut rng, 8)));
        let v = VectorField::constant(g, [0.5, -0.25, 1.0]);
        assert!(oldroyd_discrepancy(&sigma, &v).norm_linf() < 1e-12);
        assert!(oldroyd_discrepancy(&TensorField::zeros(g), &VectorField::from_fn(g, |x, _, _| [0.0, x.sin(), 0.0])).norm_linf() == 0.0);
    }
}
