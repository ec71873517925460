//! Right-hand sides of the governing systems.

use serde::{Deserialize, Serialize};

use super::oldroyd::upper_convected_vector;
use super::{FluidState, MediumParams, Rates, System};
use crate::diffops::{
    curl, curl_curl, div, double_advection, grad, laplacian, leray_project, scalar_advection,
    vector_advection,
};
use crate::error::{Error, Result};
use crate::fields::{Field, ScalarField, VectorField};

/// Input divergence above which the incompressible right-hand sides refuse to run.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-9;

/// Dilational rheology of the compressible extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rheology {
    Liquid,
    Solid,
}

fn check_solenoidal(v: &VectorField) -> Result<()> {
    let linf = div(v).norm_linf();
    if linf > DIVERGENCE_TOLERANCE {
        return Err(Error::Divergence {
            linf,
            tol: DIVERGENCE_TOLERANCE,
        });
    }
    Ok(())
}

/// Linear Navier equations: `mu v_t = (lambda + 2 eta) grad div u - eta curl curl u`, `u_t = v`.
pub fn rhs_linear_navier(state: &FluidState, params: &MediumParams) -> Result<Rates> {
    let u = state
        .u
        .as_ref()
        .ok_or_else(|| Error::InvalidScenario("linear_navier needs a displacement field".into()))?;
    let dilational = grad(&div(u)).scale((params.lambda + 2.0 * params.eta) / params.mu);
    let dv = dilational.axpy_unchecked(-params.eta / params.mu, &curl_curl(u));
    Ok(Rates {
        v: Some(dv),
        u: Some(state.v.clone()),
        ..Default::default()
    })
}

/// `eta curl curl v - kappa E - [v.grad E - E.grad v + (div v) E]`.
fn stress_vector_rate(v: &VectorField, e: &VectorField, params: &MediumParams) -> VectorField {
    let g = *v.grid();
    let convected = upper_convected_vector(e, v, &VectorField::zeros(g));
    curl_curl(v)
        .scale(params.eta)
        .axpy_unchecked(-params.kappa, e)
        .axpy_unchecked(-1.0, &convected)
}

/// Frame-indifferent incompressible Maxwell fluid.
///
/// `v_t` is the Leray projection of `-(v.grad) v - E / mu`; the removed gradient
/// is `grad(p) / mu`, so the implied pressure is returned in `Rates::pressure`.
pub fn rhs_fi_incompressible(state: &FluidState, params: &MediumParams) -> Result<Rates> {
    check_solenoidal(&state.v)?;
    let v = &state.v;
    let e = &state.e;
    let forcing = vector_advection(v, v)
        .scale(-1.0)
        .axpy_unchecked(-1.0 / params.mu, e);
    let proj = leray_project(&forcing);
    Ok(Rates {
        v: Some(proj.solenoidal),
        e: Some(stress_vector_rate(v, e, params)),
        pressure: Some(proj.potential.scale(params.mu)),
        ..Default::default()
    })
}

/// Stress-eliminated second-order form in `(v, v_t, p)`.
///
/// With `G = grad p` and `a = v_t + (v.grad) v`, eliminating `E` gives
/// `mu v_tt + G_t = W` where
/// `W = eta lap v - 2 mu (v.grad) v_t - mu (vv):grad grad v - kappa mu a
///      - (v.grad) G + (G.grad) v - kappa G`.
/// The solenoidal part of `W` is `mu v_tt`; its gradient part is `grad p_t`.
pub fn rhs_second_order(state: &FluidState, params: &MediumParams) -> Result<Rates> {
    let v = &state.v;
    let vt = state
        .v_t
        .as_ref()
        .ok_or_else(|| Error::InvalidScenario("second_order needs v_t".into()))?;
    check_solenoidal(v)?;
    check_solenoidal(vt)?;
    let mu = params.mu;
    let gp = grad(&state.p);

    let mut w = laplacian(v).scale(params.eta);
    w = w.axpy_unchecked(-2.0 * mu, &vector_advection(v, vt));
    w = w.axpy_unchecked(-mu, &double_advection(v, v));
    if params.kappa != 0.0 {
        let a = vt.add(&vector_advection(v, v)).expect("shared grid");
        w = w.axpy_unchecked(-params.kappa * mu, &a);
        w = w.axpy_unchecked(-params.kappa, &gp);
    }
    w = w.axpy_unchecked(-1.0, &vector_advection(v, &gp));
    w = w.axpy_unchecked(1.0, &vector_advection(&gp, v));

    let proj = leray_project(&w);
    Ok(Rates {
        v: Some(vt.clone()),
        v_t: Some(proj.solenoidal.scale(1.0 / mu)),
        p: Some(proj.potential),
        ..Default::default()
    })
}

/// Pressure-rate term of the second-order form in both sign conventions.
#[derive(Debug, Clone)]
pub struct PressureRate {
    /// `grad p_t + (v.grad) grad p - (grad p . grad) v`, the vector upper-convected rate.
    pub upper_convected: VectorField,
    /// `-grad p_t - (v.grad) grad p - (grad p . grad) v`, signs as printed alongside
    /// the second-order equation.
    pub as_printed: VectorField,
}

pub fn pressure_rate(v: &VectorField, p: &ScalarField, p_t: &ScalarField) -> PressureRate {
    let gp = grad(p);
    let gpt = grad(p_t);
    let transport = vector_advection(v, &gp);
    let stretch = vector_advection(&gp, v);
    PressureRate {
        upper_convected: gpt
            .add(&transport)
            .and_then(|x| x.sub(&stretch))
            .expect("shared grid"),
        as_printed: gpt
            .scale(-1.0)
            .sub(&transport)
            .and_then(|x| x.sub(&stretch))
            .expect("shared grid"),
    }
}

/// Compressible extension with a variable density field.
///
/// `mu (v_t + v.grad v) = -E + grad(D)` with `D = (nu + 2 zeta) div v` (liquid)
/// or `D = (lambda + 2 eta) div u` (solid); `mu_t = -v.grad mu - mu div v`.
pub fn rhs_compressible(
    state: &FluidState,
    params: &MediumParams,
    rheology: Rheology,
) -> Result<Rates> {
    let mu = state
        .mu_field
        .as_ref()
        .ok_or_else(|| Error::InvalidScenario("compressible system needs mu_field".into()))?;
    let min = mu.min();
    if min <= 0.0 {
        return Err(Error::DensityNotPositive { min });
    }
    let v = &state.v;
    let e = &state.e;
    let divv = div(v);
    let dilational = match rheology {
        Rheology::Liquid => divv.scale(params.nu + 2.0 * params.zeta()),
        Rheology::Solid => {
            let u = state.u.as_ref().ok_or_else(|| {
                Error::InvalidScenario("solid rheology needs a displacement field".into())
            })?;
            div(u).scale(params.lambda + 2.0 * params.eta)
        }
    };
    let force = grad(&dilational).sub(e).expect("shared grid");
    let accel = VectorField::new(
        force.x().zip_with(mu, |f, m| f / m),
        force.y().zip_with(mu, |f, m| f / m),
        force.z().zip_with(mu, |f, m| f / m),
    )
    .dealiased();
    let dv = accel.sub(&vector_advection(v, v)).expect("shared grid");
    let dmu = scalar_advection(v, mu)
        .add(&mu.mul_dealiased(&divv))
        .expect("shared grid")
        .scale(-1.0);
    Ok(Rates {
        v: Some(dv),
        e: Some(stress_vector_rate(v, e, params)),
        mu: Some(dmu),
        u: matches!(rheology, Rheology::Solid).then(|| v.clone()),
        ..Default::default()
    })
}

/// Classical Maxwell reference: `B_t = -curl E`, `E_t = c^2 curl B`.
pub fn rhs_classical_maxwell(state: &FluidState, params: &MediumParams) -> Result<Rates> {
    let b = state
        .b
        .as_ref()
        .ok_or_else(|| Error::InvalidScenario("classical_maxwell needs B".into()))?;
    let c2 = params.eta / params.mu;
    Ok(Rates {
        e: Some(curl(b).scale(c2)),
        b: Some(curl(&state.e).scale(-1.0)),
        ..Default::default()
    })
}

/// Dispatches to the right-hand side of `system`.
pub fn evaluate(system: System, state: &FluidState, params: &MediumParams) -> Result<Rates> {
    match system {
        System::LinearNavier => rhs_linear_navier(state, params),
        System::FiIncompressible => rhs_fi_incompressible(state, params),
        System::SecondOrder => rhs_second_order(state, params),
        System::CompressibleLiquid => rhs_compressible(state, params, Rheology::Liquid),
        System::CompressibleSolid => rhs_compressible(state, params, Rheology::Solid),
        System::ClassicalMaxwell => rhs_classical_maxwell(state, params),
    }
}
