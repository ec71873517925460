use num_complex::Complex64;

use super::rhs::evaluate;
use super::{DtSpec, FluidState, MediumParams, Rates, StepControl, System};
use crate::diffops::leray_project;
use crate::error::{Error, Result};
use crate::fields::{to_spectral, Field, VectorField};

/// Largest accepted `kappa * dt`. Relaxation faster than the step is rejected
/// rather than integrated implicitly.
pub const MAX_KAPPA_DT: f64 = 1.0;

/// Fastest characteristic speed of `system`.
pub fn max_wave_speed(system: System, params: &MediumParams) -> f64 {
    if system.is_compressible() {
        params.c_s()
    } else {
        params.c()
    }
}

/// `cfl * min spacing / (c_max + |v|_max)`.
pub fn auto_dt(state: &FluidState, params: &MediumParams, system: System, cfl: f64) -> f64 {
    let c = max_wave_speed(system, params);
    cfl * state.grid().min_spacing() / (c + state.v.max_magnitude())
}

/// Nominal step for the current state before clipping to `t_end`.
pub fn nominal_dt(state: &FluidState, params: &MediumParams, system: System, control: &StepControl) -> f64 {
    match control.dt {
        DtSpec::Fixed(dt) => dt,
        DtSpec::Auto(_) => auto_dt(state, params, system, control.cfl),
    }
}

/// One classical RK4 step of size `dt`.
///
/// Every stage evaluates the projected right-hand side, so stage states of the
/// incompressible systems stay solenoidal; the final velocity is projected once
/// more to remove rounding drift.
pub fn step(state: &FluidState, params: &MediumParams, dt: f64, system: System) -> Result<FluidState> {
    if params.kappa * dt > MAX_KAPPA_DT {
        return Err(Error::InvalidControl(format!(
            "kappa * dt = {} exceeds {MAX_KAPPA_DT}; reduce dt",
            params.kappa * dt
        )));
    }
    let k1 = evaluate(system, state, params)?;
    let k2 = evaluate(system, &state.advanced(0.5 * dt, &k1), params)?;
    let k3 = evaluate(system, &state.advanced(0.5 * dt, &k2), params)?;
    let k4 = evaluate(system, &state.advanced(dt, &k3), params)?;
    let sixth = 1.0 / 6.0;
    let third = 1.0 / 3.0;
    let combined = Rates::weighted_sum(&[(sixth, &k1), (third, &k2), (third, &k3), (sixth, &k4)]);
    let mut next = state.advanced(dt, &combined);

    if system.is_incompressible() {
        next.v = leray_project(&next.v).solenoidal;
        if let Some(vt) = &next.v_t {
            next.v_t = Some(leray_project(vt).solenoidal);
        }
    }
    if system == System::FiIncompressible {
        if let Some(p) = k4.pressure {
            next.p = p;
        }
    }
    if let Some(field) = next.first_non_finite() {
        return Err(Error::NonFinite {
            field: field.to_string(),
            time: next.time,
            last_good: Box::new(state.clone()),
        });
    }
    Ok(next)
}

/// Advances `state` to `control.t_end`, calling `observe(step_index, state)` on
/// the initial state and after every step. The last step is shortened so the
/// run lands exactly on `t_end`.
pub fn integrate(
    mut state: FluidState,
    params: &MediumParams,
    system: System,
    control: &StepControl,
    mut observe: impl FnMut(usize, &FluidState) -> Result<()>,
) -> Result<FluidState> {
    control.validate()?;
    params.validate()?;
    state.check_shape(system)?;
    observe(0, &state)?;
    let t_end = control.t_end;
    let mut n = 0;
    while state.time < t_end {
        let dt = nominal_dt(&state, params, system, control);
        let remaining = t_end - state.time;
        let last = dt >= remaining * (1.0 - 1e-12);
        let h = if last { remaining } else { dt };
        state = step(&state, params, h, system)?;
        if last {
            state.time = t_end;
        }
        n += 1;
        observe(n, &state)?;
    }
    Ok(state)
}

/// Shear energy `mu |v|^2 / 2 + <E, (curl curl)^-1 E> / (2 eta)`, the second term
/// evaluated on the solenoidal part of `E`. Conserved by the linear shear
/// dynamics with `kappa = 0`.
pub fn shear_energy(state: &FluidState, params: &MediumParams) -> f64 {
    let kinetic = 0.5 * params.mu * state.v.norm_l2().powi(2);
    let e_sol = leray_project(&state.e).solenoidal;
    0.5 * elastic_norm_sq(&e_sol) / params.eta + kinetic
}

fn elastic_norm_sq(e: &VectorField) -> f64 {
    let g = *e.grid();
    let n = g.len() as f64;
    let dv = g.cell_volume();
    let mut sum = 0.0;
    for c in e.components() {
        let mut s = to_spectral(c);
        s.for_each_mode(|m, x| {
            let k2: f64 = (0..3)
                .map(|a| g.deriv_wavenumber(a, m[a]).powi(2))
                .sum();
            *x = if k2 > 0.0 {
                Complex64::new(x.norm_sqr() / k2, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        });
        sum += s.coeffs().iter().map(|x| x.re).sum::<f64>();
    }
    sum * dv / n
}
