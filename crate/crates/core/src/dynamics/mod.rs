//! Governing systems and their time integration.
//!
//! Six systems share one state type and one RK4 driver: the linear Navier
//! solid, the frame-indifferent incompressible Maxwell fluid, its
//! stress-eliminated second-order form, the compressible extension (liquid or
//! solid dilational rheology) and the classical Maxwell equations used as a
//! linear reference.

mod integrate;
mod oldroyd;
mod params;
mod rhs;
mod state;

pub use integrate::{
    auto_dt, integrate, max_wave_speed, nominal_dt, shear_energy, step, MAX_KAPPA_DT,
};
pub use oldroyd::{oldroyd_discrepancy, upper_convected_tensor, upper_convected_vector};
pub use params::MediumParams;
pub use rhs::{
    evaluate, pressure_rate, rhs_classical_maxwell, rhs_compressible, rhs_fi_incompressible,
    rhs_linear_navier, rhs_second_order, PressureRate, Rheology, DIVERGENCE_TOLERANCE,
};
pub use state::{AutoTag, DtSpec, FluidState, Rates, StepControl, System};

use crate::diffops::curl;
use crate::error::Result;
use crate::fields::Field;

/// Second-order state matched to a first-order `(v, E)` state: `v_t` is the
/// projected momentum rate and `p` the pressure implied by the projection.
pub fn second_order_from_first(state: &FluidState, params: &MediumParams) -> Result<FluidState> {
    let r = rhs_fi_incompressible(state, params)?;
    Ok(FluidState {
        v_t: r.v,
        p: r.pressure.expect("first-order rates carry the pressure"),
        ..state.clone()
    })
}

/// Classical Maxwell state matched to a mechanical one: same `E`, `B = mu curl v`.
pub fn classical_from_mechanical(state: &FluidState, params: &MediumParams) -> FluidState {
    let g = *state.grid();
    FluidState {
        b: Some(curl(&state.v).scale(params.mu)),
        ..FluidState::incompressible(crate::fields::VectorField::zeros(g), state.e.clone())
    }
    .with_time(state.time)
}

impl FluidState {
    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }
}
