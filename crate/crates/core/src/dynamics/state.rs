use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Field, GridSpec, ScalarField, VectorField};

/// The governing system a state is advanced with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    /// Linear compressible elastic solid in displacement form.
    LinearNavier,
    /// Frame-indifferent incompressible Maxwell fluid, unknowns `(v, E, p)`.
    FiIncompressible,
    /// Stress-eliminated form, unknowns `(v, v_t, p)`.
    SecondOrder,
    /// Compressible extension with liquid dilational rheology.
    CompressibleLiquid,
    /// Compressible extension with solid dilational rheology; carries `u`.
    CompressibleSolid,
    /// Classical linear Maxwell equations in `(E, B)`.
    ClassicalMaxwell,
}

impl System {
    pub const ALL: [System; 6] = [
        System::LinearNavier,
        System::FiIncompressible,
        System::SecondOrder,
        System::CompressibleLiquid,
        System::CompressibleSolid,
        System::ClassicalMaxwell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            System::LinearNavier => "linear_navier",
            System::FiIncompressible => "fi_incompressible",
            System::SecondOrder => "second_order",
            System::CompressibleLiquid => "compressible_liquid",
            System::CompressibleSolid => "compressible_solid",
            System::ClassicalMaxwell => "classical_maxwell",
        }
    }

    pub fn is_incompressible(self) -> bool {
        matches!(self, System::FiIncompressible | System::SecondOrder)
    }

    pub fn is_compressible(self) -> bool {
        matches!(
            self,
            System::LinearNavier | System::CompressibleLiquid | System::CompressibleSolid
        )
    }
}

/// Evolving unknowns. Which optional fields are populated depends on the
/// system: `mu_field` for the compressible systems, `u` for the solid ones,
/// `v_t` for the second-order form and `b` for the classical reference.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub time: f64,
    pub v: VectorField,
    /// Negative shear stress vector.
    pub e: VectorField,
    /// Pressure. Diagnostic for the first-order incompressible system, evolved
    /// for the second-order form.
    pub p: ScalarField,
    pub mu_field: Option<ScalarField>,
    pub u: Option<VectorField>,
    pub v_t: Option<VectorField>,
    pub b: Option<VectorField>,
}

impl FluidState {
    pub fn zeros(grid: GridSpec) -> Self {
        FluidState {
            time: 0.0,
            v: VectorField::zeros(grid),
            e: VectorField::zeros(grid),
            p: ScalarField::zeros(grid),
            mu_field: None,
            u: None,
            v_t: None,
            b: None,
        }
    }

    /// State with `(v, E)` set and `p = 0`.
    pub fn incompressible(v: VectorField, e: VectorField) -> Self {
        let g = *v.grid();
        FluidState {
            v,
            e,
            ..FluidState::zeros(g)
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.v.grid()
    }

    /// Checks that the optional fields required by `system` are present.
    pub fn check_shape(&self, system: System) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidScenario(format!(
                    "{} state needs `{what}`",
                    system.name()
                )))
            }
        };
        match system {
            System::LinearNavier => need(self.u.is_some(), "u"),
            System::SecondOrder => need(self.v_t.is_some(), "v_t"),
            System::CompressibleLiquid => need(self.mu_field.is_some(), "mu_field"),
            System::CompressibleSolid => {
                need(self.mu_field.is_some(), "mu_field")?;
                need(self.u.is_some(), "u")
            }
            System::ClassicalMaxwell => need(self.b.is_some(), "b"),
            System::FiIncompressible => Ok(()),
        }
    }

    /// `self + dt * rates` over the fields the rates carry; time advances by `dt`.
    pub fn advanced(&self, dt: f64, r: &Rates) -> FluidState {
        fn upd<F: Field>(x: &F, dx: &Option<F>, dt: f64) -> F {
            match dx {
                Some(d) => x.axpy_unchecked(dt, d),
                None => x.clone(),
            }
        }
        fn upd_opt<F: Field>(x: &Option<F>, dx: &Option<F>, dt: f64) -> Option<F> {
            x.as_ref().map(|x| upd(x, dx, dt))
        }
        FluidState {
            time: self.time + dt,
            v: upd(&self.v, &r.v, dt),
            e: upd(&self.e, &r.e, dt),
            p: upd(&self.p, &r.p, dt),
            mu_field: upd_opt(&self.mu_field, &r.mu, dt),
            u: upd_opt(&self.u, &r.u, dt),
            v_t: upd_opt(&self.v_t, &r.v_t, dt),
            b: upd_opt(&self.b, &r.b, dt),
        }
    }

    /// Name of the first populated field holding a NaN or Inf.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        let checks: [(&'static str, bool); 8] = [
            ("v", self.v.is_finite()),
            ("e", self.e.is_finite()),
            ("p", self.p.is_finite()),
            ("mu_field", self.mu_field.as_ref().is_none_or(|f| f.is_finite())),
            ("u", self.u.as_ref().is_none_or(|f| f.is_finite())),
            ("v_t", self.v_t.as_ref().is_none_or(|f| f.is_finite())),
            ("b", self.b.as_ref().is_none_or(|f| f.is_finite())),
            ("time", self.time.is_finite()),
        ];
        checks.iter().find(|(_, ok)| !ok).map(|(n, _)| *n)
    }
}

/// Time derivatives of the evolved fields, plus the pressure implied by the
/// projection at this evaluation (first-order incompressible system only).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rates {
    pub v: Option<VectorField>,
    pub e: Option<VectorField>,
    pub p: Option<ScalarField>,
    pub mu: Option<ScalarField>,
    pub u: Option<VectorField>,
    pub v_t: Option<VectorField>,
    pub b: Option<VectorField>,
    pub pressure: Option<ScalarField>,
}

impl Rates {
    /// `sum_i w_i r_i`, accumulated in the given order.
    pub fn weighted_sum(terms: &[(f64, &Rates)]) -> Rates {
        fn comb<F: Field>(terms: &[(f64, &Rates)], get: impl Fn(&Rates) -> &Option<F>) -> Option<F> {
            let (w0, r0) = terms.first()?;
            let mut acc = get(r0).as_ref()?.scale(*w0);
            for (w, r) in &terms[1..] {
                acc = acc.axpy_unchecked(*w, get(r).as_ref()?);
            }
            Some(acc)
        }
        Rates {
            v: comb(terms, |r| &r.v),
            e: comb(terms, |r| &r.e),
            p: comb(terms, |r| &r.p),
            mu: comb(terms, |r| &r.mu),
            u: comb(terms, |r| &r.u),
            v_t: comb(terms, |r| &r.v_t),
            b: comb(terms, |r| &r.b),
            pressure: None,
        }
    }
}

/// Time step request: a fixed value or CFL-limited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl DtSpec {
    pub const AUTO: DtSpec = DtSpec::Auto(AutoTag::Auto);
}

/// Fixed four-stage explicit Runge-Kutta stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControl {
    #[serde(default = "auto")]
    pub dt: DtSpec,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
}

fn auto() -> DtSpec {
    DtSpec::AUTO
}

fn default_cfl() -> f64 {
    0.4
}

impl StepControl {
    pub fn auto(t_end: f64) -> Self {
        StepControl {
            dt: DtSpec::AUTO,
            cfl: default_cfl(),
            t_end,
        }
    }

    pub fn fixed(dt: f64, t_end: f64) -> Self {
        StepControl {
            dt: DtSpec::Fixed(dt),
            cfl: default_cfl(),
            t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DtSpec::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidControl(format!("dt must be > 0, got {dt}")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidControl(format!(
                "cfl must be in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidControl(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        Ok(())
    }
}
