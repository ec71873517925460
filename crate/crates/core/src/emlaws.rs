//! Electromagnetic reading of mechanical states and residuals of the derived laws.
//!
//! `E` is the negative shear stress vector and `B = mu curl v`. Every rate fed to
//! a residual comes from a right-hand-side evaluation, never from differencing
//! snapshots, so the exact corollaries close at round-off on dealiased states.

use serde::{Deserialize, Serialize};

use crate::diffops::{cross, curl, curl_curl, deriv, div, grad, scale_by, vector_advection};
use crate::dynamics::{FluidState, MediumParams, Rates, System};
use crate::error::{Error, Result};
use crate::fields::{Field, ScalarField, VectorField};

/// Electromagnetic variables of a state.
#[derive(Debug, Clone)]
pub struct EmState {
    pub e: VectorField,
    pub b: VectorField,
    /// Kinematic vorticity `curl v`.
    pub h: VectorField,
    /// Metacharge `div E`.
    pub rho: ScalarField,
    /// Metacurrent `rho v`.
    pub j: VectorField,
}

/// `B = mu curl v`, `H = curl v`, `rho = div E`, `J = rho v` from `(v, E)`.
pub fn extract_em(state: &FluidState, params: &MediumParams) -> EmState {
    let h = curl(&state.v);
    let rho = div(&state.e);
    EmState {
        e: state.e.clone(),
        b: h.scale(params.mu),
        j: scale_by(&state.v, &rho),
        h,
        rho,
    }
}

/// Time rates of `E` and `B` taken from one right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct EmRates {
    pub de_dt: VectorField,
    pub db_dt: VectorField,
}

/// Electromagnetic view of any system's state and rates.
///
/// The classical reference carries `B` directly. The second-order form has no
/// stress variable, so `E = -mu (v_t + v.grad v) - grad p` is rebuilt together
/// with its rate. The linear solid uses `E = eta curl curl u`.
pub fn em_view(
    system: System,
    state: &FluidState,
    params: &MediumParams,
    rates: &Rates,
) -> Result<(EmState, EmRates)> {
    let missing = |what: &str| Error::InvalidScenario(format!("{} rates lack `{what}`", system.name()));
    let mu = params.mu;
    match system {
        System::ClassicalMaxwell => {
            let b = state.b.clone().ok_or_else(|| missing("b"))?;
            let rho = div(&state.e);
            let em = EmState {
                e: state.e.clone(),
                h: b.scale(1.0 / mu),
                j: scale_by(&state.v, &rho),
                b,
                rho,
            };
            let r = EmRates {
                de_dt: rates.e.clone().ok_or_else(|| missing("e"))?,
                db_dt: rates.b.clone().ok_or_else(|| missing("b"))?,
            };
            Ok((em, r))
        }
        System::SecondOrder => {
            let v = &state.v;
            let vt = state.v_t.as_ref().ok_or_else(|| missing("v_t"))?;
            let vtt = rates.v_t.as_ref().ok_or_else(|| missing("v_t"))?;
            let pt = rates.p.as_ref().ok_or_else(|| missing("p"))?;
            let accel = vt.add(&vector_advection(v, v))?;
            let e = accel.scale(-mu).sub(&grad(&state.p))?;
            let accel_t = vtt
                .add(&vector_advection(vt, v))?
                .add(&vector_advection(v, vt))?;
            let de_dt = accel_t.scale(-mu).sub(&grad(pt))?;
            let view = FluidState {
                e,
                ..state.clone()
            };
            let em = extract_em(&view, params);
            Ok((
                em,
                EmRates {
                    de_dt,
                    db_dt: curl(vt).scale(mu),
                },
            ))
        }
        System::LinearNavier => {
            let u = state.u.as_ref().ok_or_else(|| missing("u"))?;
            let view = FluidState {
                e: curl_curl(u).scale(params.eta),
                ..state.clone()
            };
            let dv = rates.v.as_ref().ok_or_else(|| missing("v"))?;
            Ok((
                extract_em(&view, params),
                EmRates {
                    de_dt: curl_curl(&state.v).scale(params.eta),
                    db_dt: curl(dv).scale(mu),
                },
            ))
        }
        _ => {
            let dv = rates.v.as_ref().ok_or_else(|| missing("v"))?;
            Ok((
                extract_em(state, params),
                EmRates {
                    de_dt: rates.e.clone().ok_or_else(|| missing("e"))?,
                    db_dt: curl(dv).scale(mu),
                },
            ))
        }
    }
}

fn c2(params: &MediumParams) -> f64 {
    params.eta / params.mu
}

/// `curl E + dB/dt`.
pub fn residual_faraday(em: &EmState, db_dt: &VectorField) -> VectorField {
    curl(&em.e).add(db_dt).expect("shared grid")
}

/// `dE/dt - c^2 curl B`.
pub fn residual_displacement_current(em: &EmState, de_dt: &VectorField, params: &MediumParams) -> VectorField {
    de_dt.axpy_unchecked(-c2(params), &curl(&em.b))
}

/// `curl(E - v x B) + dB/dt`.
pub fn residual_faraday_lorentz(em: &EmState, v: &VectorField, db_dt: &VectorField) -> VectorField {
    let inner = em.e.sub(&cross(v, &em.b)).expect("shared grid");
    curl(&inner).add(db_dt).expect("shared grid")
}

/// `dB/dt + (v.grad) B - (B.grad) v + curl E`.
pub fn residual_hertz_form(em: &EmState, v: &VectorField, db_dt: &VectorField) -> VectorField {
    db_dt
        .add(&vector_advection(v, &em.b))
        .and_then(|r| r.sub(&vector_advection(&em.b, v)))
        .and_then(|r| r.add(&curl(&em.e)))
        .expect("shared grid")
}

/// `dE/dt - curl(v x E) + kappa E + v div E - c^2 curl B`.
pub fn residual_generalized_ampere(
    em: &EmState,
    v: &VectorField,
    de_dt: &VectorField,
    params: &MediumParams,
) -> VectorField {
    de_dt
        .sub(&curl(&cross(v, &em.e)))
        .and_then(|r| r.add(&scale_by(v, &em.rho)))
        .expect("shared grid")
        .axpy_unchecked(params.kappa, &em.e)
        .axpy_unchecked(-c2(params), &curl(&em.b))
}

/// `drho/dt + div(rho v) + kappa rho`.
pub fn residual_metacharge_continuity(
    em: &EmState,
    v: &VectorField,
    drho_dt: &ScalarField,
    params: &MediumParams,
) -> ScalarField {
    drho_dt
        .add(&div(&scale_by(v, &em.rho)))
        .expect("shared grid")
        .axpy_unchecked(params.kappa, &em.rho)
}

/// Smallness measures for the stationary-regime laws, all L2 norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Applicability {
    pub e_rate: f64,
    pub kappa_e: f64,
    pub v_rho: f64,
}

/// `B + c^-2 (v x E)` with its applicability indicators.
pub fn biot_savart_residual(
    em: &EmState,
    v: &VectorField,
    de_dt: &VectorField,
    params: &MediumParams,
) -> (VectorField, Applicability) {
    let r = em.b.axpy_unchecked(1.0 / c2(params), &cross(v, &em.e));
    (r, applicability(em, v, de_dt, params))
}

fn applicability(em: &EmState, v: &VectorField, de_dt: &VectorField, params: &MediumParams) -> Applicability {
    Applicability {
        e_rate: de_dt.norm_l2(),
        kappa_e: params.kappa * em.e.norm_l2(),
        v_rho: scale_by(v, &em.rho).norm_l2(),
    }
}

/// `curl B - (kappa / c^2) E`.
pub fn ohm_ampere_residual(em: &EmState, params: &MediumParams) -> VectorField {
    curl(&em.b).axpy_unchecked(-params.kappa / c2(params), &em.e)
}

/// `c^2 curl B - J`.
pub fn ampere_vacuo_residual(em: &EmState, params: &MediumParams) -> VectorField {
    curl(&em.b).scale(c2(params)).sub(&em.j).expect("shared grid")
}

/// Names of every law in a report, in report order.
pub const LAWS: [&str; 10] = [
    "faraday",
    "displacement_current",
    "faraday_lorentz",
    "hertz_form",
    "generalized_ampere",
    "metacharge_continuity",
    "biot_savart",
    "ohm_ampere",
    "ampere_vacuo",
    "div_b",
];

/// Residual norms of one law. `norm` and `norm_linf` are the norms of the law's
/// largest term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawResidual {
    pub law: String,
    pub l2: f64,
    pub linf: f64,
    pub norm: f64,
    pub norm_linf: f64,
}

impl LawResidual {
    fn new<F: Field>(law: &str, residual: &F, terms: &[&F]) -> Self {
        let norm = terms.iter().map(|t| t.norm_l2()).fold(0.0, f64::max);
        let norm_linf = terms.iter().map(|t| t.norm_linf()).fold(0.0, f64::max);
        LawResidual {
            law: law.to_string(),
            l2: residual.norm_l2(),
            linf: residual.norm_linf(),
            norm,
            norm_linf,
        }
    }

    /// `l2 / norm`, zero when both vanish.
    pub fn normalized_l2(&self) -> f64 {
        ratio(self.l2, self.norm)
    }

    /// `linf / norm_linf`, zero when both vanish.
    pub fn normalized_linf(&self) -> f64 {
        ratio(self.linf, self.norm_linf)
    }
}

fn ratio(r: f64, n: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawResidualReport {
    pub time: f64,
    pub entries: Vec<LawResidual>,
    pub applicability: Applicability,
}

impl LawResidualReport {
    pub fn get(&self, law: &str) -> Option<&LawResidual> {
        self.entries.iter().find(|e| e.law == law)
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn csv_header() -> &'static str {
        "time,law,l2,linf,norm\n"
    }

    pub fn to_csv_rows(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{},{},{},{},{}\n", self.time, e.law, e.l2, e.linf, e.norm))
            .collect()
    }
}

/// Evaluates every registered law on `state` using `rates` from the same
/// right-hand-side evaluation.
pub fn full_report(
    system: System,
    state: &FluidState,
    params: &MediumParams,
    rates: &Rates,
) -> Result<LawResidualReport> {
    let (em, r) = em_view(system, state, params, rates)?;
    let v = &state.v;
    let k2 = c2(params);
    let mut entries = Vec::with_capacity(LAWS.len());

    let curl_e = curl(&em.e);
    let c2_curl_b = curl(&em.b).scale(k2);
    entries.push(LawResidual::new(
        "faraday",
        &residual_faraday(&em, &r.db_dt),
        &[&curl_e, &r.db_dt],
    ));
    entries.push(LawResidual::new(
        "displacement_current",
        &residual_displacement_current(&em, &r.de_dt, params),
        &[&r.de_dt, &c2_curl_b],
    ));

    let vxb = cross(v, &em.b);
    let curl_vxb = curl(&vxb);
    entries.push(LawResidual::new(
        "faraday_lorentz",
        &residual_faraday_lorentz(&em, v, &r.db_dt),
        &[&curl_e, &curl_vxb, &r.db_dt],
    ));
    let transport_b = vector_advection(v, &em.b);
    let stretch_b = vector_advection(&em.b, v);
    entries.push(LawResidual::new(
        "hertz_form",
        &residual_hertz_form(&em, v, &r.db_dt),
        &[&r.db_dt, &transport_b, &stretch_b, &curl_e],
    ));

    let curl_vxe = curl(&cross(v, &em.e));
    let kappa_e = em.e.scale(params.kappa);
    let v_rho = scale_by(v, &em.rho);
    entries.push(LawResidual::new(
        "generalized_ampere",
        &residual_generalized_ampere(&em, v, &r.de_dt, params),
        &[&r.de_dt, &curl_vxe, &kappa_e, &v_rho, &c2_curl_b],
    ));

    let drho = div(&r.de_dt);
    let div_j = div(&v_rho);
    let kappa_rho = em.rho.scale(params.kappa);
    entries.push(LawResidual::new(
        "metacharge_continuity",
        &residual_metacharge_continuity(&em, v, &drho, params),
        &[&drho, &div_j, &kappa_rho],
    ));

    let (bs, applicability) = biot_savart_residual(&em, v, &r.de_dt, params);
    let vxe = cross(v, &em.e).scale(1.0 / k2);
    entries.push(LawResidual::new("biot_savart", &bs, &[&em.b, &vxe]));

    let curl_b = curl(&em.b);
    let ohm = em.e.scale(params.kappa / k2);
    entries.push(LawResidual::new(
        "ohm_ampere",
        &ohm_ampere_residual(&em, params),
        &[&curl_b, &ohm],
    ));
    entries.push(LawResidual::new(
        "ampere_vacuo",
        &ampere_vacuo_residual(&em, params),
        &[&c2_curl_b, &em.j],
    ));

    // div B: normalized against the largest single derivative term
    let div_b = div(&em.b);
    let partials: Vec<ScalarField> = (0..3)
        .map(|a| deriv(em.b.comp(a), a))
        .collect();
    let terms: Vec<&ScalarField> = partials.iter().collect();
    entries.push(LawResidual::new("div_b", &div_b, &terms));

    Ok(LawResidualReport {
        time: state.time,
        entries,
        applicability,
    })
}

/// Right-hand side evaluated and reported in one call.
pub fn report_for(system: System, state: &FluidState, params: &MediumParams) -> Result<LawResidualReport> {
    let rates = crate::dynamics::evaluate(system, state, params)?;
    full_report(system, state, params, &rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::{band_limit, leray_project};
    use crate::dynamics::{integrate, StepControl};
    use crate::fields::{make_grid, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn g64() -> GridSpec {
        make_grid([64, 64, 1], [2.0 * PI; 3]).unwrap()
    }

    fn noise(g: GridSpec, rng: &mut ChaCha8Rng, kmax: usize, amp: f64) -> VectorField {
        let mut comp = || {
            ScalarField::from_values(g, (0..g.len()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect())
        };
        let v = VectorField::new(comp(), comp(), comp());
        band_limit(&v, kmax)
    }

    fn fi_state(seed: u64) -> FluidState {
        let g = g64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = leray_project(&noise(g, &mut rng, 10, 0.1)).solenoidal;
        let e = noise(g, &mut rng, 10, 0.1);
        FluidState::incompressible(v, e)
    }

    #[test]
    fn extract_by_hand() {
        let g = g64();
        let v = VectorField::from_fn(g, |x, y, _| [-y.sin(), x.sin(), 0.0]);
        let e = VectorField::from_fn(g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let p = MediumParams::new(2.0, 1.0, 0.0, 0.0).unwrap();
        let em = extract_em(&FluidState::incompressible(v, e), &p);
        let b = VectorField::from_fn(g, |x, y, _| [0.0, 0.0, 2.0 * (x.cos() + y.cos())]);
        assert!(em.b.sub(&b).unwrap().norm_linf() < 1e-12);
        let rho = ScalarField::from_fn(g, |x, _, _| x.cos());
        assert!(em.rho.sub(&rho).unwrap().norm_linf() < 1e-12);
        assert!(em.b.sub(&em.h.scale(2.0)).unwrap().norm_linf() < 1e-14);
        assert!(div(&em.b).norm_linf() < 1e-12);
    }

    #[test]
    fn zero_state_reports_zero() {
        let s = FluidState::zeros(g64());
        let r = report_for(System::FiIncompressible, &s, &MediumParams::default()).unwrap();
        assert_eq!(r.entries.len(), LAWS.len());
        for (e, name) in r.entries.iter().zip(LAWS) {
            assert_eq!(e.law, name);
            assert_eq!(e.l2, 0.0);
            assert_eq!(e.normalized_linf(), 0.0);
        }
    }

    #[test]
    fn exact_corollaries_on_band_limited_states() {
        for (seed, kappa) in [(1, 0.0), (2, 0.5)] {
            let s = fi_state(seed);
            let p = MediumParams::new(1.0, 1.0, 0.0, kappa).unwrap();
            let r = report_for(System::FiIncompressible, &s, &p).unwrap();
            for law in ["faraday_lorentz", "hertz_form", "generalized_ampere", "metacharge_continuity"] {
                let e = r.get(law).unwrap();
                assert!(e.normalized_linf() < 1e-9, "{law}: {:e}", e.normalized_linf());
                assert!(e.norm > 0.0);
            }
            assert!(r.get("div_b").unwrap().linf < 1e-12);
        }
    }

    #[test]
    fn hertz_matches_faraday_lorentz() {
        let s = fi_state(3);
        let p = MediumParams::default();
        let rates = crate::dynamics::evaluate(System::FiIncompressible, &s, &p).unwrap();
        let (em, r) = em_view(System::FiIncompressible, &s, &p, &rates).unwrap();
        let a = residual_faraday_lorentz(&em, &s.v, &r.db_dt);
        let b = residual_hertz_form(&em, &s.v, &r.db_dt);
        assert!(a.sub(&b).unwrap().norm_linf() < 1e-9);
    }

    #[test]
    fn classical_trajectory_satisfies_linear_laws() {
        let g = g64();
        let e = VectorField::from_fn(g, |x, y, _| [0.0, x.sin(), (x + y).cos()]);
        let mut s = FluidState::incompressible(VectorField::zeros(g), e);
        s.b = Some(VectorField::from_fn(g, |_, y, _| [0.0, 0.0, 0.5 * y.sin()]));
        let p = MediumParams::default();
        integrate(s, &p, System::ClassicalMaxwell, &StepControl::auto(1.0), |_, st| {
            let r = report_for(System::ClassicalMaxwell, st, &p)?;
            assert!(r.get("faraday").unwrap().linf < 1e-11);
            assert!(r.get("displacement_current").unwrap().linf < 1e-11);
            assert!(r.get("div_b").unwrap().linf < 1e-12);
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn manufactured_stationary_laws() {
        let g = g64();
        let v = VectorField::from_fn(g, |_, y, _| [y.sin(), 0.0, 0.0]);
        let e = VectorField::from_fn(g, |x, _, _| [0.0, 0.0, x.cos()]);
        let p = MediumParams::new(1.0, 4.0, 0.0, 0.5).unwrap();
        let rho = div(&e);
        let b = cross(&v, &e).scale(-1.0 / c2(&p));
        let em = EmState {
            j: scale_by(&v, &rho),
            h: b.scale(1.0 / p.mu),
            e: e.clone(),
            b,
            rho,
        };
        let (r, _) = biot_savart_residual(&em, &v, &VectorField::zeros(g), &p);
        assert!(r.norm_linf() < 1e-14);

        let b = VectorField::from_fn(g, |x, y, _| [0.0, 0.0, x.sin() * y.cos()]);
        let e = curl(&b).scale(c2(&p) / p.kappa);
        let em = EmState {
            rho: div(&e),
            j: curl(&b).scale(c2(&p)),
            h: b.clone(),
            e,
            b,
        };
        assert!(ohm_ampere_residual(&em, &p).norm_linf() < 1e-12);
        assert!(ampere_vacuo_residual(&em, &p).norm_linf() < 1e-12);
    }

    #[test]
    fn report_serialization() {
        let s = fi_state(4);
        let r = report_for(System::FiIncompressible, &s, &MediumParams::default()).unwrap();
        let line = r.to_json_line();
        assert!(line.ends_with('\n'));
        let back: LawResidualReport = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.to_csv_rows().lines().count(), LAWS.len());
        assert!(r.to_csv_rows().starts_with("0,faraday,"));
    }
}
