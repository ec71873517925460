//! Verification suites: operator identities, the Oldroyd discrepancy, exact
//! corollary residuals, dispersion and integrator checks, each with a measured
//! value and a tolerance.

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::rc::Rc;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffops::{
    band_limit, curl, div, grad, gromeka_lamb_residual, hessian_contract, identity_residual_triple,
    leray_project,
};
use crate::dynamics::{
    integrate, oldroyd_discrepancy, shear_energy, FluidState, MediumParams, StepControl, System,
};
use crate::emlaws::{report_for, LawResidualReport};
use crate::error::{Error, Result};
use crate::fields::{from_spectral, make_grid, to_spectral, Field, GridSpec, ScalarField, TensorField, VectorField};
use crate::scenarios::{
    delta_sweep, dispersion_shear, dt_convergence, generate, loglog_slope, maxwell_limit_distance, measure_wave,
    second_order_deviation, ScenarioKind, ScenarioSpec, WaveMeasurement,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::InvalidConfig(format!("unknown level `{s}`; expected quick or full"))),
        }
    }
}

/// Deliberate operator faults for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tamper {
    /// Curl with the wrong sign.
    CurlSign,
    /// Gradient scaled by 1.01.
    GradScale,
    /// Projection that returns its input.
    SkipProjection,
}

impl FromStr for Tamper {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curl_sign" => Ok(Tamper::CurlSign),
            "grad_scale" => Ok(Tamper::GradScale),
            "skip_projection" => Ok(Tamper::SkipProjection),
            _ => Err(Error::InvalidConfig(format!(
                "unknown tamper `{s}`; expected curl_sign, grad_scale or skip_projection"
            ))),
        }
    }
}

/// Operators under test, optionally with an injected fault.
#[derive(Debug, Clone, Copy, Default)]
struct Ops {
    tamper: Option<Tamper>,
}

impl Ops {
    fn grad(&self, f: &ScalarField) -> VectorField {
        let g = grad(f);
        match self.tamper {
            Some(Tamper::GradScale) => g.scale(1.01),
            _ => g,
        }
    }

    fn curl(&self, v: &VectorField) -> VectorField {
        let c = curl(v);
        match self.tamper {
            Some(Tamper::CurlSign) => c.scale(-1.0),
            _ => c,
        }
    }

    fn project(&self, v: &VectorField) -> VectorField {
        match self.tamper {
            Some(Tamper::SkipProjection) => v.clone(),
            _ => leray_project(v).solenoidal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    /// Acceptance rule, e.g. `< 1e-12` or `1 +- 0.5%`.
    pub criterion: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub level: Level,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tamper: Option<Tamper>,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

enum Rule {
    Below(f64),
    Near { target: f64, rel: f64 },
    Within { lo: f64, hi: f64 },
}

impl Rule {
    fn holds(&self, x: f64) -> bool {
        match *self {
            Rule::Below(t) => x < t,
            Rule::Near { target, rel } => (x - target).abs() <= rel * target.abs(),
            Rule::Within { lo, hi } => (lo..=hi).contains(&x),
        }
    }

    fn describe(&self) -> String {
        match *self {
            Rule::Below(t) => format!("< {t:e}"),
            Rule::Near { target, rel } => format!("{target} +- {}%", rel * 100.0),
            Rule::Within { lo, hi } => format!("in [{lo}, {hi}]"),
        }
    }
}

type Check = (String, Rule, Box<dyn Fn(&Ops) -> Result<f64>>);

fn check(name: impl Into<String>, rule: Rule, f: impl Fn(&Ops) -> Result<f64> + 'static) -> Check {
    (name.into(), rule, Box::new(f))
}

fn grid2(n: usize) -> GridSpec {
    make_grid([n, n, 1], [2.0 * PI; 3]).expect("valid grid")
}

fn grid3(n: usize) -> GridSpec {
    make_grid([n, n, n], [2.0 * PI; 3]).expect("valid grid")
}

fn noise_vector(g: GridSpec, seed: u64, kmax: usize) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comp = || {
        let f = ScalarField::from_values(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        band_limit(&f, kmax)
    };
    VectorField::new(comp(), comp(), comp())
}

fn rel(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).expect("shared grid").norm_linf() / b.norm_linf().max(f64::MIN_POSITIVE)
}

fn standing(amplitude: f64) -> ScenarioSpec {
    ScenarioSpec::new(ScenarioKind::StandingShearWave, amplitude).with_polarization([0.0, 1.0, 0.0])
}

/// Runs `spec` and fits its tracked mode.
fn measured_wave(
    spec: &ScenarioSpec,
    grid: GridSpec,
    params: &MediumParams,
    system: System,
    control: StepControl,
) -> Result<WaveMeasurement> {
    let start = generate(spec, grid, params, system)?;
    let mut t = Vec::new();
    let mut y: Vec<Complex64> = Vec::new();
    integrate(start, params, system, &control, |_, s| {
        t.push(s.time);
        y.push(spec.probe(s, system).expect("scenario has a probe"));
        Ok(())
    })?;
    let m = measure_wave(&t, &y, spec.k_mag(&grid))?;
    if !m.valid {
        return Err(Error::Fit(format!(
            "fit flagged invalid (residual {:e}, {:.2} periods)",
            m.fit_residual, m.periods_spanned
        )));
    }
    Ok(m)
}

/// Damped standing wave with `kappa = 0.5`, measured once and shared by the
/// decay and frequency checks.
fn telegraph_wave(
    cell: &OnceCell<std::result::Result<WaveMeasurement, String>>,
    g: GridSpec,
) -> Result<WaveMeasurement> {
    cell.get_or_init(|| {
        let p = MediumParams::new(1.0, 1.0, 0.0, 0.5).map_err(|e| e.to_string())?;
        measured_wave(&standing(1e-3), g, &p, System::FiIncompressible, StepControl::auto(14.0))
            .map_err(|e| e.to_string())
    })
    .clone()
    .map_err(Error::Fit)
}

/// Largest normalized residual of `laws` over a short run of `spec`.
fn max_corollary_residual(spec: &ScenarioSpec, grid: GridSpec, t_end: f64, laws: &[&str]) -> Result<f64> {
    let params = MediumParams::default();
    let system = System::FiIncompressible;
    let start = generate(spec, grid, &params, system)?;
    let mut worst: f64 = 0.0;
    integrate(start, &params, system, &StepControl::auto(t_end), |_, s| {
        let r: LawResidualReport = report_for(system, s, &params)?;
        for law in laws {
            let e = r.get(law).expect("registered law");
            worst = worst.max(e.normalized_linf());
        }
        Ok(())
    })?;
    Ok(worst)
}

const EXACT_LAWS: [&str; 4] = [
    "faraday_lorentz",
    "hertz_form",
    "generalized_ampere",
    "metacharge_continuity",
];

fn operator_checks(n: usize, three_d: bool) -> Vec<Check> {
    let g = if three_d { grid3(n) } else { grid2(n) };
    let tag = |s: &str| {
        if three_d {
            format!("{s}_3d_{n}")
        } else if n != 64 {
            format!("{s}_{n}")
        } else {
            s.to_string()
        }
    };
    let band = n / 6;
    vec![
        check(tag("fft_roundtrip"), Rule::Below(1e-13), move |_| {
            let v = noise_vector(g, 11, n);
            let back = from_spectral(&to_spectral(v.x()));
            Ok(back.sub(v.x())?.norm_linf())
        }),
        check(tag("grad_analytic"), Rule::Below(1e-12), move |ops| {
            let f = ScalarField::from_fn(g, |x, y, z| x.sin() * (2.0 * y).cos() + z.cos());
            let want = VectorField::from_fn(g, |x, y, z| {
                [
                    x.cos() * (2.0 * y).cos(),
                    -2.0 * x.sin() * (2.0 * y).sin(),
                    if three_d { -z.sin() } else { 0.0 },
                ]
            });
            Ok(rel(&ops.grad(&f), &want))
        }),
        check(tag("curl_analytic"), Rule::Below(1e-12), move |ops| {
            let v = VectorField::from_fn(g, |x, y, _| [y.sin(), x.cos(), (x + y).sin()]);
            let want = VectorField::from_fn(g, |x, y, _| [(x + y).cos(), -(x + y).cos(), -x.sin() - y.cos()]);
            Ok(rel(&ops.curl(&v), &want))
        }),
        check(tag("div_curl_and_curl_grad"), Rule::Below(1e-12), move |ops| {
            let v = noise_vector(g, 12, band);
            let a = div(&ops.curl(&v)).norm_linf();
            let b = ops.curl(&ops.grad(v.x())).norm_linf();
            Ok(a.max(b) / v.norm_linf())
        }),
        check(tag("leray_projection"), Rule::Below(1e-12), move |ops| {
            let v = noise_vector(g, 13, band);
            let p = ops.project(&v);
            let divergence = div(&p).norm_linf() / v.norm_linf();
            let idempotence = rel(&ops.project(&p), &p);
            Ok(divergence.max(idempotence))
        }),
        check(tag("cross_product_identity"), Rule::Below(1e-10), move |_| {
            let v = noise_vector(g, 14, band);
            let e = noise_vector(g, 15, band);
            let scale = curl(&crate::diffops::cross(&v, &e)).norm_linf();
            Ok(identity_residual_triple(&v, &e).norm_linf() / scale)
        }),
        check(tag("gromeka_lamb"), Rule::Below(1e-10), move |_| {
            let v = noise_vector(g, 16, band);
            let scale = crate::diffops::vector_advection(&v, &v).norm_linf();
            Ok(gromeka_lamb_residual(&v).norm_linf() / scale)
        }),
        check(tag("oldroyd_discrepancy"), Rule::Below(1e-9), move |_| {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let sigma = TensorField::from_components(std::array::from_fn(|_| {
                let f = ScalarField::from_values(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
                band_limit(&f, band)
            }));
            let v = noise_vector(g, 18, band);
            let h = hessian_contract(&v, &sigma);
            let d = oldroyd_discrepancy(&sigma, &v);
            Ok(d.add(&h)?.norm_linf() / h.norm_linf().max(1.0))
        }),
    ]
}

fn quick_checks() -> Vec<Check> {
    let mut out = operator_checks(64, false);
    let g = grid2(64);
    let unit = MediumParams::default();
    let telegraph: Rc<OnceCell<std::result::Result<WaveMeasurement, String>>> = Rc::default();
    out.extend([
        check("dispersion_roots", Rule::Below(1e-12), |_| {
            let i = Complex64::new(0.0, 1.0);
            let mut worst: f64 = 0.0;
            for (mu, eta, kappa, k) in [(1.0, 1.0, 0.0, 1.0), (1.0, 1.0, 0.5, 1.0), (2.0, 3.0, 1.5, 4.0), (1.0, 1.0, 5.0, 1.0)] {
                let p = MediumParams::new(mu, eta, 0.0, kappa)?;
                for w in dispersion_shear(k, &p).roots {
                    let r = p.mu * w * w + i * p.kappa * p.mu * w - p.eta * k * k;
                    worst = worst.max(r.norm() / (p.mu * w.norm_sqr() + p.eta * k * k));
                }
            }
            Ok(worst)
        }),
        check("exact_corollaries", Rule::Below(1e-9), move |_| {
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.1).with_seed(7);
            max_corollary_residual(&spec, g, 0.2, &EXACT_LAWS)
        }),
        check("div_b", Rule::Below(1e-12), move |_| {
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.1).with_seed(7);
            max_corollary_residual(&spec, g, 0.2, &["div_b"])
        }),
        check("shear_wave_speed", Rule::Near { target: 1.0, rel: 0.005 }, move |_| {
            let m = measured_wave(&standing(1e-3), g, &unit, System::FiIncompressible, StepControl::auto(13.5))?;
            Ok(m.phase_speed)
        }),
        check("telegraph_decay_rate", Rule::Near { target: 0.25, rel: 0.01 }, {
            let t = telegraph.clone();
            move |_| Ok(telegraph_wave(&t, g)?.decay_rate)
        }),
        check(
            "telegraph_frequency",
            Rule::Near { target: (1.0f64 - 0.0625).sqrt(), rel: 0.01 },
            move |_| Ok(telegraph_wave(&telegraph, g)?.frequency),
        ),
        check("compressional_wave_speed", Rule::Near { target: 10.0, rel: 0.01 }, move |_| {
            let p = MediumParams::new(1.0, 1.0, 98.0, 0.0)?;
            let spec = ScenarioSpec::new(ScenarioKind::CompressionPulse, 1e-3);
            let m = measured_wave(&spec, g, &p, System::LinearNavier, StepControl::auto(1.5))?;
            Ok(m.phase_speed)
        }),
        check("uniform_e_decay", Rule::Near { target: 0.5, rel: 0.01 }, move |_| {
            let p = MediumParams::new(1.0, 1.0, 0.0, 0.5)?;
            let spec = ScenarioSpec::new(ScenarioKind::UniformEDecay, 1e-3);
            let start = generate(&spec, g, &p, System::FiIncompressible)?;
            let mut t = Vec::new();
            let mut y = Vec::new();
            integrate(start, &p, System::FiIncompressible, &StepControl::fixed(0.05, 2.0), |_, s| {
                t.push(s.time);
                y.push(spec.probe(s, System::FiIncompressible).expect("probe"));
                Ok(())
            })?;
            Ok(measure_wave(&t, &y, spec.k_mag(&g))?.decay_rate)
        }),
        check("second_order_equivalence", Rule::Below(1e-6), move |_| {
            second_order_deviation(&standing(1e-3), g, &unit, 0.05, 1.0)
        }),
        check("rk4_order", Rule::Within { lo: 12.8, hi: 19.2 }, move |_| {
            Ok(dt_convergence(&standing(1e-3), g, &unit, System::FiIncompressible, 0.05, 2.0)?.ratio)
        }),
        check("energy_drift", Rule::Below(1.0), move |_| {
            // relative drift against twice the analytic RK4 damping over 200 steps
            let start = generate(&standing(1e-3), g, &unit, System::FiIncompressible)?;
            let dt = 0.4 * g.min_spacing();
            let e0 = shear_energy(&start, &unit);
            let end = integrate(start, &unit, System::FiIncompressible, &StepControl::fixed(dt, 200.0 * dt), |_, _| {
                Ok(())
            })?;
            let drift = (shear_energy(&end, &unit) - e0).abs() / e0;
            Ok(drift / (2.0 * 200.0 * dt.powi(6) / 72.0))
        }),
        check("run_to_run_determinism", Rule::Below(0.5), |_| {
            let g = grid2(32);
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.3).with_seed(3);
            let go = || -> Result<(FluidState, String)> {
                let p = MediumParams::default();
                let start = generate(&spec, g, &p, System::FiIncompressible)?;
                let mut log = String::new();
                let end = integrate(start, &p, System::FiIncompressible, &StepControl::auto(0.5), |_, s| {
                    log.push_str(&report_for(System::FiIncompressible, s, &p)?.to_json_line());
                    Ok(())
                })?;
                Ok((end, log))
            };
            let (a, la) = go()?;
            let (b, lb) = go()?;
            let same = a == b && la == lb;
            Ok(if same { 0.0 } else { 1.0 })
        }),
    ]);
    out
}

fn full_checks() -> Vec<Check> {
    let mut out = quick_checks();
    out.extend(operator_checks(128, false));
    out.extend(operator_checks(32, true));
    let unit = MediumParams::default();
    out.extend([
        check("shear_wave_speed_128", Rule::Near { target: 1.0, rel: 0.005 }, move |_| {
            let m = measured_wave(
                &standing(1e-3),
                grid2(128),
                &unit,
                System::FiIncompressible,
                StepControl::auto(13.5),
            )?;
            Ok(m.phase_speed)
        }),
        check("shear_wave_speed_3d_32", Rule::Near { target: 1.0, rel: 0.005 }, move |_| {
            let spec = ScenarioSpec::new(ScenarioKind::StandingShearWave, 1e-3)
                .with_wavevector([1, 1, 0])
                .with_polarization([0.0, 0.0, 1.0]);
            let m = measured_wave(&spec, grid3(32), &unit, System::FiIncompressible, StepControl::auto(9.5))?;
            Ok(m.phase_speed)
        }),
        check("exact_corollaries_3d_32", Rule::Below(1e-9), |_| {
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.1).with_seed(7);
            max_corollary_residual(&spec, grid3(32), 0.1, &EXACT_LAWS)
        }),
        check("div_b_3d_32", Rule::Below(1e-12), |_| {
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.1).with_seed(7);
            max_corollary_residual(&spec, grid3(32), 0.1, &["div_b"])
        }),
        check("maxwell_limit_slope", Rule::Within { lo: 1.9, hi: 2.1 }, move |_| {
            let amps = [1e-1, 1e-2, 1e-3];
            let d = amps
                .iter()
                .map(|&a| {
                    let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, a).with_seed(7);
                    maxwell_limit_distance(&spec, grid2(64), &unit, 1.0, 0.4)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(loglog_slope(&amps, &d))
        }),
        check("delta_limit_slope", Rule::Within { lo: 0.75, hi: 1.25 }, move |_| {
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.5).with_seed(7);
            let s = delta_sweep(&unit, &[10.0, 100.0, 1000.0], &spec, grid2(64), 1.0, 0.4)?;
            if !s.failures.is_empty() {
                return Err(Error::InvalidConfig(format!("{} sweep members failed", s.failures.len())));
            }
            let monotone = s.rows.windows(2).all(|w| w[1].deviation_l2 < w[0].deviation_l2);
            Ok(if monotone { s.slope } else { f64::NAN })
        }),
    ]);
    out
}

/// Runs the suite at `level`. With `tamper`, the named operator is faulty
/// inside the checks that exercise it.
pub fn verify(level: Level, tamper: Option<Tamper>) -> SuiteReport {
    verify_with(level, tamper, |_| {})
}

/// As [`verify`], calling `progress` after every check.
pub fn verify_with(level: Level, tamper: Option<Tamper>, mut progress: impl FnMut(&CheckResult)) -> SuiteReport {
    let ops = Ops { tamper };
    let checks = match level {
        Level::Quick => quick_checks(),
        Level::Full => full_checks(),
    };
    let suite_start = Instant::now();
    let mut results = Vec::with_capacity(checks.len());
    for (name, rule, f) in checks {
        let start = Instant::now();
        let outcome = f(&ops);
        let seconds = start.elapsed().as_secs_f64();
        let r = match outcome {
            Ok(x) => CheckResult {
                name: name.clone(),
                passed: rule.holds(x),
                measured: x,
                criterion: rule.describe(),
                error: None,
                seconds,
            },
            Err(e) => CheckResult {
                name: name.clone(),
                passed: false,
                measured: f64::NAN,
                criterion: rule.describe(),
                error: Some(e.to_string()),
                seconds,
            },
        };
        progress(&r);
        results.push(r);
    }
    SuiteReport {
        level,
        tamper,
        passed: results.iter().all(|r| r.passed),
        seconds: suite_start.elapsed().as_secs_f64(),
        checks: results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert!(Rule::Near { target: 10.0, rel: 0.01 }.holds(10.09));
        assert!(!Rule::Near { target: 10.0, rel: 0.01 }.holds(10.11));
        assert!(!Rule::Below(1.0).holds(f64::NAN));
        assert!(!Rule::Within { lo: 0.0, hi: 1.0 }.holds(f64::NAN));
    }

    #[test]
    fn parse_level_and_tamper() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert!("slow".parse::<Level>().is_err());
        assert_eq!("curl_sign".parse::<Tamper>().unwrap(), Tamper::CurlSign);
    }

    #[test]
    fn operator_checks_pass_and_catch_tampering() {
        let checks = operator_checks(32, false);
        for tamper in [None, Some(Tamper::CurlSign), Some(Tamper::GradScale), Some(Tamper::SkipProjection)] {
            let ops = Ops { tamper };
            let failed: Vec<&str> = checks
                .iter()
                .filter(|(_, rule, f)| !rule.holds(f(&ops).unwrap_or(f64::NAN)))
                .map(|(n, _, _)| n.as_str())
                .collect();
            let expected: &[&str] = match tamper {
                None => &[],
                Some(Tamper::CurlSign) => &["curl_analytic_32"],
                Some(Tamper::GradScale) => &["grad_analytic_32"],
                Some(Tamper::SkipProjection) => &["leray_projection_32"],
            };
            assert_eq!(failed, expected, "{tamper:?}");
        }
    }
}
