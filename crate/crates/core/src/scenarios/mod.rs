//! Initial data generators, analytic wave oracles and the convergence studies
//! built on them.

mod dispersion;
mod measure;
mod studies;

pub use dispersion::{dispersion_compressional, dispersion_shear, Damping, ShearRoots};
pub use measure::{measure_wave, WaveMeasurement, MIN_SAMPLES};
pub use studies::{
    delta_sweep, dt_convergence, loglog_slope, maxwell_limit_distance, second_order_deviation,
    well_prepared_solid, Convergence, DeltaFailure, DeltaRow, DeltaSweep,
};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::diffops::{band_limit, deriv, leray_project};
use crate::dynamics::{classical_from_mechanical, second_order_from_first, FluidState, MediumParams, System};
use crate::error::{Error, Result};
use crate::fields::{to_spectral, Field, GridSpec, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "plane_shear_wave")]
    PlaneShearWave,
    #[serde(rename = "standing_shear_wave")]
    StandingShearWave,
    #[serde(rename = "gaussian_vortex")]
    GaussianVortex,
    #[serde(rename = "random_solenoidal")]
    RandomSolenoidal,
    #[serde(rename = "compression_pulse")]
    CompressionPulse,
    #[serde(rename = "uniform_E_decay")]
    UniformEDecay,
}

impl ScenarioKind {
    pub fn is_shear(self) -> bool {
        matches!(self, ScenarioKind::PlaneShearWave | ScenarioKind::StandingShearWave)
    }

    fn needs_wavevector(self) -> bool {
        matches!(
            self,
            ScenarioKind::PlaneShearWave | ScenarioKind::StandingShearWave | ScenarioKind::CompressionPulse
        )
    }
}

/// Initial condition description. Wavevectors are integer mode numbers; the
/// physical wavenumber along axis `i` is `2 pi k_i / L_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub amplitude: f64,
    #[serde(default = "default_wavevector")]
    pub wavevector: [i64; 3],
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<[f64; 3]>,
}

fn default_wavevector() -> [i64; 3] {
    [1, 0, 0]
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, amplitude: f64) -> Self {
        ScenarioSpec {
            kind,
            amplitude,
            wavevector: default_wavevector(),
            seed: 0,
            polarization: None,
        }
    }

    pub fn with_wavevector(mut self, k: [i64; 3]) -> Self {
        self.wavevector = k;
        self
    }

    pub fn with_polarization(mut self, p: [f64; 3]) -> Self {
        self.polarization = Some(p);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the spec on its own and against `grid`.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !self.amplitude.is_finite() {
            return bad(format!("amplitude must be finite, got {}", self.amplitude));
        }
        let k = self.wavevector;
        for (a, &ka) in k.iter().enumerate() {
            if ka != 0 && !grid.is_active(a) {
                return bad(format!("wavevector has a component along inactive axis {a}"));
            }
            if ka != 0 && 3 * ka.unsigned_abs() as usize > grid.dims()[a] {
                return bad(format!("wavevector component {ka} is outside the dealiased band"));
            }
        }
        if self.kind.needs_wavevector() && k == [0, 0, 0] {
            return bad(format!("{:?} needs a nonzero wavevector", self.kind));
        }
        if self.kind.is_shear() {
            let Some(p) = self.polarization else {
                return bad("shear scenarios need a polarization".into());
            };
            let pn = norm3(p);
            if !(pn.is_finite() && (pn - 1.0).abs() <= 1e-9) {
                return bad(format!("polarization must be a unit vector, |p| = {pn}"));
            }
            let kp = physical_k(grid, k);
            let dot = kp[0] * p[0] + kp[1] * p[1] + kp[2] * p[2];
            if dot.abs() > 1e-12 * norm3(kp) {
                return bad(format!("polarization is not orthogonal to the wavevector (k.p = {dot})"));
            }
        }
        if self.kind == ScenarioKind::UniformEDecay && k == [0, 0, 0] && self.polarization.is_none() {
            return bad("uniform_E_decay with a zero wavevector needs a polarization".into());
        }
        if self.kind == ScenarioKind::GaussianVortex && !(grid.is_active(0) && grid.is_active(1)) {
            return bad("gaussian_vortex needs active x and y axes".into());
        }
        Ok(())
    }

    /// Checks that the scenario makes sense for `system`.
    pub fn check_compatible(&self, system: System) -> Result<()> {
        let ok = match self.kind {
            ScenarioKind::CompressionPulse => system.is_compressible(),
            ScenarioKind::UniformEDecay => system != System::LinearNavier,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!(
                "{:?} is not compatible with {}",
                self.kind,
                system.name()
            )))
        }
    }

    /// Physical wavevector.
    pub fn k_vector(&self, grid: &GridSpec) -> [f64; 3] {
        physical_k(grid, self.wavevector)
    }

    pub fn k_mag(&self, grid: &GridSpec) -> f64 {
        norm3(self.k_vector(grid))
    }

    /// Complex amplitude of the tracked mode, when the scenario has one: the
    /// polarized velocity for shear kinds, the longitudinal displacement (or
    /// velocity on the liquid branch) for the pulse, the longitudinal `E` for
    /// the decay scenario.
    pub fn probe(&self, state: &FluidState, system: System) -> Option<Complex64> {
        let g = *state.grid();
        let khat = unit(self.k_vector(&g));
        let (field, dir) = match self.kind {
            ScenarioKind::PlaneShearWave | ScenarioKind::StandingShearWave => {
                (&state.v, self.polarization?)
            }
            ScenarioKind::CompressionPulse => match (&state.u, system) {
                (Some(u), System::LinearNavier | System::CompressibleSolid) => (u, khat?),
                _ => (&state.v, khat?),
            },
            ScenarioKind::UniformEDecay => (&state.e, khat.or(self.polarization)?),
            _ => return None,
        };
        let mut s = ScalarField::zeros(g);
        for (a, d) in dir.iter().enumerate() {
            if *d != 0.0 {
                s = s.axpy_unchecked(*d, field.comp(a));
            }
        }
        Some(to_spectral(&s).mode(self.wavevector))
    }

    /// Expected `(angular frequency, decay rate)` of the tracked mode.
    pub fn oracle(&self, grid: &GridSpec, params: &MediumParams, system: System) -> Option<(f64, f64)> {
        let k = self.k_mag(grid);
        match self.kind {
            ScenarioKind::PlaneShearWave | ScenarioKind::StandingShearWave => match system {
                System::ClassicalMaxwell => None,
                System::LinearNavier => Some((params.c() * k, 0.0)),
                _ => {
                    let r = dispersion_shear(k, params).roots[0];
                    Some((r.re.abs(), 0.0 - r.im))
                }
            },
            ScenarioKind::CompressionPulse => match system {
                System::LinearNavier | System::CompressibleSolid => {
                    Some((dispersion_compressional(k, params)[0], 0.0))
                }
                _ => None,
            },
            ScenarioKind::UniformEDecay => Some((0.0, params.kappa)),
            _ => None,
        }
    }
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn unit(a: [f64; 3]) -> Option<[f64; 3]> {
    let n = norm3(a);
    (n > 0.0).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

fn physical_k(grid: &GridSpec, k: [i64; 3]) -> [f64; 3] {
    let l = grid.lengths();
    std::array::from_fn(|a| 2.0 * PI * k[a] as f64 / l[a])
}

/// Band used for random and localized data: `|k_i| <= n / 6` on the smallest
/// active axis, safe for cubic products.
pub fn safe_band(grid: &GridSpec) -> usize {
    (0..3)
        .filter(|&a| grid.is_active(a))
        .map(|a| grid.dims()[a] / 6)
        .min()
        .unwrap_or(0)
}

fn scaled_to_max(v: VectorField, target: f64) -> VectorField {
    let m = v.max_magnitude();
    if m == 0.0 {
        v
    } else {
        v.scale(target / m)
    }
}

fn noise(grid: GridSpec, rng: &mut ChaCha8Rng) -> VectorField {
    let mut comp = || ScalarField::from_values(grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    VectorField::new(comp(), comp(), comp())
}

/// `(v, E)` of the scenario on `grid`, before system-specific fields are added.
fn mechanical(spec: &ScenarioSpec, grid: GridSpec, params: &MediumParams) -> Result<(VectorField, VectorField)> {
    let a = spec.amplitude;
    let k = spec.k_vector(&grid);
    let phase = move |x: f64, y: f64, z: f64| k[0] * x + k[1] * y + k[2] * z;
    let zero = VectorField::zeros(grid);
    let along = |dir: [f64; 3], f: &dyn Fn(f64) -> f64| {
        VectorField::from_fn(grid, |x, y, z| {
            let s = f(phase(x, y, z));
            [dir[0] * s, dir[1] * s, dir[2] * s]
        })
    };
    Ok(match spec.kind {
        ScenarioKind::StandingShearWave => {
            let p = spec.polarization.expect("validated");
            (along(p, &|t| a * t.sin()), zero)
        }
        ScenarioKind::PlaneShearWave => {
            let p = spec.polarization.expect("validated");
            let gamma = 0.5 * params.kappa;
            let omega2 = params.c().powi(2) * norm3(k).powi(2) - gamma * gamma;
            if omega2 <= 0.0 {
                return Err(Error::InvalidScenario(
                    "plane_shear_wave needs an underdamped mode (c |k| > kappa / 2)".into(),
                ));
            }
            let omega = omega2.sqrt();
            let mu = params.mu;
            (
                along(p, &|t| a * t.sin()),
                along(p, &|t| mu * a * (gamma * t.sin() + omega * t.cos())),
            )
        }
        ScenarioKind::GaussianVortex => {
            let l = grid.lengths();
            let w = l[0].min(l[1]) / 10.0;
            let (cx, cy) = (0.5 * l[0], 0.5 * l[1]);
            let psi = ScalarField::from_fn(grid, |x, y, _| {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                (-r2 / (2.0 * w * w)).exp()
            });
            let v = VectorField::new(
                deriv(&psi, 1),
                deriv(&psi, 0).scale(-1.0),
                ScalarField::zeros(grid),
            );
            let v = band_limit(&v, safe_band(&grid));
            (scaled_to_max(v, a), zero)
        }
        ScenarioKind::RandomSolenoidal => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let band = safe_band(&grid);
            let v = leray_project(&band_limit(&noise(grid, &mut rng), band)).solenoidal;
            let e = band_limit(&noise(grid, &mut rng), band);
            (
                scaled_to_max(v, a),
                scaled_to_max(e, a * params.mu * params.c()),
            )
        }
        ScenarioKind::CompressionPulse => (zero.clone(), zero),
        ScenarioKind::UniformEDecay => match unit(k) {
            Some(khat) => (zero, along(khat, &|t| a * t.cos())),
            None => {
                let p = spec.polarization.expect("validated");
                (zero, VectorField::constant(grid, [a * p[0], a * p[1], a * p[2]]))
            }
        },
    })
}

/// Initial state of `spec` for `system`.
///
/// Compressible systems start from the uniform density `mu`. The pulse puts
/// `u = A k sin(k.x) / |k|` on the solid branches and the same profile in `v`
/// on the liquid branch, which has no displacement.
pub fn generate(spec: &ScenarioSpec, grid: GridSpec, params: &MediumParams, system: System) -> Result<FluidState> {
    spec.validate(&grid)?;
    spec.check_compatible(system)?;
    params.validate()?;
    let (v, e) = mechanical(spec, grid, params)?;
    let mut state = FluidState::incompressible(v, e);
    if system.is_compressible() && system != System::LinearNavier {
        state.mu_field = Some(ScalarField::constant(grid, params.mu));
    }
    if matches!(system, System::LinearNavier | System::CompressibleSolid) {
        state.u = Some(VectorField::zeros(grid));
    }
    if spec.kind == ScenarioKind::CompressionPulse {
        let khat = unit(spec.k_vector(&grid)).expect("validated");
        let k = spec.k_vector(&grid);
        let a = spec.amplitude;
        let pulse = VectorField::from_fn(grid, |x, y, z| {
            let s = a * (k[0] * x + k[1] * y + k[2] * z).sin();
            [khat[0] * s, khat[1] * s, khat[2] * s]
        });
        match system {
            System::CompressibleLiquid => state.v = pulse,
            _ => state.u = Some(pulse),
        }
    }
    match system {
        System::SecondOrder => second_order_from_first(&state, params),
        System::ClassicalMaxwell => Ok(classical_from_mechanical(&state, params)),
        _ => Ok(state),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::{curl, div};
    use crate::fields::make_grid;

    fn g64() -> GridSpec {
        make_grid([64, 64, 1], [2.0 * PI; 3]).unwrap()
    }

    fn standing() -> ScenarioSpec {
        ScenarioSpec::new(ScenarioKind::StandingShearWave, 1e-3).with_polarization([0.0, 1.0, 0.0])
    }

    #[test]
    fn standing_wave_by_construction() {
        let g = g64();
        let s = generate(&standing(), g, &MediumParams::default(), System::FiIncompressible).unwrap();
        let expected = VectorField::from_fn(g, |x, _, _| [0.0, 1e-3 * x.sin(), 0.0]);
        assert!(s.v.sub(&expected).unwrap().norm_linf() < 1e-15);
        assert_eq!(s.e.norm_linf(), 0.0);
    }

    #[test]
    fn random_solenoidal_is_divergence_free() {
        for seed in [7, 8] {
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.3).with_seed(seed);
            let s = generate(&spec, g64(), &MediumParams::default(), System::FiIncompressible).unwrap();
            assert!(div(&s.v).norm_linf() < 1e-12);
            assert!((s.v.max_magnitude() - 0.3).abs() < 1e-12);
            assert!(div(&s.e).norm_linf() > 1e-3);
        }
        let a = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.3).with_seed(7);
        let s1 = generate(&a, g64(), &MediumParams::default(), System::FiIncompressible).unwrap();
        let s2 = generate(&a, g64(), &MediumParams::default(), System::FiIncompressible).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn vortex_is_solenoidal_and_scaled() {
        let spec = ScenarioSpec::new(ScenarioKind::GaussianVortex, 0.2);
        let s = generate(&spec, g64(), &MediumParams::default(), System::FiIncompressible).unwrap();
        assert!(div(&s.v).norm_linf() < 1e-12);
        assert!((s.v.max_magnitude() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn compression_pulse_is_irrotational() {
        let g = g64();
        let spec = ScenarioSpec::new(ScenarioKind::CompressionPulse, 1e-3);
        let s = generate(&spec, g, &MediumParams::default(), System::LinearNavier).unwrap();
        let u = s.u.unwrap();
        let expected = VectorField::from_fn(g, |x, _, _| [1e-3 * x.sin(), 0.0, 0.0]);
        assert!(u.sub(&expected).unwrap().norm_linf() < 1e-15);
        assert!(curl(&u).norm_linf() < 1e-15);
        assert!(matches!(
            generate(&spec, g, &MediumParams::default(), System::FiIncompressible),
            Err(Error::InvalidScenario(_))
        ));
    }

    #[test]
    fn plane_wave_is_a_traveling_solution() {
        let g = g64();
        let p = MediumParams::new(1.0, 1.0, 0.0, 0.5).unwrap();
        let spec = ScenarioSpec::new(ScenarioKind::PlaneShearWave, 1e-2).with_polarization([0.0, 1.0, 0.0]);
        let s = generate(&spec, g, &p, System::FiIncompressible).unwrap();
        let r = crate::dynamics::evaluate(System::FiIncompressible, &s, &p).unwrap();
        // v = A e^{-gt} sin(x - wt)  =>  v_t(0) = -A (g sin x + w cos x)
        let w = (1.0f64 - 0.0625).sqrt();
        let expected = VectorField::from_fn(g, |x, _, _| [0.0, -1e-2 * (0.25 * x.sin() + w * x.cos()), 0.0]);
        assert!(r.v.unwrap().sub(&expected).unwrap().norm_linf() < 1e-14);
    }

    #[test]
    fn validation_errors() {
        let g = g64();
        let mut s = standing();
        s.polarization = None;
        assert!(s.validate(&g).is_err());
        assert!(standing().with_polarization([1.0, 0.0, 0.0]).validate(&g).is_err());
        assert!(standing().with_polarization([0.0, 2.0, 0.0]).validate(&g).is_err());
        assert!(standing().with_wavevector([0, 0, 0]).validate(&g).is_err());
        assert!(standing().with_wavevector([0, 0, 1]).with_polarization([1.0, 0.0, 0.0]).validate(&g).is_err());
        assert!(standing().with_wavevector([0, 30, 0]).with_polarization([1.0, 0.0, 0.0]).validate(&g).is_err());
        let json = r#"{"kind":"uniform_E_decay","amplitude":1.0,"wavevector":[1,0,0]}"#;
        let spec: ScenarioSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, ScenarioKind::UniformEDecay);
        assert!(spec.validate(&g).is_ok());
    }

    #[test]
    fn second_order_and_classical_initial_data() {
        let g = g64();
        let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.1).with_seed(3);
        let p = MediumParams::default();
        let s = generate(&spec, g, &p, System::SecondOrder).unwrap();
        assert!(div(s.v_t.as_ref().unwrap()).norm_linf() < 1e-12);
        let c = generate(&spec, g, &p, System::ClassicalMaxwell).unwrap();
        assert!(div(c.b.as_ref().unwrap()).norm_linf() < 1e-12);
        assert!(c.b.as_ref().unwrap().sub(&curl(&s.v)).unwrap().norm_linf() < 1e-14);
    }

    #[test]
    fn probe_reads_the_tracked_mode() {
        let g = g64();
        let s = generate(&standing(), g, &MediumParams::default(), System::FiIncompressible).unwrap();
        // sin x = (e^{ix} - e^{-ix}) / 2i, unnormalized forward transform
        let c = standing().probe(&s, System::FiIncompressible).unwrap();
        let n = g.len() as f64;
        assert!((c - Complex64::new(0.0, -0.5e-3 * n)).norm() < 1e-12);
    }
}
