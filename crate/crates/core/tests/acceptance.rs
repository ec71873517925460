//! One line per acceptance criterion, then a single assertion over all of them.
//! Run with `--nocapture` to see the table.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use metacont::diffops::{band_limit, hessian_contract};
use metacont::dynamics::{oldroyd_discrepancy, MediumParams, System};
use metacont::fields::{make_grid, Field, GridSpec, ScalarField, TensorField, VectorField};
use metacont::runner::{run, RunConfig, RunOutcome};
use metacont::scenarios::{
    delta_sweep, dt_convergence, loglog_slope, maxwell_limit_distance, second_order_deviation, ScenarioKind,
    ScenarioSpec,
};
use metacont::verify::{verify, Level};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn grid(n: usize) -> GridSpec {
    make_grid([n, n, 1], [2.0 * PI; 3]).unwrap()
}

fn run_json(text: &str) -> RunOutcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(text.as_bytes()).unwrap();
    run(&cfg, text.as_bytes(), Some(dir.path())).unwrap()
}

fn standing() -> ScenarioSpec {
    ScenarioSpec::new(ScenarioKind::StandingShearWave, 1e-3).with_polarization([0.0, 1.0, 0.0])
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn shear_wave_speed() -> Line {
    let o = run_json(
        r#"{"grid": {"dims": [64, 64, 1]}, "system": "fi_incompressible",
            "scenario": {"kind": "standing_shear_wave", "amplitude": 1e-3, "polarization": [0, 1, 0]},
            "params": {"mu": 1, "eta": 1, "kappa": 0},
            "control": {"t_end": 20}, "outputs": {"report_every": 100}}"#,
    );
    let m = o.summary.wave.unwrap().measurement;
    Line {
        id: 1,
        name: "shear wave speed",
        passed: m.valid && within(m.phase_speed, 1.0, 0.005),
        detail: format!("phase speed {:.8} (want 1 within 0.5%)", m.phase_speed),
    }
}

fn compressional_wave_speed() -> Line {
    let o = run_json(
        r#"{"grid": {"dims": [64, 64, 1]}, "system": "linear_navier",
            "scenario": {"kind": "compression_pulse", "amplitude": 1e-3},
            "params": {"mu": 1, "eta": 1, "lambda": 98},
            "control": {"t_end": 2}, "outputs": {"report_every": 100}}"#,
    );
    let m = o.summary.wave.unwrap().measurement;
    let delta = o.summary.delta;
    Line {
        id: 2,
        name: "compressional wave speed",
        passed: m.valid && within(m.phase_speed, 10.0, 0.01) && (delta - 0.01).abs() < 1e-15,
        detail: format!("speed {:.7} (want 10 within 1%), delta {delta}", m.phase_speed),
    }
}

fn maxwell_limit() -> Line {
    let amps = [1e-1, 1e-2, 1e-3];
    let d: Vec<f64> = amps
        .iter()
        .map(|&a| {
            let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, a).with_seed(7);
            maxwell_limit_distance(&spec, grid(64), &MediumParams::default(), 1.0, 0.4).unwrap()
        })
        .collect();
    let slope = loglog_slope(&amps, &d);
    Line {
        id: 3,
        name: "Maxwell-limit convergence",
        passed: (slope - 2.0).abs() <= 0.1,
        detail: format!("log-log slope {slope:.4} (want 2.0 +- 0.1), distances {}", sci(&d)),
    }
}

fn exact_corollaries() -> Line {
    let o = run_json(
        r#"{"grid": {"dims": [64, 64, 1]}, "system": "fi_incompressible",
            "scenario": {"kind": "random_solenoidal", "amplitude": 0.1, "seed": 7},
            "control": {"t_end": 0.5}, "outputs": {"report_every": 1}}"#,
    );
    let r = &o.summary.max_normalized_residuals;
    let laws = ["faraday_lorentz", "hertz_form", "generalized_ampere", "metacharge_continuity"];
    let worst = laws.iter().map(|l| r[*l]).fold(0.0, f64::max);
    let div_b = r["div_b"];
    Line {
        id: 4,
        name: "exact discrete corollaries",
        passed: o.succeeded() && worst < 1e-9 && div_b < 1e-12,
        detail: format!("max normalized residual {worst:.2e} (< 1e-9), div B {div_b:.2e} (< 1e-12), every step"),
    }
}

fn oldroyd() -> Line {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut noise = || {
        let f = ScalarField::from_values(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        band_limit(&f, 64 / 6)
    };
    let sigma = TensorField::from_components(std::array::from_fn(|_| noise()));
    let v = VectorField::new(noise(), noise(), noise());
    let h = hessian_contract(&v, &sigma);
    let res = oldroyd_discrepancy(&sigma, &v).add(&h).unwrap().norm_linf();
    Line {
        id: 5,
        name: "Oldroyd discrepancy identity",
        passed: res < 1e-9,
        detail: format!("L-inf residual {res:.2e} (< 1e-9), hessian term {:.2e}", h.norm_linf()),
    }
}

fn telegraph() -> Line {
    let o = run_json(
        r#"{"grid": {"dims": [64, 64, 1]}, "system": "fi_incompressible",
            "scenario": {"kind": "standing_shear_wave", "amplitude": 1e-3, "polarization": [0, 1, 0]},
            "params": {"kappa": 0.5},
            "control": {"t_end": 14}, "outputs": {"report_every": 100}}"#,
    );
    let w = o.summary.wave.unwrap();
    let m = w.measurement;
    let freq = (1.0f64 - 0.0625).sqrt();
    Line {
        id: 6,
        name: "telegraph damping",
        passed: m.valid
            && within(m.decay_rate, 0.25, 0.01)
            && within(m.frequency, freq, 0.01)
            && within(w.expected_frequency, freq, 1e-12),
        detail: format!(
            "decay {:.8} (want 0.25 within 1%), frequency {:.8} (want {freq:.8} within 1%)",
            m.decay_rate, m.frequency
        ),
    }
}

fn second_order() -> Line {
    let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 1e-3).with_seed(7);
    let dev = second_order_deviation(&spec, grid(64), &MediumParams::default(), 0.02, 1.0).unwrap();
    let wave = second_order_deviation(&standing(), grid(64), &MediumParams::default(), 0.02, 1.0).unwrap();
    Line {
        id: 7,
        name: "second-order form equivalence",
        passed: dev < 1e-6 && wave < 1e-6,
        detail: format!("relative L2 at t=1: random {dev:.2e}, shear wave {wave:.2e} (< 1e-6)"),
    }
}

fn delta_limit() -> Line {
    let spec = ScenarioSpec::new(ScenarioKind::RandomSolenoidal, 0.5).with_seed(7);
    let s = delta_sweep(&MediumParams::default(), &[10.0, 100.0, 1000.0], &spec, grid(64), 1.0, 0.4).unwrap();
    let devs: Vec<f64> = s.rows.iter().map(|r| r.deviation_l2).collect();
    let monotone = devs.windows(2).all(|w| w[1] < w[0]) && devs.iter().all(|&d| d > 0.0);
    Line {
        id: 8,
        name: "incompressible limit in delta",
        passed: s.failures.is_empty() && monotone && (s.slope - 1.0).abs() <= 0.25,
        detail: format!("deviations {}, slope {:.3} (want 1.0 +- 0.25)", sci(&devs), s.slope),
    }
}

fn integrator_order() -> Line {
    let c = dt_convergence(&standing(), grid(64), &MediumParams::default(), System::FiIncompressible, 0.05, 2.0)
        .unwrap();
    Line {
        id: 9,
        name: "integrator order",
        passed: within(c.ratio, 16.0, 0.2),
        detail: format!("error ratio {:.4} (want 16 +- 20%)", c.ratio),
    }
}

fn suite_and_reruns() -> Line {
    let start = Instant::now();
    let suite = verify(Level::Quick, None);
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<&str> = suite.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();

    let text = r#"{"grid": {"dims": [32, 32, 1]}, "system": "fi_incompressible",
        "scenario": {"kind": "random_solenoidal", "amplitude": 0.3, "seed": 11},
        "control": {"t_end": 0.5}, "outputs": {"snapshot_every": 4}}"#;
    let cfg = RunConfig::from_json(text.as_bytes()).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&cfg, text.as_bytes(), Some(a.path())).unwrap();
    run(&cfg, text.as_bytes(), Some(b.path())).unwrap();
    let manifest_a = fs::read(a.path().join("manifest.json")).unwrap();
    let identical = manifest_a == fs::read(b.path().join("manifest.json")).unwrap();

    Line {
        id: 10,
        name: "verification suite",
        passed: suite.passed && secs < 30.0 && identical,
        detail: format!(
            "quick suite {} checks in {secs:.1}s (< 30s), failed {failed:?}, reruns identical: {identical}",
            suite.checks.len()
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [fn() -> Line; 10] = [
        shear_wave_speed,
        compressional_wave_speed,
        maxwell_limit,
        exact_corollaries,
        oldroyd,
        telegraph,
        second_order,
        delta_limit,
        integrator_order,
        suite_and_reruns,
    ];
    let mut failed = Vec::new();
    for c in criteria {
        let start = Instant::now();
        let line = c();
        println!(
            "[{}] criterion {:>2} {:<32} {} ({:.1}s)",
            if line.passed { "PASS" } else { "FAIL" },
            line.id,
            line.name,
            line.detail,
            start.elapsed().as_secs_f64()
        );
        if !line.passed {
            failed.push(line.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
