//! Batch runs and parameter sweeps: configuration, artifact layout and
//! manifests.
//!
//! Layout under `out_dir`: `manifest.json`, `reports.ndjson`, `reports.csv`,
//! `summary.json` and `snapshots/`. Sweeps write `sweep.csv`,
//! `sweep_summary.json`, per-run subdirectories where runs are independent, and
//! their own manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{
    integrate, nominal_dt, DtSpec, FluidState, MediumParams, StepControl, System, MAX_KAPPA_DT,
};
use crate::emlaws::{report_for, LawResidualReport, LAWS};
use crate::error::{Error, Result};
use crate::fields::{snapshot, GridSpec, ScalarField};
use crate::io::{git_blob_hash, sha256_hex, write_atomic};
use crate::scenarios::{
    delta_sweep, generate, loglog_slope, maxwell_limit_distance, measure_wave, ScenarioSpec, WaveMeasurement,
    MIN_SAMPLES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Snapshot period in steps; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Report period in steps; 0 reports only the initial and final states.
    #[serde(default = "one")]
    pub report_every: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            snapshot_every: 0,
            report_every: 1,
            out_dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub params: MediumParams,
    pub system: System,
    pub scenario: ScenarioSpec,
    pub control: StepControl,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.control.validate()?;
        self.scenario.validate(&self.grid)?;
        self.scenario.check_compatible(self.system)?;
        if let DtSpec::Fixed(dt) = self.control.dt {
            if self.params.kappa * dt > MAX_KAPPA_DT {
                return Err(Error::InvalidControl(format!(
                    "kappa * dt = {} exceeds {MAX_KAPPA_DT}",
                    self.params.kappa * dt
                )));
            }
        }
        Ok(())
    }
}

/// Wave fit next to the analytic expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSummary {
    pub measurement: WaveMeasurement,
    pub expected_frequency: f64,
    pub expected_decay_rate: f64,
    pub expected_phase_speed: f64,
    pub k_mag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `completed` or `failed`.
    pub status: String,
    pub system: System,
    pub steps: usize,
    pub final_time: f64,
    pub initial_dt: f64,
    pub delta: f64,
    pub wave: Option<WaveSummary>,
    /// Why no wave summary is present when the scenario has an oracle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave_error: Option<String>,
    /// Largest normalized L-infinity residual per law over all reports.
    pub max_normalized_residuals: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Outcome of [`run`]. A run whose integration failed still returns `Ok` with
/// `summary.status == "failed"`; only validation and i/o problems are errors.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub summary: RunSummary,
    pub final_state: FluidState,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.summary.status == "completed"
    }
}

/// JSON description of an error for machine consumption.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    if let Error::NonFinite { field, time, .. } = e {
        v["field"] = json!(field);
        v["time"] = json!(time);
    }
    v
}

fn to_pretty(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn state_components(state: &FluidState) -> Vec<(&'static str, &'static str, &ScalarField)> {
    let mut vectors = vec![("v", &state.v), ("e", &state.e)];
    for (name, f) in [("u", &state.u), ("v_t", &state.v_t), ("b", &state.b)] {
        if let Some(f) = f {
            vectors.push((name, f));
        }
    }
    let mut out = Vec::new();
    for (name, f) in vectors {
        for (a, c) in ["x", "y", "z"].into_iter().enumerate() {
            out.push((name, c, f.comp(a)));
        }
    }
    out.push(("p", "scalar", &state.p));
    if let Some(m) = &state.mu_field {
        out.push(("mu_field", "scalar", m));
    }
    out
}

fn write_snapshot(dir: &Path, tag: &str, state: &FluidState) -> Result<()> {
    for (name, comp, f) in state_components(state) {
        let stem = if comp == "scalar" {
            format!("{name}_{tag}")
        } else {
            format!("{name}_{comp}_{tag}")
        };
        snapshot::write_component(dir, &stem, name, comp, state.time, f)?;
    }
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        let name = e.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else if !(dir == root && name == "manifest.json") {
            out.push(p);
        }
    }
    Ok(())
}

/// Every file under `root` except the manifest itself, with checksums.
pub fn list_artifacts(root: &Path) -> Result<Vec<Artifact>> {
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    let mut out = files
        .into_iter()
        .map(|p| {
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            let rel = p.strip_prefix(root).expect("under root");
            let path = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            Ok(Artifact {
                path,
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

fn constants(params: &MediumParams) -> Value {
    json!({
        "c": params.c(),
        "c_s": params.c_s(),
        "delta": params.delta(),
        "tau": params.tau(),
        "zeta": params.zeta(),
        // B = mu curl v is used; eta c^2 is the alternative prefactor as printed
        "b_prefactor_mu": params.mu,
        "b_prefactor_eta_c2": params.eta * params.c().powi(2),
    })
}

fn prepare_dir(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    // stale snapshots from an earlier run would end up in the manifest
    let snaps = out_dir.join("snapshots");
    if snaps.exists() {
        fs::remove_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
    }
    Ok(())
}

/// Runs `config` and writes all artifacts. `config_bytes` is the document the
/// config was parsed from; its git blob hash goes into the manifest.
pub fn run(config: &RunConfig, config_bytes: &[u8], out_override: Option<&Path>) -> Result<RunOutcome> {
    config.validate()?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.outputs.out_dir.clone());
    let grid = config.grid;
    let params = config.params;
    let system = config.system;
    let spec = &config.scenario;
    let outputs = &config.outputs;

    let initial = generate(spec, grid, &params, system)?;
    let initial_dt = nominal_dt(&initial, &params, system, &config.control);
    if params.kappa * initial_dt > MAX_KAPPA_DT {
        return Err(Error::InvalidControl(format!(
            "kappa * dt = {} exceeds {MAX_KAPPA_DT}; lower cfl or set a smaller dt",
            params.kappa * initial_dt
        )));
    }
    prepare_dir(&out_dir)?;
    let snap_dir = out_dir.join("snapshots");

    let mut reports: Vec<LawResidualReport> = Vec::new();
    let mut times = Vec::new();
    let mut series: Vec<Complex64> = Vec::new();
    let mut last_report = None;
    let mut last_snapshot = None;
    let mut steps = 0;
    let every = |n: usize, k: usize| k > 0 && n.is_multiple_of(k);

    let mut last_seen: Option<FluidState> = None;
    let result = integrate(initial, &params, system, &config.control, |n, s| {
        steps = n;
        last_seen = Some(s.clone());
        if let Some(a) = spec.probe(s, system) {
            times.push(s.time);
            series.push(a);
        }
        if n == 0 || every(n, outputs.report_every) {
            reports.push(report_for(system, s, &params)?);
            last_report = Some(n);
        }
        if every(n, outputs.snapshot_every) {
            write_snapshot(&snap_dir, &format!("{n:06}"), s)?;
            last_snapshot = Some(n);
        }
        Ok(())
    });

    // a failed step leaves the last accepted state as the diagnostic snapshot
    let (final_state, failure) = match result {
        Ok(s) => (s, None),
        Err(e @ Error::Io { .. }) => return Err(e),
        Err(e) => {
            let last_good = match &e {
                Error::NonFinite { last_good, .. } => (**last_good).clone(),
                _ => last_seen.take().expect("observer ran on the initial state"),
            };
            write_snapshot(&snap_dir, "last_good", &last_good)?;
            (last_good, Some(e))
        }
    };
    if failure.is_none() {
        if last_report != Some(steps) {
            reports.push(report_for(system, &final_state, &params)?);
        }
        if last_snapshot != Some(steps) {
            write_snapshot(&snap_dir, &format!("{steps:06}"), &final_state)?;
        }
    }

    let ndjson: String = reports.iter().map(|r| r.to_json_line()).collect();
    let mut csv = LawResidualReport::csv_header().to_string();
    for r in &reports {
        csv.push_str(&r.to_csv_rows());
    }
    write_atomic(&out_dir.join("reports.ndjson"), ndjson.as_bytes())?;
    write_atomic(&out_dir.join("reports.csv"), csv.as_bytes())?;

    let mut max_res: BTreeMap<String, f64> = LAWS.iter().map(|l| (l.to_string(), 0.0)).collect();
    for r in &reports {
        for e in &r.entries {
            let m = max_res.entry(e.law.clone()).or_insert(0.0);
            *m = m.max(e.normalized_linf());
        }
    }

    let (wave, wave_error) = match spec.oracle(&grid, &params, system) {
        None => (None, None),
        Some(_) if failure.is_some() => (None, Some("run failed".to_string())),
        Some(_) if times.len() < MIN_SAMPLES => (
            None,
            Some(format!("{} samples, need {MIN_SAMPLES}", times.len())),
        ),
        Some((w, g)) => {
            let k = spec.k_mag(&grid);
            match measure_wave(&times, &series, k) {
                Ok(m) => (
                    Some(WaveSummary {
                        measurement: m,
                        expected_frequency: w,
                        expected_decay_rate: g,
                        expected_phase_speed: if k > 0.0 { w / k } else { 0.0 },
                        k_mag: k,
                    }),
                    None,
                ),
                Err(e) => (None, Some(e.to_string())),
            }
        }
    };

    let summary = RunSummary {
        status: if failure.is_some() { "failed" } else { "completed" }.into(),
        system,
        steps,
        final_time: final_state.time,
        initial_dt,
        delta: params.delta(),
        wave,
        wave_error,
        max_normalized_residuals: max_res,
        error: failure.as_ref().map(error_json),
    };
    write_atomic(&out_dir.join("summary.json"), &to_pretty(&summary)?)?;

    let manifest = json!({
        "tool": concat!("metacont ", env!("CARGO_PKG_VERSION")),
        "status": summary.status,
        "config_hash": git_blob_hash(config_bytes),
        "system": system,
        "grid": grid,
        "params": params,
        "control": config.control,
        "scenario": spec,
        "outputs": { "snapshot_every": outputs.snapshot_every, "report_every": outputs.report_every },
        "constants": constants(&params),
        "artifacts": list_artifacts(&out_dir)?,
    });
    write_atomic(&out_dir.join("manifest.json"), &to_pretty(&manifest)?)?;

    Ok(RunOutcome {
        out_dir,
        summary,
        final_state,
    })
}

/// Parameters a sweep can vary.
pub const SWEEP_AXES: [&str; 11] = [
    "mu", "eta", "lambda", "kappa", "nu", "tau", "zeta", "amplitude", "seed", "t_end", "dt",
];

/// Sets `axis` of `config` to `value`.
pub fn apply_axis(config: &mut RunConfig, axis: &str, value: f64) -> Result<()> {
    let p = &mut config.params;
    match axis {
        "mu" => p.mu = value,
        "eta" => p.eta = value,
        "lambda" => p.lambda = value,
        "kappa" => p.kappa = value,
        "nu" => p.nu = value,
        "tau" => p.tau = Some(value),
        "zeta" => p.zeta = Some(value),
        "amplitude" => config.scenario.amplitude = value,
        "seed" => {
            if !(value >= 0.0 && value.fract() == 0.0 && value <= u64::MAX as f64) {
                return Err(Error::InvalidConfig(format!("seed must be a non-negative integer, got {value}")));
            }
            config.scenario.seed = value as u64;
        }
        "t_end" => config.control.t_end = value,
        "dt" => config.control.dt = DtSpec::Fixed(value),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "unknown sweep axis `{axis}`; expected one of {}",
                SWEEP_AXES.join(", ")
            )))
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub value: f64,
    pub error: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: String,
    pub values: Vec<f64>,
    /// `delta_convergence`, `maxwell_limit` or `independent_runs`.
    pub study: String,
    pub slope_estimate: Option<f64>,
    pub partial: bool,
    pub failures: Vec<SweepFailure>,
}

fn fmt_f(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Runs one member per value and writes the aggregated table.
///
/// Two axes are registered studies with a log-log slope: `lambda` on the
/// compressible solid compares against the incompressible reference, and
/// `amplitude` on the frame-indifferent system measures the distance to the
/// classical Maxwell solution. Every other axis runs independent members into
/// `run_<index>/`.
pub fn sweep(
    template: &RunConfig,
    config_bytes: &[u8],
    axis: &str,
    values: &[f64],
    jobs: usize,
    out_override: Option<&Path>,
) -> Result<SweepSummary> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one value".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!("sweep value {v} is not finite")));
    }
    for &v in values {
        let mut c = template.clone();
        apply_axis(&mut c, axis, v)?;
    }
    template.validate()?;
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| template.outputs.out_dir.clone());
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let cfl = template.control.cfl;
    let (study, slope, failures, csv) = match (axis, template.system) {
        ("lambda", System::CompressibleSolid) => {
            let table = pool.install(|| {
                delta_sweep(
                    &template.params,
                    values,
                    &template.scenario,
                    template.grid,
                    template.control.t_end,
                    cfl,
                )
            })?;
            let mut csv = String::from("delta,lambda,deviation_l2,slope_estimate\n");
            for r in &table.rows {
                csv.push_str(&format!("{},{},{},{}\n", r.delta, r.lambda, r.deviation_l2, table.slope));
            }
            for f in &table.failures {
                let p = MediumParams {
                    lambda: f.lambda,
                    ..template.params
                };
                csv.push_str(&format!("{},{},NaN,{}\n", p.delta(), f.lambda, table.slope));
            }
            let failures = table
                .failures
                .iter()
                .map(|f| SweepFailure {
                    value: f.lambda,
                    error: json!({ "message": f.error }),
                })
                .collect();
            ("delta_convergence", table.slope, failures, csv)
        }
        ("amplitude", System::FiIncompressible) => {
            let results: Vec<Result<f64>> = pool.install(|| {
                values
                    .par_iter()
                    .map(|&a| {
                        let mut spec = template.scenario.clone();
                        spec.amplitude = a;
                        maxwell_limit_distance(&spec, template.grid, &template.params, template.control.t_end, cfl)
                    })
                    .collect()
            });
            let ok: Vec<(f64, f64)> = values
                .iter()
                .zip(&results)
                .filter_map(|(&a, r)| r.as_ref().ok().map(|&d| (a, d)))
                .collect();
            let slope = if ok.len() > 1 {
                let (a, d): (Vec<f64>, Vec<f64>) = ok.iter().copied().unzip();
                loglog_slope(&a, &d)
            } else {
                f64::NAN
            };
            let mut csv = String::from("amplitude,distance,slope_estimate\n");
            let mut failures = Vec::new();
            for (&a, r) in values.iter().zip(&results) {
                match r {
                    Ok(d) => csv.push_str(&format!("{a},{d},{slope}\n")),
                    Err(e) => {
                        csv.push_str(&format!("{a},NaN,{slope}\n"));
                        failures.push(SweepFailure {
                            value: a,
                            error: error_json(e),
                        });
                    }
                }
            }
            ("maxwell_limit", slope, failures, csv)
        }
        _ => {
            let results: Vec<Result<RunOutcome>> = pool.install(|| {
                values
                    .par_iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let mut c = template.clone();
                        apply_axis(&mut c, axis, v)?;
                        run(&c, config_bytes, Some(&out_dir.join(format!("run_{i:03}"))))
                    })
                    .collect()
            });
            let mut csv = format!(
                "{axis},status,frequency,phase_speed,decay_rate,fit_residual,max_normalized_residual\n"
            );
            let mut failures = Vec::new();
            for (&v, r) in values.iter().zip(&results) {
                match r {
                    Ok(o) => {
                        let m = o.summary.wave.as_ref().map(|w| w.measurement);
                        let worst = o
                            .summary
                            .max_normalized_residuals
                            .values()
                            .copied()
                            .fold(0.0, f64::max);
                        csv.push_str(&format!(
                            "{v},{},{},{},{},{},{worst}\n",
                            o.summary.status,
                            fmt_f(m.map(|m| m.frequency)),
                            fmt_f(m.map(|m| m.phase_speed)),
                            fmt_f(m.map(|m| m.decay_rate)),
                            fmt_f(m.map(|m| m.fit_residual)),
                        ));
                        if let Some(e) = &o.summary.error {
                            failures.push(SweepFailure {
                                value: v,
                                error: e.clone(),
                            });
                        }
                    }
                    Err(e) => {
                        csv.push_str(&format!("{v},error,,,,,\n"));
                        failures.push(SweepFailure {
                            value: v,
                            error: error_json(e),
                        });
                    }
                }
            }
            ("independent_runs", f64::NAN, failures, csv)
        }
    };

    let summary = SweepSummary {
        axis: axis.to_string(),
        values: values.to_vec(),
        study: study.to_string(),
        slope_estimate: slope.is_finite().then_some(slope),
        partial: !failures.is_empty(),
        failures,
    };
    write_atomic(&out_dir.join("sweep.csv"), csv.as_bytes())?;
    write_atomic(&out_dir.join("sweep_summary.json"), &to_pretty(&summary)?)?;
    let manifest = json!({
        "tool": concat!("metacont ", env!("CARGO_PKG_VERSION")),
        "config_hash": git_blob_hash(config_bytes),
        "axis": axis,
        "values": values,
        "system": template.system,
        "grid": template.grid,
        "params": template.params,
        "control": template.control,
        "scenario": template.scenario,
        "constants": constants(&template.params),
        "artifacts": list_artifacts(&out_dir)?,
    });
    write_atomic(&out_dir.join("manifest.json"), &to_pretty(&manifest)?)?;
    Ok(summary)
}
