//! Convergence studies: incompressible limit in delta, Maxwell limit in
//! amplitude, second-order equivalence and temporal order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate, ScenarioSpec};
use crate::diffops::{curl, div, grad, inverse_laplacian};
use crate::dynamics::{
    auto_dt, classical_from_mechanical, integrate, max_wave_speed, rhs_fi_incompressible,
    second_order_from_first, step, FluidState, MediumParams, StepControl, System,
};
use crate::error::{Error, Result};
use crate::fields::{Field, GridSpec, ScalarField, VectorField};

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn rel_l2(a: &VectorField, reference: &VectorField) -> f64 {
    a.sub(reference).expect("shared grid").norm_l2() / reference.norm_l2()
}

/// Compressible-solid state consistent to first order in delta with an
/// incompressible state: `u = grad chi` with `lap chi = -p / (lambda + 2 eta)`,
/// so the dilational stress reproduces the incompressible pressure, and
/// `mu_field = mu (1 - div u)`.
pub fn well_prepared_solid(incompressible: &FluidState, params: &MediumParams) -> Result<FluidState> {
    let p = rhs_fi_incompressible(incompressible, params)?
        .pressure
        .expect("first-order rates carry the pressure");
    let modulus = params.lambda + 2.0 * params.eta;
    let u = grad(&inverse_laplacian(&p.scale(-1.0 / modulus)));
    let mu_field = div(&u).map(|d| params.mu * (1.0 - d));
    Ok(FluidState {
        mu_field: Some(mu_field),
        u: Some(u),
        ..incompressible.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub lambda: f64,
    /// Relative L2 difference of `v` at `t_end` from the incompressible run.
    pub deviation_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaFailure {
    pub lambda: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    /// Sorted by delta, largest first.
    pub rows: Vec<DeltaRow>,
    /// Log-log slope of deviation against delta; NaN with fewer than two rows.
    pub slope: f64,
    pub dt: f64,
    /// Members whose compressible run failed; the sweep continues without them.
    pub failures: Vec<DeltaFailure>,
}

/// Runs the compressible solid for every `lambda` and compares `v` at `t_end`
/// with the incompressible run from the same data. All runs share the fixed
/// step that the stiffest member needs.
pub fn delta_sweep(
    base: &MediumParams,
    lambdas: &[f64],
    spec: &ScenarioSpec,
    grid: GridSpec,
    t_end: f64,
    cfl: f64,
) -> Result<DeltaSweep> {
    if lambdas.is_empty() {
        return Err(Error::InvalidConfig("delta sweep needs at least one lambda".into()));
    }
    let inc = generate(spec, grid, base, System::FiIncompressible)?;
    let sets: Vec<MediumParams> = lambdas
        .iter()
        .map(|&lambda| {
            let p = MediumParams { lambda, ..*base };
            p.validate().map(|_| p)
        })
        .collect::<Result<_>>()?;
    let c_max = sets
        .iter()
        .map(|p| max_wave_speed(System::CompressibleSolid, p))
        .fold(0.0, f64::max);
    let dt = cfl * grid.min_spacing() / (c_max + inc.v.max_magnitude());
    let control = StepControl::fixed(dt, t_end);

    let reference = integrate(inc.clone(), base, System::FiIncompressible, &control, |_, _| Ok(()))?;
    let outcomes: Vec<std::result::Result<DeltaRow, DeltaFailure>> = sets
        .par_iter()
        .map(|p| {
            let run = || -> Result<DeltaRow> {
                let start = well_prepared_solid(&inc, p)?;
                let end = integrate(start, p, System::CompressibleSolid, &control, |_, _| Ok(()))?;
                Ok(DeltaRow {
                    delta: p.delta(),
                    lambda: p.lambda,
                    deviation_l2: rel_l2(&end.v, &reference.v),
                })
            };
            run().map_err(|e| DeltaFailure {
                lambda: p.lambda,
                error: e.to_string(),
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let slope = if rows.len() > 1 {
        let d: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.deviation_l2).collect();
        loglog_slope(&d, &e)
    } else {
        f64::NAN
    };
    Ok(DeltaSweep {
        rows,
        slope,
        dt,
        failures,
    })
}

/// Largest distance over the run between `(E, mu curl v)` of the
/// frame-indifferent fluid and `(E, B)` of the classical equations, both started
/// from the same data and advanced with the same steps.
pub fn maxwell_limit_distance(
    spec: &ScenarioSpec,
    grid: GridSpec,
    params: &MediumParams,
    t_end: f64,
    cfl: f64,
) -> Result<f64> {
    let mut fi = generate(spec, grid, params, System::FiIncompressible)?;
    let mut cl = classical_from_mechanical(&fi, params);
    let dt = auto_dt(&fi, params, System::FiIncompressible, cfl);
    let distance = |fi: &FluidState, cl: &FluidState| {
        let de = fi.e.sub(&cl.e).expect("shared grid").norm_l2();
        let b = cl.b.as_ref().expect("classical state carries B");
        let db = curl(&fi.v).scale(params.mu).sub(b).expect("shared grid").norm_l2();
        (de * de + db * db).sqrt()
    };
    let mut worst = distance(&fi, &cl);
    while fi.time < t_end {
        let h = dt.min(t_end - fi.time);
        fi = step(&fi, params, h, System::FiIncompressible)?;
        cl = step(&cl, params, h, System::ClassicalMaxwell)?;
        worst = worst.max(distance(&fi, &cl));
        if t_end - fi.time < 1e-12 * t_end {
            break;
        }
    }
    Ok(worst)
}

/// Relative L2 difference of `v` at `t_end` between the first-order system and
/// the second-order form started from matched data with the same fixed step.
pub fn second_order_deviation(
    spec: &ScenarioSpec,
    grid: GridSpec,
    params: &MediumParams,
    dt: f64,
    t_end: f64,
) -> Result<f64> {
    let first = generate(spec, grid, params, System::FiIncompressible)?;
    let second = second_order_from_first(&first, params)?;
    let control = StepControl::fixed(dt, t_end);
    let a = integrate(first, params, System::FiIncompressible, &control, |_, _| Ok(()))?;
    let b = integrate(second, params, System::SecondOrder, &control, |_, _| Ok(()))?;
    Ok(rel_l2(&b.v, &a.v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub dt: f64,
    pub error_dt: f64,
    pub error_half: f64,
    /// `error_dt / error_half`; 16 for a fourth-order scheme.
    pub ratio: f64,
}

fn state_distance(a: &FluidState, b: &FluidState) -> f64 {
    let dv = a.v.sub(&b.v).expect("shared grid").norm_l2();
    let de = a.e.sub(&b.e).expect("shared grid").norm_l2();
    let mut sq = dv * dv + de * de;
    for (x, y) in [(&a.u, &b.u), (&a.v_t, &b.v_t), (&a.b, &b.b)] {
        if let (Some(x), Some(y)) = (x, y) {
            sq += x.sub(y).expect("shared grid").norm_l2().powi(2);
        }
    }
    if let (Some(x), Some(y)) = (&a.mu_field, &b.mu_field) {
        let d: ScalarField = x.sub(y).expect("shared grid");
        sq += d.norm_l2().powi(2);
    }
    sq.sqrt()
}

/// Errors at `t_end` for steps `dt` and `dt / 2` against a `dt / 8` reference.
pub fn dt_convergence(
    spec: &ScenarioSpec,
    grid: GridSpec,
    params: &MediumParams,
    system: System,
    dt: f64,
    t_end: f64,
) -> Result<Convergence> {
    let start = generate(spec, grid, params, system)?;
    let run = |h: f64| integrate(start.clone(), params, system, &StepControl::fixed(h, t_end), |_, _| Ok(()));
    let reference = run(dt / 8.0)?;
    let coarse = run(dt)?;
    let fine = run(dt / 2.0)?;
    let error_dt = state_distance(&coarse, &reference);
    let error_half = state_distance(&fine, &reference);
    Ok(Convergence {
        dt,
        error_dt,
        error_half,
        ratio: error_dt / error_half,
    })
}
