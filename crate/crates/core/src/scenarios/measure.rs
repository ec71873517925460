use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Matrix2, Owned, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 32;

/// Fit of `exp(-g t) (a cos(w t) + b sin(w t))` with complex `a, b` to a
/// single mode's complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveMeasurement {
    /// Angular frequency `w >= 0`.
    pub frequency: f64,
    pub phase_speed: f64,
    pub decay_rate: f64,
    /// RMS of the complex fit residual.
    pub fit_residual: f64,
    /// Largest sample modulus.
    pub amplitude: f64,
    pub periods_spanned: f64,
    /// Residual within 1% of the amplitude and, for oscillating fits, at least
    /// one period covered.
    pub valid: bool,
    /// The series is constant; frequency and decay are reported as zero.
    pub degenerate: bool,
}

struct DampedMode<'a> {
    t: &'a [f64],
    y: &'a [Complex64],
    oscillating: bool,
    /// `[g, w, a_re, a_im, b_re, b_im]`, or `[g, a_re, a_im]` without oscillation.
    p: DVector<f64>,
}

impl DampedMode<'_> {
    fn unpack(&self) -> (f64, f64, Complex64, Complex64) {
        let p = &self.p;
        if self.oscillating {
            (p[0], p[1], Complex64::new(p[2], p[3]), Complex64::new(p[4], p[5]))
        } else {
            (p[0], 0.0, Complex64::new(p[1], p[2]), Complex64::new(0.0, 0.0))
        }
    }

    fn model(&self, t: f64) -> Complex64 {
        let (g, w, a, b) = self.unpack();
        (a * (w * t).cos() + b * (w * t).sin()) * (-g * t).exp()
    }

    fn rms(&self) -> f64 {
        let s: f64 = self
            .t
            .iter()
            .zip(self.y)
            .map(|(&t, &y)| (self.model(t) - y).norm_sqr())
            .sum();
        (s / self.t.len() as f64).sqrt()
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for DampedMode<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let n = self.t.len();
        let mut r = DVector::zeros(2 * n);
        for (j, (&t, &y)) in self.t.iter().zip(self.y).enumerate() {
            let d = self.model(t) - y;
            r[2 * j] = d.re;
            r[2 * j + 1] = d.im;
        }
        Some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.t.len();
        let (g, w, a, b) = self.unpack();
        let mut jac = DMatrix::zeros(2 * n, self.p.len());
        for (j, &t) in self.t.iter().enumerate() {
            let env = (-g * t).exp();
            let (c, s) = ((w * t).cos(), (w * t).sin());
            let m = (a * c + b * s) * env;
            let mut cols: Vec<Complex64> = vec![-t * m];
            if self.oscillating {
                cols.push((b * c - a * s) * env * t);
            }
            cols.push(Complex64::new(env * c, 0.0));
            cols.push(Complex64::new(0.0, env * c));
            if self.oscillating {
                cols.push(Complex64::new(env * s, 0.0));
                cols.push(Complex64::new(0.0, env * s));
            }
            for (k, d) in cols.into_iter().enumerate() {
                jac[(2 * j, k)] = d.re;
                jac[(2 * j + 1, k)] = d.im;
            }
        }
        Some(jac)
    }
}

/// Best linear coefficients `(a, b)` for fixed `(g, w)`.
fn linear_coefficients(t: &[f64], y: &[Complex64], g: f64, w: f64) -> (Complex64, Complex64) {
    let mut gram = Matrix2::zeros();
    let mut rhs = [Complex64::new(0.0, 0.0); 2];
    for (&t, &y) in t.iter().zip(y) {
        let env = (-g * t).exp();
        let basis = Vector2::new(env * (w * t).cos(), env * (w * t).sin());
        gram += basis * basis.transpose();
        rhs[0] += y * basis[0];
        rhs[1] += y * basis[1];
    }
    if w == 0.0 || gram.determinant().abs() <= 1e-12 * gram.norm_squared() {
        return (rhs[0] / gram[(0, 0)], Complex64::new(0.0, 0.0));
    }
    let inv = gram.try_inverse().expect("nonsingular");
    (
        rhs[0] * inv[(0, 0)] + rhs[1] * inv[(0, 1)],
        rhs[0] * inv[(1, 0)] + rhs[1] * inv[(1, 1)],
    )
}

/// Peak of the periodogram over `w` in `[0, pi / dt]`, both signs folded.
fn dominant_frequency(t: &[f64], y: &[Complex64]) -> f64 {
    let span = t[t.len() - 1];
    let dt = span / (t.len() - 1) as f64;
    let w_max = PI / dt;
    let step = PI / (8.0 * span);
    let power = |w: f64| {
        let (mut plus, mut minus) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (&t, &y) in t.iter().zip(y) {
            let e = Complex64::from_polar(1.0, w * t);
            plus += y * e.conj();
            minus += y * e;
        }
        plus.norm_sqr().max(minus.norm_sqr())
    };
    let mut best = (0.0, power(0.0));
    let mut w = step;
    while w <= w_max {
        let p = power(w);
        if p > best.1 {
            best = (w, p);
        }
        w += step;
    }
    best.0
}

fn rms(y: &[Complex64]) -> f64 {
    (y.iter().map(|c| c.norm_sqr()).sum::<f64>() / y.len() as f64).sqrt()
}

/// Fits the damped oscillation model to `series` sampled at `times` and reports
/// phase speed `w / k_mag`.
pub fn measure_wave(times: &[f64], series: &[Complex64], k_mag: f64) -> Result<WaveMeasurement> {
    if times.len() != series.len() {
        return Err(Error::Fit(format!(
            "{} times but {} samples",
            times.len(),
            series.len()
        )));
    }
    if times.len() < MIN_SAMPLES {
        return Err(Error::Fit(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            times.len()
        )));
    }
    if !(k_mag > 0.0) {
        return Err(Error::Fit(format!("wavenumber must be > 0, got {k_mag}")));
    }
    if times.iter().any(|t| !t.is_finite()) || series.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::Fit("series contains non-finite values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Fit("times must be strictly increasing".into()));
    }

    let t: Vec<f64> = times.iter().map(|&x| x - times[0]).collect();
    let amplitude = series.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let spread = series.iter().map(|c| (c - series[0]).norm()).fold(0.0, f64::max);
    if spread <= 1e-12 * amplitude.max(f64::MIN_POSITIVE) {
        return Ok(WaveMeasurement {
            frequency: 0.0,
            phase_speed: 0.0,
            decay_rate: 0.0,
            fit_residual: 0.0,
            amplitude,
            periods_spanned: 0.0,
            valid: false,
            degenerate: true,
        });
    }

    let span = t[t.len() - 1];
    let half = t.len() / 2;
    let g0 = {
        let (early, late) = (rms(&series[..half]), rms(&series[half..]));
        if early > 0.0 && late > 0.0 {
            (early / late).ln() / (0.5 * span)
        } else {
            0.0
        }
    };
    let w0 = dominant_frequency(&t, series);
    // less than one period in the window: treat as a pure exponential
    let oscillating = w0 * span > 2.0 * PI;

    let (a0, b0) = linear_coefficients(&t, series, g0, w0);
    let p0 = if oscillating {
        DVector::from_vec(vec![g0, w0, a0.re, a0.im, b0.re, b0.im])
    } else {
        DVector::from_vec(vec![g0, a0.re, a0.im])
    };
    let problem = DampedMode {
        t: &t,
        y: series,
        oscillating,
        p: p0,
    };
    let (fitted, report) = LevenbergMarquardt::new().with_patience(200).minimize(problem);
    if report.termination.was_usage_issue() || fitted.p.iter().any(|x| !x.is_finite()) {
        return Err(Error::Fit(format!("fit did not converge: {:?}", report.termination)));
    }

    let (g, w, _, _) = fitted.unpack();
    let w = w.abs();
    let fit_residual = fitted.rms();
    let periods_spanned = w * span / (2.0 * PI);
    let valid = fit_residual <= 0.01 * amplitude && (!oscillating || periods_spanned >= 1.0);
    Ok(WaveMeasurement {
        frequency: w,
        phase_speed: w / k_mag,
        decay_rate: g,
        fit_residual,
        amplitude,
        periods_spanned,
        valid,
        degenerate: false,
    })
}
