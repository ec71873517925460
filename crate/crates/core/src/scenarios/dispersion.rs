use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::MediumParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    Underdamped,
    Critical,
    Overdamped,
}

/// Roots of `mu w^2 + i kappa mu w - eta k^2 = 0`, the plane-wave form of the
/// telegraph equation `mu v_tt + kappa mu v_t = eta lap v` with
/// `v ~ exp(i (k x - w t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearRoots {
    /// `-i kappa/2 + s` and `-i kappa/2 - s` with `s = sqrt(c^2 k^2 - kappa^2/4)`.
    pub roots: [Complex64; 2],
    pub damping: Damping,
}

pub fn dispersion_shear(k_mag: f64, params: &MediumParams) -> ShearRoots {
    let c = params.c();
    if params.kappa == 0.0 {
        let w = c * k_mag;
        return ShearRoots {
            roots: [Complex64::new(w, 0.0), Complex64::new(-w, 0.0)],
            damping: Damping::Underdamped,
        };
    }
    let half = 0.5 * params.kappa;
    let a = (c * k_mag).powi(2);
    let disc = a - half * half;
    let shift = Complex64::new(0.0, -half);
    let damping = if disc.abs() <= 1e-14 * a.max(half * half) {
        Damping::Critical
    } else if disc > 0.0 {
        Damping::Underdamped
    } else {
        Damping::Overdamped
    };
    let s = match damping {
        Damping::Critical => Complex64::new(0.0, 0.0),
        _ => Complex64::new(disc, 0.0).sqrt(),
    };
    ShearRoots {
        roots: [shift + s, shift - s],
        damping,
    }
}

/// `+- c_s k` for the compressional branch of the linear solid.
pub fn dispersion_compressional(k_mag: f64, params: &MediumParams) -> [f64; 2] {
    let w = params.c_s() * k_mag;
    [w, -w]
}
