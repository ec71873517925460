use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constitutive constants of the medium.
///
/// Units: `mu` mass density, `eta` and `lambda` stress, `zeta` and `nu`
/// stress times time, `tau` time, `kappa` inverse time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumParams {
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default)]
    pub lambda: f64,
    /// Elastic viscosity; when absent it is `eta * tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    /// Stress relaxation time; when absent it is `zeta / eta`, or 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub nu: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for MediumParams {
    fn default() -> Self {
        MediumParams {
            mu: 1.0,
            eta: 1.0,
            lambda: 0.0,
            zeta: None,
            tau: None,
            kappa: 0.0,
            nu: 0.0,
        }
    }
}

impl MediumParams {
    pub fn new(mu: f64, eta: f64, lambda: f64, kappa: f64) -> Result<Self> {
        let p = MediumParams {
            mu,
            eta,
            lambda,
            kappa,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(what.to_string()));
        let finite = [self.mu, self.eta, self.lambda, self.kappa, self.nu]
            .iter()
            .chain(self.zeta.iter())
            .chain(self.tau.iter())
            .all(|x| x.is_finite());
        if !finite {
            return bad("parameters must be finite");
        }
        if self.mu <= 0.0 {
            return bad("mu must be > 0");
        }
        if self.eta <= 0.0 {
            return bad("eta must be > 0");
        }
        if self.lambda < 0.0 {
            return bad("lambda must be >= 0");
        }
        if self.kappa < 0.0 {
            return bad("kappa must be >= 0");
        }
        if self.nu < 0.0 {
            return bad("nu must be >= 0");
        }
        if matches!(self.zeta, Some(z) if z < 0.0) {
            return bad("zeta must be >= 0");
        }
        if matches!(self.tau, Some(t) if t <= 0.0) {
            return bad("tau must be > 0");
        }
        if let (Some(z), Some(t)) = (self.zeta, self.tau) {
            if (z / t - self.eta).abs() > 1e-12 * self.eta {
                return Err(Error::InvalidParams(format!(
                    "eta = {} is inconsistent with zeta / tau = {}",
                    self.eta,
                    z / t
                )));
            }
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        match (self.tau, self.zeta) {
            (Some(t), _) => t,
            (None, Some(z)) if z > 0.0 => z / self.eta,
            _ => 1.0,
        }
    }

    pub fn zeta(&self) -> f64 {
        self.zeta.unwrap_or(self.eta * self.tau())
    }

    /// Shear wave speed `sqrt(eta / mu)`.
    pub fn c(&self) -> f64 {
        (self.eta / self.mu).sqrt()
    }

    /// Compressional wave speed `sqrt((2 eta + lambda) / mu)`.
    pub fn c_s(&self) -> f64 {
        ((2.0 * self.eta + self.lambda) / self.mu).sqrt()
    }

    /// `eta / (2 eta + lambda)`, the squared speed ratio `c^2 / c_s^2`.
    pub fn delta(&self) -> f64 {
        self.eta / (2.0 * self.eta + self.lambda)
    }
}
