//! Pseudo-spectral simulation of the frame-indifferent incompressible Maxwell
//! elastic fluid, together with diagnostics that map the mechanical state to
//! electromagnetic variables and measure how well each electromagnetic law
//! holds along a trajectory.
//!
//! Module map:
//! - [`fields`]: periodic grid fields, Fourier transforms, dealiasing, snapshots
//! - [`diffops`]: spectral operators, Leray projection, identity residuals
//! - [`dynamics`]: medium parameters, the governing systems and RK4 stepping
//! - [`emlaws`]: electromagnetic variables and law residual reports
//! - [`scenarios`]: initial data, dispersion oracles, wave fits, δ sweeps
//! - [`runner`]: JSON-configured runs, parameter sweeps and their artifacts
//! - [`verify`]: the self-check suite

pub mod diffops;
pub mod dynamics;
pub mod emlaws;
mod error;
pub mod fields;
pub mod io;
pub mod runner;
pub mod scenarios;
pub mod verify;

pub use error::{Error, Result};
