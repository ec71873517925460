use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic box `[0, L)^3` sampled on `nx * ny * nz` points.
///
/// An axis with a single point is inactive: every derivative along it is
/// zero. `nz = 1` is the usual way to run a planar problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridInput", into = "GridInput")]
pub struct GridSpec {
    dims: [usize; 3],
    lengths: [f64; 3],
    spacing: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct GridInput {
    dims: [usize; 3],
    #[serde(default = "two_pi")]
    lengths: [f64; 3],
}

fn two_pi() -> [f64; 3] {
    [2.0 * PI; 3]
}

impl TryFrom<GridInput> for GridSpec {
    type Error = Error;

    fn try_from(g: GridInput) -> Result<Self> {
        GridSpec::new(g.dims, g.lengths)
    }
}

impl From<GridSpec> for GridInput {
    fn from(g: GridSpec) -> Self {
        GridInput {
            dims: g.dims,
            lengths: g.lengths,
        }
    }
}

impl GridSpec {
    pub fn new(dims: [usize; 3], lengths: [f64; 3]) -> Result<Self> {
        for (axis, &n) in dims.iter().enumerate() {
            if n == 0 {
                return Err(Error::InvalidGrid(format!("axis {axis} has zero points")));
            }
            if n > 1 && n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "active axis {axis} has odd size {n}"
                )));
            }
            if n > 1 && n < 4 {
                return Err(Error::InvalidGrid(format!(
                    "active axis {axis} has size {n} < 4"
                )));
            }
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has non-positive length {l}"
                )));
            }
        }
        let spacing = [
            lengths[0] / dims[0] as f64,
            lengths[1] / dims[1] as f64,
            lengths[2] / dims[2] as f64,
        ];
        Ok(GridSpec {
            dims,
            lengths,
            spacing,
        })
    }

    /// Square/cubic box of side `2π`.
    pub fn periodic_2pi(dims: [usize; 3]) -> Result<Self> {
        GridSpec::new(dims, [2.0 * PI; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.lengths
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_active(&self, axis: usize) -> bool {
        self.dims[axis] > 1
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> f64 {
        (0..3)
            .filter(|&a| self.is_active(a))
            .map(|a| self.spacing[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// Row-major flat index, `z` fastest.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    /// Physical coordinates of a flat index.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let iz = idx % self.dims[2];
        let iy = (idx / self.dims[2]) % self.dims[1];
        let ix = idx / (self.dims[1] * self.dims[2]);
        [
            ix as f64 * self.spacing[0],
            iy as f64 * self.spacing[1],
            iz as f64 * self.spacing[2],
        ]
    }

    /// Signed integer mode number for storage position `m` along `axis`.
    #[inline]
    pub fn mode(&self, axis: usize, m: usize) -> i64 {
        let n = self.dims[axis];
        if m <= n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Angular wavenumber used by first derivatives. The Nyquist mode maps to
    /// zero so derivatives of real fields stay real.
    #[inline]
    pub fn deriv_wavenumber(&self, axis: usize, m: usize) -> f64 {
        let n = self.dims[axis];
        if n > 1 && 2 * m == n {
            return 0.0;
        }
        2.0 * PI / self.lengths[axis] * self.mode(axis, m) as f64
    }

    /// Storage position of signed mode `k` along `axis`.
    pub fn storage_of_mode(&self, axis: usize, k: i64) -> usize {
        let n = self.dims[axis] as i64;
        k.rem_euclid(n) as usize
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.dims,
                right: other.dims,
            })
        }
    }
}

/// Validated grid from dims and lengths.
pub fn make_grid(dims: [usize; 3], lengths: [f64; 3]) -> Result<GridSpec> {
    GridSpec::new(dims, lengths)
}
