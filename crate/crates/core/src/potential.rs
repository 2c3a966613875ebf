//! Trapping potentials: the harmonic trap `|x|^2` or a tabulated radial
//! profile `V(r)` with its virial companion `r V'(r)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Radial samples `(r, V, r V')`, linearly interpolated and extrapolated
/// from the last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialTable {
    r: Vec<f64>,
    v: Vec<f64>,
    r_dv: Option<Vec<f64>>,
}

impl RadialTable {
    pub fn new(r: Vec<f64>, v: Vec<f64>, r_dv: Option<Vec<f64>>) -> Result<Self> {
        if r.len() < 2 || v.len() != r.len() || r_dv.as_ref().is_some_and(|d| d.len() != r.len()) {
            return Err(Error::Config("radial table needs at least two rows of equal length".into()));
        }
        let all = r.iter().chain(&v).chain(r_dv.iter().flatten());
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("radial table contains non-finite entries".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("radii must be nonnegative and strictly increasing".into()));
        }
        Ok(Self { r, v, r_dv })
    }

    /// Reads a CSV with columns `r, V[, rVprime]`; a non-numeric first line
    /// is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let bad = |reason: String| Error::Format { path: path.into(), reason };
        let (mut r, mut v, mut d) = (Vec::new(), Vec::new(), Vec::new());
        let mut width = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if width.is_none() && lineno == 0 => continue,
                Err(e) => return Err(bad(format!("line {}: {e}", lineno + 1))),
            };
            if !(2..=3).contains(&row.len()) || *width.get_or_insert(row.len()) != row.len() {
                return Err(bad(format!("line {}: expected a consistent 2 or 3 columns", lineno + 1)));
            }
            r.push(row[0]);
            v.push(row[1]);
            if row.len() == 3 {
                d.push(row[2]);
            }
        }
        let r_dv = if d.is_empty() { None } else { Some(d) };
        Self::new(r, v, r_dv).map_err(|e| bad(e.to_string()))
    }

    fn interp(&self, col: &[f64], r: f64) -> f64 {
        let k = match self.r.partition_point(|&x| x <= r) {
            0 => return col[0],
            k if k >= self.r.len() => self.r.len() - 1,
            k => k,
        };
        let (r0, r1) = (self.r[k - 1], self.r[k]);
        let t = (r - r0) / (r1 - r0);
        col[k - 1] + t * (col[k] - col[k - 1])
    }

    pub fn value(&self, r: f64) -> f64 {
        self.interp(&self.v, r)
    }

    pub fn r_derivative(&self, r: f64) -> Option<f64> {
        self.r_dv.as_ref().map(|d| self.interp(d, r))
    }
}

/// Result of the sampled hypothesis checks on a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialCheck {
    pub min_value: f64,
    /// Smallest `C` with `|r V'(r)| <= C (1 + V)` on the grid, when `r V'` is known.
    pub growth_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    #[default]
    Harmonic,
    Radial(RadialTable),
}

impl Potential {
    fn radial_map(&self, grid: &Grid2D, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = grid.n();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(f(grid.radius(i, j)));
            }
        }
        out
    }

    /// `V` at the grid nodes.
    pub fn sample(&self, grid: &Grid2D) -> Vec<f64> {
        match self {
            Potential::Harmonic => self.radial_map(grid, |r| r * r),
            Potential::Radial(t) => self.radial_map(grid, |r| t.value(r)),
        }
    }

    /// `x . grad V / 2` at the grid nodes, the weight entering the virial.
    pub fn virial_weight(&self, grid: &Grid2D) -> Result<Vec<f64>> {
        match self {
            Potential::Harmonic => Ok(self.radial_map(grid, |r| r * r)),
            Potential::Radial(t) => {
                if t.r_dv.is_none() {
                    return Err(Error::MissingVirialTerm);
                }
                Ok(self.radial_map(grid, |r| 0.5 * t.r_derivative(r).unwrap_or(0.0)))
            }
        }
    }

    /// Checks `V >= 0` on the grid and reports the growth constant.
    pub fn check(&self, grid: &Grid2D) -> Result<PotentialCheck> {
        let v = self.sample(grid);
        let min_value = v.iter().copied().fold(f64::INFINITY, f64::min);
        if min_value < 0.0 {
            return Err(Error::Config(format!("potential must be nonnegative, minimum is {min_value:e}")));
        }
        let growth_constant = match self.virial_weight(grid) {
            Ok(w) => Some(w.iter().zip(&v).map(|(w, v)| 2.0 * w.abs() / (1.0 + v)).fold(0.0, f64::max)),
            Err(Error::MissingVirialTerm) => None,
            Err(e) => return Err(e),
        };
        Ok(PotentialCheck { min_value, growth_constant })
    }
}
