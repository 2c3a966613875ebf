//! Free ground state `Q_s` of `(-Delta)^s Q + Q = Q^3` by a stabilized
//! fixed-point iteration, and the critical masses `N_s* = |Q_s|_2^2`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::spectral::{forward_half, half_len, half_multiplicity, inverse_half, FractionalSymbol};

/// Largest admissible mass fraction in the outer annulus of the box.
pub const DECAY_GUARD: f64 = 1e-6;
/// Largest admissible deviation from the lattice symmetries.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Stabilizing exponent on the Petviashvili factor.
    pub gamma: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, gamma: 1.5 }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub q: ScalarField,
    pub s: f64,
    pub ns_star: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub iterations: usize,
    pub residual: f64,
    pub asymmetry: f64,
    pub outer_mass_fraction: f64,
}

/// Scalars of a [`GroundStateResult`] for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub s: f64,
    pub n: usize,
    #[serde(rename = "L")]
    pub extent: f64,
    pub ns_star: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub iterations: usize,
    pub residual: f64,
    pub asymmetry: f64,
    pub outer_mass_fraction: f64,
    /// `(K - Q4/(2s)) / K`.
    pub quartic_identity_error: f64,
    /// `(K - N_s*/(2s-1)) / K`.
    pub mass_identity_error: f64,
}

impl GroundStateResult {
    pub fn summary(&self) -> GroundStateSummary {
        let k = self.kinetic;
        GroundStateSummary {
            s: self.s,
            n: self.q.grid().n(),
            extent: self.q.grid().extent(),
            ns_star: self.ns_star,
            kinetic: k,
            quartic: self.quartic,
            iterations: self.iterations,
            residual: self.residual,
            asymmetry: self.asymmetry,
            outer_mass_fraction: self.outer_mass_fraction,
            quartic_identity_error: (k - self.quartic / (2.0 * self.s)) / k,
            mass_identity_error: (k - self.ns_star / (2.0 * self.s - 1.0)) / k,
        }
    }

    /// `integral |x|^2 Q^2`.
    pub fn second_moment(&self) -> f64 {
        self.q.second_moment()
    }
}

/// Default starting guess `2 exp(-|x|^2 / 2)`.
pub fn default_initial_guess(grid: Grid2D) -> ScalarField {
    ScalarField::from_radial(grid, |r| 2.0 * (-0.5 * r * r).exp()).expect("finite Gaussian")
}

/// Iterates `u <- S^gamma (I + (-Delta)^s)^{-1} u^3` with
/// `S = <u, (I + (-Delta)^s) u> / <u^3, u>` until
/// `|(-Delta)^s u + u - u^3| / |u| <= tol`.
pub fn solve_ground_state(s: f64, grid: Grid2D, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    solve_ground_state_from(s, default_initial_guess(grid), opts)
}

pub fn solve_ground_state_from(s: f64, init: ScalarField, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::InvalidOrder { s, range: "(1/2, 1]" });
    }
    if init.is_zero() {
        return Err(Error::ZeroField);
    }
    let grid = *init.grid();
    let sym = FractionalSymbol::new(grid, s)?;
    let n = grid.n();
    let mult: Vec<f64> = (0..half_len(n)).flat_map(|j| std::iter::repeat_n(half_multiplicity(j, n), n)).collect();
    let shifted: Vec<f64> = sym.half_table().iter().map(|m| 1.0 + m).collect();
    let quad = grid.cell_area() / grid.len() as f64;

    let mut u = init.into_values();
    let mut u_hat = forward_half(&u, n);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations <= opts.max_iter {
        let cubic: Vec<f64> = u.iter().map(|v| v * v * v).collect();
        let cubic_hat = forward_half(&cubic, n);
        let (mut lin, mut res_sq, mut cross) = (0.0, 0.0, 0.0);
        for (((a, b), &w), &d) in u_hat.iter().zip(&cubic_hat).zip(&mult).zip(&shifted) {
            lin += w * d * a.norm_sqr();
            res_sq += w * (a * d - b).norm_sqr();
            cross += w * (a.conj() * b).re;
        }
        let (lin, nonlin) = (lin * quad, cross * quad);
        let norm = (crate::grid::dot(&u, &u) * grid.cell_area()).sqrt();
        residual = (res_sq * quad).sqrt() / norm;
        if !residual.is_finite() || !lin.is_finite() {
            return Err(Error::NonFinite);
        }
        if residual <= opts.tol {
            converged = true;
            break;
        }
        if iterations == opts.max_iter {
            break;
        }
        if !(nonlin > 0.0) || !(lin / nonlin).is_finite() || norm < 1e-150 {
            return Err(Error::Collapse);
        }
        let stab = (lin / nonlin).powf(opts.gamma);
        u_hat = cubic_hat.iter().zip(&shifted).map(|(c, &d)| c * (stab / d)).collect();
        u = inverse_half(u_hat.clone(), n);
        iterations += 1;
    }
    if !converged {
        return Err(Error::NonConvergence { iterations, residual });
    }
    let q = ScalarField::new(grid, u)?;
    if q.max() <= 0.0 {
        return Err(Error::Collapse);
    }
    let outer = q.outer_mass_fraction();
    if outer > DECAY_GUARD {
        return Err(Error::BoxTooSmall { fraction: outer, limit: DECAY_GUARD });
    }
    let asymmetry = q.asymmetry();
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NumericalConsistency(format!("ground state lost its symmetry ({asymmetry:e})")));
    }
    let kinetic = crate::spectral::frac_seminorm_sq(&q, &sym)?;
    Ok(GroundStateResult {
        s,
        ns_star: q.mass(),
        kinetic,
        quartic: q.lp_pow(4.0),
        iterations,
        residual,
        asymmetry,
        outer_mass_fraction: outer,
        q,
    })
}

/// One entry of an `N_s*` curve.
#[derive(Debug)]
pub struct NStarEntry {
    pub s: f64,
    pub outcome: Result<GroundStateResult>,
}

/// Ground states along `s_list`, each warm-started from the previous
/// successful solve.
pub fn n_star_curve(s_list: &[f64], grid: Grid2D, opts: &GroundStateOptions) -> Vec<NStarEntry> {
    let mut previous: Option<ScalarField> = None;
    s_list
        .iter()
        .map(|&s| {
            let init = previous.clone().unwrap_or_else(|| default_initial_guess(grid));
            let outcome = solve_ground_state_from(s, init, opts);
            if let Ok(r) = &outcome {
                previous = Some(r.q.clone());
            }
            NStarEntry { s, outcome }
        })
        .collect()
}

pub const N_STAR_COLUMNS: [&str; 6] = ["s", "Ns_star", "kinetic", "quartic", "residual", "iterations"];

/// CSV with [`N_STAR_COLUMNS`]; failed entries keep their `s` and leave the
/// other cells empty.
pub fn write_n_star_csv(path: &Path, entries: &[NStarEntry]) -> Result<()> {
    let io = |source| Error::Io { path: path.into(), source };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "{}", N_STAR_COLUMNS.join(",")).map_err(io)?;
    for e in entries {
        match &e.outcome {
            Ok(r) => writeln!(
                f,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                e.s, r.ns_star, r.kinetic, r.quartic, r.residual, r.iterations
            ),
            Err(_) => writeln!(f, "{},,,,,", e.s),
        }
        .map_err(io)?;
    }
    f.flush().map_err(io)
}
