//! Invariant suite: ground-state identities, sharpness of the
//! Gagliardo-Nirenberg constant and the functional inequalities on seeded
//! random fields.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::{gn_quotient_with, interpolation_check, modulus_seminorm_check};
use crate::grid::{Grid2D, ScalarField};
use crate::groundstate::{n_star_curve, GroundStateOptions, GroundStateResult, NStarEntry};
use crate::rearrange::schwarz_rearrange;
use crate::sampling::{random_field, random_nonnegative_field, seeded_rng, FieldSpec};
use crate::spectral::{frac_seminorm_sq, spectral_mass, FractionalSymbol};
use crate::thresholds::gn_constant;

pub const IDENTITY_TOL: f64 = 2e-4;
pub const SHARPNESS_TOL: f64 = 1e-5;
pub const GN_SLACK: f64 = 1e-6;
pub const INEQUALITY_TOL: f64 = 1e-6;

/// One line of the suite: `pass` is `value <= limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, pass: value <= limit }
    }

    pub fn failed(name: impl Into<String>) -> Self {
        Self { name: name.into(), value: f64::NAN, limit: f64::NAN, pass: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub orders: Vec<f64>,
    pub ground_state_grid: Grid2D,
    /// Grid of the random samples.
    pub sample_grid: Grid2D,
    pub gn_samples: usize,
    pub samples: usize,
    pub seed: u64,
    pub ground_state: GroundStateOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            orders: vec![0.75, 0.85, 0.95, 1.0],
            ground_state_grid: Grid2D::new(128.0, 1024).expect("valid grid"),
            sample_grid: Grid2D::new(16.0, 128).expect("valid grid"),
            gn_samples: 500,
            samples: 200,
            seed: 0,
            ground_state: GroundStateOptions::default(),
        }
    }
}

/// Largest pairwise relative spread of `K`, `Q4/(2s)` and `N_s*/(2s-1)`.
pub fn identity_spread(q: &GroundStateResult) -> f64 {
    let s = q.s;
    let v = [q.kinetic, q.quartic / (2.0 * s), q.ns_star / (2.0 * s - 1.0)];
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            worst = worst.max((v[i] - v[j]).abs() / v[i].abs().max(v[j].abs()));
        }
    }
    worst
}

/// `|G(Q_s) - C_0| / C_0` with `G` the Gagliardo-Nirenberg quotient.
pub fn gn_sharpness(q: &GroundStateResult) -> Result<f64> {
    let c0 = gn_constant(q.s, q.ns_star)?;
    let sym = FractionalSymbol::new(*q.q.grid(), q.s)?;
    Ok((gn_quotient_with(&q.q, &sym)? - c0).abs() / c0)
}

fn worst_over<R: Rng>(
    count: usize,
    rng: &mut R,
    mut sample: impl FnMut(&mut R) -> Result<ScalarField>,
    mut measure: impl FnMut(&ScalarField) -> Result<f64>,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let u = sample(rng)?;
        worst = worst.max(measure(&u)?);
    }
    Ok(worst)
}

/// Largest `G(u) / C_0 - 1` over `count` random fields.
pub fn gn_excess<R: Rng>(s: f64, ns_star: f64, grid: Grid2D, count: usize, rng: &mut R) -> Result<f64> {
    let c0 = gn_constant(s, ns_star)?;
    let sym = FractionalSymbol::new(grid, s)?;
    let spec = FieldSpec::for_grid(&grid);
    worst_over(count, rng, |r| random_field(grid, &spec, r), |u| Ok(gn_quotient_with(u, &sym)? / c0 - 1.0))
}

/// Largest `(|(|u|)|_s^2 - |u|_s^2) / |u|_s^2` over sign-changing fields.
pub fn modulus_excess<R: Rng>(s: f64, grid: Grid2D, count: usize, rng: &mut R) -> Result<f64> {
    let spec = FieldSpec::for_grid(&grid);
    worst_over(count, rng, |r| random_field(grid, &spec, r), |u| {
        let (lhs, rhs) = modulus_seminorm_check(u, s)?;
        Ok((lhs - rhs) / rhs)
    })
}

/// Largest relative increase of the seminorm or of `integral |x|^2 u^2`
/// under rearrangement, over nonnegative fields.
pub fn rearrangement_excess<R: Rng>(s: f64, grid: Grid2D, count: usize, rng: &mut R) -> Result<f64> {
    let spec = FieldSpec::for_grid(&grid);
    let sym = FractionalSymbol::new(grid, s)?;
    worst_over(count, rng, |r| random_nonnegative_field(grid, &spec, r), |u| {
        let v = schwarz_rearrange(u)?;
        let (ku, kv) = (frac_seminorm_sq(u, &sym)?, frac_seminorm_sq(&v, &sym)?);
        let (xu, xv) = (u.second_moment(), v.second_moment());
        Ok(((kv - ku) / ku).max((xv - xu) / xu))
    })
}

/// Largest `(lhs - rhs) / rhs` of [`interpolation_check`].
pub fn interpolation_excess<R: Rng>(s: f64, grid: Grid2D, count: usize, rng: &mut R) -> Result<f64> {
    let spec = FieldSpec::for_grid(&grid);
    worst_over(count, rng, |r| random_field(grid, &spec, r), |u| {
        let (lhs, rhs) = interpolation_check(u, s)?;
        Ok((lhs - rhs) / rhs)
    })
}

/// Largest relative mismatch between the physical and spectral masses.
pub fn plancherel_defect<R: Rng>(grid: Grid2D, count: usize, rng: &mut R) -> Result<f64> {
    let spec = FieldSpec::for_grid(&grid);
    worst_over(count, rng, |r| random_field(grid, &spec, r), |u| Ok((spectral_mass(u) - u.mass()).abs() / u.mass()))
}

/// Runs every check. Ground-state failures become failing lines; other
/// errors abort.
pub fn run(opts: &VerifyOptions) -> Result<Vec<Check>> {
    run_on(opts, n_star_curve(&opts.orders, opts.ground_state_grid, &opts.ground_state))
}

/// [`run`] on precomputed ground states; `opts.orders` and
/// `opts.ground_state_grid` are ignored.
pub fn run_on(opts: &VerifyOptions, ground_states: Vec<NStarEntry>) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let g = opts.sample_grid;
    let mut stream = 0u64;
    let mut rng = || {
        stream += 1;
        seeded_rng(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream))
    };
    checks.push(Check::new("plancherel", plancherel_defect(g, opts.samples, &mut rng())?, 1e-10));
    for entry in ground_states {
        let s = entry.s;
        let q = match entry.outcome {
            Ok(q) => q,
            Err(_) => {
                checks.push(Check::failed(format!("ground_state s={s}")));
                continue;
            }
        };
        checks.push(Check::new(format!("identities s={s}"), identity_spread(&q), IDENTITY_TOL));
        checks.push(Check::new(format!("gn_sharpness s={s}"), gn_sharpness(&q)?, SHARPNESS_TOL));
        checks.push(Check::new(format!("gn_random s={s}"), gn_excess(s, q.ns_star, g, opts.gn_samples, &mut rng())?, GN_SLACK));
        checks.push(Check::new(format!("modulus s={s}"), modulus_excess(s, g, opts.samples, &mut rng())?, INEQUALITY_TOL));
        checks.push(Check::new(
            format!("rearrangement s={s}"),
            rearrangement_excess(s, g, opts.samples, &mut rng())?,
            INEQUALITY_TOL,
        ));
        if s > 0.75 {
            checks.push(Check::new(
                format!("interpolation s={s}"),
                interpolation_excess(s, g, opts.samples, &mut rng())?,
                INEQUALITY_TOL,
            ));
        }
    }
    Ok(checks)
}
