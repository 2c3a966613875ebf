//! Normalized solutions on the mass sphere: the local minimizer inside the
//! kinetic ball and the mountain-pass solution.
//!
//! Both solvers finish with the same polish: a fixed-multiplier
//! Petviashvili iteration `u <- S^{3/2} (H - mu)^{-1} u^3` whose inverse is
//! computed by preconditioned CG, wrapped in a secant search on `mu` that
//! hits the prescribed mass.

use serde::{Deserialize, Serialize};

use crate::dilation::resample;
use crate::error::{Error, Result};
use crate::functionals::{EnergyBreakdown, Hamiltonian, ProblemParams};
use crate::grid::{dot, Grid2D, ScalarField};
use crate::groundstate::GroundStateResult;
use crate::linalg::ShiftedOperator;
use crate::thresholds::{boundary_gap, rho_one, saddle_kinetic_band, t_s, KineticRadius};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LocalMin,
    Saddle,
    Escaped,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub energy: f64,
    pub kinetic: f64,
    pub virial: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: ScalarField,
    pub s: f64,
    pub mass: f64,
    pub n: usize,
    #[serde(rename = "L")]
    pub extent: f64,
    pub breakdown: EnergyBreakdown,
    /// `|(-Delta)^s u + V u - u^3 - mu u| / |u|`.
    pub el_residual: f64,
    /// The same residual divided by `|(-Delta)^s u| / |u|`.
    pub el_residual_relative: f64,
    /// `|P(u)| / K(u)`.
    pub virial_ratio: f64,
    pub t_s: Option<f64>,
    pub inside_ball: bool,
    pub classification: Classification,
    pub escape_iterate: Option<usize>,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// First trial angle of the great-circle line search.
    pub dt: f64,
    /// Target Euler-Lagrange residual.
    pub tol: f64,
    /// Target `|P| / K`.
    pub virial_tol: f64,
    pub max_iter: usize,
    /// Residual at which the descent hands over to the polish.
    pub handover: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { dt: 1e-2, tol: 1e-9, virial_tol: 1e-6, max_iter: 20_000, handover: 1e-5 }
    }
}

fn field(grid: Grid2D, v: Vec<f64>) -> ScalarField {
    ScalarField::from_parts_unchecked(grid, v)
}

fn weighted_norm(grid: &Grid2D, v: &[f64]) -> f64 {
    (grid.cell_area() * dot(v, v)).sqrt()
}

fn record(iter: usize, b: &EnergyBreakdown) -> TraceEntry {
    TraceEntry { iter, energy: b.total, kinetic: b.kinetic, virial: b.virial.unwrap_or(f64::NAN), mass: b.mass }
}

/// Residual vector and its scale for a normalized field.
fn residuals(h: &Hamiltonian, u: &ScalarField, b: &EnergyBreakdown) -> Result<(f64, f64)> {
    let r = h.el_residual(u, b.multiplier)?;
    let lu = h.apply_kinetic(u)?;
    let norm = u.norm_l2();
    let abs = r.norm_l2() / norm;
    let scale = lu.norm_l2() / norm;
    Ok((abs, if scale > 0.0 { abs / scale } else { abs }))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    h: &Hamiltonian,
    p: &ProblemParams,
    mut u: ScalarField,
    t_s: Option<f64>,
    iterations: usize,
    mut trace: Vec<TraceEntry>,
) -> Result<SolveReport> {
    u.normalize_mass(p.mass)?;
    let b = h.breakdown(&u)?;
    let (el_residual, el_residual_relative) = residuals(h, &u, &b)?;
    trace.push(record(iterations, &b));
    let virial_ratio = b.virial.map_or(f64::NAN, |v| v.abs() / b.kinetic);
    Ok(SolveReport {
        s: p.s,
        mass: p.mass,
        n: u.grid().n(),
        extent: u.grid().extent(),
        breakdown: b,
        el_residual,
        el_residual_relative,
        virial_ratio,
        t_s,
        inside_ball: t_s.is_none_or(|t| b.kinetic < t),
        classification: Classification::Failed,
        escape_iterate: None,
        iterations,
        trace,
        note: None,
        solution: u,
    })
}

/// Energy along the great circle
/// `cos(a) u + sin(a) d` with `d` tangent and of mass `N`.
struct GreatCircle {
    a_uu: f64,
    a_ud: f64,
    a_dd: f64,
    quartic: [f64; 5],
}

impl GreatCircle {
    fn energy(&self, a: f64) -> f64 {
        let (s, c) = a.sin_cos();
        let q = &self.quartic;
        let quartic = c.powi(4) * q[4]
            + 4.0 * c.powi(3) * s * q[3]
            + 6.0 * c * c * s * s * q[2]
            + 4.0 * c * s.powi(3) * q[1]
            + s.powi(4) * q[0];
        0.5 * (c * c * self.a_uu + 2.0 * c * s * self.a_ud + s * s * self.a_dd) - 0.25 * quartic
    }

    /// First local minimizer of the energy along increasing angle, found by
    /// doubling from `first` and refining by golden section. Returns 0 when
    /// no decrease is found.
    fn line_search(&self, first: f64) -> f64 {
        let e0 = self.energy(0.0);
        let max = 0.5 * std::f64::consts::PI;
        let mut a = first.min(max);
        while self.energy(a) >= e0 {
            a *= 0.5;
            if a < 1e-16 {
                return 0.0;
            }
        }
        let mut lo = 0.0;
        let mut hi;
        loop {
            let next = (2.0 * a).min(max);
            if next == a || self.energy(next) >= self.energy(a) {
                hi = next;
                break;
            }
            lo = a;
            a = next;
        }
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut f1, mut f2) = (self.energy(x1), self.energy(x2));
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = self.energy(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = self.energy(x2);
            }
        }
        let best = if f1 < f2 { x1 } else { x2 };
        if self.energy(best) < e0 { best } else { 0.0 }
    }
}

/// Outcome of the descent phase.
struct Descent {
    u: ScalarField,
    iterations: usize,
    trace: Vec<TraceEntry>,
    escape: Option<usize>,
}

/// Previous preconditioned gradient and search direction for Polak-Ribiere.
struct Previous {
    z: Vec<f64>,
    gz: f64,
    direction: Vec<f64>,
}

/// Preconditioned Polak-Ribiere descent on the mass sphere with exact
/// line search along great circles. The energy never increases.
fn descend(h: &Hamiltonian, mass: f64, mut u: ScalarField, t_s: Option<f64>, opts: &SolveOptions) -> Result<Descent> {
    let grid = *h.grid();
    let area = grid.cell_area();
    let pre = ShiftedOperator::new(h, 1.0);
    let v = h.potential_values();
    u.normalize_mass(mass)?;

    let mut lu = h.apply_kinetic(&u)?.into_values();
    let mut trace = Vec::new();
    let mut prev: Option<Previous> = None;
    let mut step = opts.dt;
    let mut stalled = 0;
    for iter in 0..=opts.max_iter {
        if iter > 0 && iter % 25 == 0 {
            if iter % 100 == 0 {
                let before = u.clone();
                u.recenter();
                if u != before {
                    prev = None;
                }
            }
            lu = h.apply_kinetic(&u)?.into_values();
        }
        let uv = u.values();
        let hu: Vec<f64> = lu.iter().zip(v).zip(uv).map(|((l, v), x)| l + v * x).collect();
        let kinetic = area * dot(uv, &lu);
        let b = h.breakdown_with_kinetic(&u, kinetic);
        trace.push(record(iter, &b));
        if t_s.is_some_and(|t| kinetic >= t) {
            return Ok(Descent { u, iterations: iter, trace, escape: Some(iter) });
        }
        let mu = b.multiplier;
        let g: Vec<f64> = hu.iter().zip(uv).map(|(hx, x)| hx - x * x * x - mu * x).collect();
        let residual = weighted_norm(&grid, &g) / u.norm_l2();
        if residual <= opts.handover || stalled >= 20 || iter == opts.max_iter {
            return Ok(Descent { u, iterations: iter, trace, escape: None });
        }

        let uu = dot(uv, uv);
        let mut z = pre.precondition(&g)?;
        let zu = dot(&z, uv) / uu;
        z.iter_mut().zip(uv).for_each(|(zi, x)| *zi -= zu * x);
        let gz = dot(&g, &z);
        let mut d: Vec<f64> = z.iter().map(|zi| -zi).collect();
        if let Some(p) = &prev {
            let num: f64 = g.iter().zip(z.iter().zip(&p.z)).map(|(gi, (zi, zo))| gi * (zi - zo)).sum();
            let beta = (num / p.gz).max(0.0);
            d.iter_mut().zip(&p.direction).for_each(|(di, dp)| *di += beta * dp);
            let du = dot(&d, uv) / uu;
            d.iter_mut().zip(uv).for_each(|(di, x)| *di -= du * x);
            if dot(&d, &g) >= 0.0 {
                d = z.iter().map(|zi| -zi).collect();
            }
        }
        let dn = weighted_norm(&grid, &d);
        if dn == 0.0 {
            return Ok(Descent { u, iterations: iter, trace, escape: None });
        }
        let scale = mass.sqrt() / dn;
        let dt_field = field(grid, d.iter().map(|di| di * scale).collect());
        let ld = h.apply_kinetic(&dt_field)?.into_values();
        let dtv = dt_field.into_values();
        let hd: Vec<f64> = ld.iter().zip(v).zip(&dtv).map(|((l, v), x)| l + v * x).collect();
        let mut quartic = [0.0; 5];
        for (x, y) in uv.iter().zip(&dtv) {
            let (x2, y2) = (x * x, y * y);
            quartic[0] += y2 * y2;
            quartic[1] += x * y2 * y;
            quartic[2] += x2 * y2;
            quartic[3] += x2 * x * y;
            quartic[4] += x2 * x2;
        }
        quartic.iter_mut().for_each(|q| *q *= area);
        let circle = GreatCircle {
            a_uu: area * dot(uv, &hu),
            a_ud: area * dot(&dtv, &hu),
            a_dd: area * dot(&dtv, &hd),
            quartic,
        };
        let a = circle.line_search(step);
        let (e_old, e_new) = (circle.energy(0.0), circle.energy(a));
        if a == 0.0 || e_old - e_new <= 1e-15 * e_old.abs() {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if a == 0.0 {
            prev = None;
            step = opts.dt;
            continue;
        }
        step = a;
        let (sa, ca) = a.sin_cos();
        let mut new_u: Vec<f64> = uv.iter().zip(&dtv).map(|(x, y)| ca * x + sa * y).collect();
        let mut new_lu: Vec<f64> = lu.iter().zip(&ld).map(|(x, y)| ca * x + sa * y).collect();
        let fix = (mass / (area * dot(&new_u, &new_u))).sqrt();
        new_u.iter_mut().for_each(|x| *x *= fix);
        new_lu.iter_mut().for_each(|x| *x *= fix);
        let direction = dtv.iter().zip(uv).map(|(y, x)| (ca * y - sa * x) / scale).collect();
        prev = Some(Previous { z, gz, direction });
        u = field(grid, new_u);
        lu = new_lu;
    }
    unreachable!("the loop returns on its last iteration")
}

/// Converged solution of `(H - mu) u = u^3` at fixed `mu`.
struct FixedMu {
    u: ScalarField,
    iterations: usize,
}

/// Petviashvili iteration at fixed `mu`, stopping at
/// `|(H - mu) u - u^3| / |u| <= tol * scale`.
fn fixed_mu_solve(h: &Hamiltonian, mu: f64, u: ScalarField, tol: f64, scale: f64, max_iter: usize) -> Result<FixedMu> {
    let grid = *h.grid();
    let op = ShiftedOperator::new(h, -mu);
    let mut u = u.into_values();
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        let au = op.apply(&u)?;
        let cube: Vec<f64> = u.iter().map(|x| x * x * x).collect();
        let lin = dot(&u, &au);
        let nonlin = dot(&u, &cube);
        let r: Vec<f64> = au.iter().zip(&cube).map(|(a, c)| a - c).collect();
        let norm = weighted_norm(&grid, &u);
        residual = weighted_norm(&grid, &r) / norm;
        if !residual.is_finite() {
            return Err(Error::NonFinite);
        }
        if residual <= tol * scale {
            return Ok(FixedMu { u: field(grid, u), iterations: it });
        }
        if it == max_iter {
            break;
        }
        if !(lin > 0.0 && nonlin > 0.0) || norm < 1e-150 {
            return Err(Error::Collapse);
        }
        let stab = (lin / nonlin).powf(1.5);
        let cube_norm = weighted_norm(&grid, &cube);
        let inner = (1e-2 * residual * norm / cube_norm).clamp(1e-15, 1e-3);
        let mut z = u.clone();
        op.solve(&cube, &mut z, inner, 500)?;
        u = z.into_iter().map(|x| x * stab).collect();
    }
    Err(Error::NonConvergence { iterations: max_iter, residual })
}

/// Secant search on `mu` (or on `ln(-mu)` when `log_scale`) for the fixed-`mu`
/// solution of mass `target`. Returns the solution and the total number of
/// Petviashvili iterations.
fn match_mass(
    h: &Hamiltonian,
    target: f64,
    u0: ScalarField,
    mu0: f64,
    tol: f64,
    scale: f64,
    log_scale: bool,
) -> Result<(ScalarField, usize)> {
    let to_mu = |y: f64| if log_scale { -y.exp() } else { y };
    let from_mu = |mu: f64| if log_scale { (-mu).ln() } else { mu };
    let max_inner = 2_000;
    let mass_tol = (0.1 * tol).max(1e-13) * target;
    let mut total = 0;
    let mut solve = |y: f64, start: ScalarField| -> Result<(ScalarField, f64)> {
        let out = fixed_mu_solve(h, to_mu(y), start, 0.1 * tol, scale, max_inner)?;
        total += out.iterations;
        let m = out.u.mass();
        Ok((out.u, m - target))
    };
    let y0 = from_mu(mu0);
    let (u_a, f_a) = solve(y0, u0)?;
    if f_a.abs() <= mass_tol {
        return Ok((u_a, total));
    }
    let dy = (f_a / target).abs().max(1e-9) * if log_scale { 1.0 } else { 1.0 + mu0.abs() };
    let mut a = (y0, f_a);
    let mut b_y = y0 - dy.copysign(f_a);
    let mut u = u_a;
    for _ in 0..40 {
        let (u_b, f_b) = solve(b_y, u.clone())?;
        u = u_b;
        if f_b.abs() <= mass_tol {
            return Ok((u, total));
        }
        if f_b == a.1 {
            break;
        }
        let next = b_y - f_b * (b_y - a.0) / (f_b - a.1);
        a = (b_y, f_b);
        b_y = next;
    }
    let residual = (u.mass() - target).abs() / target;
    Err(Error::NonConvergence { iterations: total, residual })
}

/// Negative samples below this fraction of the peak count as round-off.
pub const SIGN_TOL: f64 = 1e-6;

fn sign_definite(u: &ScalarField) -> bool {
    u.min() >= -SIGN_TOL * u.max()
}

fn default_trap_guess(grid: Grid2D, mass: f64) -> Result<ScalarField> {
    let mut u = ScalarField::from_radial(grid, |r| (-0.5 * r * r).exp())?;
    u.normalize_mass(mass)?;
    Ok(u)
}

/// Local minimizer of the energy on the mass sphere inside the kinetic ball.
///
/// At `s = 1` the ball is the whole sphere and the result is the global
/// minimizer. `init` defaults to a Gaussian of unit width with mass `N`.
/// The trace holds the descent iterates followed by the polished solution;
/// every recorded state has mass `N`.
pub fn solve_local_min(
    p: &ProblemParams,
    ns_star: f64,
    grid: Grid2D,
    init: Option<ScalarField>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    p.validate()?;
    let radius = match t_s(p, ns_star)? {
        KineticRadius::Finite(t) => Some(t),
        KineticRadius::UndefinedAtUnitOrder => None,
    };
    let h = Hamiltonian::new(p, grid)?;
    let u0 = match init {
        Some(u) if u.grid() != &grid => resample(&u, grid, 1.0)?,
        Some(u) => u,
        None => default_trap_guess(grid, p.mass)?,
    };
    if u0.is_zero() {
        return Err(Error::ZeroField);
    }
    let descent = descend(&h, p.mass, u0, radius, opts)?;
    if let Some(at) = descent.escape {
        let mut report = finish(&h, p, descent.u, radius, descent.iterations, descent.trace)?;
        report.trace.pop();
        report.classification = Classification::Escaped;
        report.escape_iterate = Some(at);
        report.note = Some(format!("kinetic energy reached t_s at iterate {at}"));
        return Ok(report);
    }
    let b = h.breakdown(&descent.u)?;
    let (u, polish_iters) = match_mass(&h, p.mass, descent.u, b.multiplier, opts.tol, 1.0, false)?;
    let mut report = finish(&h, p, u, radius, descent.iterations + polish_iters, descent.trace)?;
    classify_local_min(&mut report, opts);
    Ok(report)
}

fn classify_local_min(report: &mut SolveReport, opts: &SolveOptions) {
    let mut issues = Vec::new();
    if !report.inside_ball {
        issues.push("solution lies outside the kinetic ball".to_string());
    }
    if report.el_residual > opts.tol {
        issues.push(format!("Euler-Lagrange residual {:e} above {:e}", report.el_residual, opts.tol));
    }
    if !(report.virial_ratio <= opts.virial_tol) {
        issues.push(format!("virial ratio {:e} above {:e}", report.virial_ratio, opts.virial_tol));
    }
    if !sign_definite(&report.solution) {
        issues.push("solution changes sign".to_string());
    }
    if issues.is_empty() {
        report.classification = Classification::LocalMin;
    } else {
        report.note = Some(issues.join("; "));
    }
}

/// `phi = sqrt(N / N_s*) Q_s`, the starting point of the dilation path.
fn path_base(q: &GroundStateResult, p: &ProblemParams) -> ScalarField {
    q.q.scaled((p.mass / q.ns_star).sqrt())
}

/// Energy along the dilation path `t phi(t x)` in closed form:
/// `N t^{2s} / (2(2s-1)) + N X_Q t^{-2} / (2 N_s*) - s N^2 t^2 / (2(2s-1) N_s*)`,
/// with `X_Q = integral |x|^2 Q_s^2` measured on the grid.
pub fn dilation_energy_closed_form(p: &ProblemParams, ns_star: f64, second_moment: f64, t: f64) -> f64 {
    let s = p.s;
    let n = p.mass;
    n * t.powf(2.0 * s) / (2.0 * (2.0 * s - 1.0)) + n * second_moment / (2.0 * ns_star * t * t)
        - s * n * n * t * t / (2.0 * (2.0 * s - 1.0) * ns_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    /// Energy of the dilated field evaluated on the grid.
    pub energy: f64,
    pub kinetic: f64,
    pub closed_form: f64,
}

/// Energies along `t phi_s(t x)` for each `t`, computed from spectrally
/// dilated fields on the ground-state grid, with the closed form alongside.
pub fn dilation_path_profile(q: &GroundStateResult, p: &ProblemParams, t_grid: &[f64]) -> Result<Vec<PathPoint>> {
    p.validate()?;
    let grid = *q.q.grid();
    let h = Hamiltonian::new(p, grid)?;
    let phi = path_base(q, p);
    let x_q = q.second_moment();
    t_grid
        .iter()
        .map(|&t| {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("dilation parameters must be positive, got {t}")));
            }
            let v = crate::dilation::dilate(&phi, t)?;
            let b = h.breakdown(&v)?;
            Ok(PathPoint { t, energy: b.total, kinetic: b.kinetic, closed_form: dilation_energy_closed_form(p, q.ns_star, x_q, t) })
        })
        .collect()
}

/// Relative inversion of the bracket attributed to rounding; the two ends
/// then coincide.
pub const BRACKET_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    /// Maximizer of the path energy.
    pub rho_max: f64,
    /// `rho_1 = (N_s*/N)^{1/(2(1-s))}`.
    pub rho_one: f64,
}

/// Two-sided bracket for the mountain-pass level: `lower = (1-s) t_s / 2`
/// and `upper` the maximum of the closed-form path energy over
/// `[1, 2^{(1-s)^{-2}}]`.
pub fn mountain_pass_bracket(q: &GroundStateResult, p: &ProblemParams) -> Result<Bracket> {
    p.validate()?;
    if p.mass >= q.ns_star {
        return Err(Error::Config(format!("the bracket needs N < N_s* (N = {}, N_s* = {})", p.mass, q.ns_star)));
    }
    let lower = boundary_gap(p, q.ns_star)?.lower_bound;
    let x_q = q.second_moment();
    let energy = |log_rho: f64| dilation_energy_closed_form(p, q.ns_star, x_q, log_rho.exp());
    let hi_log = (1.0 - p.s).powi(-2) * 2f64.ln();
    let samples = 4001;
    let mut best = (0.0, energy(0.0));
    for k in 1..samples {
        let x = hi_log * k as f64 / (samples - 1) as f64;
        let e = energy(x);
        if e > best.1 {
            best = (x, e);
        }
    }
    let step = hi_log / (samples - 1) as f64;
    let (mut lo, mut hi) = ((best.0 - step).max(0.0), (best.0 + step).min(hi_log));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if energy(x1) > energy(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let x = 0.5 * (lo + hi);
    let upper = energy(x).max(best.1);
    if lower - upper > BRACKET_ROUNDOFF * upper.abs() {
        return Err(Error::BracketInversion { lower, upper });
    }
    let upper = upper.max(lower);
    Ok(Bracket { lower, upper, rho_max: x.exp(), rho_one: rho_one(p, q.ns_star)? })
}

/// Grid on which the mountain-pass solution is resolved: the ground-state
/// grid shrunk by `rho_1`.
pub fn saddle_grid(q: &GroundStateResult, p: &ProblemParams) -> Result<Grid2D> {
    q.q.grid().scaled(1.0 / rho_one(p, q.ns_star)?)
}

/// Mountain-pass solution, started from the maximizer of the dilation path
/// and solved on [`saddle_grid`]. Classification uses the scale-relative
/// residual since the multiplier grows like `rho_1^{2s}`.
pub fn solve_mountain_pass(q: &GroundStateResult, p: &ProblemParams, opts: &SolveOptions) -> Result<SolveReport> {
    p.validate()?;
    if (q.s - p.s).abs() > 0.0 {
        return Err(Error::Config(format!("ground state has s = {}, problem has s = {}", q.s, p.s)));
    }
    let bracket = mountain_pass_bracket(q, p)?;
    let rho1 = bracket.rho_one;
    let grid = saddle_grid(q, p)?;
    let h = Hamiltonian::new(p, grid)?;
    let phi = path_base(q, p);
    let c = bracket.rho_max / rho1;
    let init = match resample(&phi, *phi.grid(), c) {
        Ok(v) => v,
        Err(Error::Aliasing { .. }) => phi.clone(),
        Err(e) => return Err(e),
    };
    let mut u0 = field(grid, init.into_values());
    u0.normalize_mass(p.mass)?;
    let b0 = h.breakdown(&u0)?;
    let radius = t_s(p, q.ns_star)?.finite()?;
    let mut trace = vec![record(0, &b0)];
    if !(b0.multiplier < 0.0) {
        return Err(Error::NumericalConsistency(format!("path maximizer has multiplier {:e} >= 0", b0.multiplier)));
    }
    let scale = (-b0.multiplier).max(1.0);
    let (u, iterations) = match_mass(&h, p.mass, u0, b0.multiplier, opts.tol, scale, true)?;
    trace.truncate(1);
    let mut report = finish(&h, p, u, Some(radius), iterations, trace)?;
    let (band_lo, _) = saddle_kinetic_band(p, q.ns_star)?;
    if report.breakdown.kinetic < band_lo || report.breakdown.multiplier > 0.0 {
        return Err(Error::FellToMin);
    }
    let mut issues = Vec::new();
    if report.el_residual_relative > opts.tol {
        issues.push(format!("relative residual {:e} above {:e}", report.el_residual_relative, opts.tol));
    }
    if !(report.virial_ratio <= opts.virial_tol) {
        issues.push(format!("virial ratio {:e} above {:e}", report.virial_ratio, opts.virial_tol));
    }
    if !sign_definite(&report.solution) {
        issues.push("solution changes sign".to_string());
    }
    if issues.is_empty() {
        report.classification = Classification::Saddle;
    } else {
        report.note = Some(issues.join("; "));
    }
    Ok(report)
}

/// Lowest eigenvalue of `(-Delta)^s + V` by inverse iteration.
pub fn principal_eigenvalue(p: &ProblemParams, grid: Grid2D, tol: f64) -> Result<f64> {
    let h = Hamiltonian::new(p, grid)?;
    let op = ShiftedOperator::new(&h, 0.0);
    let mut x = default_trap_guess(grid, 1.0)?.into_values();
    let mut lambda = f64::INFINITY;
    for it in 0..500 {
        let ax = op.apply(&x)?;
        let rq = dot(&x, &ax) / dot(&x, &x);
        if (rq - lambda).abs() <= tol * rq {
            return Ok(rq);
        }
        lambda = rq;
        let mut y = x.clone();
        op.solve(&x, &mut y, 1e-13, 1000)?;
        let norm = dot(&y, &y).sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        if it == 499 {
            break;
        }
    }
    Err(Error::NonConvergence { iterations: 500, residual: lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_field, seeded_rng, FieldSpec};

    const NS: f64 = 9.6;

    fn setup() -> (ProblemParams, Grid2D) {
        (ProblemParams::harmonic(0.9, 2.0).unwrap(), Grid2D::new(32.0, 256).unwrap())
    }

    fn projected(u: &ScalarField, mass: f64) -> ScalarField {
        let mut v = u.clone();
        v.normalize_mass(mass).unwrap();
        v
    }

    #[test]
    fn residual_is_the_constrained_gradient() {
        let (p, g) = setup();
        let h = Hamiltonian::new(&p, g).unwrap();
        let u = projected(&ScalarField::from_fn(g, |x, y| (-(x * x + 2.0 * y * y) / 3.0).exp()).unwrap(), p.mass);
        let mu = h.breakdown(&u).unwrap().multiplier;
        let grad = h.el_residual(&u, mu).unwrap();
        let spec = FieldSpec::for_grid(&g);
        let mut rng = seeded_rng(11);
        let eps = 1e-5;
        for _ in 0..10 {
            let d = random_field(g, &spec, &mut rng).unwrap();
            let along = |t: f64| {
                let mut v = u.clone();
                v.axpy(t, &d);
                h.breakdown(&projected(&v, p.mass)).unwrap().total
            };
            let fd = (along(eps) - along(-eps)) / (2.0 * eps);
            let exact = grad.dot(&d);
            assert!((fd - exact).abs() <= 1e-4 * exact.abs(), "fd {fd} exact {exact}");
        }
    }

    #[test]
    fn local_min_trace_and_restart() {
        let (p, g) = setup();
        let opts = SolveOptions { virial_tol: 1e-4, ..Default::default() };
        let r = solve_local_min(&p, NS, g, None, &opts).unwrap();
        assert_eq!(r.classification, Classification::LocalMin, "{:?}", r.note);
        for e in &r.trace {
            assert!((e.mass - p.mass).abs() <= 1e-10 * p.mass);
        }
        for w in r.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs(), "{w:?}");
        }
        assert!(r.solution.is_radially_nonincreasing(1e-8));

        let again = solve_local_min(&p, NS, g, Some(r.solution.clone()), &opts).unwrap();
        assert_eq!(again.classification, Classification::LocalMin);
        assert!(again.iterations <= 5, "{}", again.iterations);
        assert!((again.breakdown.total - r.breakdown.total).abs() <= 1e-10 * r.breakdown.total.abs());
    }

    #[test]
    fn supercritical_mass_escapes() {
        let p = ProblemParams::harmonic(0.9, 1.5 * NS).unwrap();
        let g = Grid2D::new(12.0, 64).unwrap();
        let r = solve_local_min(&p, NS, g, None, &SolveOptions::default()).unwrap();
        assert_eq!(r.classification, Classification::Escaped);
        assert!(r.escape_iterate.is_some());
        assert!(!r.inside_ball);
    }

    #[test]
    fn bracket_is_ordered_and_rejects_supercritical_mass() {
        let g = Grid2D::new(40.0, 256).unwrap();
        let q = crate::groundstate::solve_ground_state(0.9, g, &Default::default()).unwrap();
        let p = ProblemParams::harmonic(0.9, 0.5 * q.ns_star).unwrap();
        let b = mountain_pass_bracket(&q, &p).unwrap();
        assert!(b.lower <= b.upper && b.rho_max > 1.0 && b.rho_one > 1.0);
        let big = ProblemParams::harmonic(0.9, 1.1 * q.ns_star).unwrap();
        assert!(matches!(mountain_pass_bracket(&q, &big), Err(Error::Config(_))));
    }

    #[test]
    fn harmonic_ground_level_at_unit_order() {
        let p = ProblemParams::harmonic(1.0, 1.0).unwrap();
        let lambda = principal_eigenvalue(&p, Grid2D::new(16.0, 64).unwrap(), 1e-12).unwrap();
        assert!((lambda - 2.0).abs() < 1e-8, "{lambda}");
    }
}
