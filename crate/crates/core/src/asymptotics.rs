//! Sweeps towards `s = 1`: convergence of the local minimizers, blow-up of
//! the mountain-pass solutions and convergence of their rescaled profiles.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constrained::{mountain_pass_bracket, solve_local_min, solve_mountain_pass, Classification, SolveOptions, SolveReport};
use crate::dilation::interpolate;
use crate::error::{Error, Result};
use crate::functionals::ProblemParams;
use crate::grid::{Grid2D, ScalarField};
use crate::groundstate::{default_initial_guess, solve_ground_state, solve_ground_state_from, GroundStateOptions, GroundStateResult};
use crate::thresholds::{reference_level, t_s};

/// A saddle is resolved when `eps >= RESOLUTION_POINTS * h` on its grid.
pub const RESOLUTION_POINTS: f64 = 4.0;

pub const SWEEP_COLUMNS: [&str; 14] = [
    "s", "Ns_star", "t_s", "eN", "kin_min", "kin_saddle", "c_lo", "c_hi", "eps", "rescale_err", "min_err", "mu_min",
    "mu_saddle", "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Grid of the ground states; the saddles live on it shrunk by `rho_1`.
    pub ground_state_grid: Grid2D,
    /// Grid of the local minimizers.
    pub minimizer_grid: Grid2D,
    pub ground_state: GroundStateOptions,
    pub solve: SolveOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            ground_state_grid: Grid2D::new(128.0, 2048).expect("valid grid"),
            minimizer_grid: Grid2D::new(64.0, 512).expect("valid grid"),
            ground_state: GroundStateOptions::default(),
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    UnderResolved,
    GroundStateFailed,
    MinFailed,
    SaddleFailed,
}

impl SweepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::UnderResolved => "under_resolved",
            Self::GroundStateFailed => "ground_state_failed",
            Self::MinFailed => "min_failed",
            Self::SaddleFailed => "saddle_failed",
        }
    }
}

/// Quantities of the local-minimizer branch at one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinBranch {
    pub energy: f64,
    pub kinetic: f64,
    pub potential_term: f64,
    pub multiplier: f64,
    pub virial_ratio: f64,
    /// `L^2` distance to the `s = 1` minimizer after recentring both.
    pub profile_error: f64,
}

/// Quantities of the mountain-pass branch at one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleBranch {
    pub energy: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub second_moment: f64,
    pub multiplier: f64,
    pub virial_ratio: f64,
    pub el_residual_relative: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    /// `kinetic^{-1/(2s)}`.
    pub eps: f64,
    /// Grid spacing of the saddle.
    pub spacing: f64,
    /// `L^2` distance between `eps v(eps x)` and `Q_1(x / sqrt(N)) / sqrt(N_1*)`.
    pub rescale_error: f64,
    /// `(c_s - c~_s) (N_s*/N)^{1/(1-s)}`.
    pub level_gap_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub s: f64,
    pub status: SweepStatus,
    pub ns_star: Option<f64>,
    pub t_s: Option<f64>,
    pub min: Option<MinBranch>,
    pub saddle: Option<SaddleBranch>,
    pub note: Option<String>,
}

/// Objects at `s = 1` shared by every entry of a sweep.
#[derive(Debug, Clone)]
pub struct SweepReference {
    pub ground_state: GroundStateResult,
    pub minimizer: SolveReport,
}

impl SweepReference {
    pub fn compute(p: &ProblemParams, opts: &SweepOptions) -> Result<Self> {
        let q = solve_ground_state(1.0, opts.ground_state_grid, &opts.ground_state)?;
        Self::from_ground_state(q, p, opts)
    }

    /// Builds the reference minimizer for the mass of `p` from a known `Q_1`.
    pub fn from_ground_state(q: GroundStateResult, p: &ProblemParams, opts: &SweepOptions) -> Result<Self> {
        if q.s != 1.0 {
            return Err(Error::Config(format!("reference ground state must have s = 1, got {}", q.s)));
        }
        let p1 = ProblemParams { s: 1.0, ..p.clone() };
        let minimizer = solve_local_min(&p1, q.ns_star, opts.minimizer_grid, None, &opts.solve)?;
        if minimizer.classification != Classification::LocalMin {
            return Err(Error::NumericalConsistency(format!(
                "reference minimizer classified {:?}: {}",
                minimizer.classification,
                minimizer.note.clone().unwrap_or_default()
            )));
        }
        Ok(Self { ground_state: q, minimizer })
    }

    pub fn n_star(&self) -> f64 {
        self.ground_state.ns_star
    }
}

/// `eps v(eps x)` with `eps = kinetic^{-1/(2s)}`, obtained by relabelling
/// the grid; mass and samples are carried over exactly and the kinetic
/// energy of the result is 1.
pub fn rescaled_profile(v: &ScalarField, s: f64) -> Result<ScalarField> {
    if v.is_zero() {
        return Err(Error::ZeroField);
    }
    let sym = crate::spectral::FractionalSymbol::new(*v.grid(), s)?;
    let eps = crate::spectral::frac_seminorm_sq(v, &sym)?.powf(-0.5 / s);
    let mut w = v.relabeled(1.0 / eps)?;
    w.scale(eps);
    Ok(w)
}

/// `Q_1(x / sqrt(N)) / sqrt(N_1*)`, the blow-up limit profile.
pub fn limit_profile(q1: &GroundStateResult, mass: f64) -> Result<ScalarField> {
    let mut r = q1.q.relabeled(mass.sqrt())?;
    r.scale(1.0 / q1.ns_star.sqrt());
    Ok(r)
}

/// `L^2` distance between two fields on different grids, as
/// `sqrt(|a|^2 + |b|^2 - 2 <a, b>)` with the overlap evaluated on the grid
/// of `b`. `b` must be negligible outside its own box.
pub fn cross_grid_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let a_on_b = interpolate(a, *b.grid(), 1.0)?;
    let sq = a.mass() + b.mass() - 2.0 * a_on_b.dot(b);
    Ok(sq.max(0.0).sqrt())
}

/// Window on which the rescaled saddle is compared with the limit profile.
fn comparison_grid(mass: f64) -> Result<Grid2D> {
    Grid2D::new(64.0 * mass.sqrt(), 512)
}

/// One record per `s`, solved in ascending order with warm starts.
pub fn sweep(p_base: &ProblemParams, s_list: &[f64], opts: &SweepOptions) -> Result<(SweepReference, Vec<SweepRecord>)> {
    let reference = SweepReference::compute(p_base, opts)?;
    let records = sweep_with_reference(p_base, s_list, opts, &reference)?;
    Ok((reference, records))
}

pub fn sweep_with_reference(
    p_base: &ProblemParams,
    s_list: &[f64],
    opts: &SweepOptions,
    reference: &SweepReference,
) -> Result<Vec<SweepRecord>> {
    if s_list.iter().any(|&s| !(s > 0.5 && s < 1.0)) {
        return Err(Error::Config("sweep orders must lie in (1/2, 1)".into()));
    }
    if s_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("sweep orders must be strictly ascending".into()));
    }
    if p_base.mass >= reference.n_star() {
        return Err(Error::Config(format!("sweep needs N < N* = {}", reference.n_star())));
    }
    let limit = limit_profile(&reference.ground_state, p_base.mass)?;
    let window = interpolate(&limit, comparison_grid(p_base.mass)?, 1.0)?;
    let mut reference_min = reference.minimizer.solution.clone();
    reference_min.recenter();

    let mut previous_q: Option<ScalarField> = None;
    let mut previous_u: Option<ScalarField> = None;
    let mut records = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let p = ProblemParams { s, ..p_base.clone() };
        let init = previous_q.clone().unwrap_or_else(|| default_initial_guess(opts.ground_state_grid));
        let q = match solve_ground_state_from(s, init, &opts.ground_state) {
            Ok(q) => q,
            Err(e) => {
                records.push(SweepRecord {
                    s,
                    status: SweepStatus::GroundStateFailed,
                    ns_star: None,
                    t_s: None,
                    min: None,
                    saddle: None,
                    note: Some(e.to_string()),
                });
                continue;
            }
        };
        previous_q = Some(q.q.clone());
        let radius = t_s(&p, q.ns_star)?.finite()?;
        let mut notes = Vec::new();

        let min = match solve_local_min(&p, q.ns_star, opts.minimizer_grid, previous_u.clone(), &opts.solve) {
            Ok(r) if r.classification == Classification::LocalMin => {
                previous_u = Some(r.solution.clone());
                let mut u = r.solution.clone();
                u.recenter();
                Some(MinBranch {
                    energy: r.breakdown.total,
                    kinetic: r.breakdown.kinetic,
                    potential_term: r.breakdown.potential_term,
                    multiplier: r.breakdown.multiplier,
                    virial_ratio: r.virial_ratio,
                    profile_error: u.distance_l2(&reference_min)?,
                })
            }
            Ok(r) => {
                notes.push(format!("local minimizer {:?}: {}", r.classification, r.note.unwrap_or_default()));
                None
            }
            Err(e) => {
                notes.push(format!("local minimizer: {e}"));
                None
            }
        };

        let mut under_resolved = false;
        let saddle = match solve_mountain_pass(&q, &p, &opts.solve) {
            Ok(r) if r.classification == Classification::Saddle => {
                let b = r.breakdown;
                let eps = eps_from_kinetic(b.kinetic, s);
                let spacing = r.solution.grid().spacing();
                if eps < RESOLUTION_POINTS * spacing {
                    under_resolved = true;
                    notes.push(format!("eps = {eps:e} below {RESOLUTION_POINTS} h = {:e}", RESOLUTION_POINTS * spacing));
                    None
                } else {
                    let bracket = mountain_pass_bracket(&q, &p)?;
                    let w = rescaled_profile(&r.solution, s)?;
                    let level = reference_level(&p, q.ns_star)?;
                    Some(SaddleBranch {
                        energy: b.total,
                        kinetic: b.kinetic,
                        quartic: b.quartic,
                        second_moment: r.solution.second_moment(),
                        multiplier: b.multiplier,
                        virial_ratio: r.virial_ratio,
                        el_residual_relative: r.el_residual_relative,
                        c_lo: bracket.lower,
                        c_hi: bracket.upper,
                        eps,
                        spacing,
                        rescale_error: cross_grid_distance(&w, &window)?,
                        level_gap_scaled: (b.total - level) * (q.ns_star / p.mass).powf(1.0 / (1.0 - s)),
                    })
                }
            }
            Ok(r) => {
                notes.push(format!("mountain pass {:?}: {}", r.classification, r.note.unwrap_or_default()));
                None
            }
            Err(e) => {
                notes.push(format!("mountain pass: {e}"));
                None
            }
        };

        let status = match (&min, &saddle) {
            (Some(_), Some(_)) => SweepStatus::Ok,
            (None, _) => SweepStatus::MinFailed,
            (Some(_), None) if under_resolved => SweepStatus::UnderResolved,
            (Some(_), None) => SweepStatus::SaddleFailed,
        };
        records.push(SweepRecord {
            s,
            status,
            ns_star: Some(q.ns_star),
            t_s: Some(radius),
            min,
            saddle,
            note: if notes.is_empty() { None } else { Some(notes.join("; ")) },
        });
    }
    Ok(records)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.17e}"))
}

/// CSV with [`SWEEP_COLUMNS`]; quantities of failed branches are empty.
pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let io = |source| Error::Io { path: path.into(), source };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "{}", SWEEP_COLUMNS.join(",")).map_err(io)?;
    for r in records {
        let (m, v) = (r.min.as_ref(), r.saddle.as_ref());
        let row = [
            r.s.to_string(),
            cell(r.ns_star),
            cell(r.t_s),
            cell(m.map(|m| m.energy)),
            cell(m.map(|m| m.kinetic)),
            cell(v.map(|v| v.kinetic)),
            cell(v.map(|v| v.c_lo)),
            cell(v.map(|v| v.c_hi)),
            cell(v.map(|v| v.eps)),
            cell(v.map(|v| v.rescale_error)),
            cell(m.map(|m| m.profile_error)),
            cell(m.map(|m| m.multiplier)),
            cell(v.map(|v| v.multiplier)),
            r.status.as_str().to_string(),
        ];
        writeln!(f, "{}", row.join(",")).map_err(io)?;
    }
    f.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierEntry {
    pub s: f64,
    /// `mu eps^{2s}`, expected to approach `-1/N`.
    pub scaled_multiplier: f64,
    /// `quartic / kinetic`, expected to approach 2.
    pub quartic_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub entries: Vec<MultiplierEntry>,
    pub target: f64,
    /// `-2 / N*`.
    pub lower_bound: f64,
    pub all_negative: bool,
    pub within_bound: bool,
    pub quartic_ratio_increasing: bool,
    /// `|mu eps^{2s} + 1/N|` shrinks along the sweep.
    pub approaching_target: bool,
}

/// Trends of `mu eps^{2s}` and `quartic / kinetic` over the saddle records.
pub fn multiplier_limit_check(records: &[SweepRecord], mass: f64, n_star: f64) -> Result<MultiplierReport> {
    let entries: Vec<MultiplierEntry> = records
        .iter()
        .filter_map(|r| r.saddle.map(|v| (r.s, v)))
        .map(|(s, v)| MultiplierEntry {
            s,
            scaled_multiplier: v.multiplier * v.eps.powf(2.0 * s),
            quartic_ratio: v.quartic / v.kinetic,
        })
        .collect();
    if entries.len() < 3 {
        return Err(Error::InsufficientRecords { needed: 3, got: entries.len() });
    }
    let target = -1.0 / mass;
    let lower_bound = -2.0 / n_star;
    Ok(MultiplierReport {
        all_negative: entries.iter().all(|e| e.scaled_multiplier < 0.0),
        within_bound: entries.iter().all(|e| e.scaled_multiplier >= lower_bound && e.scaled_multiplier < 0.0),
        quartic_ratio_increasing: entries.windows(2).all(|w| w[1].quartic_ratio > w[0].quartic_ratio),
        approaching_target: entries
            .windows(2)
            .all(|w| (w[1].scaled_multiplier - target).abs() < (w[0].scaled_multiplier - target).abs()),
        entries,
        target,
        lower_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub mass: f64,
    pub n_star: f64,
    pub reference_energy: f64,
    pub records: Vec<SweepRecord>,
    pub verdicts: Vec<Verdict>,
    pub multiplier: Option<MultiplierReport>,
}

fn strictly(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

/// Trend verdicts over the successful records. Each verdict is evaluated
/// on every record of its branch; a failed branch fails the verdicts that
/// need it.
pub fn summarize(p: &ProblemParams, reference: &SweepReference, records: &[SweepRecord]) -> SweepSummary {
    let complete_min = records.iter().all(|r| r.min.is_some());
    let complete_saddle = records.iter().all(|r| r.saddle.is_some());
    let mins: Vec<MinBranch> = records.iter().filter_map(|r| r.min).collect();
    let saddles: Vec<(f64, f64, SaddleBranch)> =
        records.iter().filter_map(|r| Some((r.s, r.ns_star?, r.saddle?))).collect();
    let n = p.mass;
    let mut verdicts = Vec::new();
    let mut push = |name: &str, pass: bool, values: Vec<f64>| verdicts.push(Verdict { name: name.into(), pass, values });

    let min_err: Vec<f64> = mins.iter().map(|m| m.profile_error).collect();
    push("min_profile_error_decreasing", complete_min && strictly(&min_err, false), min_err);
    let kin_min: Vec<f64> = mins.iter().map(|m| m.kinetic).collect();
    let pot_min: Vec<f64> = mins.iter().map(|m| m.potential_term).collect();
    let bounded = |v: &[f64]| v.first().is_some_and(|&a| v.iter().all(|&x| x <= 2.0 * a));
    push("kinetic_min_uniformly_bounded", complete_min && bounded(&kin_min), kin_min);
    push("potential_min_uniformly_bounded", complete_min && bounded(&pot_min), pot_min);

    let kin: Vec<f64> = saddles.iter().map(|(_, _, v)| v.kinetic).collect();
    push("kinetic_saddle_increasing", complete_saddle && strictly(&kin, true), kin);
    let scaled: Vec<f64> = saddles.iter().map(|(s, ns, v)| v.kinetic * (ns / n).powf(-s / (1.0 - s))).collect();
    let in_band = saddles.iter().zip(&scaled).all(|((s, _, _), &k)| k >= n * (1.0 - s) / (2.0 * s - 1.0) && k <= 2.0 * n);
    push("kinetic_saddle_scaled_in_band", complete_saddle && in_band, scaled);
    let rescale: Vec<f64> = saddles.iter().map(|(_, _, v)| v.rescale_error).collect();
    push("rescale_error_decreasing", complete_saddle && strictly(&rescale, false), rescale);
    let moment: Vec<f64> = saddles.iter().map(|(_, _, v)| v.second_moment).collect();
    push("second_moment_saddle_decreasing", complete_saddle && strictly(&moment, false), moment);
    let ratio: Vec<f64> = saddles.iter().map(|(_, _, v)| v.quartic / v.kinetic).collect();
    let towards_two = strictly(&ratio, true) && ratio.last().is_some_and(|&r| r >= 1.8);
    push("quartic_ratio_towards_two", complete_saddle && towards_two, ratio);
    let gap: Vec<f64> = saddles.iter().map(|(_, _, v)| v.level_gap_scaled).collect();
    push("level_gap_scaled_finite", complete_saddle && gap.iter().all(|g| g.is_finite()), gap);

    SweepSummary {
        mass: n,
        n_star: reference.n_star(),
        reference_energy: reference.minimizer.breakdown.total,
        records: records.to_vec(),
        verdicts,
        multiplier: multiplier_limit_check(records, n, reference.n_star()).ok(),
    }
}

/// `kinetic^{-1/(2s)}`.
pub fn eps_from_kinetic(kinetic: f64, s: f64) -> f64 {
    kinetic.powf(-0.5 / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::Hamiltonian;

    #[test]
    fn rescaled_profile_has_unit_kinetic_and_same_mass() {
        let g = Grid2D::new(24.0, 128).unwrap();
        let v = ScalarField::from_radial(g, |r| 3.0 * (-r * r).exp()).unwrap();
        for s in [0.8, 1.0] {
            let w = rescaled_profile(&v, s).unwrap();
            assert!((w.mass() - v.mass()).abs() <= 1e-12 * v.mass());
            let k = Hamiltonian::free(s, *w.grid()).unwrap().kinetic(&w).unwrap();
            assert!((k - 1.0).abs() < 1e-12, "{k}");
        }
        assert!(rescaled_profile(&ScalarField::zeros(g), 0.9).is_err());
    }

    #[test]
    fn cross_grid_distance_matches_analytic_gaussians() {
        let a = ScalarField::from_radial(Grid2D::new(20.0, 128).unwrap(), |r| (-r * r / 2.0).exp()).unwrap();
        let b = ScalarField::from_radial(Grid2D::new(16.0, 64).unwrap(), |r| (-r * r / 2.0).exp()).unwrap();
        assert!(cross_grid_distance(&a, &b).unwrap() < 1e-6);
        let c = ScalarField::from_radial(Grid2D::new(16.0, 64).unwrap(), |r| (-r * r).exp()).unwrap();
        let exact = (std::f64::consts::PI * (1.0 + 0.5 - 2.0 / 1.5)).sqrt();
        assert!((cross_grid_distance(&a, &c).unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn multiplier_check_needs_three_saddles() {
        let r = SweepRecord { s: 0.9, status: SweepStatus::MinFailed, ns_star: None, t_s: None, min: None, saddle: None, note: None };
        assert!(matches!(
            multiplier_limit_check(&[r.clone(), r], 1.0, 11.7),
            Err(Error::InsufficientRecords { needed: 3, got: 0 })
        ));
    }

    #[test]
    fn sweep_rejects_unsorted_orders() {
        let opts = SweepOptions {
            ground_state_grid: Grid2D::new(20.0, 64).unwrap(),
            minimizer_grid: Grid2D::new(16.0, 128).unwrap(),
            ..Default::default()
        };
        let p = ProblemParams::harmonic(0.9, 2.0).unwrap();
        let reference = SweepReference::compute(&p, &opts).unwrap();
        assert!(sweep_with_reference(&p, &[0.95, 0.9], &opts, &reference).is_err());
        assert!(sweep_with_reference(&p, &[0.9, 1.0], &opts, &reference).is_err());
    }
}
