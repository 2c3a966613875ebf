//! One runner per subcommand. Each writes its artifacts into the output
//! directory and returns the process exit status.

use std::path::Path;

use fracgp::asymptotics::{
    eps_from_kinetic, summarize, sweep_with_reference, write_sweep_csv, SweepOptions, SweepReference, SweepStatus,
    RESOLUTION_POINTS,
};
use fracgp::constrained::{
    mountain_pass_bracket, solve_local_min, solve_mountain_pass, Bracket, Classification, SolveOptions, SolveReport,
};
use fracgp::field_io::{write_field, FieldMeta};
use fracgp::functionals::ProblemParams;
use fracgp::groundstate::{n_star_curve, solve_ground_state, write_n_star_csv, GroundStateOptions, GroundStateResult, GroundStateSummary};
use fracgp::sampling::{random_initial_guess, seeded_rng};
use fracgp::thresholds::{boundary_gap, nonexistence_gap, saddle_kinetic_band};
use fracgp::verify::{self, identity_spread, VerifyOptions, IDENTITY_TOL};
use fracgp::{Error, Grid2D, Result};
use serde::Serialize;

use crate::config::{Command, MassSpec, Resolved};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECKS_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NON_CONVERGENCE: u8 = 3;
pub const EXIT_ESCAPE: u8 = 4;
pub const EXIT_RESOLUTION: u8 = 5;

pub const DEFAULT_SWEEP: [f64; 5] = [0.90, 0.93, 0.95, 0.97, 0.98];

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::GridMismatch { .. }
        | Error::InvalidOrder { .. }
        | Error::UndefinedAtUnitOrder
        | Error::MissingVirialTerm
        | Error::Io { .. }
        | Error::Format { .. } => EXIT_CONFIG,
        Error::BoxTooSmall { .. } | Error::Aliasing { .. } => EXIT_RESOLUTION,
        _ => EXIT_NON_CONVERGENCE,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.into(), source })
}

pub fn run(cfg: &Resolved) -> Result<u8> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| Error::Io { path: cfg.out.clone(), source })?;
    write_json(&cfg.out.join("config.json"), cfg)?;
    match cfg.command {
        Command::Groundstate => groundstate(cfg),
        Command::Minimize => minimize(cfg),
        Command::Saddle => saddle(cfg),
        Command::Sweep => sweep(cfg),
        Command::Verify => verify_all(cfg),
    }
}

fn gs_options(cfg: &Resolved) -> GroundStateOptions {
    let d = GroundStateOptions::default();
    GroundStateOptions { tol: cfg.tol.unwrap_or(d.tol), ..d }
}

fn solve_options(cfg: &Resolved) -> SolveOptions {
    let d = SolveOptions::default();
    SolveOptions { tol: cfg.tol.unwrap_or(d.tol), dt: cfg.dt.unwrap_or(d.dt), ..d }
}

/// Absolute mass, with `Q_1` when it had to be computed.
fn resolve_mass(cfg: &Resolved, grid: Grid2D) -> Result<(f64, Option<GroundStateResult>)> {
    match cfg.mass.expect("validated") {
        MassSpec::Absolute(v) => Ok((v, None)),
        MassSpec::Relative(k) => {
            let q1 = solve_ground_state(1.0, grid, &GroundStateOptions::default())?;
            Ok((k * q1.ns_star, Some(q1)))
        }
    }
}

/// `Q_s` on `grid`, reusing `q1` at `s = 1`.
fn ground_state(s: f64, grid: Grid2D, q1: Option<GroundStateResult>, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    match q1 {
        Some(q) if s == 1.0 => Ok(q),
        _ => solve_ground_state(s, grid, opts),
    }
}

fn field_out(cfg: &Resolved, name: &str, field: &fracgp::ScalarField, s: f64, kind: &str) -> Result<()> {
    write_field(&cfg.out.join(name), field, &FieldMeta::new(field, s, kind))
}

#[derive(Serialize)]
struct GroundStateReport {
    #[serde(flatten)]
    summary: GroundStateSummary,
    identity_spread: f64,
    identities_hold: bool,
}

impl GroundStateReport {
    fn new(q: &GroundStateResult) -> Self {
        let spread = identity_spread(q);
        Self { summary: q.summary(), identity_spread: spread, identities_hold: spread <= IDENTITY_TOL }
    }
}

fn groundstate(cfg: &Resolved) -> Result<u8> {
    let opts = gs_options(cfg);
    if let Some(list) = &cfg.s_list {
        let entries = n_star_curve(list, cfg.grid, &opts);
        write_n_star_csv(&cfg.out.join("n_star.csv"), &entries)?;
        let mut code = EXIT_OK;
        for e in &entries {
            match &e.outcome {
                Ok(q) => println!("s = {}: N_s* = {:.12}", e.s, q.ns_star),
                Err(err) => {
                    println!("s = {}: {err}", e.s);
                    if code == EXIT_OK {
                        code = exit_code(err);
                    }
                }
            }
        }
        return Ok(code);
    }
    let s = cfg.s.expect("validated");
    let q = solve_ground_state(s, cfg.grid, &opts)?;
    let report = GroundStateReport::new(&q);
    write_json(&cfg.out.join("groundstate.json"), &report)?;
    field_out(cfg, "Q.bin", &q.q, s, "ground_state")?;
    println!(
        "s = {s}: N_s* = {:.12}, kinetic = {:.12}, identity spread {:.3e} ({})",
        q.ns_star,
        q.kinetic,
        report.identity_spread,
        if report.identities_hold { "pass" } else { "fail" }
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Nonexistence {
    lhs: f64,
    rhs: f64,
    certified: bool,
}

#[derive(Serialize)]
struct MinimizeReport<'a> {
    seed: u64,
    random_init: bool,
    #[serde(rename = "N1_star", skip_serializing_if = "Option::is_none")]
    n1_star: Option<f64>,
    #[serde(rename = "Ns_star")]
    ns_star: f64,
    boundary_lower_bound: Option<f64>,
    nonexistence: Option<Nonexistence>,
    #[serde(flatten)]
    report: &'a SolveReport,
}

fn minimize(cfg: &Resolved) -> Result<u8> {
    let s = cfg.s.expect("validated");
    let gs_grid = cfg.gs_grid.expect("minimize has a ground-state grid");
    let (mass, q1) = resolve_mass(cfg, gs_grid)?;
    let n1_star = q1.as_ref().map(|q| q.ns_star);
    let ns_star = ground_state(s, gs_grid, q1, &gs_options(cfg))?.ns_star;
    let p = ProblemParams { s, mass, potential: cfg.trap.clone() };
    p.validate()?;
    let init = if cfg.random_init {
        Some(random_initial_guess(cfg.grid, mass, &mut seeded_rng(cfg.seed))?)
    } else {
        None
    };
    let report = solve_local_min(&p, ns_star, cfg.grid, init, &solve_options(cfg))?;
    let fractional = s < 1.0;
    let nonexistence = if fractional && mass > ns_star {
        let (lhs, rhs) = nonexistence_gap(&p, ns_star)?;
        Some(Nonexistence { lhs, rhs, certified: lhs < rhs })
    } else {
        None
    };
    let out = MinimizeReport {
        seed: cfg.seed,
        random_init: cfg.random_init,
        n1_star,
        ns_star,
        boundary_lower_bound: if fractional { Some(boundary_gap(&p, ns_star)?.lower_bound) } else { None },
        nonexistence,
        report: &report,
    };
    write_json(&cfg.out.join("report.json"), &out)?;
    let kind = serde_json::to_value(report.classification).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    field_out(cfg, "u.bin", &report.solution, s, &kind)?;
    println!(
        "s = {s}, N = {mass:.12}: {kind}, E = {:.12}, kinetic = {:.6e}, residual {:.2e}, |P|/K {:.2e}",
        report.breakdown.total, report.breakdown.kinetic, report.el_residual, report.virial_ratio
    );
    if let Some(note) = &report.note {
        println!("{note}");
    }
    Ok(match report.classification {
        Classification::LocalMin => EXIT_OK,
        Classification::Escaped => EXIT_ESCAPE,
        _ => EXIT_NON_CONVERGENCE,
    })
}

#[derive(Serialize)]
struct SaddleReport<'a> {
    #[serde(rename = "Ns_star")]
    ns_star: f64,
    bracket: Bracket,
    kinetic_band: (f64, f64),
    eps: f64,
    spacing: f64,
    resolved: bool,
    energy_in_bracket: bool,
    kinetic_in_band: bool,
    quartic_over_kinetic: f64,
    #[serde(flatten)]
    report: &'a SolveReport,
}

fn saddle(cfg: &Resolved) -> Result<u8> {
    let s = cfg.s.expect("validated");
    if s == 1.0 {
        return Err(Error::UndefinedAtUnitOrder);
    }
    let (mass, _) = resolve_mass(cfg, cfg.grid)?;
    let q = solve_ground_state(s, cfg.grid, &gs_options(cfg))?;
    let p = ProblemParams { s, mass, potential: cfg.trap.clone() };
    p.validate()?;
    let bracket = mountain_pass_bracket(&q, &p)?;
    let band = saddle_kinetic_band(&p, q.ns_star)?;
    let report = solve_mountain_pass(&q, &p, &solve_options(cfg))?;
    let b = report.breakdown;
    let eps = eps_from_kinetic(b.kinetic, s);
    let spacing = report.solution.grid().spacing();
    let out = SaddleReport {
        ns_star: q.ns_star,
        bracket,
        kinetic_band: band,
        eps,
        spacing,
        resolved: eps >= RESOLUTION_POINTS * spacing,
        energy_in_bracket: b.total >= bracket.lower && b.total <= bracket.upper,
        kinetic_in_band: b.kinetic >= band.0 && b.kinetic <= band.1,
        quartic_over_kinetic: b.quartic / b.kinetic,
        report: &report,
    };
    write_json(&cfg.out.join("report.json"), &out)?;
    field_out(cfg, "v.bin", &report.solution, s, "saddle")?;
    println!(
        "s = {s}, N = {mass:.12}: {:?}, E = {:.12} in [{:.12}, {:.12}], kinetic = {:.6e}, eps = {eps:.4e} (h = {spacing:.4e})",
        report.classification, b.total, bracket.lower, bracket.upper, b.kinetic
    );
    Ok(if !out.resolved {
        EXIT_RESOLUTION
    } else if report.classification == Classification::Saddle {
        EXIT_OK
    } else {
        EXIT_NON_CONVERGENCE
    })
}

fn sweep(cfg: &Resolved) -> Result<u8> {
    let s_list = cfg.s_list.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
    let gs_grid = cfg.gs_grid.expect("sweep has a ground-state grid");
    let q1 = solve_ground_state(1.0, gs_grid, &gs_options(cfg))?;
    let mass = match cfg.mass.expect("validated") {
        MassSpec::Absolute(v) => v,
        MassSpec::Relative(k) => k * q1.ns_star,
    };
    let p = ProblemParams { s: 1.0, mass, potential: cfg.trap.clone() };
    p.validate()?;
    let opts = SweepOptions {
        ground_state_grid: gs_grid,
        minimizer_grid: cfg.grid,
        ground_state: gs_options(cfg),
        solve: solve_options(cfg),
    };
    let reference = SweepReference::from_ground_state(q1, &p, &opts)?;
    let records = sweep_with_reference(&p, &s_list, &opts, &reference)?;
    write_sweep_csv(&cfg.out.join("sweep.csv"), &records)?;
    let summary = summarize(&p, &reference, &records);
    write_json(&cfg.out.join("sweep_summary.json"), &summary)?;
    for r in &records {
        println!("s = {}: {}{}", r.s, r.status.as_str(), r.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default());
    }
    for v in &summary.verdicts {
        println!("{} {}", if v.pass { "PASS" } else { "FAIL" }, v.name);
    }
    let bad: Vec<SweepStatus> = records.iter().map(|r| r.status).filter(|&s| s != SweepStatus::Ok).collect();
    Ok(if bad.is_empty() {
        EXIT_OK
    } else if bad.iter().all(|&s| s == SweepStatus::UnderResolved) {
        EXIT_RESOLUTION
    } else {
        EXIT_NON_CONVERGENCE
    })
}

fn verify_all(cfg: &Resolved) -> Result<u8> {
    let mut opts = VerifyOptions { ground_state_grid: cfg.grid, seed: cfg.seed, ground_state: gs_options(cfg), ..Default::default() };
    if let Some(list) = cfg.s_list.clone().or(cfg.s.map(|s| vec![s])) {
        opts.orders = list;
    }
    let checks = verify::run(&opts)?;
    write_json(&cfg.out.join("verify.json"), &checks)?;
    for c in &checks {
        println!("{} {} {:.3e} (limit {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    Ok(if checks.iter().all(|c| c.pass) { EXIT_OK } else { EXIT_CHECKS_FAILED })
}
