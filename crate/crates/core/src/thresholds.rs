//! Closed-form thresholds: the sharp Gagliardo-Nirenberg constant, the
//! kinetic-ball radius `t_s`, the boundary gap, the Hardy constant and the
//! nonexistence certificate.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::ProblemParams;
use crate::gamma::gamma;

fn check_critical_mass(ns_star: f64) -> Result<()> {
    if ns_star.is_finite() && ns_star > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("critical mass must be positive, got {ns_star}")))
    }
}

fn strictly_fractional(p: &ProblemParams) -> Result<()> {
    p.validate()?;
    if p.s == 1.0 {
        return Err(Error::UndefinedAtUnitOrder);
    }
    Ok(())
}

/// `C_0 = 2s / ((2s - 1)^{1 - 1/s} N_s*)`.
pub fn gn_constant(s: f64, ns_star: f64) -> Result<f64> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::InvalidOrder { s, range: "(1/2, 1]" });
    }
    check_critical_mass(ns_star)?;
    Ok(2.0 * s / ((2.0 * s - 1.0).powf(1.0 - 1.0 / s) * ns_star))
}

/// Radius of the kinetic ball. There is no finite radius at `s = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum KineticRadius {
    Finite(f64),
    UndefinedAtUnitOrder,
}

impl KineticRadius {
    pub fn finite(self) -> Result<f64> {
        match self {
            KineticRadius::Finite(t) => Ok(t),
            KineticRadius::UndefinedAtUnitOrder => Err(Error::UndefinedAtUnitOrder),
        }
    }
}

/// `t_s = N/(2s-1) (N_s*/N)^{s/(1-s)}`, evaluated in logarithms.
pub fn t_s(p: &ProblemParams, ns_star: f64) -> Result<KineticRadius> {
    p.validate()?;
    check_critical_mass(ns_star)?;
    if p.s == 1.0 {
        return Ok(KineticRadius::UndefinedAtUnitOrder);
    }
    let s = p.s;
    let n = p.mass;
    let log_t = (n / (2.0 * s - 1.0)).ln() + s / (1.0 - s) * (ns_star / n).ln();
    Ok(KineticRadius::Finite(log_t.exp()))
}

/// `lambda_s = s / (2s-1)^{1-1/s}`.
pub fn lambda_s(s: f64) -> f64 {
    s / (2.0 * s - 1.0).powf(1.0 - 1.0 / s)
}

/// `f(t) = t - lambda_s N^{2-1/s} t^{1/s} / N_s*`.
pub fn gap_curve(p: &ProblemParams, ns_star: f64, t: f64) -> f64 {
    let s = p.s;
    t - lambda_s(s) * p.mass.powf(2.0 - 1.0 / s) * t.powf(1.0 / s) / ns_star
}

/// Certified lower bound for the energy on the boundary of the kinetic ball,
/// with a sampled `f(t)` for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGap {
    pub t_s: f64,
    /// `(1 - s) t_s / 2`.
    pub lower_bound: f64,
    pub curve: Vec<(f64, f64)>,
}

pub fn boundary_gap(p: &ProblemParams, ns_star: f64) -> Result<BoundaryGap> {
    let t = t_s(p, ns_star)?.finite()?;
    let lower_bound = 0.5 * (1.0 - p.s) * t;
    let samples = 241;
    let curve = (0..samples)
        .map(|k| {
            let tk = t * 10f64.powf(-2.0 + 3.0 * k as f64 / (samples - 1) as f64);
            (tk, gap_curve(p, ns_star, tk))
        })
        .collect();
    Ok(BoundaryGap { t_s: t, lower_bound, curve })
}

/// `C_s = 4^s Gamma((1+s)/2)^2 / Gamma((1-s)/2)^2` for `s` in `(0, 1)`.
pub fn hardy_constant(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidOrder { s, range: "(0, 1)" });
    }
    let ratio = gamma(0.5 * (1.0 + s)) / gamma(0.5 * (1.0 - s));
    Ok(4f64.powf(s) * ratio * ratio)
}

/// Constant right-hand side `(1 - 1/e)^2 / (2e)^2` of the certificate.
pub fn nonexistence_rhs() -> f64 {
    let a = 1.0 - (-1.0f64).exp();
    a * a / (4.0 * E * E)
}

/// Both sides of the nonexistence certificate; `lhs < rhs` certifies that
/// no positive local minimizer exists in the kinetic ball.
pub fn nonexistence_gap(p: &ProblemParams, ns_star: f64) -> Result<(f64, f64)> {
    strictly_fractional(p)?;
    check_critical_mass(ns_star)?;
    let s = p.s;
    let n = p.mass;
    let log_lhs = -s * 4f64.ln()
        + s * s.ln()
        + s * (n / (2.0 * s - 1.0)).ln()
        + s * s / (1.0 - s) * (ns_star / n).ln()
        - 2.0 * (1.0 - s).ln()
        + (1.0 - s) * n.ln();
    Ok((log_lhs.exp(), nonexistence_rhs()))
}

/// Scale of the free saddle, `rho_1 = (N_s*/N)^{1/(2(1-s))}`.
pub fn rho_one(p: &ProblemParams, ns_star: f64) -> Result<f64> {
    strictly_fractional(p)?;
    check_critical_mass(ns_star)?;
    Ok(((ns_star / p.mass).ln() / (2.0 * (1.0 - p.s))).exp())
}

/// Reference level `N (1-s) / (2(2s-1)) (N_s*/N)^{s/(1-s)}`, equal to
/// `(1-s) t_s / 2`.
pub fn reference_level(p: &ProblemParams, ns_star: f64) -> Result<f64> {
    Ok(boundary_gap(p, ns_star)?.lower_bound)
}

/// Two-sided band for the kinetic energy of the mountain-pass solution:
/// `[N(1-s)/(2s-1), 2N] * (N_s*/N)^{s/(1-s)}`.
pub fn saddle_kinetic_band(p: &ProblemParams, ns_star: f64) -> Result<(f64, f64)> {
    strictly_fractional(p)?;
    check_critical_mass(ns_star)?;
    let s = p.s;
    let n = p.mass;
    let scale = (s / (1.0 - s) * (ns_star / n).ln()).exp();
    Ok((n * (1.0 - s) / (2.0 * s - 1.0) * scale, 2.0 * n * scale))
}
