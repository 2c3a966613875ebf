use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solvers, diagnostics and field I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: field on n={field_n}, L={field_l} but operator built for n={op_n}, L={op_l}")]
    GridMismatch {
        field_n: usize,
        field_l: f64,
        op_n: usize,
        op_l: f64,
    },

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("field is identically zero")]
    ZeroField,

    #[error("field has negative values (min {min:e})")]
    NegativeInput { min: f64 },

    #[error("order s = {s} is outside the admissible range {range}")]
    InvalidOrder { s: f64, range: &'static str },

    #[error("quantity is undefined at s = 1")]
    UndefinedAtUnitOrder,

    #[error("user potential needs r*V'(r) samples for the virial functional")]
    MissingVirialTerm,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("box too small: {fraction:e} of the mass sits in the outer annulus (limit {limit:e})")]
    BoxTooSmall { fraction: f64, limit: f64 },

    #[error("iteration collapsed to the zero field")]
    Collapse,

    #[error("dilation by {factor} is not resolvable on this grid ({reason})")]
    Aliasing { factor: f64, reason: String },

    #[error("saddle search fell to the local minimizer branch")]
    FellToMin,

    #[error("mountain-pass bracket inverted: lower {lower:e} > upper {upper:e}")]
    BracketInversion { lower: f64, upper: f64 },

    #[error("need at least {needed} successful records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
