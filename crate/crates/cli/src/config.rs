//! Run configuration: a JSON file merged with command-line flags, then
//! resolved into concrete grids and parameters.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use fracgp::potential::{Potential, RadialTable};
use fracgp::{Error, Grid2D, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Groundstate,
    Minimize,
    Saddle,
    Sweep,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Groundstate => "groundstate",
            Self::Minimize => "minimize",
            Self::Saddle => "saddle",
            Self::Sweep => "sweep",
            Self::Verify => "verify",
        }
    }

    /// Primary grid `(L, n)`.
    fn default_grid(self) -> (f64, usize) {
        match self {
            Self::Groundstate => (16.0, 256),
            Self::Minimize | Self::Sweep => (64.0, 512),
            Self::Saddle => (128.0, 2048),
            Self::Verify => (128.0, 1024),
        }
    }

    /// Grid of the auxiliary ground states, when separate from the primary one.
    fn default_gs_grid(self) -> Option<(f64, usize)> {
        match self {
            Self::Minimize => Some((128.0, 1024)),
            Self::Sweep => Some((128.0, 2048)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Harmonic,
    File,
}

/// A mass given absolutely or as a multiple of `N_1*`, written `1.5x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassSpec {
    Absolute(f64),
    Relative(f64),
}

impl FromStr for MassSpec {
    type Err = String;

    fn from_str(text: &str) -> std::result::Result<Self, String> {
        let t = text.trim();
        let (number, relative) = match t.strip_suffix(['x', 'X']) {
            Some(head) => (head, true),
            None => (t, false),
        };
        let v: f64 = number.trim().parse().map_err(|_| format!("invalid mass '{text}'"))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(format!("mass must be positive, got '{text}'"));
        }
        Ok(if relative { Self::Relative(v) } else { Self::Absolute(v) })
    }
}

impl fmt::Display for MassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Absolute(v) => write!(f, "{v}"),
            Self::Relative(v) => write!(f, "{v}x"),
        }
    }
}

impl Serialize for MassSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Absolute(v) => s.serialize_f64(*v),
            Self::Relative(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for MassSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => MassSpec::from_str(&v.to_string()),
            Raw::Text(t) => MassSpec::from_str(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Settings shared by every command. Every field may also come from the
/// `--config` file; flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Command named in a config file; must match the subcommand.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Order of the fractional Laplacian.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Comma-separated orders.
    #[arg(long = "s-list", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_list: Option<Vec<f64>>,
    /// Mass, absolute or as a multiple of N_1* ("1.5x").
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub mass: Option<MassSpec>,
    /// Box side.
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    /// Points per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Box side of the auxiliary ground-state grid.
    #[arg(long = "gs-L")]
    #[serde(rename = "gs_L", skip_serializing_if = "Option::is_none")]
    pub gs_extent: Option<f64>,
    /// Points per axis of the auxiliary ground-state grid.
    #[arg(long = "gs-n")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gs_n: Option<usize>,
    /// Residual tolerance of the solver.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// First trial step of the descent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialKind>,
    /// CSV of (r, V, rVprime) samples for --potential file.
    #[arg(long = "potential-file")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_file: Option<PathBuf>,
    /// Start the minimizer from a seeded random guess.
    #[arg(long = "random-init", default_missing_value = "true", num_args = 0..=1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_init: Option<bool>,
}

impl Settings {
    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            command: self.command.or(base.command),
            s: self.s.or(base.s),
            s_list: self.s_list.or(base.s_list),
            mass: self.mass.or(base.mass),
            extent: self.extent.or(base.extent),
            n: self.n.or(base.n),
            gs_extent: self.gs_extent.or(base.gs_extent),
            gs_n: self.gs_n.or(base.gs_n),
            tol: self.tol.or(base.tol),
            dt: self.dt.or(base.dt),
            out: self.out.or(base.out),
            seed: self.seed.or(base.seed),
            potential: self.potential.or(base.potential),
            potential_file: self.potential_file.or(base.potential_file),
            random_init: self.random_init.or(base.random_init),
        }
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Configuration after defaults, validation and grid construction. This is
/// what gets echoed into the output directory.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_list: Option<Vec<f64>>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub mass: Option<MassSpec>,
    #[serde(rename = "L")]
    pub extent: f64,
    pub n: usize,
    #[serde(rename = "gs_L", skip_serializing_if = "Option::is_none")]
    pub gs_extent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gs_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub potential: PotentialKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_file: Option<PathBuf>,
    pub random_init: bool,
    #[serde(skip)]
    pub grid: Grid2D,
    #[serde(skip)]
    pub gs_grid: Option<Grid2D>,
    #[serde(skip)]
    pub trap: Potential,
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl Resolved {
    pub fn new(command: Command, set: Settings) -> Result<Resolved> {
        if set.command.is_some_and(|c| c != command) {
            return Err(Error::Config(format!("config file is for another command than {}", command.name())));
        }
        let (l0, n0) = command.default_grid();
        let extent = set.extent.unwrap_or(l0);
        let n = set.n.unwrap_or(n0);
        let grid = Grid2D::new(extent, n)?;
        let (gs_extent, gs_n, gs_grid) = match command.default_gs_grid() {
            Some((gl, gn)) => {
                let (gl, gn) = (set.gs_extent.unwrap_or(gl), set.gs_n.unwrap_or(gn));
                (Some(gl), Some(gn), Some(Grid2D::new(gl, gn)?))
            }
            None if set.gs_extent.is_some() || set.gs_n.is_some() => {
                return Err(Error::Config(format!("{} takes no separate ground-state grid", command.name())));
            }
            None => (None, None, None),
        };
        positive("tol", set.tol)?;
        positive("dt", set.dt)?;
        if let Some(s) = set.s {
            if !(s > 0.5 && s <= 1.0) {
                return Err(Error::InvalidOrder { s, range: "(1/2, 1]" });
            }
        }
        if let Some(list) = &set.s_list {
            if list.is_empty() || list.iter().any(|&s| !(s > 0.5 && s <= 1.0)) {
                return Err(Error::Config("every entry of s_list must lie in (1/2, 1]".into()));
            }
        }
        match command {
            Command::Minimize | Command::Saddle => {
                if set.s.is_none() {
                    return Err(Error::Config(format!("{} needs --s", command.name())));
                }
                if set.mass.is_none() {
                    return Err(Error::Config(format!("{} needs --N", command.name())));
                }
            }
            Command::Sweep if set.mass.is_none() => return Err(Error::Config("sweep needs --N".into())),
            Command::Groundstate if set.s.is_none() && set.s_list.is_none() => {
                return Err(Error::Config("groundstate needs --s or --s-list".into()));
            }
            _ => {}
        }
        let potential = set.potential.unwrap_or(if set.potential_file.is_some() { PotentialKind::File } else { PotentialKind::Harmonic });
        let trap = match (potential, &set.potential_file) {
            (PotentialKind::Harmonic, None) => Potential::Harmonic,
            (PotentialKind::Harmonic, Some(_)) => {
                return Err(Error::Config("--potential-file needs --potential file".into()));
            }
            (PotentialKind::File, Some(path)) => Potential::Radial(RadialTable::from_csv(path)?),
            (PotentialKind::File, None) => return Err(Error::Config("--potential file needs --potential-file".into())),
        };
        trap.check(&grid)?;
        Ok(Resolved {
            command,
            s: set.s,
            s_list: set.s_list,
            mass: set.mass,
            extent,
            n,
            gs_extent,
            gs_n,
            tol: set.tol,
            dt: set.dt,
            out: set.out.unwrap_or_else(|| PathBuf::from("out")),
            seed: set.seed.unwrap_or(0),
            potential,
            potential_file: set.potential_file,
            random_init: set.random_init.unwrap_or(false),
            grid,
            gs_grid,
            trap,
        })
    }
}
