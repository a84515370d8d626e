use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "destab", version, about = "Chow and K destabilizers of toric manifolds")]
pub struct Cli {
    /// Arithmetic for evaluations; solvers always run in floating point.
    #[arg(long, value_enum, default_value_t = Mode::Rational, global = true)]
    pub mode: Mode,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Accept polytopes that are not Delzant.
    #[arg(long, global = true)]
    pub allow_nondelzant: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Inspect a polytope and its lattice points.
    Polytope {
        #[arg(long = "in")]
        input: PathBuf,
        /// Vertices, volumes and the Delzant check.
        #[arg(long)]
        info: bool,
        /// Also list the lattice points of this level.
        #[arg(long)]
        k: Option<i64>,
    },
    /// Evaluate the Chow weight of a weight vector, or solve for the minimizer.
    Chow {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long)]
        k: i64,
        /// JSON array of weights, or an object with a "weights" array.
        #[arg(long, required_unless_present = "solve", conflicts_with = "solve")]
        lambda: Option<PathBuf>,
        /// Minimize instead of evaluating; same output as `destabilize`.
        #[arg(long)]
        solve: bool,
        /// Exponent of the normalizing norm (a number >= 1 or "inf").
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "mnp")]
        method: String,
    },
    /// Compute the discrete maximal destabilizer at level k.
    Destabilize {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long)]
        k: i64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// mnp or subgradient.
        #[arg(long, default_value = "mnp")]
        method: String,
    },
    /// Compute the continuous optimal destabilizer on a level-K grid.
    Optimal {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long, default_value_t = 32)]
        grid: i64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: u32,
    },
    /// Large-k experiments.
    Quantize {
        #[arg(long)]
        polytope: PathBuf,
        /// Concave piecewise-linear function (required except for converge).
        #[arg(long)]
        g: Option<PathBuf>,
        /// Levels as start:end[:step], or a comma-separated list.
        #[arg(long)]
        k: String,
        /// em, l2, scan or converge.
        #[arg(long)]
        experiment: String,
        /// Reference grid level for converge.
        #[arg(long, default_value_t = 32)]
        grid: i64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// `"2:64:2"`, `"2:64"`, `"8"` or `"2,4,8"`.
pub fn parse_levels(s: &str) -> Result<Vec<i64>, String> {
    let bad = || format!("bad level range {s:?}");
    let num = |t: &str| t.trim().parse::<i64>().map_err(|_| bad());
    if s.contains(',') {
        return s.split(',').map(num).collect();
    }
    let parts: Vec<&str> = s.split(':').collect();
    let (start, end, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1),
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(bad()),
    };
    if step <= 0 || end < start {
        return Err(bad());
    }
    Ok((start..=end).step_by(step as usize).collect())
}
