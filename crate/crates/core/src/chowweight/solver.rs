//! Minimization of `M̆_k`.
//!
//! `⨍Env(λ)` is the support function of the polytope `Q` of envelope mass
//! vectors, so `min_λ M̆_k(λ) = max_{w∈Q} −2k²N|w − ū|²` with `ū` uniform,
//! attained at `λ = −2k²N(w* − ū)`. The default method finds the min-norm
//! point `w* − ū` of `Q − ū` by Wolfe's algorithm, whose linear oracle is one
//! envelope computation. Projected subgradient descent is kept as a
//! reference method.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{ChowProblem, WeightVector};
use crate::error::{Error, Result};
use crate::naspace::Exponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    MinNormPoint,
    Subgradient,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MinNormPoint => "min-norm-point",
            Method::Subgradient => "subgradient",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnp" | "min-norm-point" => Ok(Method::MinNormPoint),
            "subgradient" | "sg" => Ok(Method::Subgradient),
            other => Err(Error::Parse(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub method: Method,
    /// Starting weights; zero when absent.
    pub init: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            seed: 7,
            method: Method::MinNormPoint,
            init: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DestabilizerReport {
    pub lambda: WeightVector<f64>,
    pub chow_weight: f64,
    pub breve_m: f64,
    /// `‖λ♭‖₂`.
    pub norm2: f64,
    /// `|Σ_u λ♭_u|`.
    pub sum_residual: f64,
    /// `max_u |λ♭_u − Env(λ♭)(u)|`.
    pub fixedpoint_residual: f64,
    /// `|‖λ♭‖₂² + 2k² M_k(λ♭)|`.
    pub norm_identity_residual: f64,
    pub iterations: usize,
    /// Duality gap (min-norm point) or last step length (subgradient).
    pub final_step: f64,
    pub converged: bool,
    pub method: Method,
}

impl DestabilizerReport {
    pub fn to_json(&self) -> Value {
        json!({
            "k": self.lambda.k(),
            "lambda": self.lambda.to_json(),
            "chow_weight": self.chow_weight,
            "breve_m": self.breve_m,
            "norm2": self.norm2,
            "diagnostics": {
                "sum_residual": self.sum_residual,
                "fixedpoint_residual": self.fixedpoint_residual,
                "norm_identity_residual": self.norm_identity_residual,
                "iterations": self.iterations,
                "final_step": self.final_step,
                "converged": self.converged,
                "method": self.method.to_string(),
            },
        })
    }
}

/// Minimizes `M̆_k` over weight vectors of the problem's level.
pub fn minimize_breve(problem: &ChowProblem<f64>, opts: &SolverOptions) -> Result<DestabilizerReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::ParameterOutOfRange(opts.tol));
    }
    if let Some(init) = &opts.init {
        problem.check(init)?;
    }
    let (lambda, iterations, final_step, converged) = match opts.method {
        Method::MinNormPoint => min_norm_point(problem, opts)?,
        Method::Subgradient => subgradient(problem, opts)?,
    };
    report(problem, lambda, iterations, final_step, converged, opts.method)
}

fn report(
    problem: &ChowProblem<f64>,
    lambda: Vec<f64>,
    iterations: usize,
    final_step: f64,
    converged: bool,
    method: Method,
) -> Result<DestabilizerReport> {
    let k = problem.k() as f64;
    let env = problem.envelope(&lambda)?;
    let fixedpoint_residual = env
        .values()
        .iter()
        .zip(&lambda)
        .map(|(g, l)| (g - l).abs())
        .fold(0.0, f64::max);
    let chow_weight = problem.chow_weight(&lambda)?;
    let norm2 = Exponent::Finite(2.0).mean_norm(lambda.iter().copied());
    Ok(DestabilizerReport {
        chow_weight,
        breve_m: problem.breve_m(&lambda)?,
        norm2,
        sum_residual: lambda.iter().sum::<f64>().abs(),
        fixedpoint_residual,
        norm_identity_residual: (norm2 * norm2 + 2.0 * k * k * chow_weight).abs(),
        lambda: problem.weight_vector(lambda)?,
        iterations,
        final_step,
        converged,
        method,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizer of `|Σ α_i s_i|` subject to `Σ α_i = 1` (no sign constraint).
fn affine_minimizer(s: &[Vec<f64>]) -> Vec<f64> {
    let m = s.len();
    if m == 1 {
        return vec![1.0];
    }
    let n = s[0].len();
    // x = s_0 + D β with D = [s_i − s_0].
    let d = DMatrix::from_fn(n, m - 1, |r, c| s[c + 1][r] - s[0][r]);
    let rhs = DVector::from_fn(n, |r, _| -s[0][r]);
    let svd = d.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-13;
    let beta = svd.solve(&rhs, cutoff).expect("U and V were computed");
    let mut alpha = Vec::with_capacity(m);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter());
    alpha
}

type Outcome = (Vec<f64>, usize, f64, bool);

fn min_norm_point(problem: &ChowProblem<f64>, opts: &SolverOptions) -> Result<Outcome> {
    let n = problem.len();
    let k = problem.k() as f64;
    let scale = 2.0 * k * k * n as f64;
    let uniform = 1.0 / n as f64;
    let vertex = |heights: &[f64]| -> Result<Vec<f64>> {
        Ok(problem
            .envelope_weights(heights)?
            .into_iter()
            .map(|w| w - uniform)
            .collect())
    };
    let start = opts.init.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut corral: Vec<Vec<f64>> = vec![vertex(&start)?];
    let mut alpha = vec![1.0];
    let mut x = corral[0].clone();
    const EPS: f64 = 1e-14;

    let mut gap = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let heights: Vec<f64> = x.iter().map(|v| -scale * v).collect();
        let q = vertex(&heights)?;
        let xx = dot(&x, &x);
        gap = xx - dot(&x, &q);
        let size = corral
            .iter()
            .chain([&q])
            .map(|s| dot(s, s))
            .fold(0.0, f64::max);
        // `gap` bounds |x|² − |x*|²; the weights scale as 2k²N·x.
        let repeated = corral
            .iter()
            .any(|s| s.iter().zip(&q).all(|(a, b)| (a - b).abs() <= EPS));
        if gap <= 1e-15 * size || repeated {
            // A repeated vertex means round-off has stalled the corral.
            let lambda = x.iter().map(|v| -scale * v).collect();
            return Ok((lambda, iter, gap.max(0.0), gap <= opts.tol * size));
        }
        corral.push(q);
        alpha.push(0.0);
        loop {
            let beta = affine_minimizer(&corral);
            if beta.iter().all(|&b| b > EPS) {
                alpha = beta;
                break;
            }
            let theta = alpha
                .iter()
                .zip(&beta)
                .filter(|(_, &b)| b <= EPS)
                .map(|(&a, &b)| a / (a - b))
                .fold(f64::INFINITY, f64::min)
                .clamp(0.0, 1.0);
            for (a, b) in alpha.iter_mut().zip(&beta) {
                *a += theta * (b - *a);
            }
            let keep: Vec<bool> = alpha.iter().map(|&a| a > EPS).collect();
            let mut i = 0;
            corral.retain(|_| {
                i += 1;
                keep[i - 1]
            });
            alpha.retain(|&a| a > EPS);
            let total: f64 = alpha.iter().sum();
            alpha.iter_mut().for_each(|a| *a /= total);
            if corral.len() == 1 {
                alpha = vec![1.0];
                break;
            }
        }
        x = (0..n)
            .map(|r| corral.iter().zip(&alpha).map(|(s, a)| a * s[r]).sum())
            .collect();
    }
    let lambda = x.iter().map(|v| -scale * v).collect();
    Ok((lambda, opts.max_iter, gap.max(0.0), false))
}

fn subgradient(problem: &ChowProblem<f64>, opts: &SolverOptions) -> Result<Outcome> {
    let n = problem.len();
    let k = problem.k() as f64;
    // Curvature of the quadratic part is 1/(k²N); the factor was tuned on small levels.
    let a = 0.03 * k * k * n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut lambda = opts
        .init
        .clone()
        .unwrap_or_else(|| (0..n).map(|_| rng.gen_range(-1e-3..1e-3)).collect());
    center(&mut lambda);
    let mut best = lambda.clone();
    let mut best_val = problem.breve_m(&lambda)?;
    let mut history: Vec<f64> = vec![best_val];
    let mut step = 0.0;
    for t in 1..=opts.max_iter {
        let g = problem.subgradient_breve(&lambda)?;
        let gnorm = dot(&g, &g).sqrt();
        step = a / (t as f64).sqrt();
        for (l, gi) in lambda.iter_mut().zip(&g) {
            *l -= step * gi;
        }
        center(&mut lambda);
        let val = problem.breve_m(&lambda)?;
        if val < best_val {
            best_val = val;
            best = lambda.clone();
        }
        history.push(best_val);
        if history.len() > 50 {
            let old = history[history.len() - 51];
            let rel = (old - best_val).abs() / (1.0 + best_val.abs());
            if gnorm <= opts.tol && rel <= opts.tol {
                return Ok((best, t, step, true));
            }
        }
    }
    Ok((best, opts.max_iter, step, false))
}

fn center(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}
