//! Large-`k` experiments linking lattice sums, the Chow side and the
//! continuous functionals.
//!
//! Series are reported raw together with a log-log fit of the residuals;
//! no pass/fail decision is made here.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};

use crate::chowweight::{minimize_breve, ChowProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::kdestab::ToricFunctionalContext;
use crate::polytope::{integrate_sq, l2_distance_sq, lattice_points, mean, DelzantPolytope, PlFunction};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    EulerMaclaurin,
    L2,
    Scan,
    Converge,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::EulerMaclaurin => "em",
            Experiment::L2 => "l2",
            Experiment::Scan => "scan",
            Experiment::Converge => "converge",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "em" => Ok(Experiment::EulerMaclaurin),
            "l2" => Ok(Experiment::L2),
            "scan" => Ok(Experiment::Scan),
            "converge" => Ok(Experiment::Converge),
            other => Err(Error::Parse(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub k: i64,
    pub observable: f64,
    /// Distance of the observable from its predicted limit.
    pub residual: f64,
}

/// Least-squares line `log residual ≈ slope·log k + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSeries {
    pub experiment: Experiment,
    pub points: Vec<SeriesPoint>,
    /// Predicted limit of the observable.
    pub limit: f64,
    pub fit: Option<LogFit>,
    /// Requested levels dropped by the divisibility filter.
    pub skipped: Vec<i64>,
}

impl ExpansionSeries {
    fn new(experiment: Experiment, points: Vec<SeriesPoint>, limit: f64, skipped: Vec<i64>) -> Self {
        let fit = log_log_fit(&points);
        Self {
            experiment,
            points,
            limit,
            fit,
            skipped,
        }
    }

    pub fn ks(&self) -> Vec<i64> {
        self.points.iter().map(|p| p.k).collect()
    }

    pub fn at(&self, k: i64) -> Option<&SeriesPoint> {
        self.points.iter().find(|p| p.k == k)
    }

    /// Rows `(k, observable, residual, fitted_slope)`.
    pub fn rows(&self) -> Vec<(i64, f64, f64, Option<f64>)> {
        let slope = self.fit.map(|f| f.slope);
        self.points
            .iter()
            .map(|p| (p.k, p.observable, p.residual, slope))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "experiment": self.experiment.to_string(),
            "limit": self.limit,
            "k": self.ks(),
            "observable": self.points.iter().map(|p| p.observable).collect::<Vec<_>>(),
            "residual": self.points.iter().map(|p| p.residual).collect::<Vec<_>>(),
            "fitted_slope": self.fit.map(|f| f.slope),
            "fitted_intercept": self.fit.map(|f| f.intercept),
            "skipped": self.skipped,
        })
    }
}

/// Fit over the points with a positive residual; `None` with fewer than two.
pub fn log_log_fit(points: &[SeriesPoint]) -> Option<LogFit> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.k > 0 && p.residual > 0.0 && p.residual.is_finite())
        .map(|p| ((p.k as f64).ln(), p.residual.ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LogFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Least common denominator of the node coordinates of `g`.
pub fn breakpoint_denominator<S: Scalar>(g: &PlFunction<S>) -> i64 {
    let mut used = vec![false; g.points().len()];
    for s in g.simplices() {
        for &i in s {
            used[i] = true;
        }
    }
    g.points()
        .iter()
        .zip(used)
        .filter(|(_, u)| *u)
        .flat_map(|(p, _)| p.iter())
        .filter(|_| S::EXACT)
        .fold(num_bigint::BigInt::one(), |acc, x| acc.lcm(x.to_rational().denom()))
        .to_i64()
        .unwrap_or(i64::MAX)
}

/// Keeps the positive multiples of `r`, sorted and deduplicated.
fn filter_levels(ks: &[i64], r: i64) -> Result<(Vec<i64>, Vec<i64>)> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if let Some(&k) = ks.iter().find(|&&k| k <= 0) {
        return Err(Error::InvalidLevel(k));
    }
    let (keep, skip): (Vec<i64>, Vec<i64>) = ks.iter().partition(|&&k| k % r == 0);
    if keep.is_empty() {
        return Err(Error::Divisibility {
            k: ks.first().map_or(0, |&k| k as u32),
            r: r as u32,
        });
    }
    Ok((keep, skip))
}

fn lattice_mean<S: Scalar>(p: &DelzantPolytope, g: &PlFunction<S>, k: i64, square: bool) -> Result<S> {
    let pts: Vec<Vec<S>> = lattice_points(p, k)?.points_as();
    let n = pts.len() as i64;
    let mut sum = S::zero();
    for u in &pts {
        let v = g.eval(u)?;
        sum = sum + if square { v.clone() * v } else { v };
    }
    Ok(sum / S::from_i64(n))
}

/// `e_k = ⨍_P g − mean_{P_k} g` and `r_k = 2k·e_k`, compared with
/// `C_P·L(g)`. Levels are filtered to multiples of the breakpoint denominator.
pub fn euler_maclaurin_check<S: Scalar>(
    p: &DelzantPolytope,
    g: &PlFunction<S>,
    ks: &[i64],
) -> Result<ExpansionSeries> {
    if !g.is_concave() {
        return Err(Error::NotConcave);
    }
    let (ks, skipped) = filter_levels(ks, breakpoint_denominator(g))?;
    let ctx = ToricFunctionalContext::new(p.clone());
    let limit = ctx.toric_m(g)?.to_f64();
    let avg = mean(p, g)?;
    let points = ks
        .iter()
        .map(|&k| {
            let e = avg.clone() - lattice_mean(p, g, k, false)?;
            let r = (S::from_i64(2 * k) * e).to_f64();
            Ok(SeriesPoint {
                k,
                observable: r,
                residual: (r - limit).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpansionSeries::new(Experiment::EulerMaclaurin, points, limit, skipped))
}

/// `q_k = (mean_{P_k} g²)^{1/2}` against `(⨍_P g²)^{1/2}`.
pub fn l2_quantization_check<S: Scalar>(
    p: &DelzantPolytope,
    g: &PlFunction<S>,
    ks: &[i64],
) -> Result<ExpansionSeries> {
    let (ks, skipped) = filter_levels(ks, 1)?;
    let vol = S::from_rational(p.volume());
    let limit = (integrate_sq(g) / vol).to_f64().max(0.0).sqrt();
    let points = ks
        .iter()
        .map(|&k| {
            let q = lattice_mean(p, g, k, true)?.to_f64().max(0.0).sqrt();
            Ok(SeriesPoint {
                k,
                observable: q,
                residual: (q - limit).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpansionSeries::new(Experiment::L2, points, limit, skipped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    /// Smallest scanned `k` with `M_k(SN_k g) < 0`.
    pub first_unstable: Option<i64>,
    /// Observable `M_k(SN_k g)`; residual `|2·M_k − C_P·L(g)|`.
    pub series: ExpansionSeries,
}

impl ScanReport {
    pub fn to_json(&self) -> Value {
        json!({
            "first_unstable": self.first_unstable,
            "series": self.series.to_json(),
        })
    }
}

/// Chow weights of `SN_k(g)` over the scanned levels.
///
/// `M_k(SN_k g) = k·e_k`, so `2·M_k` is what tends to `C_P·L(g)`.
pub fn k_instability_scan<S: Scalar>(
    p: &DelzantPolytope,
    g: &PlFunction<S>,
    ks: &[i64],
) -> Result<ScanReport> {
    if !g.is_concave() {
        return Err(Error::NotConcave);
    }
    let (ks, skipped) = filter_levels(ks, breakpoint_denominator(g))?;
    let ctx = ToricFunctionalContext::new(p.clone());
    let limit = ctx.toric_m(g)?.to_f64();
    let mut points = Vec::with_capacity(ks.len());
    let mut first_unstable = None;
    for &k in &ks {
        let problem: ChowProblem<S> = ChowProblem::new(p.clone(), k)?;
        let lambda = problem.sn_k(g)?;
        let m = problem.chow_weight(&lambda)?;
        if first_unstable.is_none() && m.sign_tol(1.0) == std::cmp::Ordering::Less {
            first_unstable = Some(k);
        }
        let m = m.to_f64();
        points.push(SeriesPoint {
            k,
            observable: m,
            residual: (2.0 * m - limit).abs(),
        });
    }
    Ok(ScanReport {
        first_unstable,
        series: ExpansionSeries::new(Experiment::Scan, points, limit, skipped),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: i64,
    /// `⨍_P |FS_k(λ_k♭) − f♭|²`; `None` when the level's solver did not converge.
    pub l2_distance_sq: Option<f64>,
    /// Largest `|FS_k(λ_k♭) − f♭|` over the nodes of both functions.
    pub sup_distance: Option<f64>,
    pub breve_m: Option<f64>,
    /// `|M̆_k(λ_k♭) − F̆(f♭)|`.
    pub objective_gap: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub reference_value: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn row(&self, k: i64) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    /// Observable `⨍|g_k − f♭|²`, residual the objective gap; levels without
    /// a converged solve are left out.
    pub fn to_series(&self) -> ExpansionSeries {
        let points = self
            .rows
            .iter()
            .filter_map(|r| {
                Some(SeriesPoint {
                    k: r.k,
                    observable: r.l2_distance_sq?,
                    residual: r.objective_gap?,
                })
            })
            .collect();
        ExpansionSeries::new(Experiment::Converge, points, 0.0, Vec::new())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "reference_breve_f": self.reference_value,
            "rows": self.rows.iter().map(|r| json!({
                "k": r.k,
                "l2_distance_sq": r.l2_distance_sq,
                "sup_distance": r.sup_distance,
                "breve_m": r.breve_m,
                "objective_gap": r.objective_gap,
                "converged": r.converged,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Compares `FS_k` of the discrete minimizers of `M̆_k` with a reference
/// continuous minimizer `f♭`.
pub fn destabilizer_convergence(
    p: &DelzantPolytope,
    ks: &[i64],
    reference: &PlFunction<f64>,
    opts: &SolverOptions,
) -> Result<ConvergenceReport> {
    let (ks, _) = filter_levels(ks, 1)?;
    let ctx = ToricFunctionalContext::new(p.clone());
    let reference_value = ctx.breve_f(reference)?;
    let vol = Scalar::to_f64(p.volume());
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let problem = ChowProblem::new(p.clone(), k)?.to_float();
        let row = match minimize_breve(&problem, opts) {
            Ok(rep) if rep.converged => {
                let g = problem.fs_k(&rep.lambda.weights)?;
                let l2 = l2_distance_sq(&g, reference)? / vol;
                let mut sup: f64 = 0.0;
                for u in g.points().iter().chain(reference.points()) {
                    sup = sup.max((g.eval(u)? - reference.eval(u)?).abs());
                }
                ConvergenceRow {
                    k,
                    l2_distance_sq: Some(l2),
                    sup_distance: Some(sup),
                    breve_m: Some(rep.breve_m),
                    objective_gap: Some((rep.breve_m - reference_value).abs()),
                    converged: true,
                }
            }
            Ok(_) | Err(Error::Singular(_)) => ConvergenceRow {
                k,
                l2_distance_sq: None,
                sup_distance: None,
                breve_m: None,
                objective_gap: None,
                converged: false,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(ConvergenceReport {
        reference_value,
        rows,
    })
}
