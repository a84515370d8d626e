use std::fs;
use std::path::{Path, PathBuf};

use destab_core::chowweight::{evaluation_json, minimize_breve, ChowProblem, Method, SolverOptions, WeightVector};
use destab_core::kdestab::{KSolverOptions, ToricFunctionalContext};
use destab_core::naspace::Exponent;
use destab_core::polytope::{lattice_points, DelzantPolytope, PlFunction};
use destab_core::quantize::{
    destabilizer_convergence, euler_maclaurin_check, k_instability_scan, l2_quantization_check,
    ExpansionSeries, Experiment,
};
use destab_core::{Error, Rational, Scalar};
use serde_json::{json, Value};

use crate::args::{parse_levels, Cli, Command, Format, Mode};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug)]
pub enum Failure {
    Input(String),
    NoConvergence(String),
    Validation(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::NoConvergence(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::NoConvergence(m) | Failure::Validation(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConcave => Failure::Validation(e.to_string()),
            Error::Singular(_) => Failure::NoConvergence(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

/// What a successful run produced; `converged == false` maps to exit code 2
/// after the output has been written.
pub struct Outcome {
    pub text: String,
    pub converged: bool,
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_polytope(path: &Path, allow_nondelzant: bool) -> Result<DelzantPolytope, Failure> {
    let p = DelzantPolytope::from_json(&read_json(path)?)?;
    let cert = p.validate_delzant();
    if !cert.is_delzant && !allow_nondelzant {
        let bad: Vec<String> = cert
            .failures
            .iter()
            .map(|f| format!("{:?}", f.vertex.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
            .collect();
        return Err(Failure::Validation(format!(
            "polytope is not Delzant at vertices {}",
            bad.join(", ")
        )));
    }
    Ok(p)
}

fn num<S: Scalar>(q: &Rational) -> Value {
    S::from_rational(q).to_json()
}

fn polytope_info<S: Scalar>(p: &DelzantPolytope) -> Value {
    let cert = p.validate_delzant();
    json!({
        "dim": p.dim(),
        "vertices": p.vertices().iter().map(|v| v.iter().map(num::<S>).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "volume": num::<S>(p.volume()),
        "boundary_volume": num::<S>(&p.boundary_measure()),
        "delzant": cert.is_delzant,
        "delzant_failures": cert.failures.iter().map(|f| json!({
            "vertex": f.vertex.iter().map(num::<S>).collect::<Vec<_>>(),
            "active_facets": f.active_facets,
            "determinant": f.determinant,
        })).collect::<Vec<_>>(),
    })
}

fn weights<S: Scalar>(v: &Value, problem: &ChowProblem<S>) -> Result<Vec<S>, Failure> {
    let w = if v.is_array() {
        v.as_array()
            .unwrap()
            .iter()
            .map(|x| S::from_json(x).ok_or_else(|| Failure::Input(format!("lambda: bad number {x}"))))
            .collect::<Result<Vec<S>, _>>()?
    } else if v.get("points").is_some() {
        let wv = WeightVector::<S>::from_json(v)?;
        if &wv.level != problem.level() {
            return Err(Failure::Input(format!(
                "lambda: lattice points of level {} do not match level {}",
                wv.level.k,
                problem.k()
            )));
        }
        wv.weights
    } else {
        return weights(&v["weights"], problem);
    };
    if w.len() != problem.len() {
        return Err(Error::LengthMismatch {
            expected: problem.len(),
            got: w.len(),
        }
        .into());
    }
    Ok(w)
}

fn chow<S: Scalar>(p: DelzantPolytope, k: i64, lambda: &Value, exponent: Exponent) -> Result<Value, Failure> {
    let problem: ChowProblem<S> = ChowProblem::new(p, k)?;
    let w = weights(lambda, &problem)?;
    let mut v = evaluation_json(&problem, &w)?;
    v["p"] = json!(exponent.to_string());
    v["normalized_chow_p"] = match problem.normalized_chow(&w, exponent) {
        Ok(x) => json!(x),
        Err(Error::ZeroVector) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    Ok(v)
}

fn series_experiment<S: Scalar>(
    p: &DelzantPolytope,
    g: &Value,
    ks: &[i64],
    experiment: Experiment,
) -> Result<(ExpansionSeries, Value), Failure> {
    let g: PlFunction<S> = PlFunction::from_json(g)?;
    Ok(match experiment {
        Experiment::EulerMaclaurin => {
            let s = euler_maclaurin_check(p, &g, ks)?;
            let v = s.to_json();
            (s, v)
        }
        Experiment::L2 => {
            let s = l2_quantization_check(p, &g, ks)?;
            let v = s.to_json();
            (s, v)
        }
        Experiment::Scan => {
            let r = k_instability_scan(p, &g, ks)?;
            let v = r.to_json();
            (r.series, v)
        }
        Experiment::Converge => unreachable!("handled by the caller"),
    })
}

fn csv_text(series: &ExpansionSeries) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Input(e.to_string());
    w.write_record(["k", "observable", "residual", "fitted_slope"]).map_err(io)?;
    for row in series.rows() {
        w.serialize(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Input(e.to_string()))
}

fn envelope(cli: &Cli, result: Value) -> Result<String, Failure> {
    let config = serde_json::to_value(cli).map_err(|e| Failure::Input(e.to_string()))?;
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Failure::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn destabilize(
    cli: &Cli,
    poly: DelzantPolytope,
    k: i64,
    tol: f64,
    max_iter: usize,
    seed: u64,
    method: &str,
) -> Result<Outcome, Failure> {
    let method: Method = method.parse().map_err(|e: Error| Failure::Input(e.to_string()))?;
    let problem = ChowProblem::<Rational>::new(poly, k)?.to_float();
    let opts = SolverOptions {
        tol,
        max_iter,
        seed,
        method,
        init: None,
    };
    log::info!("minimizing over {} lattice points", problem.len());
    let rep = minimize_breve(&problem, &opts)?;
    Ok(Outcome {
        text: envelope(cli, rep.to_json())?,
        converged: rep.converged,
    })
}

pub fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    let parse = |e: Error| Failure::Input(e.to_string());
    match &cli.command {
        Command::Polytope { input, info, k } => {
            let p = load_polytope(input, cli.allow_nondelzant)?;
            let mut v = json!({ "polytope": p.to_json() });
            if *info || k.is_none() {
                v["info"] = match cli.mode {
                    Mode::Rational => polytope_info::<Rational>(&p),
                    Mode::Float => polytope_info::<f64>(&p),
                };
            }
            if let Some(k) = k {
                let level = lattice_points(&p, *k)?;
                v["lattice"] = level.to_json();
                v["lattice"]["n_points"] = json!(level.len());
            }
            Ok(Outcome {
                text: envelope(cli, v)?,
                converged: true,
            })
        }
        Command::Chow {
            polytope,
            k,
            lambda,
            solve,
            p,
            tol,
            max_iter,
            seed,
            method,
        } => {
            let poly = load_polytope(polytope, cli.allow_nondelzant)?;
            if *solve {
                return destabilize(cli, poly, *k, *tol, *max_iter, *seed, method);
            }
            let exponent: Exponent = p.parse().map_err(parse)?;
            let lambda = read_json(lambda.as_ref().expect("clap requires --lambda without --solve"))?;
            let v = match cli.mode {
                Mode::Rational => chow::<Rational>(poly, *k, &lambda, exponent)?,
                Mode::Float => chow::<f64>(poly, *k, &lambda, exponent)?,
            };
            Ok(Outcome {
                text: envelope(cli, v)?,
                converged: true,
            })
        }
        Command::Destabilize {
            polytope,
            k,
            tol,
            max_iter,
            seed,
            method,
        } => {
            let poly = load_polytope(polytope, cli.allow_nondelzant)?;
            destabilize(cli, poly, *k, *tol, *max_iter, *seed, method)
        }
        Command::Optimal {
            polytope,
            grid,
            tol,
            max_iter,
        } => {
            let poly = load_polytope(polytope, cli.allow_nondelzant)?;
            let ctx = ToricFunctionalContext::new(poly);
            let opts = KSolverOptions {
                grid_level: *grid,
                tol: *tol,
                max_iter: *max_iter,
            };
            let (f, rep) = ctx.minimize_breve_f(&opts)?;
            let v = json!({ "function": f.to_json(), "report": rep.to_json() });
            Ok(Outcome {
                text: envelope(cli, v)?,
                converged: rep.converged,
            })
        }
        Command::Quantize {
            polytope,
            g,
            k,
            experiment,
            grid,
            tol,
            max_iter,
            seed,
            format,
        } => {
            let poly = load_polytope(polytope, cli.allow_nondelzant)?;
            let ks = parse_levels(k).map_err(Failure::Input)?;
            let experiment: Experiment = experiment.parse().map_err(parse)?;
            let mut converged = true;
            let (series, full) = if experiment == Experiment::Converge {
                let ctx = ToricFunctionalContext::new(poly.clone());
                let (reference, krep) = ctx.minimize_breve_f(&KSolverOptions {
                    grid_level: *grid,
                    tol: *tol,
                    ..KSolverOptions::default()
                })?;
                converged = krep.converged;
                let opts = SolverOptions {
                    tol: *tol,
                    max_iter: *max_iter,
                    seed: *seed,
                    ..SolverOptions::default()
                };
                let rep = destabilizer_convergence(&poly, &ks, &reference, &opts)?;
                let v = json!({ "reference": krep.to_json(), "convergence": rep.to_json(), "series": rep.to_series().to_json() });
                (rep.to_series(), v)
            } else {
                let path: &PathBuf = g
                    .as_ref()
                    .ok_or_else(|| Failure::Input(format!("--g is required for experiment {experiment}")))?;
                let gv = read_json(path)?;
                match cli.mode {
                    Mode::Rational => series_experiment::<Rational>(&poly, &gv, &ks, experiment)?,
                    Mode::Float => series_experiment::<f64>(&poly, &gv, &ks, experiment)?,
                }
            };
            let text = match format {
                Format::Csv => csv_text(&series)?,
                Format::Json => envelope(cli, full)?,
            };
            Ok(Outcome { text, converged })
        }
    }
}

pub fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
