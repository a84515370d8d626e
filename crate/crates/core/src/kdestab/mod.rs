//! Toric Donaldson–Futaki functional and the continuous optimal destabilizer.
//!
//! `L(f) = ⨍_P f − ⨍_{∂P} f dσ`, `M(g) = C_P·L(g)` with `C_P = vol_σ(∂P)/vol(P)`,
//! and the convexified `F̆(g) = M(g) + ½⨍_P g²`.

use std::collections::BTreeMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus,
};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::{
    boundary_masses, concave_envelope, integrate_boundary, integrate_product, integrate_sq,
    interior_masses, lattice_points, DelzantPolytope, PlFunction,
};
use crate::scalar::{convert, rat, Rational, Scalar};

#[derive(Debug, Clone)]
pub struct ToricFunctionalContext {
    polytope: DelzantPolytope,
    vol: Rational,
    bvol: Rational,
    c_p: Rational,
}

/// Exact minimizer of `F̆` over affine functions.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOptimum {
    pub gradient: Vec<Rational>,
    pub constant: Rational,
    pub value: Rational,
}

impl AffineOptimum {
    pub fn function<S: Scalar>(&self, p: &DelzantPolytope) -> PlFunction<S> {
        PlFunction::affine(p, &convert(&self.gradient), &S::from_rational(&self.constant))
    }
}

#[derive(Debug, Clone)]
pub struct KSolverOptions {
    pub grid_level: i64,
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for KSolverOptions {
    fn default() -> Self {
        Self {
            grid_level: 32,
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KDestabReport {
    pub grid_level: i64,
    pub breve_f: f64,
    pub toric_m: f64,
    /// `⨍ f♭²`.
    pub norm_sq: f64,
    /// `|⨍ f♭² + M(f♭)|`.
    pub normalization_residual: f64,
    pub affine_value: f64,
    /// `F̆(g_aff) − F̆(f♭)`, nonnegative.
    pub affine_gap: f64,
    pub c_p: Rational,
    pub iterations: usize,
    pub converged: bool,
}

impl KDestabReport {
    pub fn to_json(&self) -> Value {
        json!({
            "grid_level": self.grid_level,
            "breve_f": self.breve_f,
            "toric_m": self.toric_m,
            "norm_sq": self.norm_sq,
            "normalization_residual": self.normalization_residual,
            "affine_value": self.affine_value,
            "affine_gap": self.affine_gap,
            "c_p": crate::scalar::format_rational(&self.c_p),
            "c_p_inferred": true,
            "iterations": self.iterations,
            "converged": self.converged,
        })
    }
}

impl ToricFunctionalContext {
    pub fn new(polytope: DelzantPolytope) -> Self {
        let vol = polytope.volume().clone();
        let bvol = polytope.boundary_measure();
        let c_p = &bvol / &vol;
        Self {
            polytope,
            vol,
            bvol,
            c_p,
        }
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        &self.polytope
    }

    pub fn volume(&self) -> &Rational {
        &self.vol
    }

    pub fn boundary_volume(&self) -> &Rational {
        &self.bvol
    }

    /// `C_P = vol_σ(∂P)/vol(P)`.
    pub fn c_p(&self) -> &Rational {
        &self.c_p
    }

    pub fn toric_l<S: Scalar>(&self, f: &PlFunction<S>) -> Result<S> {
        let inner = crate::polytope::mean(&self.polytope, f)?;
        let bd = integrate_boundary(&self.polytope, f)? / S::from_rational(&self.bvol);
        Ok(inner - bd)
    }

    pub fn toric_m<S: Scalar>(&self, g: &PlFunction<S>) -> Result<S> {
        Ok(S::from_rational(&self.c_p) * self.toric_l(g)?)
    }

    /// `⨍_P g²`.
    pub fn mean_sq<S: Scalar>(&self, g: &PlFunction<S>) -> S {
        integrate_sq(g) / S::from_rational(&self.vol)
    }

    pub fn breve_f<S: Scalar>(&self, g: &PlFunction<S>) -> Result<S> {
        Ok(self.toric_m(g)? + self.mean_sq(g) / S::from_i64(2))
    }

    /// Solves the `(n+1)`-dimensional quadratic program over `g = ⟨a, x⟩ + b`
    /// with rational moments of `P` and `∂P`.
    pub fn affine_restricted_minimizer(&self) -> Result<AffineOptimum> {
        let p = &self.polytope;
        let n = p.dim();
        let zero = vec![rat(0, 1); n];
        let coord = |i: usize| -> PlFunction<Rational> {
            let mut a = zero.clone();
            if i < n {
                a[i] = rat(1, 1);
                PlFunction::affine(p, &a, &rat(0, 1))
            } else {
                PlFunction::constant(p, rat(1, 1))
            }
        };
        let basis: Vec<PlFunction<Rational>> = (0..=n).map(coord).collect();
        // F̆(c) = ℓ·c + ½ cᵀQc.
        let mut q = vec![vec![rat(0, 1); n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n {
                q[i][j] = integrate_product(&basis[i], &basis[j])? / &self.vol;
            }
        }
        let ell: Vec<Rational> = basis
            .iter()
            .map(|b| self.toric_m(b))
            .collect::<Result<_>>()?;
        let rhs: Vec<Rational> = ell.iter().map(|x| -x).collect();
        let c = linalg::solve(&q, &rhs).ok_or_else(|| Error::Singular("moment matrix".into()))?;
        let value = ell.iter().zip(&c).map(|(l, x)| l * x).sum::<Rational>() / rat(2, 1);
        Ok(AffineOptimum {
            gradient: c[..n].to_vec(),
            constant: c[n].clone(),
            value,
        })
    }

    /// Minimizes `F̆` over functions that are piecewise affine and concave on
    /// a fixed Delaunay triangulation of the level-`K` grid. On that mesh `F̆`
    /// is an exact convex quadratic in the node values and concavity is one
    /// linear inequality per interior facet.
    pub fn minimize_breve_f(&self, opts: &KSolverOptions) -> Result<(PlFunction<f64>, KDestabReport)> {
        if opts.grid_level <= 0 {
            return Err(Error::InvalidLevel(opts.grid_level));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::ParameterOutOfRange(opts.tol));
        }
        let p = &self.polytope;
        let pts: Vec<Vec<f64>> = lattice_points(p, opts.grid_level)?.points_as();
        let n = pts.len();
        let vol = self.vol.to_f64();
        let bvol = self.bvol.to_f64();
        let c_p = self.c_p.to_f64();

        let bowl: Vec<f64> = pts.iter().map(|u| -u.iter().map(|x| x * x).sum::<f64>()).collect();
        let mesh = concave_envelope(&pts, &bowl)?.function;

        let q: Vec<f64> = interior_masses(&mesh)
            .iter()
            .zip(boundary_masses(p, &mesh))
            .map(|(a, b)| c_p * (a / vol - b / bvol))
            .collect();
        // Consistent mass matrix of ⨍, upper triangle.
        let d1 = (p.dim() + 1) as f64;
        let mut mass: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (s, verts) in mesh.simplices().iter().enumerate() {
            let w = mesh.simplex_volume(s) / (vol * d1 * (d1 + 1.0));
            for &i in verts {
                for &j in verts {
                    if i <= j {
                        *mass.entry((i, j)).or_default() += if i == j { 2.0 * w } else { w };
                    }
                }
            }
        }
        let rows = concavity_rows(&mesh)?;

        let (pi, pj, pv) = triplets(mass.into_iter().map(|((i, j), v)| (i, j, v)));
        let pmat = CscMatrix::new_from_triplets(n, n, pi, pj, pv);
        let (ai, aj, av) = triplets(
            rows.iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().map(move |&(j, v)| (r, j, v))),
        );
        let amat = CscMatrix::new_from_triplets(rows.len(), n, ai, aj, av);
        let b = vec![0.0; rows.len()];
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(opts.max_iter)
            .tol_gap_abs(opts.tol)
            .tol_gap_rel(opts.tol)
            .tol_feas(opts.tol)
            .build()
            .map_err(|e| Error::Singular(format!("solver settings: {e}")))?;
        let cones = [NonnegativeConeT(rows.len())];
        let mut solver = DefaultSolver::new(&pmat, &q, &amat, &b, &cones, settings)
            .map_err(|e| Error::Singular(format!("quadratic program: {e}")))?;
        solver.solve();
        let status = solver.solution.status;
        let converged = matches!(status, SolverStatus::Solved);
        if !converged && !matches!(status, SolverStatus::AlmostSolved | SolverStatus::MaxIterations) {
            return Err(Error::Singular(format!("quadratic program ended with {status:?}")));
        }

        // Round-off leaves the node values concave only up to the tolerance;
        // the envelope restores exact concavity. The exact affine optimum is
        // feasible too and wins when the interior-point solve stops short.
        let aff = self.affine_restricted_minimizer()?;
        let aff_value = aff.value.to_f64();
        let mut best = self.rescaled(concave_envelope(&pts, &solver.solution.x)?.function)?;
        if aff_value < best.3 {
            best = self.rescaled(aff.function(p))?;
        }
        let (f, m, sq, value) = best;
        let report = KDestabReport {
            grid_level: opts.grid_level,
            breve_f: value,
            toric_m: m,
            norm_sq: sq,
            normalization_residual: (sq + m).abs(),
            affine_value: aff_value,
            affine_gap: aff_value - value,
            c_p: self.c_p.clone(),
            iterations: solver.solution.iterations as usize,
            converged,
        };
        Ok((f, report))
    }
}

impl ToricFunctionalContext {
    /// `a*·f` with the best scale `a* = −M/⨍f²` (`Env(a·v) = a·Env(v)`), or
    /// zero when `M(f) ≥ 0`; returns `(f, M, ⨍f², F̆)`.
    fn rescaled(&self, f: PlFunction<f64>) -> Result<(PlFunction<f64>, f64, f64, f64)> {
        let m = self.toric_m(&f)?;
        let sq = self.mean_sq(&f);
        Ok(if m < 0.0 && sq > 0.0 {
            let a = -m / sq;
            (f.scale(&a), a * m, a * a * sq, -0.5 * m * m / sq)
        } else {
            (f.map_values(|_| 0.0, true), 0.0, 0.0, 0.0)
        })
    }
}

fn triplets(it: impl Iterator<Item = (usize, usize, f64)>) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let mut out = (Vec::new(), Vec::new(), Vec::new());
    for (i, j, v) in it {
        out.0.push(i);
        out.1.push(j);
        out.2.push(v);
    }
    out
}

/// For each interior facet shared by simplices `S` and `T`, the row of
/// `v_d − Σ β_j v_{s_j} ≤ 0` where `d` is the vertex of `T` opposite the
/// facet and `β` are its barycentric coordinates in `S`.
fn concavity_rows(mesh: &PlFunction<f64>) -> Result<Vec<Vec<(usize, f64)>>> {
    let pts = mesh.points();
    let dim = pts.first().map_or(0, Vec::len);
    let mut by_facet: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
    for (s, verts) in mesh.simplices().iter().enumerate() {
        for (skip, &opp) in verts.iter().enumerate() {
            let mut facet: Vec<usize> = verts
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &v)| v)
                .collect();
            facet.sort_unstable();
            by_facet.entry(facet).or_default().push((s, opp));
        }
    }
    let mut rows = Vec::new();
    for pair in by_facet.values().filter(|v| v.len() == 2) {
        let (s, _) = pair[0];
        let (_, d) = pair[1];
        let verts = &mesh.simplices()[s];
        let m = DMatrix::from_fn(dim + 1, dim + 1, |r, c| {
            if r < dim { pts[verts[c]][r] } else { 1.0 }
        });
        let rhs = DVector::from_fn(dim + 1, |r, _| if r < dim { pts[d][r] } else { 1.0 });
        let beta = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("degenerate mesh simplex".into()))?;
        let mut row = vec![(d, 1.0)];
        row.extend(verts.iter().zip(beta.iter()).map(|(&v, &b)| (v, -b)));
        rows.push(row);
    }
    Ok(rows)
}
