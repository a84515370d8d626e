//! Delzant lattice polytopes, lattice points, piecewise-linear functions,
//! concave envelopes and exact integration.
//!
//! `P = {x : ⟨x, ν_i⟩ + c_i ≥ 0}` with primitive integer normals `ν_i`.
//! Geometry of `P` itself is exact; functions on `P` are generic over
//! [`Scalar`].

mod envelope;
mod hull;
mod integrate;
mod lattice;
mod plfunction;
pub mod triangulate;

pub use envelope::{concave_envelope, Envelope, EnvelopeFace};
pub use integrate::{
    boundary_masses, integrate, integrate_boundary, integrate_product, integrate_sq,
    interior_masses, l2_distance_sq, mass_times, mean, mean_boundary,
};
pub use lattice::{lattice_points, LatticeLevel};
pub use plfunction::PlFunction;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{format_rational, parse_rational, rat, Rational, Scalar};
use triangulate::{pulling_triangulation, simplex_volume};

/// One inequality `⟨x, ν⟩ + c ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: Rational,
}

impl Facet {
    /// `⟨x, ν⟩ + c`.
    pub fn value<S: Scalar>(&self, x: &[S]) -> S {
        self.normal
            .iter()
            .zip(x)
            .fold(S::from_rational(&self.offset), |acc, (&n, xi)| {
                acc + S::from_i64(n) * xi.clone()
            })
    }
}

/// Per-vertex outcome of the Delzant test.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexCheck {
    pub vertex: Vec<Rational>,
    pub active_facets: Vec<usize>,
    /// Determinant of the active normals when exactly `n` facets meet.
    pub determinant: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelzantCertificate {
    pub is_delzant: bool,
    /// Vertices where fewer or more than `n` facets meet or the normals do
    /// not form a lattice basis.
    pub failures: Vec<VertexCheck>,
}

#[derive(Debug, Clone)]
pub struct DelzantPolytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<Vec<Rational>>,
    simplices: Vec<Vec<usize>>,
    volume: Rational,
    facet_measures: Vec<Rational>,
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn as_rational_rows(normals: &[&Vec<i64>]) -> Vec<Vec<Rational>> {
    normals
        .iter()
        .map(|r| r.iter().map(|&x| rat(x, 1)).collect())
        .collect()
}

/// Lattice measure of an `(n−1)`-simplex lying in a hyperplane with
/// primitive normal `ν`: `|det[ν; w_1 − w_0; …]| / ((n−1)! |ν|²)`.
pub fn facet_simplex_measure<S: Scalar>(normal: &[i64], face: &[&Vec<S>]) -> S {
    let n = normal.len();
    let mut rows: Vec<Vec<S>> = vec![normal.iter().map(|&x| S::from_i64(x)).collect()];
    for w in &face[1..] {
        rows.push(
            w.iter()
                .zip(face[0].iter())
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        );
    }
    let d = linalg::det(&rows).abs_val();
    let fact: i64 = (1..n as i64).product();
    let norm2: i64 = normal.iter().map(|x| x * x).sum();
    d / S::from_i64(fact * norm2)
}

impl DelzantPolytope {
    pub fn new(normals: Vec<Vec<i64>>, offsets: Vec<Rational>) -> Result<Self> {
        let n = normals.first().map_or(0, Vec::len);
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if normals.len() != offsets.len() {
            return Err(Error::LengthMismatch {
                expected: normals.len(),
                got: offsets.len(),
            });
        }
        for nu in &normals {
            if nu.len() != n {
                return Err(Error::InvalidPolytope("normals of different lengths".into()));
            }
            let g = nu.iter().fold(0i64, |g, &x| g.gcd(&x));
            if g != 1 {
                return Err(Error::InvalidPolytope(format!("normal {nu:?} is not primitive")));
            }
        }
        let facets: Vec<Facet> = normals
            .into_iter()
            .zip(offsets)
            .map(|(normal, offset)| Facet { normal, offset })
            .collect();

        let all: Vec<&Vec<i64>> = facets.iter().map(|f| &f.normal).collect();
        if linalg::rank(&as_rational_rows(&all)) < n {
            // The normals miss a direction, so P contains a line (or is empty).
            return Err(Error::Unbounded);
        }

        let mut vertices: Vec<Vec<Rational>> = Vec::new();
        for s in subsets(facets.len(), n) {
            let rows = as_rational_rows(&s.iter().map(|&i| &facets[i].normal).collect::<Vec<_>>());
            let rhs: Vec<Rational> = s.iter().map(|&i| -facets[i].offset.clone()).collect();
            let Some(x) = linalg::solve(&rows, &rhs) else {
                continue;
            };
            if facets.iter().all(|f| !f.value(&x).is_negative()) && !vertices.contains(&x) {
                vertices.push(x);
            }
        }
        if vertices.is_empty() {
            return Err(Error::Empty);
        }

        // Bounded iff no extreme ray of the recession cone {d : ⟨d, ν_i⟩ ≥ 0}.
        for s in subsets(facets.len(), n - 1) {
            let rows = as_rational_rows(&s.iter().map(|&i| &facets[i].normal).collect::<Vec<_>>());
            let ker = if rows.is_empty() {
                vec![vec![rat(1, 1)]]
            } else {
                linalg::nullspace(&rows, n)
            };
            if ker.len() != 1 {
                continue;
            }
            for sign in [1, -1] {
                let d: Vec<Rational> = ker[0].iter().map(|x| x * rat(sign, 1)).collect();
                let ok = facets.iter().all(|f| {
                    let v: Rational = f
                        .normal
                        .iter()
                        .zip(&d)
                        .map(|(&a, b)| rat(a, 1) * b)
                        .sum();
                    !v.is_negative()
                });
                if ok {
                    return Err(Error::Unbounded);
                }
            }
        }

        vertices.sort_by(|a, b| triangulate::lex_cmp(a, b));
        let idx: Vec<usize> = (0..vertices.len()).collect();
        let simplices = pulling_triangulation(&vertices, &idx).map_err(|_| Error::Empty)?;
        let volume: Rational = simplices
            .iter()
            .map(|s| simplex_volume(&s.iter().map(|&i| &vertices[i]).collect::<Vec<_>>()))
            .sum();
        if volume.is_zero() {
            return Err(Error::Empty);
        }
        let mut p = Self {
            dim: n,
            facets,
            vertices,
            simplices,
            volume,
            facet_measures: Vec::new(),
        };
        let mut fm = vec![Rational::zero(); p.facets.len()];
        for s in &p.simplices {
            for (facet, face) in p.boundary_faces(&p.vertices, s) {
                let pts: Vec<&Vec<Rational>> = face.iter().map(|&i| &p.vertices[i]).collect();
                fm[facet] += facet_simplex_measure(&p.facets[facet].normal, &pts);
            }
        }
        p.facet_measures = fm;
        Ok(p)
    }

    /// Faces of the simplex `s` (node indices into `points`) that lie on a
    /// facet of `P`, with that facet's index.
    pub fn boundary_faces<S: Scalar>(&self, points: &[Vec<S>], s: &[usize]) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for skip in 0..s.len() {
            let face: Vec<usize> = s
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, &v)| v)
                .collect();
            if let Some(f) = self.facets.iter().position(|f| {
                face.iter().all(|&v| {
                    let val = f.value(&points[v]);
                    let scale = 1.0 + points[v].iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
                    val.is_zero_tol(scale)
                })
            }) {
                out.push((f, face));
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    /// Pulling triangulation of `P` on its vertices.
    pub fn triangulation(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn volume(&self) -> &Rational {
        &self.volume
    }

    /// `vol_σ` of each facet.
    pub fn facet_measures(&self) -> &[Rational] {
        &self.facet_measures
    }

    /// `vol_σ(∂P)`.
    pub fn boundary_measure(&self) -> Rational {
        self.facet_measures.iter().sum()
    }

    pub fn contains<S: Scalar>(&self, x: &[S]) -> bool {
        self.facets.iter().all(|f| {
            let scale = 1.0 + x.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
            f.value(x).sign_tol(scale) != std::cmp::Ordering::Less
        })
    }

    pub fn validate_delzant(&self) -> DelzantCertificate {
        let n = self.dim;
        let mut failures = Vec::new();
        for v in &self.vertices {
            let active: Vec<usize> = (0..self.facets.len())
                .filter(|&i| self.facets[i].value(v).is_zero())
                .collect();
            let determinant = if active.len() == n {
                let rows = as_rational_rows(
                    &active.iter().map(|&i| &self.facets[i].normal).collect::<Vec<_>>(),
                );
                linalg::det(&rows).to_integer().try_into().ok()
            } else {
                None
            };
            if determinant.map_or(true, |d: i64| d.abs() != 1) {
                failures.push(VertexCheck {
                    vertex: v.clone(),
                    active_facets: active,
                    determinant,
                });
            }
        }
        DelzantCertificate {
            is_delzant: failures.is_empty(),
            failures,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.dim,
            "normals": self.facets.iter().map(|f| f.normal.clone()).collect::<Vec<_>>(),
            "offsets": self.facets.iter().map(|f| format_rational(&f.offset)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let normals: Vec<Vec<i64>> = serde_json::from_value(v["normals"].clone())
            .map_err(|e| Error::Parse(format!("normals: {e}")))?;
        let offsets = v["offsets"]
            .as_array()
            .ok_or_else(|| Error::Parse("offsets: expected an array".into()))?
            .iter()
            .map(|x| match x {
                Value::String(s) => parse_rational(s),
                other => Rational::from_json(other)
                    .ok_or_else(|| Error::Parse(format!("offsets: bad number {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(d) = v["dim"].as_u64() {
            if normals.iter().any(|nu| nu.len() != d as usize) {
                return Err(Error::Parse("normals do not match dim".into()));
            }
        }
        Self::new(normals, offsets)
    }

    /// `[0, 1]`.
    pub fn interval() -> Self {
        Self::new(vec![vec![1], vec![-1]], vec![rat(0, 1), rat(1, 1)]).unwrap()
    }

    /// `[0, 1]²`.
    pub fn unit_square() -> Self {
        Self::new(
            vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
            vec![rat(0, 1), rat(1, 1), rat(0, 1), rat(1, 1)],
        )
        .unwrap()
    }

    /// `{x ≥ 0, y ≥ 0, 1 ≤ x + y ≤ 2}`, the moment polytope of `ℂP²` blown up
    /// at a point.
    pub fn trapezoid() -> Self {
        Self::new(
            vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![1, 1]],
            vec![rat(0, 1), rat(0, 1), rat(2, 1), rat(-1, 1)],
        )
        .unwrap()
    }

    /// `[0, 1]³`.
    pub fn unit_cube() -> Self {
        Self::new(
            vec![
                vec![1, 0, 0],
                vec![-1, 0, 0],
                vec![0, 1, 0],
                vec![0, -1, 0],
                vec![0, 0, 1],
                vec![0, 0, -1],
            ],
            vec![rat(0, 1), rat(1, 1), rat(0, 1), rat(1, 1), rat(0, 1), rat(1, 1)],
        )
        .unwrap()
    }
}
