use std::cmp::Ordering;
use std::collections::HashMap;

use rand::Rng;
use serde_json::{json, Value};

use super::triangulate::{affine_through, barycentric, simplex_volume};
use super::DelzantPolytope;
use crate::error::{Error, Result};
use crate::scalar::{convert, json_vec, vec_from_json, Rational, Scalar};

/// A continuous piecewise-linear function on a triangulated domain, stored
/// by node values so that continuity holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlFunction<S = Rational> {
    points: Vec<Vec<S>>,
    simplices: Vec<Vec<usize>>,
    values: Vec<S>,
    concave: bool,
}

impl<S: Scalar> PlFunction<S> {
    pub fn new(
        points: Vec<Vec<S>>,
        simplices: Vec<Vec<usize>>,
        values: Vec<S>,
        concave: bool,
    ) -> Result<Self> {
        if values.len() != points.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: values.len(),
            });
        }
        let n = points.first().map_or(0, Vec::len);
        if n == 0 || simplices.is_empty() {
            return Err(Error::Empty);
        }
        for s in &simplices {
            if s.len() != n + 1 || s.iter().any(|&i| i >= points.len()) {
                return Err(Error::InvalidPolytope("malformed simplex".into()));
            }
        }
        Ok(Self {
            points,
            simplices,
            values,
            concave,
        })
    }

    /// The affine function `⟨a, x⟩ + b` on the triangulation of `P`.
    pub fn affine(p: &DelzantPolytope, a: &[S], b: &S) -> Self {
        let points: Vec<Vec<S>> = p.vertices().iter().map(|v| convert(v)).collect();
        let values = points
            .iter()
            .map(|x| {
                x.iter()
                    .zip(a)
                    .fold(b.clone(), |acc, (xi, ai)| acc + xi.clone() * ai.clone())
            })
            .collect();
        Self {
            points,
            simplices: p.triangulation().to_vec(),
            values,
            concave: true,
        }
    }

    /// The constant `c` on `P`.
    pub fn constant(p: &DelzantPolytope, c: S) -> Self {
        Self::affine(p, &vec![S::zero(); p.dim()], &c)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }

    /// Same mesh, new node values. The concave flag is dropped unless set again.
    pub fn with_values(&self, values: Vec<S>, concave: bool) -> Result<Self> {
        Self::new(self.points.clone(), self.simplices.clone(), values, concave)
    }

    pub fn map_values(&self, f: impl Fn(&S) -> S, concave: bool) -> Self {
        Self {
            points: self.points.clone(),
            simplices: self.simplices.clone(),
            values: self.values.iter().map(f).collect(),
            concave,
        }
    }

    /// `a·f` for `a ≥ 0` keeps concavity.
    pub fn scale(&self, a: &S) -> Self {
        let keep = self.concave && *a >= S::zero();
        self.map_values(|v| a.clone() * v.clone(), keep)
    }

    pub fn add_constant(&self, c: &S) -> Self {
        self.map_values(|v| v.clone() + c.clone(), self.concave)
    }

    /// Converts coordinates and values to another scalar type.
    pub fn convert<T: Scalar>(&self) -> PlFunction<T> {
        PlFunction {
            points: self.points.iter().map(|p| convert(p)).collect(),
            simplices: self.simplices.clone(),
            values: convert(&self.values),
            concave: self.concave,
        }
    }

    pub fn simplex_points(&self, s: usize) -> Vec<&Vec<S>> {
        self.simplices[s].iter().map(|&i| &self.points[i]).collect()
    }

    pub fn simplex_volume(&self, s: usize) -> S {
        simplex_volume(&self.simplex_points(s))
    }

    /// Total volume of the simplices.
    pub fn domain_volume(&self) -> S {
        (0..self.simplices.len()).fold(S::zero(), |acc, s| acc + self.simplex_volume(s))
    }

    /// `(gradient, constant)` of the affine piece on simplex `s`.
    pub fn affine_piece(&self, s: usize) -> (Vec<S>, S) {
        let h: Vec<S> = self.simplices[s].iter().map(|&i| self.values[i].clone()).collect();
        affine_through(&self.simplex_points(s), &h).expect("nondegenerate simplex")
    }

    pub fn eval(&self, x: &[S]) -> Result<S> {
        for s in 0..self.simplices.len() {
            if let Some(b) = barycentric(&self.simplex_points(s), x) {
                return Ok(self.simplices[s]
                    .iter()
                    .zip(b)
                    .fold(S::zero(), |acc, (&i, c)| acc + c * self.values[i].clone()));
            }
        }
        Err(Error::OutsideDomain(x.iter().map(Scalar::to_f64).collect()))
    }

    /// Checks `f((x+y)/2) ≥ (f(x)+f(y))/2` at random pairs of points drawn
    /// from the simplices.
    pub fn midpoint_concave<R: Rng>(&self, rng: &mut R, samples: usize) -> bool {
        let n = self.dim();
        let draw = |rng: &mut R| -> Vec<S> {
            let s = rng.gen_range(0..self.simplices.len());
            let w: Vec<i64> = (0..=n).map(|_| rng.gen_range(0..64)).collect();
            let tot: i64 = w.iter().sum::<i64>().max(1);
            let pts = self.simplex_points(s);
            (0..n)
                .map(|c| {
                    pts.iter().zip(&w).fold(S::zero(), |acc, (p, &wi)| {
                        acc + p[c].clone() * S::from_ratio(wi, tot)
                    })
                })
                .collect()
        };
        let scale = 1.0 + self.values.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
        for _ in 0..samples {
            let x = draw(rng);
            let y = draw(rng);
            let mid: Vec<S> = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a.clone() + b.clone()) / S::from_i64(2))
                .collect();
            let (Ok(fx), Ok(fy), Ok(fm)) = (self.eval(&x), self.eval(&y), self.eval(&mid)) else {
                return false;
            };
            let gap = fm - (fx + fy) / S::from_i64(2);
            if gap.sign_tol(scale) == Ordering::Less {
                return false;
            }
        }
        true
    }

    /// `{"cells": [{"vertices": [[...]], "values": [...]}], "concave": bool}`.
    pub fn to_json(&self) -> Value {
        let cells: Vec<Value> = self
            .simplices
            .iter()
            .map(|s| {
                json!({
                    "vertices": s.iter().map(|&i| json_vec(&self.points[i])).collect::<Vec<_>>(),
                    "values": s.iter().map(|&i| self.values[i].to_json()).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({"cells": cells, "concave": self.concave})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let cells = v["cells"]
            .as_array()
            .ok_or_else(|| Error::Parse("cells: expected an array".into()))?;
        let mut points: Vec<Vec<S>> = Vec::new();
        let mut values: Vec<S> = Vec::new();
        let mut index: HashMap<Vec<Rational>, usize> = HashMap::new();
        let mut simplices = Vec::new();
        for cell in cells {
            let verts = cell["vertices"]
                .as_array()
                .ok_or_else(|| Error::Parse("cell: missing vertices".into()))?;
            let vals: Vec<S> = vec_from_json(&cell["values"], "cell values")?;
            if vals.len() != verts.len() {
                return Err(Error::LengthMismatch {
                    expected: verts.len(),
                    got: vals.len(),
                });
            }
            let mut simplex = Vec::new();
            for (vert, val) in verts.iter().zip(vals) {
                let x: Vec<S> = vec_from_json(vert, "vertex")?;
                let key: Vec<Rational> = x.iter().map(Scalar::to_rational).collect();
                let id = match index.get(&key) {
                    Some(&id) => {
                        if values[id] != val {
                            return Err(Error::Parse(
                                "cells disagree on a shared vertex (discontinuous)".into(),
                            ));
                        }
                        id
                    }
                    None => {
                        points.push(x);
                        values.push(val);
                        index.insert(key, points.len() - 1);
                        points.len() - 1
                    }
                };
                simplex.push(id);
            }
            simplices.push(simplex);
        }
        let concave = v["concave"].as_bool().unwrap_or(false);
        Self::new(points, simplices, values, concave)
    }
}
