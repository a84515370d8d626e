//! Toric Chow weights at level `k`: the maps between weight vectors on
//! `P_k` and concave functions on `P`, the functional `M_k`, its convexified
//! form `M̆_k`, and the maximal destabilizer.

mod solver;

pub use solver::{minimize_breve, DestabilizerReport, Method, SolverOptions};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::naspace::{Exponent, NaNorm};
use crate::polytope::{
    concave_envelope, integrate, interior_masses, lattice_points, DelzantPolytope, Envelope,
    LatticeLevel, PlFunction,
};
use crate::scalar::{json_vec, rat, vec_from_json, Rational, Scalar};

/// Weights `λ_u`, one per point of `P_k` in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<S = f64> {
    pub level: LatticeLevel,
    pub weights: Vec<S>,
}

impl<S: Scalar> WeightVector<S> {
    pub fn new(level: LatticeLevel, weights: Vec<S>) -> Result<Self> {
        if weights.len() != level.len() {
            return Err(Error::LengthMismatch {
                expected: level.len(),
                got: weights.len(),
            });
        }
        Ok(Self { level, weights })
    }

    pub fn k(&self) -> u32 {
        self.level.k
    }

    /// The diagonal norm with `χ(s_u) = λ_u` in the monomial basis of level `k`.
    pub fn to_na_norm(&self) -> NaNorm<S> {
        NaNorm::new(format!("toric-monomials-k{}", self.level.k), self.weights.clone())
            .expect("nonempty level")
    }

    /// `{"k": 4, "points": [["p/q", ...]], "weights": [...]}`.
    pub fn to_json(&self) -> Value {
        let mut v = self.level.to_json();
        v["weights"] = json_vec(&self.weights);
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let level = LatticeLevel::from_json(v)?;
        let weights = vec_from_json(&v["weights"], "weights")?;
        Self::new(level, weights)
    }
}

/// A polytope together with one level `k` of lattice points.
#[derive(Debug, Clone)]
pub struct ChowProblem<S = f64> {
    polytope: DelzantPolytope,
    level: LatticeLevel,
    points: Vec<Vec<S>>,
    volume: S,
}

impl<S: Scalar> ChowProblem<S> {
    /// Requires the vertices of `P` to lie in `(1/k)ℤⁿ`.
    pub fn new(polytope: DelzantPolytope, k: i64) -> Result<Self> {
        if k <= 0 {
            return Err(Error::InvalidLevel(k));
        }
        let kq = rat(k, 1);
        let covered = polytope
            .vertices()
            .iter()
            .all(|v| v.iter().all(|x| (x * &kq).is_integer()));
        if !covered {
            return Err(Error::LevelDoesNotCoverPolytope { k: k as u32 });
        }
        let level = lattice_points(&polytope, k)?;
        let points = level.points_as();
        let volume = S::from_rational(polytope.volume());
        Ok(Self {
            polytope,
            level,
            points,
            volume,
        })
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        &self.polytope
    }

    pub fn level(&self) -> &LatticeLevel {
        &self.level
    }

    pub fn k(&self) -> u32 {
        self.level.k
    }

    /// `N_k`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    fn k_s(&self) -> S {
        S::from_i64(self.level.k as i64)
    }

    fn n_s(&self) -> S {
        S::from_i64(self.len() as i64)
    }

    fn check(&self, lambda: &[S]) -> Result<()> {
        if lambda.len() == self.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len(),
                got: lambda.len(),
            })
        }
    }

    pub fn weight_vector(&self, weights: Vec<S>) -> Result<WeightVector<S>> {
        WeightVector::new(self.level.clone(), weights)
    }

    /// Concave envelope of `u ↦ λ_u` at level `k` (no rescaling).
    pub fn envelope(&self, lambda: &[S]) -> Result<Envelope<S>> {
        self.check(lambda)?;
        concave_envelope(&self.points, lambda)
    }

    /// `FS_k(λ) = Env(λ)/k`.
    pub fn fs_k(&self, lambda: &[S]) -> Result<PlFunction<S>> {
        let k = self.k_s();
        Ok(self
            .envelope(lambda)?
            .function
            .map_values(|v| v.clone() / k.clone(), true))
    }

    /// `SN_k(g)_u = k·g(u)`; `g` must be flagged concave.
    pub fn sn_k(&self, g: &PlFunction<S>) -> Result<Vec<S>> {
        if !g.is_concave() {
            return Err(Error::NotConcave);
        }
        let k = self.k_s();
        if g.points() == self.points.as_slice() {
            return Ok(g.values().iter().map(|v| k.clone() * v.clone()).collect());
        }
        self.points
            .iter()
            .map(|u| Ok(k.clone() * g.eval(u)?))
            .collect()
    }

    /// `M_k(λ) = ⨍_P Env(λ) − (1/N_k) Σ λ_u`.
    pub fn chow_weight(&self, lambda: &[S]) -> Result<S> {
        let env = self.envelope(lambda)?;
        Ok(integrate(&env.function) / self.volume.clone() - mean(lambda))
    }

    /// `M̆_k(λ) = 2M_k(λ) + ‖λ‖₂²/(2k²)`.
    pub fn breve_m(&self, lambda: &[S]) -> Result<S> {
        let m = self.chow_weight(lambda)?;
        let k = self.k_s();
        Ok(S::from_i64(2) * m + mean_sq(lambda) / (S::from_i64(2) * k.clone() * k))
    }

    /// `M_k(λ)/‖λ‖_p`.
    pub fn normalized_chow(&self, lambda: &[S], p: Exponent) -> Result<f64> {
        let norm = p.mean_norm(lambda.iter().map(Scalar::to_f64));
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.chow_weight(lambda)?.to_f64() / norm)
    }

    /// Gradient of the active linearization of `M̆_k` at `λ`:
    /// `2[m_u/vol(P) − 1/N_k] + λ_u/(k² N_k)` with `m_u` the envelope masses.
    pub fn subgradient_breve(&self, lambda: &[S]) -> Result<Vec<S>> {
        let w = self.envelope_weights(lambda)?;
        let n = self.n_s();
        let k = self.k_s();
        let two = S::from_i64(2);
        Ok(w
            .into_iter()
            .zip(lambda)
            .map(|(wu, l)| {
                two.clone() * (wu - S::one() / n.clone())
                    + l.clone() / (k.clone() * k.clone() * n.clone())
            })
            .collect())
    }

    /// Probability vector `m_u/vol(P)` of the envelope's barycentric masses.
    pub fn envelope_weights(&self, lambda: &[S]) -> Result<Vec<S>> {
        let env = self.envelope(lambda)?;
        Ok(interior_masses(&env.function)
            .into_iter()
            .map(|m| m / self.volume.clone())
            .collect())
    }
}

impl ChowProblem<Rational> {
    /// Float twin of an exact problem.
    pub fn to_float(&self) -> ChowProblem<f64> {
        ChowProblem {
            polytope: self.polytope.clone(),
            level: self.level.clone(),
            points: self.level.points_as(),
            volume: self.volume.to_f64(),
        }
    }
}

fn mean<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |a, x| a + x.clone()) / S::from_i64(v.len() as i64)
}

fn mean_sq<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |a, x| a + x.clone() * x.clone()) / S::from_i64(v.len() as i64)
}

/// Report of the functionals at one weight vector.
pub fn evaluation_json<S: Scalar>(problem: &ChowProblem<S>, lambda: &[S]) -> Result<Value> {
    let m = problem.chow_weight(lambda)?;
    let b = problem.breve_m(lambda)?;
    let norm2 = Exponent::Finite(2.0).mean_norm(lambda.iter().map(Scalar::to_f64));
    Ok(json!({
        "k": problem.k(),
        "n_points": problem.len(),
        "chow_weight": m.to_json(),
        "breve_m": b.to_json(),
        "norm2": norm2,
        "normalized_chow": if norm2 > 0.0 { json!(m.to_f64() / norm2) } else { Value::Null },
    }))
}

#[cfg(test)]
mod tests;
