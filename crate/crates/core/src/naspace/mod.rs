//! Non-Archimedean norms on a finite-dimensional space.
//!
//! A norm is stored in diagonal form: an identifier for the diagonalizing
//! basis `(s_i)` and one real weight `χ(s_i)` per basis vector. The norm of a
//! vector is the minimum weight over its support, and the filtration is
//! `F^λ = span{s_i : χ(s_i) ≥ λ}`. General filtrations enter through
//! [`FlagNorm`] and are diagonalized with [`common_diagonalization`].
//!
//! Two norms can be compared (relative spectra, `d_p`, relative volume,
//! geodesics) only when they are diagonal in the same basis.

mod flag;

pub use flag::{common_diagonalization, CommonBasis, FlagNorm, FlagStep};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{json_vec, vec_from_json, Scalar};

/// Exponent `p ∈ [1, ∞]` of a Finsler `d_p` metric or `p`-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `((1/N) Σ |x_i|^p)^{1/p}`, or `max |x_i|` for `p = ∞`.
    pub fn mean_norm(self, xs: impl IntoIterator<Item = f64>) -> f64 {
        let xs: Vec<f64> = xs.into_iter().map(f64::abs).collect();
        if xs.is_empty() {
            return 0.0;
        }
        match self {
            Exponent::Infinity => xs.into_iter().fold(0.0, f64::max),
            Exponent::Finite(p) => {
                let n = xs.len() as f64;
                if p == 1.0 {
                    xs.iter().sum::<f64>() / n
                } else if p == 2.0 {
                    (xs.iter().map(|x| x * x).sum::<f64>() / n).sqrt()
                } else {
                    (xs.iter().map(|x| x.powf(p)).sum::<f64>() / n).powf(1.0 / p)
                }
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent {other:?}")))?;
                Exponent::new(p)
            }
        }
    }
}

fn sort_desc<S: Scalar>(v: &mut [S]) {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
}

/// A non-Archimedean norm in diagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct NaNorm<S = f64> {
    basis: String,
    weights: Vec<S>,
}

impl<S: Scalar> NaNorm<S> {
    pub fn new(basis: impl Into<String>, weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self {
            basis: basis.into(),
            weights,
        })
    }

    /// The trivial norm `χ_tr`, all weights zero.
    pub fn trivial(basis: impl Into<String>, dim: usize) -> Self {
        Self {
            basis: basis.into(),
            weights: vec![S::zero(); dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn basis(&self) -> &str {
        &self.basis
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<S> {
        self.weights
    }

    /// Norm of the vector with the given coordinates in the diagonalizing
    /// basis: the smallest weight over the support. `None` for the zero
    /// vector, whose norm is `+∞`.
    pub fn evaluate(&self, coords: &[S]) -> Option<S> {
        coords
            .iter()
            .zip(&self.weights)
            .filter(|(c, _)| !c.is_zero())
            .map(|(_, w)| w.clone())
            .fold(None, |acc: Option<S>, w| match acc {
                Some(a) if a <= w => Some(a),
                _ => Some(w),
            })
    }

    /// `dim F^λ V`.
    pub fn filtration_dim(&self, lambda: &S) -> usize {
        self.weights.iter().filter(|w| *w >= lambda).count()
    }

    /// Jumping numbers `λ_1 ≥ … ≥ λ_N`.
    pub fn jumping_numbers(&self) -> Vec<S> {
        let mut w = self.weights.clone();
        sort_desc(&mut w);
        w
    }

    fn check_same_basis(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(
                self.basis.clone(),
                other.basis.clone(),
            ));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// Relative spectra `λ_1(χ, χ′) ≥ … ≥ λ_N(χ, χ′)`.
    pub fn relative_spectra(&self, other: &Self) -> Result<Vec<S>> {
        self.check_same_basis(other)?;
        let mut d: Vec<S> = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        sort_desc(&mut d);
        Ok(d)
    }

    pub fn dp_distance(&self, other: &Self, p: Exponent) -> Result<f64> {
        let spec = self.relative_spectra(other)?;
        Ok(p.mean_norm(spec.iter().map(Scalar::to_f64)))
    }

    /// `‖χ‖_p = d_p(χ, χ_tr)`.
    pub fn p_norm(&self, p: Exponent) -> f64 {
        p.mean_norm(self.weights.iter().map(Scalar::to_f64))
    }

    /// `‖χ‖_2²` computed without rounding in exact mode.
    pub fn l2_norm_squared(&self) -> S {
        let n = S::from_i64(self.dim() as i64);
        self.weights
            .iter()
            .fold(S::zero(), |acc, w| acc + w.clone() * w.clone())
            / n
    }

    /// `E_V(χ) = (1/N) Σ λ_i(χ)`.
    pub fn volume(&self) -> S {
        let n = S::from_i64(self.dim() as i64);
        self.weights.iter().fold(S::zero(), |acc, w| acc + w.clone()) / n
    }

    /// `E_V(χ, χ′) = (1/N) Σ λ_i(χ, χ′)`.
    pub fn relative_volume(&self, other: &Self) -> Result<S> {
        let spec = self.relative_spectra(other)?;
        let n = S::from_i64(self.dim() as i64);
        Ok(spec.into_iter().fold(S::zero(), |acc, w| acc + w) / n)
    }

    /// Point `χ_s` of the geodesic from `self` (`s = 0`) to `other` (`s = 1`).
    pub fn geodesic(&self, other: &Self, s: &S) -> Result<Self> {
        self.check_same_basis(other)?;
        if *s < S::zero() || *s > S::one() {
            return Err(Error::ParameterOutOfRange(s.to_f64()));
        }
        let t = S::one() - s.clone();
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| t.clone() * a.clone() + s.clone() * b.clone())
            .collect();
        Ok(Self {
            basis: self.basis.clone(),
            weights,
        })
    }

    /// `χ ∧ (χ_tr + c)`: every weight capped at `c`.
    pub fn cap(&self, c: &S) -> Self {
        let weights = self
            .weights
            .iter()
            .map(|w| if w > c { c.clone() } else { w.clone() })
            .collect();
        Self {
            basis: self.basis.clone(),
            weights,
        }
    }

    /// `aχ + b` for `a > 0`.
    pub fn affine(&self, a: &S, b: &S) -> Result<Self> {
        if *a <= S::zero() {
            return Err(Error::NonPositiveScale(a.to_f64()));
        }
        let weights = self
            .weights
            .iter()
            .map(|w| a.clone() * w.clone() + b.clone())
            .collect();
        Ok(Self {
            basis: self.basis.clone(),
            weights,
        })
    }

    /// `{"dim": N, "basis": id, "weights": [...]}`; exact weights are written as `"p/q"`.
    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.dim(),
            "basis": self.basis,
            "weights": json_vec(&self.weights),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let weights: Vec<S> = vec_from_json(&v["weights"], "weights")?;
        if let Some(dim) = v["dim"].as_u64() {
            if dim as usize != weights.len() {
                return Err(Error::LengthMismatch {
                    expected: dim as usize,
                    got: weights.len(),
                });
            }
        }
        let basis = v["basis"].as_str().unwrap_or("canonical").to_string();
        Self::new(basis, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};
    use proptest::prelude::*;

    fn f(w: &[f64]) -> NaNorm<f64> {
        NaNorm::new("e", w.to_vec()).unwrap()
    }

    #[test]
    fn jumping_numbers_sort_descending() {
        assert_eq!(f(&[0., 0., 0.]).jumping_numbers(), vec![0., 0., 0.]);
        assert_eq!(f(&[1., 3., 2.]).jumping_numbers(), vec![3., 2., 1.]);
        assert_eq!(f(&[-1., -1., 4.]).jumping_numbers(), vec![4., -1., -1.]);
    }

    #[test]
    fn relative_spectra_examples() {
        let chi = f(&[2., 0.]);
        let chi2 = f(&[1., 1.]);
        assert_eq!(chi.relative_spectra(&chi2).unwrap(), vec![1., -1.]);
        let tr = NaNorm::trivial("e", 2);
        assert_eq!(
            chi.relative_spectra(&tr).unwrap(),
            chi.jumping_numbers()
        );
        let other = NaNorm::new("other", vec![0., 0.]).unwrap();
        assert!(matches!(
            chi.relative_spectra(&other),
            Err(Error::BasisMismatch(..))
        ));
    }

    #[test]
    fn distances_and_norms() {
        let chi = f(&[1., 0.]);
        let tr = NaNorm::trivial("e", 2);
        assert_eq!(chi.dp_distance(&chi, Exponent::Finite(2.0)).unwrap(), 0.0);
        let d = chi.dp_distance(&tr, Exponent::Finite(2.0)).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        let d = chi.dp_distance(&f(&[0., 1.]), Exponent::Infinity).unwrap();
        assert_eq!(d, 1.0);
        assert!(Exponent::new(0.5).is_err());
        assert_eq!(tr.p_norm(Exponent::Finite(3.0)), 0.0);
        assert!((f(&[1.; 5]).p_norm(Exponent::Finite(3.0)) - 1.0).abs() < 1e-15);
        // ‖χ_s‖_p = δ N^{-1/p} for a single weight δ.
        let delta = 0.7;
        for &p in &[1.0, 2.0, 3.5] {
            let mut w = vec![0.0; 6];
            w[0] = delta;
            let got = f(&w).p_norm(Exponent::Finite(p));
            assert!((got - delta * 6f64.powf(-1.0 / p)).abs() < 1e-14);
        }
    }

    #[test]
    fn volume_examples() {
        assert_eq!(NaNorm::<f64>::trivial("e", 3).volume(), 0.0);
        assert_eq!(f(&[3., -1.]).volume(), 1.0);
        let a: NaNorm<Rational> = NaNorm::new("e", vec![rat(1, 3), rat(2, 1)]).unwrap();
        assert_eq!(a.volume(), rat(7, 6));
    }

    #[test]
    fn geodesic_cap_and_affine() {
        let a = f(&[0., 2.]);
        let b = f(&[2., 0.]);
        assert_eq!(a.geodesic(&b, &0.0).unwrap(), a);
        assert_eq!(a.geodesic(&b, &1.0).unwrap(), b);
        assert_eq!(a.geodesic(&b, &0.5).unwrap().weights(), &[1., 1.]);
        assert!(a.geodesic(&b, &1.5).is_err());
        assert_eq!(f(&[2., 0., -1.]).cap(&1.0).weights(), &[1., 0., -1.]);
        assert_eq!(a.affine(&1.0, &0.0).unwrap(), a);
        assert!(a.affine(&0.0, &1.0).is_err());
    }

    #[test]
    fn json_round_trip_rational_mode() {
        let a: NaNorm<Rational> = NaNorm::new("can", vec![rat(1, 6), rat(-2, 1)]).unwrap();
        let v = a.to_json();
        assert_eq!(v["weights"][0], "1/6");
        assert_eq!(NaNorm::<Rational>::from_json(&v).unwrap(), a);
        let bad = json!({"dim": 3, "basis": "x", "weights": [1, 2]});
        assert!(NaNorm::<f64>::from_json(&bad).is_err());
    }

    fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, n)
    }

    proptest! {
        #[test]
        fn evaluation_is_min_over_support(w in weights(6), c in prop::collection::vec(-2i32..3, 6)) {
            let chi = f(&w);
            let coords: Vec<f64> = c.iter().map(|&x| x as f64).collect();
            let expect = w.iter().zip(&coords).filter(|(_, c)| **c != 0.0).map(|(w, _)| *w)
                .fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.min(x))));
            prop_assert_eq!(chi.evaluate(&coords), expect);
        }

        #[test]
        fn relative_spectra_antisymmetric(a in weights(5), b in weights(5)) {
            let (x, y) = (f(&a), f(&b));
            let mut back = y.relative_spectra(&x).unwrap();
            back.reverse();
            let fwd: Vec<f64> = x.relative_spectra(&y).unwrap().iter().map(|v| -v).collect();
            prop_assert_eq!(fwd, back);
        }

        #[test]
        fn p_norm_homogeneous(w in weights(7), a in 0.01f64..10.0) {
            for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
                let chi = f(&w);
                let scaled = chi.affine(&a, &0.0).unwrap().p_norm(p);
                prop_assert!((scaled - a * chi.p_norm(p)).abs() <= 1e-12 * (1.0 + scaled));
            }
        }

        #[test]
        fn relative_volume_is_difference(a in weights(4), b in weights(4)) {
            let (x, y) = (f(&a), f(&b));
            let lhs = x.relative_volume(&y).unwrap();
            prop_assert!((lhs - (x.volume() - y.volume())).abs() < 1e-12);
        }

        #[test]
        fn geodesic_has_constant_speed(a in weights(5), b in weights(5), s in 0.0f64..1.0) {
            let (x, y) = (f(&a), f(&b));
            let xs = x.geodesic(&y, &s).unwrap();
            for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
                let lhs = xs.dp_distance(&x, p).unwrap();
                let rhs = s * x.dp_distance(&y, p).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
