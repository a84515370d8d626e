use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use super::DelzantPolytope;
use crate::error::{Error, Result};
use crate::scalar::{convert, format_rational, parse_rational, rat, Rational, Scalar};

/// `P_k = P ∩ (1/k)ℤⁿ`, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLevel {
    pub k: u32,
    pub points: Vec<Vec<Rational>>,
}

impl LatticeLevel {
    /// `N_k`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Points converted to another scalar type.
    pub fn points_as<S: Scalar>(&self) -> Vec<Vec<S>> {
        self.points.iter().map(|p| convert(p)).collect()
    }

    /// Index of a point given by integer coordinates `k·u`.
    pub fn index_of(&self, scaled: &[i64]) -> Option<usize> {
        let k = self.k as i64;
        let target: Vec<Rational> = scaled.iter().map(|&x| rat(x, k)).collect();
        self.points.binary_search_by(|p| super::triangulate::lex_cmp(p, &target)).ok()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "points": self
                .points
                .iter()
                .map(|p| p.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let k = v["k"]
            .as_u64()
            .ok_or_else(|| Error::Parse("level: missing k".into()))? as u32;
        let points = v["points"]
            .as_array()
            .ok_or_else(|| Error::Parse("level: missing points".into()))?
            .iter()
            .map(|p| {
                p.as_array()
                    .ok_or_else(|| Error::Parse("level: bad point".into()))?
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => parse_rational(s),
                        other => Rational::from_json(other)
                            .ok_or_else(|| Error::Parse(format!("level: bad coordinate {other}"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { k, points })
    }
}

/// Scans the bounding box of `(1/k)ℤⁿ` and keeps the points of `P`.
pub fn lattice_points(p: &DelzantPolytope, k: i64) -> Result<LatticeLevel> {
    if k <= 0 {
        return Err(Error::InvalidLevel(k));
    }
    let n = p.dim();
    let kk = BigInt::from(k);
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for v in p.vertices() {
        for c in 0..n {
            let s = &v[c] * Rational::from_integer(kk.clone());
            lo[c] = lo[c].min(s.floor().to_integer().to_i64().unwrap_or(i64::MIN));
            hi[c] = hi[c].max(s.ceil().to_integer().to_i64().unwrap_or(i64::MAX));
        }
    }
    let mut points = Vec::new();
    let mut cur = lo.clone();
    loop {
        let x: Vec<Rational> = cur.iter().map(|&c| rat(c, k)).collect();
        if p.contains(&x) {
            points.push(x);
        }
        // Odometer with the last coordinate fastest keeps lexicographic order.
        let mut c = n;
        loop {
            if c == 0 {
                return Ok(LatticeLevel { k: k as u32, points });
            }
            c -= 1;
            if cur[c] < hi[c] {
                cur[c] += 1;
                for d in c + 1..n {
                    cur[d] = lo[d];
                }
                break;
            }
        }
    }
}
