use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde_json::{json, Value};

use super::NaNorm;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// One step `F_i` of a flag together with its jump `λ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagStep<S> {
    /// Spanning vectors of `F_i` in canonical coordinates.
    pub span: Vec<Vec<Rational>>,
    pub jump: S,
}

/// A norm given by a flag `0 ⊊ F_1 ⊊ … ⊊ F_m = V` with strictly decreasing
/// jumps, `F^λ = F_i` for `λ_{i+1} < λ ≤ λ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagNorm<S = Rational> {
    dim: usize,
    steps: Vec<FlagStep<S>>,
    ranks: Vec<usize>,
}

fn basis_of(rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut m = rows.to_vec();
    let piv = linalg::rref(&mut m);
    m.truncate(piv.len());
    m
}

fn sum(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut rows = a.to_vec();
    rows.extend_from_slice(b);
    basis_of(&rows)
}

fn intersection(a: &[Vec<Rational>], b: &[Vec<Rational>], dim: usize) -> Vec<Vec<Rational>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let (a, b) = (basis_of(a), basis_of(b));
    // Σ α_i a_i − Σ β_j b_j = 0, one row per coordinate.
    let cols = a.len() + b.len();
    let rows: Vec<Vec<Rational>> = (0..dim)
        .map(|c| {
            a.iter()
                .map(|v| v[c].clone())
                .chain(b.iter().map(|v| -v[c].clone()))
                .collect()
        })
        .collect();
    let kernel = linalg::nullspace(&rows, cols);
    let vecs: Vec<Vec<Rational>> = kernel
        .iter()
        .map(|k| {
            (0..dim)
                .map(|c| {
                    a.iter()
                        .zip(k)
                        .map(|(v, x)| &v[c] * x)
                        .sum::<Rational>()
                })
                .collect()
        })
        .collect();
    basis_of(&vecs)
}

impl<S: Scalar> FlagNorm<S> {
    pub fn new(dim: usize, steps: Vec<FlagStep<S>>) -> Result<Self> {
        if dim == 0 || steps.is_empty() {
            return Err(Error::InvalidFlag("empty flag".into()));
        }
        let mut ranks = Vec::with_capacity(steps.len());
        let mut prev: Vec<Vec<Rational>> = Vec::new();
        for (i, st) in steps.iter().enumerate() {
            if st.span.iter().any(|v| v.len() != dim) {
                return Err(Error::InvalidFlag(format!(
                    "step {} has a vector of the wrong length",
                    i + 1
                )));
            }
            let r = linalg::rank(&st.span);
            let last = ranks.last().copied().unwrap_or(0);
            if r <= last {
                return Err(Error::InvalidFlag(format!(
                    "step {} does not increase the dimension",
                    i + 1
                )));
            }
            if linalg::rank(&sum(&prev, &st.span)) != r {
                return Err(Error::InvalidFlag(format!(
                    "step {} does not contain step {}",
                    i + 1,
                    i
                )));
            }
            if i > 0 && st.jump >= steps[i - 1].jump {
                return Err(Error::InvalidFlag("jumps must strictly decrease".into()));
            }
            ranks.push(r);
            prev = st.span.clone();
        }
        if *ranks.last().unwrap() != dim {
            return Err(Error::InvalidFlag("last step must be the whole space".into()));
        }
        Ok(Self { dim, steps, ranks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &[FlagStep<S>] {
        &self.steps
    }

    /// `dim F_i` for each step.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// `χ(v) = max{λ_i : v ∈ F_i}`; `None` for `v = 0`.
    pub fn evaluate(&self, v: &[Rational]) -> Option<S> {
        if v.iter().all(|x| x == &Rational::from_i64(0)) {
            return None;
        }
        self.steps
            .iter()
            .find(|st| linalg::in_span(&st.span, v))
            .map(|st| st.jump.clone())
    }

    /// Jumping numbers with multiplicity `dim F_i − dim F_{i−1}`.
    pub fn jumping_numbers(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.dim);
        let mut last = 0;
        for (st, &r) in self.steps.iter().zip(&self.ranks) {
            out.extend(std::iter::repeat(st.jump.clone()).take(r - last));
            last = r;
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.dim,
            "flag": self.steps.iter().map(|st| json!({
                "span": st.span.iter()
                    .map(|v| v.iter().map(format_rational).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "jump": st.jump.to_json(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let dim = v["dim"]
            .as_u64()
            .ok_or_else(|| Error::Parse("flag: missing dim".into()))? as usize;
        let steps = v["flag"]
            .as_array()
            .ok_or_else(|| Error::Parse("flag: missing steps".into()))?
            .iter()
            .map(|st| {
                let jump = S::from_json(&st["jump"])
                    .ok_or_else(|| Error::Parse("flag: bad jump".into()))?;
                let span = st["span"]
                    .as_array()
                    .ok_or_else(|| Error::Parse("flag: bad span".into()))?
                    .iter()
                    .map(|vec| {
                        vec.as_array()
                            .ok_or_else(|| Error::Parse("flag: bad vector".into()))?
                            .iter()
                            .map(|x| match x {
                                Value::String(s) => parse_rational(s),
                                other => Rational::from_json(other)
                                    .ok_or_else(|| Error::Parse(format!("flag: bad entry {other}"))),
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FlagStep { span, jump })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, steps)
    }
}

/// A basis diagonalizing two flag norms at once, with both norms expressed
/// in it.
#[derive(Debug, Clone)]
pub struct CommonBasis<S> {
    pub basis: Vec<Vec<Rational>>,
    pub first: NaNorm<S>,
    pub second: NaNorm<S>,
}

/// Finds a basis adapted to both flags.
///
/// For every pair of steps `(i, j)` a complement of
/// `F_{i−1} ∩ F′_j + F_i ∩ F′_{j−1}` inside `F_i ∩ F′_j` is added with weights
/// `(λ_i, λ′_j)`. The result is checked: each `F_i` (and `F′_j`) must be
/// spanned by the basis vectors of weight at least `λ_i` (resp. `λ′_j`).
pub fn common_diagonalization<S: Scalar>(a: &FlagNorm<S>, b: &FlagNorm<S>) -> Result<CommonBasis<S>> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let n = a.dim;
    let fa: Vec<Vec<Vec<Rational>>> = a.steps.iter().map(|s| basis_of(&s.span)).collect();
    let fb: Vec<Vec<Vec<Rational>>> = b.steps.iter().map(|s| basis_of(&s.span)).collect();
    let empty: Vec<Vec<Rational>> = Vec::new();

    let mut basis: Vec<Vec<Rational>> = Vec::with_capacity(n);
    let mut wa = Vec::with_capacity(n);
    let mut wb = Vec::with_capacity(n);
    for i in 0..fa.len() {
        for j in 0..fb.len() {
            let cell = intersection(&fa[i], &fb[j], n);
            if cell.is_empty() {
                continue;
            }
            let lower_a = if i > 0 {
                intersection(&fa[i - 1], &fb[j], n)
            } else {
                empty.clone()
            };
            let lower_b = if j > 0 {
                intersection(&fa[i], &fb[j - 1], n)
            } else {
                empty.clone()
            };
            let mut acc = sum(&lower_a, &lower_b);
            for v in cell {
                if !linalg::in_span(&acc, &v) {
                    acc.push(v.clone());
                    basis.push(v);
                    wa.push(a.steps[i].jump.clone());
                    wb.push(b.steps[j].jump.clone());
                }
            }
        }
    }
    if basis.len() != n || linalg::rank(&basis) != n {
        return Err(Error::InvalidFlag(format!(
            "common diagonalization produced {} vectors for dimension {n}",
            basis.len()
        )));
    }
    certify(&basis, &wa, a)?;
    certify(&basis, &wb, b)?;

    let mut h = DefaultHasher::new();
    for v in &basis {
        for x in v {
            format_rational(x).hash(&mut h);
        }
    }
    let id = format!("common-{:016x}", h.finish());
    Ok(CommonBasis {
        basis,
        first: NaNorm::new(id.clone(), wa)?,
        second: NaNorm::new(id, wb)?,
    })
}

fn certify<S: Scalar>(basis: &[Vec<Rational>], w: &[S], flag: &FlagNorm<S>) -> Result<()> {
    for (st, &r) in flag.steps.iter().zip(&flag.ranks) {
        let sel: Vec<Vec<Rational>> = basis
            .iter()
            .zip(w)
            .filter(|(_, x)| **x >= st.jump)
            .map(|(v, _)| v.clone())
            .collect();
        if sel.len() != r || linalg::rank(&sel) != r || linalg::rank(&sum(&sel, &st.span)) != r {
            return Err(Error::InvalidFlag(
                "basis does not diagonalize the flag".into(),
            ));
        }
    }
    Ok(())
}
