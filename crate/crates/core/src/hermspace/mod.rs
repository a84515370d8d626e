//! The space of Hermitian norms on `ℂ^N`.
//!
//! A norm is stored by its Gram matrix `G`, with `H(x, y) = y* G x`. With this
//! convention the ray `H_t(x, y) = H_0(e^{tA} x, y)` has Gram matrix
//! `G_0 e^{tA}`, and `A` is `H_0`-self-adjoint exactly when `G_0 A` is
//! Hermitian.

mod graded;

pub use graded::graded_log_singular_values;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::naspace::{Exponent, NaNorm};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const SELF_ADJOINT_TOL: f64 = 1e-9;

fn hermitian_residual(m: &CMatrix) -> f64 {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    (m - m.adjoint()).norm() / scale
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition sorted by decreasing eigenvalue.
fn sorted_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// A positive-definite Hermitian Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermNorm {
    gram: CMatrix,
}

impl HermNorm {
    pub fn new(gram: CMatrix) -> Result<Self> {
        if !gram.is_square() || gram.nrows() == 0 {
            return Err(Error::NotPositiveDefinite("matrix is not square".into()));
        }
        let r = hermitian_residual(&gram);
        if r > HERMITIAN_TOL {
            return Err(Error::NotPositiveDefinite(format!(
                "not Hermitian (residual {r:e})"
            )));
        }
        let gram = symmetrize(&gram);
        // Complex Cholesky in nalgebra takes square roots of negative pivots
        // without failing, so positivity is checked on the spectrum.
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let top = eig.iter().cloned().fold(0.0, f64::max);
        let low = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(low > f64::EPSILON * top) {
            return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {low:e}")));
        }
        Ok(Self { gram })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            gram: CMatrix::identity(n, n),
        }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// `H(x, y) = y* G x`.
    pub fn inner(&self, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
        y.dotc(&(&self.gram * x))
    }

    /// `H(x) = H(x, x)^{1/2}`.
    pub fn norm_of(&self, x: &DVector<Complex64>) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    fn cholesky_l(&self) -> CMatrix {
        Cholesky::new(self.gram.clone())
            .expect("validated at construction")
            .l()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// Solves the pencil `(other, self)`: returns `μ_i` (descending) with
    /// `e^{μ_i}` the eigenvalues of `G_self^{-1} G_other`, the unitary `U`, and
    /// the Cholesky factor `L` of `G_self`, so that
    /// `L^{-1} G_other L^{-*} = U diag(e^μ) U*`.
    fn pencil(&self, other: &Self) -> Result<(Vec<f64>, CMatrix, CMatrix)> {
        self.check_dim(other)?;
        let l = self.cholesky_l();
        let y = l
            .solve_lower_triangular(&other.gram)
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        let c = l
            .solve_lower_triangular(&y.adjoint())
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        let (vals, u) = sorted_eigen(&c);
        if vals.iter().any(|&v| v <= 0.0) {
            return Err(Error::NotPositiveDefinite("pencil has a non-positive eigenvalue".into()));
        }
        Ok((vals.into_iter().map(f64::ln).collect(), u, l))
    }

    /// Log-eigenvalues `μ_i` of `H_1 H_0^{-1}` with `self = H_0`, `other = H_1`.
    pub fn log_spectrum(&self, other: &Self) -> Result<Vec<f64>> {
        Ok(self.pencil(other)?.0)
    }

    pub fn dp_distance(&self, other: &Self, p: Exponent) -> Result<f64> {
        Ok(p.mean_norm(self.log_spectrum(other)?))
    }

    pub fn to_json(&self) -> Value {
        let (re, im) = split(&self.gram);
        json!({"dim": self.dim(), "re": re, "im": im})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let g = join(&v["re"], &v["im"], "gram")?;
        if let Some(d) = v["dim"].as_u64() {
            if d as usize != g.nrows() {
                return Err(Error::LengthMismatch {
                    expected: d as usize,
                    got: g.nrows(),
                });
            }
        }
        Self::new(g)
    }
}

fn split(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |f: fn(&Complex64) -> f64| {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    (rows(|c| c.re), rows(|c| c.im))
}

fn join(re: &Value, im: &Value, what: &str) -> Result<CMatrix> {
    let parse = |v: &Value| -> Result<Vec<Vec<f64>>> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("{what}: {e}")))
    };
    let re = parse(re)?;
    let im = if im.is_null() {
        re.iter().map(|r| vec![0.0; r.len()]).collect()
    } else {
        parse(im)?
    };
    let n = re.len();
    if n == 0 || re.iter().chain(&im).any(|r| r.len() != n) || im.len() != n {
        return Err(Error::Parse(format!("{what}: expected square matrices of equal size")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(re[i][j], im[i][j])))
}

/// `E(H_1, H_0) = −(1/N) log(det H_1 / det H_0)`.
pub fn relative_volume(h1: &HermNorm, h0: &HermNorm) -> Result<f64> {
    let mu = h0.log_spectrum(h1)?;
    Ok(-mu.iter().sum::<f64>() / mu.len() as f64)
}

/// Sign in `H_t = H_0(e^{±tA}·, ·)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Plus => 1.0,
            Orientation::Minus => -1.0,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Plus => "+",
            Orientation::Minus => "\u{2212}",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Orientation::Plus),
            "-" | "\u{2212}" | "minus" => Ok(Orientation::Minus),
            other => Err(Error::Parse(format!("bad orientation {other:?}"))),
        }
    }
}

/// A geodesic ray `t ↦ H_t` with `H_t(x, y) = H_0(e^{±tA} x, y)`.
#[derive(Debug, Clone)]
pub struct HermGeodesicRay {
    start: HermNorm,
    generator: CMatrix,
    orientation: Orientation,
    /// Eigenvalues of `A`, descending.
    lambda: Vec<f64>,
    /// `F = L W`, so that `G_t = F e^{±tΛ} F*`.
    frame: CMatrix,
    /// `H_0`-orthonormal eigenvectors `L^{-*} W` as columns.
    eigvecs: CMatrix,
}

impl HermGeodesicRay {
    pub fn new(start: HermNorm, generator: CMatrix, orientation: Orientation) -> Result<Self> {
        let n = start.dim();
        if generator.nrows() != n || generator.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: generator.nrows(),
            });
        }
        let ga = start.gram() * &generator;
        let res = if ga.norm() == 0.0 { 0.0 } else { hermitian_residual(&ga) };
        if res > SELF_ADJOINT_TOL {
            return Err(Error::NotSelfAdjoint(res));
        }
        let l = start.cholesky_l();
        // B = L^{-1} (G_0 A) L^{-*} is Hermitian and similar to A.
        let y = l
            .solve_lower_triangular(&ga)
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        let b = l
            .solve_lower_triangular(&y.adjoint())
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?
            .adjoint();
        let (lambda, w) = sorted_eigen(&b);
        let frame = &l * &w;
        let eigvecs = l
            .adjoint()
            .solve_upper_triangular(&w)
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        Ok(Self {
            start,
            generator,
            orientation,
            lambda,
            frame,
            eigvecs,
        })
    }

    pub fn start(&self) -> &HermNorm {
        &self.start
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn dim(&self) -> usize {
        self.start.dim()
    }

    /// Eigenvalues of the generator, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    /// `H_0`-orthonormal eigenvectors of the generator, as columns.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigvecs
    }

    /// Log-scales `±tλ_i` of the ray at time `t`.
    fn exponents(&self, t: f64) -> Vec<f64> {
        let s = self.orientation.sign();
        self.lambda.iter().map(|l| s * t * l).collect()
    }

    /// `H_t`.
    pub fn value(&self, t: f64) -> Result<HermNorm> {
        let e = self.exponents(t);
        let mut fd = self.frame.clone();
        for (j, ej) in e.iter().enumerate() {
            let s = Complex64::new(ej.exp(), 0.0);
            for r in 0..fd.nrows() {
                fd[(r, j)] *= s;
            }
        }
        HermNorm::new(symmetrize(&(fd * self.frame.adjoint())))
    }

    /// `log H_t(x)²`, summed in log space over the eigen-frame so that no
    /// cancellation occurs for large `t`.
    pub fn log_norm_sq(&self, t: f64, x: &DVector<Complex64>) -> f64 {
        let coeffs = self.frame.adjoint() * x;
        let terms: Vec<f64> = self
            .exponents(t)
            .iter()
            .zip(coeffs.iter())
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(e, c)| e + 2.0 * c.norm().ln())
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
    }

    /// The NA norm `χ(s_i) = lim −(1/t) log H_t(s_i)²` on the eigenbasis.
    pub fn na_limit(&self) -> NaLimit {
        let s = -self.orientation.sign();
        let weights: Vec<f64> = self.lambda.iter().map(|l| s * l).collect();
        let mut h = DefaultHasher::new();
        for z in self.eigvecs.iter() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
        let id = format!("hermitian-eigenbasis-{:016x}", h.finish());
        NaLimit {
            norm: NaNorm::new(id, weights).expect("dimension is positive"),
            basis: self.eigvecs.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.start.to_json();
        let (re, im) = split(&self.generator);
        v["generator_re"] = json!(re);
        v["generator_im"] = json!(im);
        v["orientation"] = json!(self.orientation.to_string());
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let start = HermNorm::from_json(v)?;
        let gen = join(&v["generator_re"], &v["generator_im"], "generator")?;
        let orientation = v["orientation"]
            .as_str()
            .unwrap_or("+")
            .parse::<Orientation>()?;
        Self::new(start, gen, orientation)
    }
}

/// `χ_H` together with the vectors that diagonalize it.
#[derive(Debug, Clone)]
pub struct NaLimit {
    pub norm: NaNorm<f64>,
    /// Diagonalizing basis, one column per weight.
    pub basis: CMatrix,
}

impl NaLimit {
    /// Relative spectra against another NA limit whose diagonalizing basis
    /// may differ, by counting dimensions of intersections of the two
    /// filtrations.
    pub fn relative_spectra(&self, other: &NaLimit) -> Result<Vec<f64>> {
        let n = self.norm.dim();
        if other.norm.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: other.norm.dim(),
            });
        }
        let fa = filtration(&self.norm, &self.basis);
        let fb = filtration(&other.norm, &other.basis);
        let d = |i: usize, j: usize| -> i64 {
            if i == 0 || j == 0 {
                return 0;
            }
            let (a, b) = (&fa[i - 1].1, &fb[j - 1].1);
            let both = CMatrix::from_fn(n, a.ncols() + b.ncols(), |r, c| {
                if c < a.ncols() {
                    a[(r, c)]
                } else {
                    b[(r, c - a.ncols())]
                }
            });
            (a.ncols() + b.ncols()) as i64 - numerical_rank(&both) as i64
        };
        let mut out = Vec::with_capacity(n);
        for i in 1..=fa.len() {
            for j in 1..=fb.len() {
                let m = d(i, j) - d(i - 1, j) - d(i, j - 1) + d(i - 1, j - 1);
                for _ in 0..m.max(0) {
                    out.push(fa[i - 1].0 - fb[j - 1].0);
                }
            }
        }
        if out.len() != n {
            return Err(Error::Singular(
                "filtrations are too close to degenerate for a dimension count".into(),
            ));
        }
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(out)
    }

    pub fn dp_distance(&self, other: &NaLimit, p: Exponent) -> Result<f64> {
        Ok(p.mean_norm(self.relative_spectra(other)?))
    }
}

/// Steps `(λ, orthonormal basis of F^λ)` for the distinct weights, descending.
fn filtration(norm: &NaNorm<f64>, basis: &CMatrix) -> Vec<(f64, CMatrix)> {
    let w = norm.weights();
    let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * scale;
    let mut jumps: Vec<f64> = Vec::new();
    for &x in &norm.jumping_numbers() {
        if jumps.last().map_or(true, |&j| j - x > tol) {
            jumps.push(x);
        }
    }
    jumps
        .into_iter()
        .map(|j| {
            let cols: Vec<usize> = (0..w.len()).filter(|&i| w[i] >= j - tol).collect();
            let sub = CMatrix::from_fn(basis.nrows(), cols.len(), |r, c| basis[(r, cols[c])]);
            (j, sub.qr().q())
        })
        .collect()
}

fn numerical_rank(m: &CMatrix) -> usize {
    let sv = m.clone().singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-8 * top.max(1.0)).count()
}

/// `H_1 = H_0 e^{A}` joined by `t ↦ H_0(e^{tA}·, ·)`, `t ∈ [0, 1]`.
pub fn connecting_geodesic(h0: &HermNorm, h1: &HermNorm) -> Result<HermGeodesicRay> {
    let (mu, u, l) = h0.pencil(h1)?;
    // A = L^{-*} U diag(μ) U* L*.
    let n = h0.dim();
    let mut ud = u.clone();
    for j in 0..n {
        for r in 0..n {
            ud[(r, j)] *= Complex64::new(mu[j], 0.0);
        }
    }
    let inner = ud * u.adjoint() * l.adjoint();
    let a = l
        .adjoint()
        .solve_upper_triangular(&inner)
        .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
    HermGeodesicRay::new(h0.clone(), a, Orientation::Plus)
}

/// `d_2` between the two rays at time `t`, computed from the graded factors
/// so that it stays accurate when `e^{t|λ|}` is huge.
pub fn ray_distance(r1: &HermGeodesicRay, r2: &HermGeodesicRay, t: f64) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch {
            expected: r1.dim(),
            got: r2.dim(),
        });
    }
    // X = F_2^{-1} F_1 = W_2* L_2^{-1} L_1 W_1.
    let l2 = r2.start.cholesky_l();
    let y = l2
        .solve_lower_triangular(&r1.frame)
        .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
    let w2 = l2
        .solve_lower_triangular(&r2.frame)
        .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
    let x = w2.adjoint() * y;
    let left: Vec<f64> = r2.exponents(t).iter().map(|e| -e / 2.0).collect();
    let right: Vec<f64> = r1.exponents(t).iter().map(|e| e / 2.0).collect();
    let logs = graded_log_singular_values(&x, &left, &right)?;
    Ok(Exponent::Finite(2.0).mean_norm(logs.iter().map(|s| 2.0 * s)))
}

/// `(d_2(H_T, G_T) − d_2(H_0, G_0)) / T`.
pub fn asymptotic_slope(r1: &HermGeodesicRay, r2: &HermGeodesicRay, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonPositiveScale(t));
    }
    Ok((ray_distance(r1, r2, t)? - ray_distance(r1, r2, 0.0)?) / t)
}
