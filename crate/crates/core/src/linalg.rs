//! Small dense linear algebra over [`Scalar`]: determinants, solves, ranks and
//! null spaces by Gaussian elimination. Exact for rationals; partial pivoting
//! with a scale-relative zero test for floats.

use std::cmp::Ordering;

use crate::scalar::Scalar;

fn max_abs<S: Scalar>(rows: &[Vec<S>]) -> f64 {
    rows.iter()
        .flat_map(|r| r.iter())
        .map(|x| x.to_f64().abs())
        .fold(0.0, f64::max)
}

fn pick_pivot<S: Scalar>(m: &[Vec<S>], col: usize, from: usize, scale: f64) -> Option<usize> {
    if S::EXACT {
        (from..m.len()).find(|&r| !m[r][col].is_zero())
    } else {
        let (best, mag) = (from..m.len())
            .map(|r| (r, m[r][col].to_f64().abs()))
            .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || mag.sign_tol(scale) == Ordering::Equal {
            None
        } else {
            Some(best)
        }
    }
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref<S: Scalar>(m: &mut [Vec<S>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let scale = max_abs(m).max(1.0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = pick_pivot(m, c, r, scale) else {
            continue;
        };
        m.swap(r, p);
        let inv = S::one() / m[r][c].clone();
        for j in c..cols {
            m[r][j] = m[r][j].clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let t = m[r][j].clone() * f.clone();
                    m[i][j] = m[i][j].clone() - t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<S: Scalar>(rows: &[Vec<S>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of `{x : A x = 0}` for `A` given by rows with `cols` columns.
pub fn nullspace<S: Scalar>(rows: &[Vec<S>], cols: usize) -> Vec<Vec<S>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![S::zero(); cols];
            v[f] = S::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Solves the square system `A x = b`; `None` when singular.
pub fn solve<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Option<Vec<S>> {
    let n = a.len();
    let mut m: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.len() < n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

/// Determinant by elimination.
pub fn det<S: Scalar>(a: &[Vec<S>]) -> S {
    let n = a.len();
    let mut m = a.to_vec();
    let scale = max_abs(&m).max(f64::MIN_POSITIVE);
    let mut d = S::one();
    for c in 0..n {
        let Some(p) = pick_pivot(&m, c, c, scale * f64::EPSILON / crate::scalar::FLOAT_TOL)
        else {
            return S::zero();
        };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let piv = m[c][c].clone();
        d = d * piv.clone();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone() / piv.clone();
            for j in c..n {
                let t = m[c][j].clone() * f.clone();
                m[i][j] = m[i][j].clone() - t;
            }
        }
    }
    d
}

/// Whether `v` lies in the row span of `rows`.
pub fn in_span<S: Scalar>(rows: &[Vec<S>], v: &[S]) -> bool {
    let mut m = rows.to_vec();
    let r0 = rank(&m);
    m.push(v.to_vec());
    rank(&m) == r0
}
