//! Singular values of `diag(e^l) X diag(e^r)` with large exponents.
//!
//! Row-sorted Householder QR with column pivoting followed by one-sided
//! Jacobi on `R*`. For well-conditioned `X` this keeps relative accuracy in
//! every singular value, including the ones many orders of magnitude below
//! the largest.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Natural logs of the singular values, sorted descending.
pub fn graded_log_singular_values(
    x: &DMatrix<Complex64>,
    left: &[f64],
    right: &[f64],
) -> Result<Vec<f64>> {
    let n = x.nrows();
    assert_eq!(x.ncols(), n);
    assert_eq!(left.len(), n);
    assert_eq!(right.len(), n);
    let centre = |v: &[f64]| {
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        ((hi + lo) / 2.0, hi - lo)
    };
    let (cl, wl) = centre(left);
    let (cr, wr) = centre(right);
    // Entries span e^{±(wl+wr)/2}; squared norms must stay representable.
    if wl + wr > 600.0 {
        return Err(Error::NumericalRange(wl + wr));
    }
    let mut m = DMatrix::from_fn(n, n, |i, j| {
        x[(i, j)] * ((left[i] - cl) + (right[j] - cr)).exp()
    });

    // Rows by decreasing norm.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|i| m.row(i).norm()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    m = DMatrix::from_fn(n, n, |i, j| m[(order[i], j)]);

    householder_qr_pivoted(&mut m);
    let mut y = DMatrix::from_fn(n, n, |i, j| {
        if j <= i {
            m[(j, i)].conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    one_sided_jacobi(&mut y);

    let mut out: Vec<f64> = (0..n)
        .map(|j| y.column(j).norm().ln() + cl + cr)
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// In place: upper triangle of `m` becomes `R` of `m P = Q R`.
fn householder_qr_pivoted(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for k in 0..n {
        let (piv, _) = (k..n)
            .map(|j| (j, m.view((k, j), (n - k, 1)).norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        m.swap_columns(k, piv);
        let xnorm = m.view((k, k), (n - k, 1)).norm();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = m[(k, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (k..n).map(|i| m[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for c in v.iter_mut() {
            *c /= vn;
        }
        for j in k..n {
            let dot: Complex64 = v
                .iter()
                .enumerate()
                .map(|(a, vi)| vi.conj() * m[(k + a, j)])
                .sum();
            for (a, vi) in v.iter().enumerate() {
                m[(k + a, j)] -= *vi * dot * 2.0;
            }
        }
        m[(k, k)] = alpha;
        for i in k + 1..n {
            m[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Orthogonalizes the columns of `y` by plane rotations; the column norms
/// are then the singular values.
fn one_sided_jacobi(y: &mut DMatrix<Complex64>) {
    let n = y.ncols();
    let eps = f64::EPSILON * n as f64;
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = y.column(i).norm_squared();
                let beta = y.column(j).norm_squared();
                let gamma: Complex64 = y.column(i).dotc(&y.column(j));
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let ph = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..y.nrows() {
                    let yi = y[(r, i)];
                    let yj = y[(r, j)] / ph;
                    y[(r, i)] = yi * c - yj * s;
                    y[(r, j)] = (yi * s + yj * c) * ph;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}
