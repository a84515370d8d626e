//! Corners of convex point sets and pulling triangulations (n ≤ 3).
//!
//! Every triangulation here pulls the lexicographically smallest corner, and
//! recursively the smallest corner of each face. Because the order is global,
//! cells of a subdivision triangulated independently agree on shared faces.

use std::cmp::Ordering;

use super::hull::{cone_hull, independent_subset, merge_coplanar};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

fn cross2<S: Scalar>(o: &[S], a: &[S], b: &[S]) -> Ordering {
    let ax = a[0].clone() - o[0].clone();
    let ay = a[1].clone() - o[1].clone();
    let bx = b[0].clone() - o[0].clone();
    let by = b[1].clone() - o[1].clone();
    let scale = [&ax, &ay, &bx, &by]
        .iter()
        .map(|x| x.to_f64().abs())
        .fold(0.0, f64::max);
    (ax * by - ay * bx).sign_tol(scale * scale)
}

/// Strict convex hull of planar points (indices into `pts`, 2-vectors) in
/// counter-clockwise order starting at the lexicographically smallest point.
/// Collinear and repeated points are dropped.
pub fn monotone_chain<S: Scalar>(pts: &[Vec<S>], idx: &[usize]) -> Vec<usize> {
    let mut ids: Vec<usize> = idx.to_vec();
    ids.sort_by(|&a, &b| lex_cmp(&pts[a], &pts[b]).then(a.cmp(&b)));
    ids.dedup_by(|a, b| lex_cmp(&pts[*a], &pts[*b]) == Ordering::Equal);
    if ids.len() < 3 {
        return ids;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &ids {
        while lower.len() >= 2
            && cross2(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], &pts[i])
                != Ordering::Greater
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in ids.iter().rev() {
        while upper.len() >= 2
            && cross2(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], &pts[i])
                != Ordering::Greater
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Triangles of a polygon fanned from its lexicographically smallest corner,
/// given corners in cyclic order.
fn fan<S: Scalar>(pts: &[Vec<S>], cycle: &[usize]) -> Vec<[usize; 3]> {
    if cycle.len() < 3 {
        return Vec::new();
    }
    let start = (0..cycle.len())
        .min_by(|&a, &b| lex_cmp(&pts[cycle[a]], &pts[cycle[b]]))
        .unwrap();
    let c: Vec<usize> = (0..cycle.len())
        .map(|i| cycle[(start + i) % cycle.len()])
        .collect();
    (1..c.len() - 1).map(|i| [c[0], c[i], c[i + 1]]).collect()
}

/// 2-faces of a 3-polytope spanned by `idx`, each as a cyclic corner list.
fn faces_3d<S: Scalar>(pts: &[Vec<S>], idx: &[usize]) -> Result<Vec<Vec<usize>>> {
    let vecs: Vec<Vec<S>> = idx
        .iter()
        .map(|&i| pts[i].iter().cloned().chain([S::one()]).collect())
        .collect();
    let init = independent_subset(&vecs, &[]).ok_or(Error::Empty)?;
    let facets = cone_hull(&vecs, &init)?;
    let groups = merge_coplanar(&vecs, &facets, |_| true);
    let mut out = Vec::new();
    for g in groups {
        let mut local: Vec<usize> = g.iter().flat_map(|&f| facets[f].verts.clone()).collect();
        local.sort_unstable();
        local.dedup();
        // Project along the dominant normal component.
        let n = &facets[g[0]].normal;
        let drop = (0..3)
            .max_by(|&a, &b| n[a].to_f64().abs().total_cmp(&n[b].to_f64().abs()))
            .unwrap();
        let proj: Vec<Vec<S>> = local
            .iter()
            .map(|&l| {
                (0..3)
                    .filter(|&c| c != drop)
                    .map(|c| pts[idx[l]][c].clone())
                    .collect()
            })
            .collect();
        let order = monotone_chain(&proj, &(0..local.len()).collect::<Vec<_>>());
        out.push(order.into_iter().map(|o| idx[local[o]]).collect());
    }
    Ok(out)
}

/// Pulling triangulation of the convex hull of the points `idx` (assumed
/// full-dimensional in ℝ^n, n ≤ 3). Non-corner points are not used.
pub fn pulling_triangulation<S: Scalar>(pts: &[Vec<S>], idx: &[usize]) -> Result<Vec<Vec<usize>>> {
    let n = pts.get(*idx.first().ok_or(Error::Empty)?).map_or(0, Vec::len);
    match n {
        1 => {
            let lo = idx
                .iter()
                .copied()
                .min_by(|&a, &b| lex_cmp(&pts[a], &pts[b]))
                .unwrap();
            let hi = idx
                .iter()
                .copied()
                .max_by(|&a, &b| lex_cmp(&pts[a], &pts[b]))
                .unwrap();
            if lex_cmp(&pts[lo], &pts[hi]) == Ordering::Equal {
                return Err(Error::Empty);
            }
            Ok(vec![vec![lo, hi]])
        }
        2 => {
            let cycle = monotone_chain(pts, idx);
            if cycle.len() < 3 {
                return Err(Error::Empty);
            }
            Ok(fan(pts, &cycle).into_iter().map(|t| t.to_vec()).collect())
        }
        3 => {
            let faces = faces_3d(pts, idx)?;
            let apex = faces
                .iter()
                .flatten()
                .copied()
                .min_by(|&a, &b| lex_cmp(&pts[a], &pts[b]))
                .ok_or(Error::Empty)?;
            let mut out = Vec::new();
            for f in faces.iter().filter(|f| !f.contains(&apex)) {
                for t in fan(pts, f) {
                    out.push(vec![apex, t[0], t[1], t[2]]);
                }
            }
            Ok(out)
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Corners of the convex hull of the points `idx` in ℝ^n, n ≤ 3.
pub fn corners<S: Scalar>(pts: &[Vec<S>], idx: &[usize]) -> Result<Vec<usize>> {
    let mut c: Vec<usize> = pulling_triangulation(pts, idx)?
        .into_iter()
        .flatten()
        .collect();
    c.sort_unstable();
    c.dedup();
    Ok(c)
}

/// `|det(v_1 − v_0, …, v_n − v_0)| / n!`.
pub fn simplex_volume<S: Scalar>(verts: &[&Vec<S>]) -> S {
    let n = verts.len() - 1;
    let rows: Vec<Vec<S>> = verts[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(verts[0].iter())
                .map(|(a, b)| a.clone() - b.clone())
                .collect()
        })
        .collect();
    let d = crate::linalg::det(&rows).abs_val();
    let fact: i64 = (1..=n as i64).product();
    d / S::from_i64(fact)
}

/// Whether `x` lies in the simplex (closed, with float tolerance). Returns
/// barycentric coordinates when it does.
pub fn barycentric<S: Scalar>(verts: &[&Vec<S>], x: &[S]) -> Option<Vec<S>> {
    let n = x.len();
    // Solve Σ_{i≥1} μ_i (v_i − v_0) = x − v_0.
    let a: Vec<Vec<S>> = (0..n)
        .map(|r| {
            (1..=n)
                .map(|i| verts[i][r].clone() - verts[0][r].clone())
                .collect()
        })
        .collect();
    let b: Vec<S> = (0..n).map(|r| x[r].clone() - verts[0][r].clone()).collect();
    let mu = crate::linalg::solve(&a, &b)?;
    let mut l0 = S::one();
    for m in &mu {
        l0 = l0 - m.clone();
    }
    let mut out = vec![l0];
    out.extend(mu);
    if out.iter().all(|c| c.sign_tol(1.0) != Ordering::Less) {
        Some(out)
    } else {
        None
    }
}

/// Affine function through the points `(v_i, h_i)` of a nondegenerate
/// simplex: returns `(gradient, constant)`.
pub fn affine_through<S: Scalar>(verts: &[&Vec<S>], h: &[S]) -> Option<(Vec<S>, S)> {
    let n = verts[0].len();
    let a: Vec<Vec<S>> = verts
        .iter()
        .map(|v| v.iter().cloned().chain([S::one()]).collect())
        .collect();
    let sol = crate::linalg::solve(&a, h)?;
    let c = sol[n].clone();
    Some((sol[..n].to_vec(), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    fn q(pts: &[&[i64]]) -> Vec<Vec<Rational>> {
        pts.iter().map(|p| p.iter().map(|&x| rat(x, 1)).collect()).collect()
    }

    fn total_volume(pts: &[Vec<Rational>], simp: &[Vec<usize>]) -> Rational {
        simp.iter()
            .map(|s| simplex_volume(&s.iter().map(|&i| &pts[i]).collect::<Vec<_>>()))
            .sum()
    }

    #[test]
    fn square_fan_skips_edge_midpoints() {
        let p = q(&[&[0, 0], &[1, 0], &[2, 0], &[2, 2], &[0, 2], &[1, 1]]);
        let t = pulling_triangulation(&p, &(0..6).collect::<Vec<_>>()).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|s| s[0] == 0));
        assert_eq!(total_volume(&p, &t), rat(4, 1));
        assert_eq!(corners(&p, &(0..6).collect::<Vec<_>>()).unwrap(), vec![0, 2, 3, 4]);
    }

    #[test]
    fn cube_pulling_gives_six_tetrahedra() {
        let mut pts = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    pts.push(vec![rat(x, 1), rat(y, 1), rat(z, 1)]);
                }
            }
        }
        let t = pulling_triangulation(&pts, &(0..8).collect::<Vec<_>>()).unwrap();
        // Three faces avoid the origin, each split in two.
        assert_eq!(t.len(), 6);
        assert_eq!(total_volume(&pts, &t), rat(1, 1));
    }

    #[test]
    fn barycentric_and_affine() {
        let p = q(&[&[0, 0], &[2, 0], &[0, 2]]);
        let v: Vec<&Vec<Rational>> = p.iter().collect();
        let b = barycentric(&v, &[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(b, vec![rat(1, 2), rat(1, 4), rat(1, 4)]);
        assert!(barycentric(&v, &[rat(2, 1), rat(1, 1)]).is_none());
        let (g, c) = affine_through(&v, &[rat(1, 1), rat(3, 1), rat(5, 1)]).unwrap();
        assert_eq!(g, vec![rat(1, 1), rat(2, 1)]);
        assert_eq!(c, rat(1, 1));
    }
}
