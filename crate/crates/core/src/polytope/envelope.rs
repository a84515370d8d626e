use std::cmp::Ordering;

use super::hull::{cone_hull, independent_subset, merge_coplanar};
use super::plfunction::PlFunction;
use super::triangulate::{barycentric, lex_cmp, pulling_triangulation, simplex_volume};
use crate::error::{Error, Result};
use crate::scalar::{convert, Rational, Scalar};

/// One cell of the regular subdivision induced by the envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFace<S> {
    /// Point indices of the cell's corners.
    pub corners: Vec<usize>,
    /// The envelope is `⟨gradient, u⟩ + constant` on the cell.
    pub gradient: Vec<S>,
    pub constant: S,
}

impl<S: Scalar> EnvelopeFace<S> {
    pub fn eval(&self, u: &[S]) -> S {
        self.gradient
            .iter()
            .zip(u)
            .fold(self.constant.clone(), |acc, (g, x)| acc + g.clone() * x.clone())
    }
}

/// The least concave function `G` with `G(u_i) ≥ λ_i`.
#[derive(Debug, Clone)]
pub struct Envelope<S> {
    /// `G` on the pulling triangulation of the cells; node values are
    /// `G(u_i)` for every input point, including the ones not used as corners.
    pub function: PlFunction<S>,
    pub faces: Vec<EnvelopeFace<S>>,
    /// Cell containing each simplex of `function`.
    pub simplex_face: Vec<usize>,
}

impl<S: Scalar> Envelope<S> {
    /// `G(u_i)` for each input point.
    pub fn values(&self) -> &[S] {
        self.function.values()
    }

    /// Whether `(u_i, λ_i)` touches the envelope.
    pub fn touches(&self, i: usize, lambda: &S) -> bool {
        let g = &self.values()[i];
        let scale = 1.0 + g.to_f64().abs();
        (g.clone() - lambda.clone()).is_zero_tol(scale)
    }
}

/// Upper hull of `{(u_i, λ_i)}` projected to the `u`-space.
///
/// In floating point the result is checked: if the cells do not tile the
/// convex hull of the points or miss a value, it is recomputed exactly from
/// the binary values of the inputs.
pub fn concave_envelope<S: Scalar>(points: &[Vec<S>], values: &[S]) -> Result<Envelope<S>> {
    if S::EXACT {
        return upper_hull(points, values);
    }
    if let Ok(env) = upper_hull(points, values) {
        if float_envelope_ok(points, values, &env)? {
            return Ok(env);
        }
    }
    let qp: Vec<Vec<Rational>> = points.iter().map(|u| u.iter().map(Scalar::to_rational).collect()).collect();
    let qv: Vec<Rational> = values.iter().map(Scalar::to_rational).collect();
    let exact = upper_hull(&qp, &qv)?;
    Ok(Envelope {
        function: PlFunction::new(points.to_vec(), exact.function.simplices().to_vec(), convert(exact.values()), true)?,
        faces: exact
            .faces
            .into_iter()
            .map(|f| EnvelopeFace {
                corners: f.corners,
                gradient: convert(&f.gradient),
                constant: S::from_rational(&f.constant),
            })
            .collect(),
        simplex_face: exact.simplex_face,
    })
}

fn float_envelope_ok<S: Scalar>(points: &[Vec<S>], values: &[S], env: &Envelope<S>) -> Result<bool> {
    let scale = values.iter().map(|v| v.to_f64().abs()).fold(1.0, f64::max);
    let dominates = env
        .values()
        .iter()
        .zip(values)
        .all(|(g, v)| g.to_f64() - v.to_f64() >= -1e-9 * scale);
    if !dominates {
        return Ok(false);
    }
    let dom = hull_volume(points)?;
    let cells = env.function.domain_volume().to_f64();
    Ok((cells - dom).abs() <= 1e-9 * (1.0 + dom))
}

/// Volume of the convex hull of full-dimensional points.
fn hull_volume<S: Scalar>(points: &[Vec<S>]) -> Result<f64> {
    let vecs: Vec<Vec<S>> = points.iter().map(|u| u.iter().cloned().chain([S::one()]).collect()).collect();
    let init = independent_subset(&vecs, &[]).ok_or(Error::Empty)?;
    let facets = cone_hull(&vecs, &init)?;
    let n = points[0].len();
    let c: Vec<S> = (0..n)
        .map(|i| points.iter().fold(S::zero(), |a, u| a + u[i].clone()) / S::from_i64(points.len() as i64))
        .collect();
    Ok(facets
        .iter()
        .map(|f| {
            let mut v: Vec<&Vec<S>> = vec![&c];
            v.extend(f.verts.iter().map(|&i| &points[i]));
            simplex_volume(&v).to_f64()
        })
        .sum())
}

fn upper_hull<S: Scalar>(points: &[Vec<S>], values: &[S]) -> Result<Envelope<S>> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    let n = points.first().map_or(0, Vec::len);
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let npts = points.len();
    // Lifted (u, λ, 1) plus the downward direction (0, −1, 0) as the last generator.
    let mut vecs: Vec<Vec<S>> = points
        .iter()
        .zip(values)
        .map(|(u, h)| {
            u.iter()
                .cloned()
                .chain([h.clone(), S::one()])
                .collect()
        })
        .collect();
    let mut down = vec![S::zero(); n + 2];
    down[n] = -S::one();
    vecs.push(down);
    let inf = npts;

    let init = independent_subset(&vecs, &[inf]).ok_or(Error::Empty)?;
    let facets = cone_hull(&vecs, &init)?;
    let upper = |f: &super::hull::HullFacet<S>| {
        !f.verts.contains(&inf) && {
            let b = &f.normal[n];
            let scale = f.normal.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
            b.sign_tol(scale) == Ordering::Less
        }
    };
    let groups = merge_coplanar(&vecs, &facets, upper);

    let mut faces = Vec::with_capacity(groups.len());
    let mut simplices = Vec::new();
    let mut simplex_face = Vec::new();
    for g in groups {
        let mut pts: Vec<usize> = g.iter().flat_map(|&f| facets[f].verts.clone()).collect();
        pts.sort_unstable();
        pts.dedup();
        // a·u + b·h + c = 0  ⇒  h = −(a·u + c)/b.
        let nrm = &facets[g[0]].normal;
        let b = nrm[n].clone();
        let gradient: Vec<S> = (0..n).map(|i| -nrm[i].clone() / b.clone()).collect();
        let constant = -nrm[n + 1].clone() / b;
        let tri = pulling_triangulation(points, &pts)?;
        let mut corners: Vec<usize> = tri.iter().flatten().copied().collect();
        corners.sort_unstable();
        corners.dedup();
        let fid = faces.len();
        for s in tri {
            simplices.push(s);
            simplex_face.push(fid);
        }
        faces.push(EnvelopeFace {
            corners,
            gradient,
            constant,
        });
    }
    // Deterministic order: faces by their smallest corner.
    let mut order: Vec<usize> = (0..faces.len()).collect();
    order.sort_by(|&a, &b| {
        lex_cmp(&points[faces[a].corners[0]], &points[faces[b].corners[0]])
            .then(faces[a].corners.cmp(&faces[b].corners))
    });
    let mut rank = vec![0; faces.len()];
    for (r, &f) in order.iter().enumerate() {
        rank[f] = r;
    }
    let faces: Vec<EnvelopeFace<S>> = order.iter().map(|&f| faces[f].clone()).collect();
    let mut tagged: Vec<(usize, Vec<usize>)> = simplices
        .into_iter()
        .zip(simplex_face)
        .map(|(s, f)| (rank[f], s))
        .collect();
    tagged.sort();
    let simplex_face: Vec<usize> = tagged.iter().map(|t| t.0).collect();
    let simplices: Vec<Vec<usize>> = tagged.into_iter().map(|t| t.1).collect();

    let g = envelope_values(points, &faces, &simplices, &simplex_face)?;
    let function = PlFunction::new(points.to_vec(), simplices, g, true)?;
    Ok(Envelope {
        function,
        faces,
        simplex_face,
    })
}

/// `G(u_i)`, locating every point in a simplex via a sweep along the first
/// coordinate.
fn envelope_values<S: Scalar>(
    points: &[Vec<S>],
    faces: &[EnvelopeFace<S>],
    simplices: &[Vec<usize>],
    simplex_face: &[usize],
) -> Result<Vec<S>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].partial_cmp(&points[b][0]).unwrap_or(Ordering::Equal));
    let xs: Vec<f64> = order.iter().map(|&i| points[i][0].to_f64()).collect();
    let mut out: Vec<Option<S>> = vec![None; points.len()];
    // Corners first: exact and cheap.
    for (s, verts) in simplices.iter().enumerate() {
        for &v in verts {
            if out[v].is_none() {
                out[v] = Some(faces[simplex_face[s]].eval(&points[v]));
            }
        }
    }
    for (s, verts) in simplices.iter().enumerate() {
        let vp: Vec<&Vec<S>> = verts.iter().map(|&i| &points[i]).collect();
        let lo = vp.iter().map(|p| p[0].to_f64()).fold(f64::INFINITY, f64::min);
        let hi = vp.iter().map(|p| p[0].to_f64()).fold(f64::NEG_INFINITY, f64::max);
        let pad = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
        let start = xs.partition_point(|&x| x < lo - pad);
        for &i in order[start..].iter().take_while(|&&i| points[i][0].to_f64() <= hi + pad) {
            if out[i].is_some() {
                continue;
            }
            if barycentric(&vp, &points[i]).is_some() {
                out[i] = Some(faces[simplex_face[s]].eval(&points[i]));
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::OutsideDomain(points[i].iter().map(Scalar::to_f64).collect())))
        .collect()
}
