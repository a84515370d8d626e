use std::cmp::Ordering;

use super::plfunction::PlFunction;
use super::triangulate::{affine_through, lex_cmp, pulling_triangulation, simplex_volume};
use super::DelzantPolytope;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_domain<S: Scalar>(p: &DelzantPolytope, f: &PlFunction<S>) -> Result<()> {
    let vol = S::from_rational(p.volume());
    let got = f.domain_volume();
    let scale = 1.0 + vol.to_f64().abs();
    if (got.clone() - vol.clone()).is_zero_tol(scale) && f.dim() == p.dim() {
        Ok(())
    } else {
        Err(Error::SubdivisionMismatch {
            expected: format!("domain of volume {}", vol.to_f64()),
            found: format!("cells of total volume {}", got.to_f64()),
        })
    }
}

fn same_mesh<S: Scalar>(f: &PlFunction<S>, g: &PlFunction<S>) -> Result<()> {
    if f.points() == g.points() && f.simplices() == g.simplices() {
        Ok(())
    } else {
        Err(Error::SubdivisionMismatch {
            expected: format!("{} cells", f.simplices().len()),
            found: format!("{} cells on another mesh", g.simplices().len()),
        })
    }
}

/// Per-node weights `m_i` with `∫f = Σ m_i f(u_i)`.
pub fn interior_masses<S: Scalar>(f: &PlFunction<S>) -> Vec<S> {
    let n1 = S::from_i64(f.dim() as i64 + 1);
    let mut m = vec![S::zero(); f.points().len()];
    for (s, verts) in f.simplices().iter().enumerate() {
        let share = f.simplex_volume(s) / n1.clone();
        for &v in verts {
            m[v] = m[v].clone() + share.clone();
        }
    }
    m
}

/// Per-node weights with `∫_{∂P} f dσ = Σ m_i f(u_i)`.
pub fn boundary_masses<S: Scalar>(p: &DelzantPolytope, f: &PlFunction<S>) -> Vec<S> {
    let n = S::from_i64(f.dim() as i64);
    let mut m = vec![S::zero(); f.points().len()];
    for verts in f.simplices() {
        for (facet, face) in p.boundary_faces(f.points(), verts) {
            let pts: Vec<&Vec<S>> = face.iter().map(|&i| &f.points()[i]).collect();
            let share = if f.dim() == 1 {
                S::one()
            } else {
                super::facet_simplex_measure(&p.facets()[facet].normal, &pts) / n.clone()
            };
            for &v in &face {
                m[v] = m[v].clone() + share.clone();
            }
        }
    }
    m
}

/// `Σ m_i v_i`.
pub fn mass_times<S: Scalar>(masses: &[S], values: &[S]) -> S {
    masses
        .iter()
        .zip(values)
        .fold(S::zero(), |acc, (m, v)| acc + m.clone() * v.clone())
}

/// `∫_P f dx` (exact for piecewise-linear `f`).
pub fn integrate<S: Scalar>(f: &PlFunction<S>) -> S {
    mass_times(&interior_masses(f), f.values())
}

/// `⨍_P f dx`; errors when `f` is not defined on all of `P`.
pub fn mean<S: Scalar>(p: &DelzantPolytope, f: &PlFunction<S>) -> Result<S> {
    check_domain(p, f)?;
    Ok(integrate(f) / S::from_rational(p.volume()))
}

/// `∫ h²` over a simplex of volume `vol` with vertex values `h`.
fn simplex_sq<S: Scalar>(vol: S, h: &[S]) -> S {
    simplex_product(vol, h, h)
}

fn simplex_product<S: Scalar>(vol: S, f: &[S], g: &[S]) -> S {
    let n1 = f.len() as i64;
    let dot = f.iter().zip(g).fold(S::zero(), |a, (x, y)| a + x.clone() * y.clone());
    let sf = f.iter().fold(S::zero(), |a, x| a + x.clone());
    let sg = g.iter().fold(S::zero(), |a, x| a + x.clone());
    vol * (dot + sf * sg) / S::from_i64(n1 * (n1 + 1))
}

/// `∫_P f g dx` for two functions on the same mesh.
pub fn integrate_product<S: Scalar>(f: &PlFunction<S>, g: &PlFunction<S>) -> Result<S> {
    same_mesh(f, g)?;
    let mut total = S::zero();
    for (s, verts) in f.simplices().iter().enumerate() {
        let fv: Vec<S> = verts.iter().map(|&i| f.values()[i].clone()).collect();
        let gv: Vec<S> = verts.iter().map(|&i| g.values()[i].clone()).collect();
        total = total + simplex_product(f.simplex_volume(s), &fv, &gv);
    }
    Ok(total)
}

/// `∫_P f² dx`.
pub fn integrate_sq<S: Scalar>(f: &PlFunction<S>) -> S {
    integrate_product(f, f).expect("same mesh")
}

/// `∫_{∂P} f dσ` with the lattice boundary measure.
pub fn integrate_boundary<S: Scalar>(p: &DelzantPolytope, f: &PlFunction<S>) -> Result<S> {
    check_domain(p, f)?;
    Ok(mass_times(&boundary_masses(p, f), f.values()))
}

/// `⨍_{∂P} f dσ`.
pub fn mean_boundary<S: Scalar>(p: &DelzantPolytope, f: &PlFunction<S>) -> Result<S> {
    Ok(integrate_boundary(p, f)? / S::from_rational(&p.boundary_measure()))
}

/// Barycentric coordinates of a simplex as affine functions `(grad, const)`.
fn barycentric_forms<S: Scalar>(verts: &[&Vec<S>]) -> Vec<(Vec<S>, S)> {
    (0..verts.len())
        .map(|i| {
            let e: Vec<S> = (0..verts.len())
                .map(|j| if i == j { S::one() } else { S::zero() })
                .collect();
            affine_through(verts, &e).expect("nondegenerate simplex")
        })
        .collect()
}

fn eval_form<S: Scalar>(form: &(Vec<S>, S), x: &[S]) -> S {
    form.0
        .iter()
        .zip(x)
        .fold(form.1.clone(), |a, (g, xi)| a + g.clone() * xi.clone())
}

fn bbox<S: Scalar>(verts: &[&Vec<S>]) -> Vec<(f64, f64)> {
    (0..verts[0].len())
        .map(|c| {
            verts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                let x = v[c].to_f64();
                (lo.min(x), hi.max(x))
            })
        })
        .collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Vertices of `{x : ℓ_j(x) ≥ 0 ∀j}` by brute-force enumeration.
fn polytope_vertices<S: Scalar>(forms: &[(Vec<S>, S)], n: usize) -> Vec<Vec<S>> {
    let mut out: Vec<Vec<S>> = Vec::new();
    for sub in subsets(forms.len(), n) {
        let a: Vec<Vec<S>> = sub.iter().map(|&j| forms[j].0.clone()).collect();
        let b: Vec<S> = sub.iter().map(|&j| -forms[j].1.clone()).collect();
        let Some(x) = crate::linalg::solve(&a, &b) else {
            continue;
        };
        if forms.iter().all(|f| eval_form(f, &x).sign_tol(1.0) != Ordering::Less) {
            out.push(x);
        }
    }
    out.sort_by(|a, b| lex_cmp(a, b));
    out.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x.clone() - y.clone()).is_zero_tol(1.0)));
    out
}

/// `∫_P (f − g)² dx` for functions on possibly different meshes, by exact
/// integration over the common refinement.
pub fn l2_distance_sq<S: Scalar>(f: &PlFunction<S>, g: &PlFunction<S>) -> Result<S> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: g.dim(),
        });
    }
    if same_mesh(f, g).is_ok() {
        let diff = f.with_values(
            f.values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
            false,
        )?;
        return Ok(integrate_sq(&diff));
    }
    let n = f.dim();
    let fs: Vec<_> = (0..f.simplices().len())
        .map(|s| {
            let v = f.simplex_points(s);
            (bbox(&v), barycentric_forms(&v), f.affine_piece(s))
        })
        .collect();
    let gs: Vec<_> = (0..g.simplices().len())
        .map(|s| {
            let v = g.simplex_points(s);
            (bbox(&v), barycentric_forms(&v), g.affine_piece(s))
        })
        .collect();
    let mut total = S::zero();
    for (fb, fforms, fpiece) in &fs {
        for (gb, gforms, gpiece) in &gs {
            if fb.iter().zip(gb).any(|(a, b)| a.1 < b.0 - 1e-12 || b.1 < a.0 - 1e-12) {
                continue;
            }
            let forms: Vec<(Vec<S>, S)> = fforms.iter().chain(gforms).cloned().collect();
            let verts = polytope_vertices(&forms, n);
            if verts.len() < n + 1 {
                continue;
            }
            let idx: Vec<usize> = (0..verts.len()).collect();
            let Ok(tri) = pulling_triangulation(&verts, &idx) else {
                continue;
            };
            for simplex in tri {
                let vp: Vec<&Vec<S>> = simplex.iter().map(|&i| &verts[i]).collect();
                let h: Vec<S> = vp
                    .iter()
                    .map(|x| eval_form(fpiece, x) - eval_form(gpiece, x))
                    .collect();
                total = total + simplex_sq(simplex_volume(&vp), &h);
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{concave_envelope, lattice_points};
    use crate::scalar::{rat, Rational};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_integrals() {
        let sq = DelzantPolytope::unit_square();
        let one = PlFunction::constant(&sq, rat(1, 1));
        assert_eq!(integrate(&one), rat(1, 1));
        assert_eq!(integrate_boundary(&sq, &one).unwrap(), rat(4, 1));
        let x = PlFunction::affine(&sq, &[rat(1, 1), rat(0, 1)], &rat(0, 1));
        assert_eq!(mean(&sq, &x).unwrap(), rat(1, 2));
        assert_eq!(integrate_boundary(&sq, &x).unwrap(), rat(2, 1));
        assert_eq!(mean_boundary(&sq, &x).unwrap(), rat(1, 2));
        assert_eq!(integrate_sq(&x), rat(1, 3));
    }

    #[test]
    fn trapezoid_integrals() {
        let tr = DelzantPolytope::trapezoid();
        let s = PlFunction::affine(&tr, &[rat(1, 1), rat(1, 1)], &rat(0, 1));
        // ∫(x+y) = ∫_1^2 r·r dr over the strip, i.e. 7/3.
        assert_eq!(integrate(&s), rat(7, 3));
        let one = PlFunction::constant(&tr, rat(1, 1));
        assert_eq!(integrate_boundary(&tr, &one).unwrap(), rat(5, 1));
        // x+y is 0 on the axes' ends... explicitly: facet x+y=1 has measure 1,
        // x+y=2 has 2, axes contribute ∫_1^2 t dt each.
        assert_eq!(integrate_boundary(&tr, &s).unwrap(), rat(8, 1));
        assert_eq!(integrate_sq(&s), rat(15, 4));
    }

    #[test]
    fn interval_boundary_is_endpoint_sum() {
        let iv = DelzantPolytope::interval();
        let f = PlFunction::affine(&iv, &[rat(3, 1)], &rat(1, 1));
        assert_eq!(integrate_boundary(&iv, &f).unwrap(), rat(5, 1));
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let sq = DelzantPolytope::unit_square();
        let tr = DelzantPolytope::trapezoid();
        let f = PlFunction::constant(&tr, rat(1, 1));
        assert!(matches!(mean(&sq, &f), Err(Error::SubdivisionMismatch { .. })));
    }

    #[test]
    fn masses_sum_to_measures() {
        let tr = DelzantPolytope::trapezoid();
        let pts = lattice_points(&tr, 3).unwrap().points;
        let vals = vec![rat(0, 1); pts.len()];
        let env = concave_envelope(&pts, &vals).unwrap();
        let m: Rational = interior_masses(&env.function).into_iter().sum();
        assert_eq!(m, rat(3, 2));
        let b: Rational = boundary_masses(&tr, &env.function).into_iter().sum();
        assert_eq!(b, rat(5, 1));
    }

    #[test]
    fn overlay_distance_matches_same_mesh() {
        let sq = DelzantPolytope::unit_square();
        let x = PlFunction::affine(&sq, &[rat(1, 1), rat(0, 1)], &rat(0, 1));
        let zero = PlFunction::constant(&sq, rat(0, 1));
        assert_eq!(l2_distance_sq(&x, &zero).unwrap(), rat(1, 3));
        // Tent min(x, 1−x)·2 on a fine mesh vs 0 on the coarse one: ∫ = 1/3.
        let pts = lattice_points(&sq, 2).unwrap().points;
        let vals: Vec<Rational> = pts
            .iter()
            .map(|p| {
                let a = p[0].clone();
                let b = rat(1, 1) - a.clone();
                rat(2, 1) * if a < b { a } else { b }
            })
            .collect();
        let tent = concave_envelope(&pts, &vals).unwrap().function;
        assert_eq!(l2_distance_sq(&tent, &zero).unwrap(), rat(1, 3));
        assert_eq!(l2_distance_sq(&tent, &x).unwrap(), rat(1, 6));
    }

    #[test]
    fn overlay_distance_random_float() {
        let tr = DelzantPolytope::trapezoid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a_pts: Vec<Vec<f64>> = lattice_points(&tr, 2).unwrap().points_as();
        let b_pts: Vec<Vec<f64>> = lattice_points(&tr, 3).unwrap().points_as();
        let av: Vec<f64> = (0..a_pts.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bv: Vec<f64> = (0..b_pts.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fa = concave_envelope(&a_pts, &av).unwrap().function;
        let fb = concave_envelope(&b_pts, &bv).unwrap().function;
        let d = l2_distance_sq(&fa, &fb).unwrap();
        let sym = l2_distance_sq(&fb, &fa).unwrap();
        assert!((d - sym).abs() < 1e-12);
        // Monte Carlo oracle.
        let mut acc = 0.0;
        let mut hits = 0;
        while hits < 20000 {
            let p = vec![rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)];
            let s = p[0] + p[1];
            if !(1.0..=2.0).contains(&s) {
                continue;
            }
            let diff = fa.eval(&p).unwrap() - fb.eval(&p).unwrap();
            acc += diff * diff;
            hits += 1;
        }
        let mc = acc / hits as f64 * 1.5;
        assert!((mc - d).abs() < 0.05 * d.max(0.01), "{mc} vs {d}");
    }
}
