//! Convex hull of a pointed polyhedral cone in ℝ^m, by beneath-beyond with
//! outside sets.
//!
//! Ordinary hulls of points `u` use the vectors `(u, 1)`. Upper hulls of
//! lifted points `(u, h)` add the direction `(0, …, 0, −1, 0)`; facets not
//! containing it are exactly the upper facets. Vectors lying on a facet
//! hyperplane are never inserted, so a facet's vertices are the inserted
//! generators it contains.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct HullFacet<S> {
    /// Generator indices, sorted.
    pub verts: Vec<usize>,
    /// Linear functional vanishing on `verts`, nonnegative on the cone.
    pub normal: Vec<S>,
    /// `neighbors[i]` shares every vertex of this facet except `verts[i]`.
    pub neighbors: Vec<usize>,
}

struct Work<S> {
    facet: HullFacet<S>,
    alive: bool,
    outside: Vec<usize>,
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn max_abs<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

/// Sign of `⟨normal, v⟩` with a tolerance relative to both factors.
pub fn side<S: Scalar>(normal: &[S], v: &[S]) -> Ordering {
    let scale = max_abs(normal) * max_abs(v) * normal.len() as f64;
    dot(normal, v).sign_tol(scale)
}

/// Functional `x ↦ det[v_1; …; v_{m−1}; x]`.
fn normal_through<S: Scalar>(rows: &[&Vec<S>]) -> Vec<S> {
    let m = rows.len() + 1;
    (0..m)
        .map(|j| {
            let minor: Vec<Vec<S>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let d = if minor.is_empty() {
                S::one()
            } else {
                linalg::det(&minor)
            };
            if (m - 1 + j) % 2 == 1 {
                -d
            } else {
                d
            }
        })
        .collect()
}

fn oriented<S: Scalar>(vecs: &[Vec<S>], verts: &[usize], interior: &[S]) -> Vec<S> {
    let rows: Vec<&Vec<S>> = verts.iter().map(|&i| &vecs[i]).collect();
    let n = normal_through(&rows);
    if dot(&n, interior) < S::zero() {
        n.into_iter().map(|x| -x).collect()
    } else {
        n
    }
}

/// Facets of the cone generated by `vecs`. `initial` must name `m` linearly
/// independent generators.
pub fn cone_hull<S: Scalar>(vecs: &[Vec<S>], initial: &[usize]) -> Result<Vec<HullFacet<S>>> {
    let m = vecs.first().map_or(0, Vec::len);
    if m < 2 || initial.len() != m {
        return Err(Error::Empty);
    }
    let init_rows: Vec<Vec<S>> = initial.iter().map(|&i| vecs[i].clone()).collect();
    if linalg::rank(&init_rows) != m {
        return Err(Error::Empty);
    }
    let interior: Vec<S> = (0..m)
        .map(|c| {
            init_rows
                .iter()
                .fold(S::zero(), |acc, r| acc + r[c].clone())
        })
        .collect();

    let mut work: Vec<Work<S>> = Vec::new();
    let mut simplex: Vec<usize> = initial.to_vec();
    simplex.sort_unstable();
    for skip in 0..m {
        let verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, &v)| v)
            .collect();
        let normal = oriented(vecs, &verts, &interior);
        // Facet omitting simplex[j] is work[j]; neighbor opposite verts[i] omits that vertex.
        let neighbors = verts
            .iter()
            .map(|v| simplex.iter().position(|s| s == v).unwrap())
            .collect();
        work.push(Work {
            facet: HullFacet {
                verts,
                normal,
                neighbors,
            },
            alive: true,
            outside: Vec::new(),
        });
    }

    let in_initial = |i: usize| initial.contains(&i);
    for i in 0..vecs.len() {
        if in_initial(i) {
            continue;
        }
        if let Some(f) = work
            .iter()
            .position(|w| side(&w.facet.normal, &vecs[i]) == Ordering::Less)
        {
            work[f].outside.push(i);
        }
    }

    let mut pending: Vec<usize> = (0..work.len()).collect();
    while let Some(fi) = pending.pop() {
        if !work[fi].alive || work[fi].outside.is_empty() {
            continue;
        }
        // Farthest outside generator for this facet.
        let p = {
            let n = &work[fi].facet.normal;
            *work[fi]
                .outside
                .iter()
                .min_by(|&&a, &&b| {
                    dot(n, &vecs[a])
                        .partial_cmp(&dot(n, &vecs[b]))
                        .unwrap_or(Ordering::Equal)
                        .then(a.cmp(&b))
                })
                .unwrap()
        };

        // Visible region by BFS from fi.
        let mut visible = vec![fi];
        let mut is_vis: HashMap<usize, bool> = HashMap::new();
        is_vis.insert(fi, true);
        let mut q = 0;
        while q < visible.len() {
            let f = visible[q];
            q += 1;
            for &nb in &work[f].facet.neighbors {
                if is_vis.contains_key(&nb) {
                    continue;
                }
                let v = side(&work[nb].facet.normal, &vecs[p]) == Ordering::Less;
                is_vis.insert(nb, v);
                if v {
                    visible.push(nb);
                }
            }
        }

        // Horizon ridges and the new facets on them.
        let mut new_ids = Vec::new();
        let mut ridge_map: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for &f in &visible {
            let fac = work[f].facet.clone();
            for (slot, &nb) in fac.neighbors.iter().enumerate() {
                if is_vis[&nb] {
                    continue;
                }
                let mut verts: Vec<usize> = fac
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != slot)
                    .map(|(_, &v)| v)
                    .collect();
                verts.push(p);
                verts.sort_unstable();
                let normal = oriented(vecs, &verts, &interior);
                let id = work.len();
                let p_pos = verts.iter().position(|&v| v == p).unwrap();
                let mut neighbors = vec![usize::MAX; m - 1];
                neighbors[p_pos] = nb;
                // Point nb back at the new facet.
                let back = work[nb]
                    .facet
                    .neighbors
                    .iter()
                    .position(|&x| x == f)
                    .expect("neighbor relation is symmetric");
                work[nb].facet.neighbors[back] = id;
                for (i, &v) in verts.iter().enumerate() {
                    if v == p {
                        continue;
                    }
                    let key: Vec<usize> = verts.iter().copied().filter(|&x| x != v).collect();
                    match ridge_map.remove(&key) {
                        Some((other, other_slot)) => {
                            neighbors[i] = other;
                            work[other].facet.neighbors[other_slot] = id;
                        }
                        None => {
                            ridge_map.insert(key, (id, i));
                        }
                    }
                }
                work.push(Work {
                    facet: HullFacet {
                        verts,
                        normal,
                        neighbors,
                    },
                    alive: true,
                    outside: Vec::new(),
                });
                new_ids.push(id);
            }
        }
        if !ridge_map.is_empty() {
            return Err(Error::Singular("hull horizon is not a closed ridge cycle".into()));
        }

        let mut orphans = Vec::new();
        for &f in &visible {
            work[f].alive = false;
            orphans.append(&mut work[f].outside);
        }
        for o in orphans {
            if o == p {
                continue;
            }
            if let Some(&f) = new_ids
                .iter()
                .find(|&&f| side(&work[f].facet.normal, &vecs[o]) == Ordering::Less)
            {
                work[f].outside.push(o);
            }
        }
        pending.extend(new_ids);
    }

    // Compact.
    let mut remap = vec![usize::MAX; work.len()];
    let mut out = Vec::new();
    for (i, w) in work.iter().enumerate() {
        if w.alive {
            remap[i] = out.len();
            out.push(w.facet.clone());
        }
    }
    for f in &mut out {
        for nb in &mut f.neighbors {
            *nb = remap[*nb];
        }
    }
    Ok(out)
}

/// Groups facets whose hyperplanes coincide and that are connected through
/// shared ridges. `keep` filters which facets take part.
pub fn merge_coplanar<S: Scalar>(
    vecs: &[Vec<S>],
    facets: &[HullFacet<S>],
    keep: impl Fn(&HullFacet<S>) -> bool,
) -> Vec<Vec<usize>> {
    let n = facets.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for (i, f) in facets.iter().enumerate() {
        if !keep(f) {
            continue;
        }
        for &nb in &f.neighbors {
            if nb <= i || !keep(&facets[nb]) {
                continue;
            }
            let opp = facets[nb]
                .verts
                .iter()
                .find(|v| !f.verts.contains(v))
                .copied()
                .expect("adjacent facets differ in one vertex");
            if side(&f.normal, &vecs[opp]) == Ordering::Equal {
                let (a, b) = (find(&mut parent, i), find(&mut parent, nb));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        if keep(&facets[i]) {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Indices of `m` linearly independent rows, preferring early ones.
pub fn independent_subset<S: Scalar>(vecs: &[Vec<S>], forced: &[usize]) -> Option<Vec<usize>> {
    let m = vecs.first()?.len();
    let mut chosen: Vec<usize> = Vec::new();
    let mut rows: Vec<Vec<S>> = Vec::new();
    for i in forced.iter().copied().chain(0..vecs.len()) {
        if chosen.contains(&i) {
            continue;
        }
        rows.push(vecs[i].clone());
        if linalg::rank(&rows) == rows.len() {
            chosen.push(i);
            if chosen.len() == m {
                return Some(chosen);
            }
        } else {
            rows.pop();
        }
    }
    None
}
