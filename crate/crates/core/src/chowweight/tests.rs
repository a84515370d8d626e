use super::*;
use crate::polytope::PlFunction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interval2() -> ChowProblem<Rational> {
    ChowProblem::new(DelzantPolytope::interval(), 2).unwrap()
}

fn q(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| rat(x, 1)).collect()
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn interval_tent_values() {
    let p = interval2();
    let lam = q(&[0, 1, 0]);
    assert_eq!(p.chow_weight(&lam).unwrap(), rat(1, 6));
    assert_eq!(p.breve_m(&lam).unwrap(), rat(3, 8));
    let nc = p.normalized_chow(&lam, Exponent::Finite(2.0)).unwrap();
    assert!((nc - (1.0 / 6.0) / (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    let g = p.fs_k(&lam).unwrap();
    assert_eq!(g.eval(&[rat(1, 2)]).unwrap(), rat(1, 2));
    assert_eq!(g.eval(&[rat(1, 4)]).unwrap(), rat(1, 4));
    assert_eq!(p.sn_k(&g).unwrap(), lam);
}

#[test]
fn trivial_and_shifted_weights() {
    let p = interval2();
    let zero = q(&[0, 0, 0]);
    assert_eq!(p.chow_weight(&zero).unwrap(), rat(0, 1));
    assert_eq!(p.breve_m(&zero).unwrap(), rat(0, 1));
    assert!(p.fs_k(&zero).unwrap().values().iter().all(|v| *v == rat(0, 1)));
    assert!(matches!(
        p.normalized_chow(&zero, Exponent::Finite(2.0)),
        Err(Error::ZeroVector)
    ));
    let lam = q(&[0, 1, 0]);
    let shifted: Vec<Rational> = lam.iter().map(|x| x + rat(6, 1)).collect();
    assert_eq!(p.chow_weight(&shifted).unwrap(), rat(1, 6));
    // λ + k·c ↦ g + c.
    let g = p.fs_k(&shifted).unwrap();
    assert_eq!(g.eval(&[rat(1, 2)]).unwrap(), rat(7, 2));
}

#[test]
fn sn_k_of_constants_and_concavity_check() {
    let tr = DelzantPolytope::trapezoid();
    let p: ChowProblem<Rational> = ChowProblem::new(tr.clone(), 2).unwrap();
    let c = PlFunction::constant(&tr, rat(3, 4));
    assert!(p.sn_k(&c).unwrap().iter().all(|v| *v == rat(3, 2)));
    let z = PlFunction::constant(&tr, rat(0, 1));
    assert!(p.sn_k(&z).unwrap().iter().all(|v| *v == rat(0, 1)));
    let flagged = c.map_values(|v| v.clone(), false);
    assert!(matches!(p.sn_k(&flagged), Err(Error::NotConcave)));
}

#[test]
fn level_must_cover_vertices() {
    let half = DelzantPolytope::new(vec![vec![1], vec![-1]], vec![rat(0, 1), rat(1, 2)]).unwrap();
    assert!(matches!(
        ChowProblem::<f64>::new(half.clone(), 1),
        Err(Error::LevelDoesNotCoverPolytope { k: 1 })
    ));
    assert!(ChowProblem::<f64>::new(half, 2).is_ok());
    assert!(ChowProblem::<f64>::new(DelzantPolytope::interval(), 0).is_err());
}

#[test]
fn subgradient_at_zero() {
    let p = interval2();
    let g = p.subgradient_breve(&q(&[0, 0, 0])).unwrap();
    assert_eq!(g, vec![rat(1, 3), rat(-2, 3), rat(1, 3)]);
}

#[test]
fn subgradient_matches_finite_differences() {
    let p: ChowProblem<f64> = ChowProblem::new(DelzantPolytope::trapezoid(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for _ in 0..10 {
        let lam = random_weights(&mut rng, p.len());
        let g = p.subgradient_breve(&lam).unwrap();
        let chow_part: f64 = g
            .iter()
            .zip(&lam)
            .map(|(gi, l)| gi - l / (9.0 * p.len() as f64))
            .sum();
        assert!(chow_part.abs() < 1e-12);
        let fd: Vec<f64> = (0..p.len())
            .map(|i| {
                let mut a = lam.clone();
                let mut b = lam.clone();
                a[i] += h;
                b[i] -= h;
                (p.breve_m(&a).unwrap() - p.breve_m(&b).unwrap()) / (2.0 * h)
            })
            .collect();
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let size: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-5 * size, "{err} vs {size}");
    }
}

#[test]
fn weight_vector_json() {
    let p = interval2();
    let w = p.weight_vector(q(&[0, 1, 0])).unwrap();
    let v = w.to_json();
    assert_eq!(v["k"], 2);
    assert_eq!(v["points"][1][0], "1/2");
    assert_eq!(WeightVector::<Rational>::from_json(&v).unwrap(), w);
    let f: WeightVector<f64> = WeightVector::from_json(&v).unwrap();
    assert_eq!(f.weights, vec![0.0, 1.0, 0.0]);
    assert!(p.weight_vector(q(&[1])).is_err());
    assert_eq!(w.to_na_norm().jumping_numbers(), q(&[1, 0, 0]));
}

#[test]
fn interval_is_semistable() {
    for k in 1..=6 {
        let p: ChowProblem<f64> = ChowProblem::new(DelzantPolytope::interval(), k).unwrap();
        let rep = minimize_breve(&p, &SolverOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.breve_m.abs() < 1e-10, "k={k}: {}", rep.breve_m);
        assert!(rep.norm2 < 1e-6);
    }
}

#[test]
fn trapezoid_destabilizer_identities() {
    let p: ChowProblem<f64> = ChowProblem::new(DelzantPolytope::trapezoid(), 4).unwrap();
    let rep = minimize_breve(&p, &SolverOptions::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.breve_m < 0.0);
    let scale = 1.0 + rep.norm2;
    assert!(rep.sum_residual <= 1e-6 * scale);
    assert!(rep.fixedpoint_residual <= 1e-6);
    assert!(rep.norm_identity_residual <= 1e-6 * (1.0 + rep.norm2 * rep.norm2));
    // Capping at the top weight is the identity on λ♭.
    let top = rep.lambda.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let capped = rep.lambda.to_na_norm().cap(&top);
    assert_eq!(capped.weights(), rep.lambda.weights.as_slice());
    // Random directions do no better.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let lam = random_weights(&mut rng, p.len());
        let best_scale = {
            let m = p.chow_weight(&lam).unwrap();
            let n2: f64 = lam.iter().map(|x| x * x).sum::<f64>() / lam.len() as f64;
            (-m * 16.0 / n2).max(0.0)
        };
        let scaled: Vec<f64> = lam.iter().map(|x| x * best_scale).collect();
        assert!(p.breve_m(&scaled).unwrap() >= rep.breve_m - 1e-9);
    }
}

#[test]
fn subgradient_method_agrees_roughly() {
    let p: ChowProblem<f64> = ChowProblem::new(DelzantPolytope::trapezoid(), 2).unwrap();
    let mnp = minimize_breve(&p, &SolverOptions::default()).unwrap();
    let opts = SolverOptions {
        method: Method::Subgradient,
        max_iter: 4000,
        ..SolverOptions::default()
    };
    let sg = minimize_breve(&p, &opts).unwrap();
    assert!(sg.breve_m >= mnp.breve_m - 1e-9);
    assert!(sg.breve_m - mnp.breve_m <= 0.05 * mnp.breve_m.abs(), "{} vs {}", sg.breve_m, mnp.breve_m);
    assert!(sg.sum_residual < 1e-8);
}

#[test]
fn report_json_has_diagnostics() {
    let p: ChowProblem<f64> = ChowProblem::new(DelzantPolytope::interval(), 2).unwrap();
    let rep = minimize_breve(&p, &SolverOptions::default()).unwrap();
    let v = rep.to_json();
    assert!(v["diagnostics"]["fixedpoint_residual"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["diagnostics"]["method"], "min-norm-point");
}

fn exact_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n).map(|_| rat(rng.gen_range(-8..9), 4)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_invariance_and_homogeneity_exact(seed in any::<u64>(), c in -5i64..6, a in 1i64..5) {
        let p: ChowProblem<Rational> = ChowProblem::new(DelzantPolytope::trapezoid(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lam = exact_weights(&mut rng, p.len());
        let m = p.chow_weight(&lam).unwrap();
        let shifted: Vec<Rational> = lam.iter().map(|x| x + rat(c, 3)).collect();
        prop_assert_eq!(p.chow_weight(&shifted).unwrap(), m.clone());
        let scaled: Vec<Rational> = lam.iter().map(|x| x * rat(a, 2)).collect();
        prop_assert_eq!(p.chow_weight(&scaled).unwrap(), m.clone() * rat(a, 2));
        // Scaling law of the convexified functional.
        let n2 = lam.iter().map(|x| x * x).sum::<Rational>() / rat(p.len() as i64, 1);
        let aa = rat(a, 2);
        let expect = rat(2, 1) * aa.clone() * m + aa.clone() * aa * n2 / rat(8, 1);
        prop_assert_eq!(p.breve_m(&scaled).unwrap(), expect);
    }

    #[test]
    fn fs_sn_round_trips(seed in any::<u64>()) {
        let tr = DelzantPolytope::trapezoid();
        let p: ChowProblem<Rational> = ChowProblem::new(tr.clone(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lam = exact_weights(&mut rng, p.len());
        let g = p.fs_k(&lam).unwrap();
        let back = p.sn_k(&g).unwrap();
        for (b, l) in back.iter().zip(&lam) {
            prop_assert!(b >= l);
        }
        prop_assert_eq!(p.sn_k(&p.fs_k(&back).unwrap()).unwrap(), back.clone());
        // FS∘SN ≤ id on concave functions from a coarser level.
        let coarse: ChowProblem<Rational> = ChowProblem::new(tr, 2).unwrap();
        let h = coarse.fs_k(&exact_weights(&mut rng, coarse.len())).unwrap();
        let s = p.sn_k(&h).unwrap();
        let fh = p.fs_k(&s).unwrap();
        for (u, v) in p.points().iter().zip(fh.values()) {
            prop_assert!(*v <= h.eval(u).unwrap());
        }
        prop_assert_eq!(p.sn_k(&fh).unwrap(), s);
    }

    #[test]
    fn convexity_and_lipschitz(seed in any::<u64>()) {
        let p: ChowProblem<f64> = ChowProblem::new(DelzantPolytope::trapezoid(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_weights(&mut rng, p.len());
        let b = random_weights(&mut rng, p.len());
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let (ma, mb, mm) = (p.chow_weight(&a).unwrap(), p.chow_weight(&b).unwrap(), p.chow_weight(&mid).unwrap());
        prop_assert!(mm <= 0.5 * (ma + mb) + 1e-12);
        let (ba, bb, bm) = (p.breve_m(&a).unwrap(), p.breve_m(&b).unwrap(), p.breve_m(&mid).unwrap());
        prop_assert!(bm <= 0.5 * (ba + bb) + 1e-12);
        // |⨍Env(a) − ⨍Env(b)| ≤ sup|a − b| ≤ √N d₂, and the mean term is ≤ d₂.
        let d2 = (a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / p.len() as f64).sqrt();
        let c = (p.len() as f64).sqrt() + 1.0;
        prop_assert!((ma - mb).abs() <= c * d2 + 1e-12);
    }
}
