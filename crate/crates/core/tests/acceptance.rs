//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed; exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use destab_core::chowweight::{minimize_breve, ChowProblem, SolverOptions};
use destab_core::hermspace::{
    asymptotic_slope, connecting_geodesic, relative_volume, CMatrix, HermGeodesicRay, HermNorm, Orientation,
};
use destab_core::kdestab::{KSolverOptions, ToricFunctionalContext};
use destab_core::naspace::{Exponent, NaNorm};
use destab_core::polytope::{concave_envelope, lattice_points, DelzantPolytope, PlFunction};
use destab_core::quantize::{destabilizer_convergence, euler_maclaurin_check, k_instability_scan, l2_quantization_check};
use destab_core::scalar::rat;
use destab_core::{Rational, Scalar};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn affine(p: &DelzantPolytope, a: &[i64], b: i64) -> PlFunction<Rational> {
    let a: Vec<Rational> = a.iter().map(|&x| rat(x, 1)).collect();
    PlFunction::affine(p, &a, &rat(b, 1))
}

fn c1() -> Outcome {
    let problem: ChowProblem<Rational> = ChowProblem::new(DelzantPolytope::interval(), 2).unwrap();
    let w = problem.chow_weight(&[rat(0, 1), rat(1, 1), rat(0, 1)]).unwrap();
    outcome(w == rat(1, 6), format!("chow_weight = {w}"))
}

fn c2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    let mut zero_ok = true;
    for k in 1..=6 {
        let exact: ChowProblem<Rational> = ChowProblem::new(DelzantPolytope::interval(), k).unwrap();
        zero_ok &= exact.chow_weight(&vec![rat(0, 1); exact.len()]).unwrap() == rat(0, 1);
        let problem = exact.to_float();
        for _ in 0..1000 {
            let l: Vec<f64> = (0..problem.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            worst = worst.min(problem.chow_weight(&l).unwrap());
        }
    }
    outcome(
        worst >= -1e-12 && zero_ok,
        format!("min chow_weight over 6000 samples = {worst:.3e}, chow_weight(0) = 0: {zero_ok}"),
    )
}

fn c3() -> Outcome {
    let tr = ToricFunctionalContext::new(DelzantPolytope::trapezoid());
    let l = tr.toric_l(&affine(tr.polytope(), &[1, 1], 0)).unwrap();
    let sq = ToricFunctionalContext::new(DelzantPolytope::unit_square());
    let square_zero = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]
        .iter()
        .all(|c| sq.toric_l(&affine(sq.polytope(), &c[..2], c[2] as i64)).unwrap() == rat(0, 1));
    let ok = l == rat(-2, 45) && tr.volume() == &rat(3, 2) && tr.boundary_volume() == &rat(5, 1) && square_zero;
    outcome(
        ok,
        format!(
            "L(x+y) = {l}, vol = {}, vol_sigma = {}, square L(1,x,y) = 0: {square_zero}",
            tr.volume(),
            tr.boundary_volume()
        ),
    )
}

fn c4() -> Outcome {
    let problem = ChowProblem::<Rational>::new(DelzantPolytope::trapezoid(), 4).unwrap().to_float();
    let rep = minimize_breve(&problem, &SolverOptions { tol: 1e-8, ..SolverOptions::default() }).unwrap();
    let n = rep.norm2;
    let ok = rep.sum_residual <= 1e-6 * (1.0 + n)
        && rep.fixedpoint_residual <= 1e-6
        && rep.norm_identity_residual <= 1e-6 * (1.0 + n * n)
        && rep.breve_m < 0.0;
    outcome(
        ok,
        format!(
            "breve_M = {:.6}, |sum| = {:.1e}, fixed point = {:.1e}, norm identity = {:.1e}",
            rep.breve_m, rep.sum_residual, rep.fixedpoint_residual, rep.norm_identity_residual
        ),
    )
}

fn tent_square() -> PlFunction<Rational> {
    let pts = lattice_points(&DelzantPolytope::unit_square(), 2).unwrap().points;
    let vals: Vec<Rational> = pts.iter().map(|u| u[0].clone().min(rat(1, 1) - &u[0])).collect();
    concave_envelope(&pts, &vals).unwrap().function
}

fn c5() -> Outcome {
    let sq = DelzantPolytope::unit_square();
    let ks: Vec<i64> = (2..=64).step_by(2).collect();
    let s = euler_maclaurin_check(&sq, &tent_square(), &ks).unwrap();
    let slope = s.fit.map_or(f64::NAN, |f| f.slope);
    let last = s.at(64).unwrap().residual;
    outcome(
        slope <= -0.8 && last <= 0.05 * s.limit.abs(),
        format!("C_P L(g) = {}, fitted slope = {slope:.4}, residual at k=64 = {last:.3e}", s.limit),
    )
}

fn c6() -> Outcome {
    let iv = DelzantPolytope::interval();
    let ks: Vec<i64> = (1..=64).collect();
    let x = l2_quantization_check(&iv, &affine(&iv, &[1], 0), &ks).unwrap();
    let pts = vec![vec![rat(0, 1)], vec![rat(1, 2)], vec![rat(1, 1)]];
    let tent = concave_envelope(&pts, &[rat(0, 1), rat(1, 2), rat(0, 1)]).unwrap().function;
    let t = l2_quantization_check(&iv, &tent, &ks).unwrap();
    let x_ok = x.points.iter().all(|p| (p.observable - (1.0f64 / 3.0).sqrt()).abs() <= 1.0 / p.k as f64);
    let t_ok = t.points.iter().all(|p| (p.observable - (1.0f64 / 12.0).sqrt()).abs() <= 2.0 / p.k as f64);
    outcome(
        x_ok && t_ok,
        format!(
            "x within 1/k: {x_ok}, tent within 2/k: {t_ok}; residuals at k=64: {:.2e}, {:.2e}",
            x.at(64).unwrap().residual,
            t.at(64).unwrap().residual
        ),
    )
}

fn c7() -> Outcome {
    let tr = DelzantPolytope::trapezoid();
    let ks: Vec<i64> = (1..=32).collect();
    let r = k_instability_scan(&tr, &affine(&tr, &[1, 1], 0), &ks).unwrap();
    let m32 = r.series.at(32).unwrap().observable;
    let target = -4.0 / 27.0;
    let literal = 2.0 * 32.0 * m32;
    let ok = r.first_unstable.is_some_and(|k| k <= 32) && (literal - target).abs() <= 0.15 * 4.0 / 27.0;
    outcome(
        ok,
        format!(
            "k0 = {:?}, 2k*M_k at k=32 = {literal:.4} vs -4/27 (2*M_k = {:.4})",
            r.first_unstable,
            2.0 * m32
        ),
    )
}

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> HermNorm {
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    HermNorm::new(&m * m.adjoint() + CMatrix::identity(n, n) * Complex64::new(0.5, 0.0)).unwrap()
}

fn random_ray(rng: &mut ChaCha8Rng, h0: &HermNorm) -> HermGeodesicRay {
    let n = h0.dim();
    let g = connecting_geodesic(h0, &random_pd(rng, n)).unwrap();
    let top = g.eigenvalues().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // Keeps the spectral spread at t = 1e3 inside double-precision range.
    let s = rng.gen_range(0.05..0.2) / top;
    HermGeodesicRay::new(h0.clone(), g.generator() * Complex64::new(s, 0.0), Orientation::Minus).unwrap()
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut good = 0;
    for i in 0..50 {
        let n = 2 + i % 4;
        let h0 = random_pd(&mut rng, n);
        let (r1, r2) = (random_ray(&mut rng, &h0), random_ray(&mut rng, &h0));
        let check = || -> destab_core::Result<bool> {
            let s3 = asymptotic_slope(&r1, &r2, 1e3)?;
            let s2 = asymptotic_slope(&r1, &r2, 1e2)?;
            let d = r1.na_limit().dp_distance(&r2.na_limit(), Exponent::Finite(2.0))?;
            Ok((s3 - d).abs() <= 10.0 * (s3 - s2).abs())
        };
        good += matches!(check(), Ok(true)) as usize;
    }
    outcome(good >= 48, format!("{good}/50 pairs within tolerance"))
}

fn c9() -> Outcome {
    let problem = ChowProblem::<Rational>::new(DelzantPolytope::trapezoid(), 3).unwrap().to_float();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let l: Vec<f64> = (0..problem.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = problem.subgradient_breve(&l).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..l.len() {
            let mut a = l.clone();
            let mut b = l.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (problem.breve_m(&a).unwrap() - problem.breve_m(&b).unwrap()) / (2.0 * h);
            num += (g[i] - fd).powi(2);
            den += fd * fd;
        }
        worst = worst.max((num / den).sqrt());
    }
    outcome(worst <= 1e-5, format!("worst relative error = {worst:.2e}"))
}

fn c10() -> Outcome {
    let tr = DelzantPolytope::trapezoid();
    let ctx = ToricFunctionalContext::new(tr.clone());
    let (f, krep) = ctx.minimize_breve_f(&KSolverOptions { grid_level: 32, ..KSolverOptions::default() }).unwrap();
    let rep = destabilizer_convergence(&tr, &[2, 4, 6, 8, 10, 12], &f, &SolverOptions::default()).unwrap();
    let (Some(first), Some(last)) = (rep.row(2), rep.row(12)) else {
        return outcome(false, "missing rows");
    };
    let (Some(d2), Some(d12), Some(gap)) = (first.l2_distance_sq, last.l2_distance_sq, last.objective_gap) else {
        return outcome(false, "solver did not converge at k = 2 or k = 12");
    };
    let rel = gap / krep.breve_f.abs();
    outcome(
        d12 <= d2 && rel <= 0.15,
        format!(
            "F(f) = {:.5}, L2^2 at k=2: {d2:.3e}, at k=12: {d12:.3e}; breve_M_12 = {:.5}, relative gap {rel:.3}",
            krep.breve_f,
            last.breve_m.unwrap_or(f64::NAN)
        ),
    )
}

fn random_na(rng: &mut ChaCha8Rng, n: usize) -> NaNorm<f64> {
    NaNorm::new("e", (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap()
}

fn random_na_exact(rng: &mut ChaCha8Rng, n: usize) -> NaNorm<Rational> {
    NaNorm::new("e", (0..n).map(|_| rat(rng.gen_range(-12..13), rng.gen_range(1..5))).collect()).unwrap()
}

fn c11() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ps = [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Finite(3.0), Exponent::Infinity];
    let mut violations: Vec<String> = Vec::new();
    let mut flag = |name: &str, bad: usize| {
        if bad > 0 {
            violations.push(format!("{name}: {bad}"));
        }
    };

    // Triangle inequality.
    let mut bad = 0;
    for i in 0..500 {
        let n = 1 + i % 8;
        let (a, b, c) = (random_na(&mut rng, n), random_na(&mut rng, n), random_na(&mut rng, n));
        for p in ps {
            let (ab, bc, ac) = (a.dp_distance(&b, p).unwrap(), b.dp_distance(&c, p).unwrap(), a.dp_distance(&c, p).unwrap());
            bad += (ac > ab + bc + TOL * (1.0 + ab + bc)) as usize;
        }
    }
    flag("na triangle", bad);
    let mut bad = 0;
    for i in 0..500 {
        let n = 2 + i % 4;
        let (a, b, c) = (random_pd(&mut rng, n), random_pd(&mut rng, n), random_pd(&mut rng, n));
        for p in ps {
            let (ab, bc, ac) = (a.dp_distance(&b, p).unwrap(), b.dp_distance(&c, p).unwrap(), a.dp_distance(&c, p).unwrap());
            bad += (ac > ab + bc + TOL * (1.0 + ab + bc)) as usize;
        }
    }
    flag("hermitian triangle", bad);

    // Comparisons N^{-1/p} d_inf <= d_p <= d_inf, and the volume bound.
    let mut bad_cmp = 0;
    let mut bad_vol = 0;
    for i in 0..500 {
        let n = 1 + i % 8;
        let (a, b) = (random_na_exact(&mut rng, n), random_na_exact(&mut rng, n));
        let dinf = a.dp_distance(&b, Exponent::Infinity).unwrap();
        for p in &ps[..3] {
            let d = a.dp_distance(&b, *p).unwrap();
            let lo = (n as f64).powf(-1.0 / p.value()) * dinf;
            bad_cmp += (d > dinf + TOL * (1.0 + dinf) || d < lo - TOL * (1.0 + dinf)) as usize;
        }
        let ev = a.relative_volume(&b).unwrap().to_f64().abs();
        let d1 = a.dp_distance(&b, Exponent::Finite(1.0)).unwrap();
        let d2 = a.dp_distance(&b, Exponent::Finite(2.0)).unwrap();
        bad_vol += (ev > d1 + TOL * (1.0 + d1) || d1 > d2 + TOL * (1.0 + d2)) as usize;
    }
    for i in 0..500 {
        let n = 2 + i % 4;
        let (a, b) = (random_pd(&mut rng, n), random_pd(&mut rng, n));
        let dinf = a.dp_distance(&b, Exponent::Infinity).unwrap();
        let d2 = a.dp_distance(&b, Exponent::Finite(2.0)).unwrap();
        bad_cmp += (d2 > dinf + TOL * (1.0 + dinf) || d2 < dinf / (n as f64).sqrt() - TOL * (1.0 + dinf)) as usize;
        let ev = relative_volume(&b, &a).unwrap().abs();
        bad_vol += (ev > d2 + TOL * (1.0 + d2)) as usize;
    }
    flag("comparisons", bad_cmp);
    flag("volume bound", bad_vol);

    // Constant speed along geodesics: exact on the non-Archimedean side.
    let mut bad = 0;
    for i in 0..500 {
        let n = 1 + i % 8;
        let (a, b) = (random_na_exact(&mut rng, n), random_na_exact(&mut rng, n));
        let s = rat(rng.gen_range(0..=8), 8);
        let mid = a.geodesic(&b, &s).unwrap();
        let spec_mid = mid.relative_spectra(&a).unwrap();
        let spec_end = b.relative_spectra(&a).unwrap();
        bad += spec_mid.iter().zip(&spec_end).any(|(x, y)| *x != &s * y) as usize;
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
            let d = mid.dp_distance(&a, p).unwrap();
            let full = b.dp_distance(&a, p).unwrap();
            bad += ((d - s.to_f64() * full).abs() > TOL * (1.0 + full)) as usize;
        }
    }
    for i in 0..500 {
        let n = 2 + i % 4;
        let (a, b) = (random_pd(&mut rng, n), random_pd(&mut rng, n));
        let ray = connecting_geodesic(&a, &b).unwrap();
        let s: f64 = rng.gen_range(0.0..1.0);
        let d = ray.value(s).unwrap().dp_distance(&a, Exponent::Finite(2.0)).unwrap();
        let full = a.dp_distance(&b, Exponent::Finite(2.0)).unwrap();
        // Matrix exponentials and two eigen-solves: allow round-off at 1e-9.
        bad += ((d - s * full).abs() > 1e-9 * (1.0 + full)) as usize;
    }
    flag("constant speed", bad);

    // Envelope idempotence, exact.
    let mut bad = 0;
    for i in 0..500 {
        let (p, k) = match i % 3 {
            0 => (DelzantPolytope::interval(), 1 + (i % 7) as i64),
            1 => (DelzantPolytope::unit_square(), 1 + (i % 4) as i64),
            _ => (DelzantPolytope::trapezoid(), 1 + (i % 3) as i64),
        };
        let pts = lattice_points(&p, k).unwrap().points;
        let vals: Vec<Rational> = pts.iter().map(|_| rat(rng.gen_range(-9..10), rng.gen_range(1..4))).collect();
        let once = concave_envelope(&pts, &vals).unwrap();
        let twice = concave_envelope(&pts, once.values()).unwrap();
        bad += (once.values() != twice.values() || once.values().iter().zip(&vals).any(|(g, v)| g < v)) as usize;
    }
    flag("envelope idempotence", bad);

    let ok = violations.is_empty();
    outcome(
        ok,
        if ok {
            "no violations in 500 instances per family".to_string()
        } else {
            format!("violations: {}", violations.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("exact Chow weight", c1, 1),
        ("CP1 semistability sampling", c2, 10),
        ("toric DF exactness", c3, 1),
        ("destabilizer identities at k=4", c4, 60),
        ("Euler-Maclaurin coefficient", c5, 10),
        ("L2 quantization", c6, 5),
        ("k-instability onset", c7, 30),
        ("NA limit isometry", c8, 10),
        ("subgradient correctness", c9, 10),
        ("convergence experiment", c10, 300),
        ("metric-axiom suite", c11, 30),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let ok = out.ok && in_time;
        failed += !ok as usize;
        println!(
            "criterion {:>2} {}: {} ({}; {:.2} s of {} s{})",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget,
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
