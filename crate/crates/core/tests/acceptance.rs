//! Acceptance gate: one pass/fail line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use mixedop::config::ProblemSpec;
use mixedop::eigen::{
    existence_predicate, lambda1_dense, lambda1_descent, EigenOptions, ExtReal, WeightFn,
};
use mixedop::forms::{ap_gap, picone_gap, residual, FormContext, QuadOrders};
use mixedop::mesh::{build_space, lp_norm_pow, CoeffVec};
use mixedop::minimize::{energy, minimize, multi_start, MultiStartReport, SolveOptions};
use mixedop::nonlinearity::NonlinearityModel;
use mixedop::verify::{degiorgi_auto, existence_threshold, run_verify, VerifyReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ctx(n: usize, p: f64, s: f64) -> FormContext {
    FormContext::new(build_space(n, p, s).unwrap(), QuadOrders::default()).unwrap()
}

fn lambda1_of(c: &FormContext) -> f64 {
    lambda1_dense(c, &WeightFn::zero(c.space())).unwrap().lambda1.0
}

fn logistic_spec(n: usize, lambda: f64, seed: u64) -> ProblemSpec {
    ProblemSpec::from_toml_str(&format!(
        "p = 2.0\ns = 0.5\nn_cells = {n}\n[nonlinearity]\nfamily = \"logistic\"\nlambda_lin = {lambda:?}\nb = 1.0\nq = 4.0\n[solve]\nstarts = 5\nseed = {seed}\n"
    ))
    .unwrap()
}

fn c1_picone() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut min_gap = f64::INFINITY;
    for _ in 0..100_000 {
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let a = rng.gen_range(0.1..2.0);
        let b = rng.gen_range(0.1..2.0);
        let c = rng.gen_range(0.0..2.0);
        let d = rng.gen_range(0.0..2.0);
        min_gap = min_gap.min(picone_gap(a, b, c, d, p).unwrap());
    }
    let mut max_eq: f64 = 0.0;
    for _ in 0..1_000 {
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let a = rng.gen_range(0.1..2.0);
        let b = rng.gen_range(0.1..2.0);
        let c = rng.gen_range(0.0..2.0);
        max_eq = max_eq.max(picone_gap(a, b, c, c * b / a, p).unwrap().abs());
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: min_gap >= -1e-12 && max_eq <= 1e-10 && secs < 5.0,
        detail: format!(
            "min gap {min_gap:.3e} >= -1e-12; equality |gap| {max_eq:.3e} <= 1e-10; {secs:.2} s < 5 s"
        ),
    }
}

fn c2_ap() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut min_gap = f64::INFINITY;
    for k in 0..100_000 {
        let p = [1.5, 2.0, 3.5][k % 3];
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        min_gap = min_gap.min(ap_gap(&v, &w, p).unwrap());
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: min_gap >= -1e-12 && secs < 5.0,
        detail: format!("min gap {min_gap:.3e} >= -1e-12; {secs:.2} s < 5 s"),
    }
}

fn c3_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for (p, s) in [(2.0, 0.5), (3.0, 0.3), (1.5, 0.7)] {
        let c = ctx(32, p, s);
        let m = NonlinearityModel::new(
            mixedop::nonlinearity::Coefficient::Constant(1.0),
            0.5 * (p - 1.0),
            5.0,
            mixedop::nonlinearity::Coefficient::Constant(1.0),
            p + 2.0,
            p,
        )
        .unwrap();
        for _ in 0..5 {
            let u = CoeffVec((0..31).map(|_| rng.gen_range(0.05..1.0)).collect());
            let r = residual(&c, &u, &m);
            let mut err: f64 = 0.0;
            for i in 0..31 {
                let h = 1e-6 * (1.0 + u.0[i].abs());
                let mut up = u.clone();
                let mut dn = u.clone();
                up.0[i] += h;
                dn.0[i] -= h;
                let fd = (energy(&c, &m, &up) - energy(&c, &m, &dn)) / (2.0 * h);
                err = err.max((fd - r.0[i]).abs());
            }
            worst = worst.max(err / r.max_abs());
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("max relative FD error {worst:.3e} <= 1e-6"),
    }
}

fn c4_eigen() -> Outcome {
    let t = Instant::now();
    let c = ctx(128, 2.0, 0.5);
    let a = WeightFn::zero(c.space());
    let dense = lambda1_dense(&c, &a).unwrap().lambda1.0;
    let descent = lambda1_descent(&c, &a, &EigenOptions::for_p(3.0), &c.space().constant(1.0))
        .map(|r| r.lambda1.0)
        .unwrap_or(f64::NAN);
    let shifted = lambda1_dense(&c, &a.shifted(5.0)).unwrap().lambda1.0;
    let diff = (descent - dense).abs();
    let shift_err = (shifted - dense - 5.0).abs();
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: diff <= 1e-6 && dense > PI * PI && shift_err <= 1e-10 && secs < 60.0,
        detail: format!(
            "dense {dense:.10}, descent diff {diff:.3e} <= 1e-6; > pi^2; shift error {shift_err:.3e} <= 1e-10; {secs:.2} s < 60 s"
        ),
    }
}

struct Sharpness {
    l1: f64,
    sweep: Vec<(f64, VerifyReport)>,
}

fn c5_sharpness(data: &Sharpness) -> Outcome {
    let c = ctx(128, 2.0, 0.5);
    let l1 = data.l1;
    let thr = existence_threshold(&c, l1, 1.0, 4.0, &SolveOptions::for_p(2.0), 1e-3);
    let (thr_ok, thr_msg) = match thr {
        Some(t) => {
            let rel = (t.lambda_star - l1).abs() / l1;
            (rel <= 0.02, format!("lambda* {:.5} vs lambda1 {l1:.5} (rel {rel:.2e} <= 2%)", t.lambda_star))
        }
        None => (false, "bisection bracket did not straddle the threshold".into()),
    };
    // the point nearest lambda1 is the boundary band
    let band = data
        .sweep
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - l1).abs().total_cmp(&(b.1 .0 - l1).abs()))
        .map(|(i, _)| i)
        .unwrap();
    let mismatches: Vec<f64> = data
        .sweep
        .iter()
        .enumerate()
        .filter(|(i, (lam, r))| *i != band && r.observed_exists != (*lam > l1))
        .map(|(_, (lam, _))| *lam)
        .collect();
    let pattern: String = data
        .sweep
        .iter()
        .map(|(_, r)| if r.observed_exists { '+' } else { '-' })
        .collect();
    Outcome {
        pass: thr_ok && mismatches.is_empty(),
        detail: format!("{thr_msg}; sweep [{pattern}] mismatches outside band: {mismatches:?}"),
    }
}

fn c6_sufficiency(ms: &MultiStartReport, pr: (ExtReal, ExtReal, bool)) -> Outcome {
    let all = ms
        .runs
        .iter()
        .all(|r| r.error.is_none() && r.report.as_ref().is_some_and(|r| r.converged && r.is_nontrivial));
    let pass = pr.0 == ExtReal::NEG_INF && pr.1 .0 > 0.0 && pr.2 && all && ms.runs.len() == 5;
    Outcome {
        pass,
        detail: format!(
            "predicate ({}, {}) -> {}; {}/5 starts converged nontrivial",
            pr.0,
            pr.1,
            pr.2,
            ms.converged().filter(|r| r.is_nontrivial).count()
        ),
    }
}

fn c7_uniqueness(data: &Sharpness, ms: &MultiStartReport) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (lam, r) in &data.sweep {
        if *lam > data.l1 && r.observed_exists {
            worst = worst.max(r.solves.max_pairwise_diff);
            count += 1;
        }
    }
    worst = worst.max(ms.max_pairwise_diff);
    Outcome {
        pass: worst <= 1e-5 && count > 0,
        detail: format!("max pairwise difference {worst:.3e} <= 1e-5 over {count} supercritical points + p=3 run"),
    }
}

fn c8_positivity() -> Outcome {
    let mut min_sol = f64::INFINITY;
    let mut min_eig = f64::INFINITY;
    let mut n_sol = 0;
    let mut ok = true;
    for n in [32, 64, 128] {
        let c2 = ctx(n, 2.0, 0.5);
        let l1 = lambda1_of(&c2);
        let c3 = ctx(n, 3.0, 0.5);
        let cases = [
            (&c2, NonlinearityModel::power(1.0, 0.5, 2.0).unwrap()),
            (&c2, NonlinearityModel::logistic(l1 + 1.0, 1.0, 4.0, 2.0).unwrap()),
            (&c3, NonlinearityModel::power(1.0, 0.5, 3.0).unwrap()),
        ];
        for (c, m) in cases {
            let ms = multi_start(c, &m, 5, 8, &SolveOptions::for_p(c.p()), 1e-5).unwrap();
            for r in ms.converged().filter(|r| r.is_nontrivial) {
                n_sol += 1;
                let mn = r.u_star.min_value();
                min_sol = min_sol.min(mn);
                ok &= mn > 0.0;
            }
        }
        let e_dense = lambda1_dense(&c2, &WeightFn::zero(c2.space())).unwrap().e1.unwrap();
        let e_desc = lambda1_descent(&c3, &WeightFn::zero(c3.space()), &EigenOptions::for_p(3.0), &c3.space().constant(1.0))
            .unwrap()
            .e1
            .unwrap();
        for e in [e_dense, e_desc] {
            min_eig = min_eig.min(e.min_value());
            ok &= e.min_value() > 0.0;
        }
    }
    Outcome {
        pass: ok && n_sol == 45,
        detail: format!(
            "{n_sol}/45 nontrivial solutions, min nodal value {min_sol:.3e} > 0; eigenfunctions min {min_eig:.3e} > 0"
        ),
    }
}

fn c9_degiorgi(data: &Sharpness, ms: &MultiStartReport) -> Outcome {
    let c2 = ctx(128, 2.0, 0.5);
    let c3 = ctx(128, 3.0, 0.5);
    let mut sols: Vec<(&FormContext, CoeffVec)> = data
        .sweep
        .iter()
        .filter(|(lam, r)| *lam > data.l1 && r.observed_exists)
        .filter_map(|(_, r)| r.solves.representative().map(|s| (&c2, s.u_star.clone())))
        .collect();
    sols.extend(ms.converged().map(|r| (&c3, r.u_star.clone())));
    let mut ok = !sols.is_empty();
    let mut worst_id: f64 = 0.0;
    let mut max_k = 0;
    for (c, u) in &sols {
        let t = degiorgi_auto(c, u).unwrap();
        let p = c.p();
        let expected = t.delta.powf(p / (p - 1.0)) * lp_norm_pow(c.space(), u, p);
        let id = (t.uk[0] - expected).abs() / expected;
        worst_id = worst_id.max(id);
        match t.k_vanish {
            Some(k) if k <= 12 && t.strictly_decreasing() => max_k = max_k.max(k),
            _ => ok = false,
        }
    }
    Outcome {
        pass: ok && worst_id <= 1e-10,
        detail: format!(
            "{} solutions: strictly decreasing, max k_vanish {max_k} <= 12; U0 identity rel error {worst_id:.3e} <= 1e-10",
            sols.len()
        ),
    }
}

fn c10_mesh() -> Outcome {
    let c128 = ctx(128, 2.0, 0.5);
    let c256 = ctx(256, 2.0, 0.5);
    let (l128, l256) = (lambda1_of(&c128), lambda1_of(&c256));
    let dl = (l128 - l256).abs() / l256;
    let linf = |c: &FormContext, m: &NonlinearityModel| {
        minimize(c, m, &c.space().constant(0.1), &SolveOptions::for_p(2.0))
            .unwrap()
            .u_star
            .max_abs()
    };
    let mut worst: f64 = 0.0;
    for m in [
        NonlinearityModel::power(1.0, 0.5, 2.0).unwrap(),
        NonlinearityModel::logistic(30.0, 1.0, 4.0, 2.0).unwrap(),
    ] {
        let (a, b) = (linf(&c128, &m), linf(&c256, &m));
        worst = worst.max((a - b).abs() / b);
    }
    Outcome {
        pass: dl < 0.01 && worst < 0.05,
        detail: format!("lambda1 change {dl:.3e} < 1%; |u*|_inf change {worst:.3e} < 5%"),
    }
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let cfg = dir.path().join("verify.toml");
    fs::write(
        &cfg,
        "p = 2.0\ns = 0.5\nn_cells = 64\n[nonlinearity]\nfamily = \"logistic\"\nlambda_lin = 30.0\nq = 4.0\n[solve]\nseed = 2024\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    let mut codes = Vec::new();
    for k in 0..3 {
        let out = dir.path().join(format!("run{k}"));
        codes.push(mixedop::cli::run([
            "mixedop",
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
        outputs.push(fs::read(out.join("verify_summary.csv")).unwrap_or_default());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty();
    Outcome {
        pass: same && codes.iter().all(|&c| c == 0),
        detail: format!("3 verify runs, exit codes {codes:?}, byte-identical CSV: {same}"),
    }
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |k: usize, name: &'static str, o: Outcome| {
        println!("criterion {k:>2} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, name, o));
    };

    report(1, "picone inequality", c1_picone());
    report(2, "A_p inequality", c2_ap());
    report(3, "gradient consistency", c3_gradient());
    report(4, "eigen oracle equivalence", c4_eigen());

    let c128 = ctx(128, 2.0, 0.5);
    let l1 = lambda1_of(&c128);
    let lambdas: Vec<f64> = (0..11).map(|k| l1 * (1.0 + 0.04 * (k as f64 - 5.0))).collect();
    let sweep: Vec<(f64, VerifyReport)> = lambdas
        .par_iter()
        .map(|&lam| (lam, run_verify(&logistic_spec(128, lam, 5)).unwrap()))
        .collect();
    let sharp = Sharpness { l1, sweep };
    report(5, "existence sharpness", c5_sharpness(&sharp));

    let c3 = ctx(128, 3.0, 0.5);
    let power3 = NonlinearityModel::power(1.0, 0.5, 3.0).unwrap();
    let pr = existence_predicate(&c3, &power3, &EigenOptions::for_p(3.0)).unwrap();
    let ms3 = multi_start(&c3, &power3, 5, 6, &SolveOptions::for_p(3.0), 1e-5).unwrap();
    report(6, "sufficiency at p = 3", c6_sufficiency(&ms3, (pr.lambda_a0, pr.lambda_ainf, pr.predict_exists)));
    report(7, "uniqueness", c7_uniqueness(&sharp, &ms3));
    report(8, "positivity", c8_positivity());
    report(9, "L-infinity / De Giorgi trace", c9_degiorgi(&sharp, &ms3));
    report(10, "mesh stability", c10_mesh());
    report(11, "determinism", c11_determinism());

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
