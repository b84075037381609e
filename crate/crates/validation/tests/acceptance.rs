//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a nonzero status if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use ccm_core::analysis::{loads, verify_threshold, verify_threshold2, worst_case_condition, AnalysisOptions, Budget};
use ccm_core::decoders::{
    build_recovery_system, decode, hermite_transform, interpolate, lagrange_transform, peel, solve_dense, HermiteNode,
    RecoverySystem,
};
use ccm_core::field::{bareiss_det, FieldRep};
use ccm_core::rng;
use ccm_core::schemes::{
    build_conv_matvec, build_derivative_matvec, build_entangled, build_fountain_matvec, build_matdot, build_mds_matvec,
    build_poly_matmul, build_repetition, build_udm_matvec, compute_all, poly_exponents, udm_generator, ConvMode,
    DegreeDist, EncodingPlan, Fraction, MdsGenerator, TaskResult,
};
use ccm_core::sim::{completion_times, simulate, simulate_times, trial_seed, DelayModel};
use ccm_core::{direct_product, random_matrix, CompletionPattern, EntryDistribution, Matrix};
use rand::Rng;

const UNIT: EntryDistribution = EntryDistribution::Uniform { low: -1.0, high: 1.0 };

/// Relative tolerance for criterion 1 rows at N = 15.
const VANDERMONDE_REL_TOL: f64 = 0.01;
/// Factor by which criterion 2 schemes must beat the Vandermonde value.
const ORDER_MARGIN: f64 = 100.0;
/// Base end-to-end tolerance and the relaxation for ill-conditioned patterns.
const E2E_TOL: f64 = 1e-8;
const E2E_COND_TOL: f64 = 1e-6;
const EQUIV_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-10;
/// Soft target: within an order of magnitude.
const SOFT_FACTOR: f64 = 10.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn opts() -> AnalysisOptions {
    AnalysisOptions::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn vandermonde_plan(m: usize, n: usize) -> EncodingPlan {
    build_mds_matvec(m, n, MdsGenerator::Vandermonde { eval_points: None }).unwrap()
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (n, tau, published, patterns) in [
        (15, 13, 1.689e6, 105u128),
        (15, 12, 1.695e6, 455),
        (30, 28, 2.293e13, 435),
    ] {
        let plan = vandermonde_plan(tau, n);
        let rep = worst_case_condition(&plan, Budget::Workers(tau), &opts()).unwrap();
        let ok = if n == 30 {
            // Two significant digits: both round to the same 2-digit mantissa.
            let digits = |v: f64| {
                let e = v.log10().floor();
                (v / 10f64.powf(e - 1.0)).round()
            };
            digits(rep.worst) == digits(published)
        } else {
            rel(rep.worst, published) <= VANDERMONDE_REL_TOL
        };
        let ok = ok && rep.patterns_evaluated == patterns;
        pass &= ok;
        detail.push(format!(
            "N={n} tau={tau}: {:.4e} vs {published:.4e} over {} patterns",
            rep.worst, rep.patterns_evaluated
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion_2() -> Outcome {
    let vand = worst_case_condition(&vandermonde_plan(13, 15), Budget::Workers(13), &opts())
        .unwrap()
        .worst;
    let bound = vand / ORDER_MARGIN;
    // GF(3^3) embedding: two stages (evaluation and first Hasse derivative)
    // per worker, 13 workers' worth of stages.
    let emb_plan = build_udm_matvec(3, 3, 15, 26, 2).unwrap();
    let emb = worst_case_condition(&emb_plan, Budget::Stages(26), &opts()).unwrap();
    let emb_whole = worst_case_condition(&emb_plan, Budget::Workers(13), &opts()).unwrap();
    let ones = worst_case_condition(
        &build_conv_matvec(52, 15, 13, ConvMode::Ones).unwrap(),
        Budget::Workers(13),
        &opts(),
    )
    .unwrap();
    let random = worst_case_condition(
        &build_conv_matvec(52, 15, 13, ConvMode::Random { seed: 1 }).unwrap(),
        Budget::Workers(13),
        &opts(),
    )
    .unwrap();
    let checks = [
        ("embedding", emb.worst, emb.patterns_evaluated, 411.0),
        ("conv ones", ones.worst, ones.patterns_evaluated, 910.0),
        ("conv random", random.worst, random.patterns_evaluated, 264.49),
    ];
    let mut pass = true;
    let mut detail = vec![format!(
        "vandermonde {vand:.4e}, bound {bound:.4e}; embedding restricted to whole workers {:.4e}",
        emb_whole.worst
    )];
    for (name, v, n, published) in checks {
        let ok = v <= bound;
        pass &= ok;
        detail.push(format!(
            "{name} {v:.4e} over {n} patterns (published {published}) {}",
            if ok { "ok" } else { "ABOVE BOUND" }
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

struct ThresholdCase {
    name: &'static str,
    plan: EncodingPlan,
    budget: Budget,
}

fn threshold_cases() -> Vec<ThresholdCase> {
    vec![
        ThresholdCase {
            name: "poly m=n=2 N=6",
            plan: build_poly_matmul(2, 2, 6, None).unwrap(),
            budget: Budget::Workers(4),
        },
        ThresholdCase {
            name: "poly m=n=3 N=11",
            plan: build_poly_matmul(3, 3, 11, None).unwrap(),
            budget: Budget::Workers(9),
        },
        ThresholdCase {
            name: "matdot p=2 N=5",
            plan: build_matdot(2, 5, None).unwrap(),
            budget: Budget::Workers(3),
        },
        ThresholdCase {
            name: "matdot p=3 N=7",
            plan: build_matdot(3, 7, None).unwrap(),
            budget: Budget::Workers(5),
        },
        ThresholdCase {
            name: "entangled p=m=n=2 N=10",
            plan: build_entangled(2, 2, 2, 10, None).unwrap(),
            budget: Budget::Workers(9),
        },
        ThresholdCase {
            name: "conv m=8 N=4",
            plan: build_conv_matvec(8, 4, 2, ConvMode::Ones).unwrap(),
            budget: Budget::Workers(2),
        },
        ThresholdCase {
            name: "udm default",
            plan: build_udm_matvec(3, 2, 4, 3, 1).unwrap(),
            budget: Budget::Workers(3),
        },
        ThresholdCase {
            name: "repetition",
            plan: build_repetition(3).unwrap(),
            budget: Budget::Stages(3),
        },
        ThresholdCase {
            name: "derivative m=4 N=5",
            plan: build_derivative_matvec(4, 5, None).unwrap(),
            budget: Budget::Stages(4),
        },
    ]
}

fn verify_budget(plan: &EncodingPlan, budget: Budget) -> bool {
    match budget {
        Budget::Workers(t) => verify_threshold(plan, t, &opts()).unwrap().holds,
        Budget::Stages(t) => verify_threshold2(plan, t, &opts()).unwrap().holds,
    }
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for case in threshold_cases() {
        let below = match case.budget {
            Budget::Workers(t) => Budget::Workers(t - 1),
            Budget::Stages(t) => Budget::Stages(t - 1),
        };
        let at = verify_budget(&case.plan, case.budget);
        let under = verify_budget(&case.plan, below);
        let ok = at && !under;
        pass &= ok;
        detail.push(format!("{} {:?}: at={at} below={under}", case.name, case.budget));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

/// Enumerate the patterns of a budget (all of them; sizes here are small).
fn patterns(plan: &EncodingPlan, budget: Budget) -> Vec<CompletionPattern> {
    let rep = worst_case_condition(
        plan,
        budget,
        &AnalysisOptions {
            verbose: true,
            ..opts()
        },
    )
    .unwrap();
    rep.per_pattern.unwrap().into_iter().map(|p| p.pattern).collect()
}

fn select(all: &[Vec<TaskResult>], plan: &EncodingPlan, p: &CompletionPattern) -> Vec<TaskResult> {
    p.tasks(plan)
        .unwrap()
        .into_iter()
        .map(|(w, s)| all[w][s].clone())
        .collect()
}

/// Dimensions of the payload rounded up so every block split is exact.
fn padded_r(plan: &EncodingPlan, r: usize) -> usize {
    r.div_ceil(plan.layout.m) * plan.layout.m
}

fn criterion_4() -> Outcome {
    let (t, r, w) = (60, 60, 60);
    let mut cases: Vec<(String, EncodingPlan, Vec<CompletionPattern>)> = threshold_cases()
        .into_iter()
        .map(|c| {
            let ps = patterns(&c.plan, c.budget);
            (c.name.to_string(), c.plan, ps)
        })
        .collect();
    let mds = vandermonde_plan(4, 6);
    let ps = patterns(&mds, Budget::Workers(4));
    cases.push(("mds vandermonde m=4 N=6".into(), mds, ps));
    let mds_r = build_mds_matvec(4, 6, MdsGenerator::Random { seed: 5 }).unwrap();
    let ps = patterns(&mds_r, Budget::Workers(4));
    cases.push(("mds random m=4 N=6".into(), mds_r, ps));
    let conv_r = build_conv_matvec(8, 4, 2, ConvMode::Random { seed: 2 }).unwrap();
    let ps = patterns(&conv_r, Budget::Workers(2));
    cases.push(("conv random m=8 N=4".into(), conv_r, ps));
    let fountain = build_fountain_matvec(20, 4, DegreeDist::default(), 1, 3.0).unwrap();
    let full = CompletionPattern::full(&fountain);
    cases.push(("fountain m=20 (full stream)".into(), fountain, vec![full]));

    let mut pass = true;
    let mut detail = Vec::new();
    for (seed, (name, plan, pats)) in cases.into_iter().enumerate() {
        let rp = padded_r(&plan, r);
        let a_core = random_matrix(t, r, 100 + seed as u64, UNIT).unwrap();
        // Zero columns appended to A are a caller-side pad; they are cut off below.
        let a = a_core.padded(t, rp);
        let b = random_matrix(t, w, 200 + seed as u64, UNIT).unwrap();
        let (want, _) = direct_product(&a_core, &b).unwrap();
        let all = compute_all(&plan, &a, &b).unwrap();
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for p in &pats {
            let sys = build_recovery_system(&plan, p).unwrap();
            let cond = sys.condition_number();
            let got = decode(&plan, &select(&all, &plan, p)).unwrap();
            let err = got.submatrix(0, 0, r, w).relative_error(&want);
            let tol = if cond > 100.0 { E2E_COND_TOL * cond } else { E2E_TOL };
            ok &= err <= tol;
            worst = worst.max(err);
        }
        pass &= ok;
        detail.push(format!("{name}: {} patterns, max err {worst:.2e}", pats.len()));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion_5() -> Outcome {
    let f = FieldRep::new(2, 3).unwrap();
    let c_expected = vec![vec![0, 0, 1], vec![1, 0, 1], vec![0, 1, 0]];
    let c2_expected = vec![vec![0, 1, 0], vec![0, 1, 1], vec![1, 0, 1]];
    let g = udm_generator(&f, 4, 3, 1);
    let sub: Vec<Vec<i128>> = g
        .iter()
        .map(|row| row[..9].iter().map(|&v| v as i128).collect())
        .collect();
    let det = bareiss_det(&sub);
    let pass = f.alpha_pow(1) == c_expected && f.alpha_pow(2) == c2_expected && det == -1;
    Outcome {
        pass,
        detail: format!("C={:?} C^2={:?} det={det}", f.alpha_pow(1), f.alpha_pow(2)),
    }
}

fn criterion_6() -> Outcome {
    let plan = build_entangled(2, 2, 2, 9, None).unwrap();
    let (a, b) = poly_exponents(&plan).unwrap();
    // Flat index k*m + j, reordered to A00, A10, A01, A11 (and likewise for B).
    let a_ord = vec![a[0], a[2], a[1], a[3]];
    let b_ord = vec![b[0], b[2], b[1], b[3]];
    let mut useful: Vec<usize> = plan.targets.iter().flatten().copied().collect();
    useful.sort_unstable();
    let pass = a_ord == vec![0, 1, 2, 3] && b_ord == vec![1, 0, 5, 4] && useful == vec![1, 3, 5, 7];
    Outcome {
        pass,
        detail: format!("A {a_ord:?}, B {b_ord:?}, useful z^{useful:?}"),
    }
}

fn criterion_7() -> Outcome {
    let f = Fraction::new;
    let ex1 = loads(&build_poly_matmul(2, 2, 6, None).unwrap(), 60, 60, 60).unwrap();
    let ex2 = loads(&build_matdot(2, 5, None).unwrap(), 60, 60, 60).unwrap();
    let conv = loads(&build_conv_matvec(8, 4, 2, ConvMode::Ones).unwrap(), 64, 60, 1).unwrap();
    let ok1 = ex1.comp_fraction.iter().all(|&x| x == f(1, 4)) && ex1.comm_load.iter().all(|&x| x == f(1, 4));
    let ok2 = ex2.comp_fraction.iter().all(|&x| x == f(1, 2)) && ex2.comm_load.iter().all(|&x| x == f(1, 1));
    let want = vec![f(1, 2), f(1, 2), f(1, 2), f(5, 8)];
    let ok3 = conv.gamma_a == want && conv.comp_fraction == want;
    Outcome {
        pass: ok1 && ok2 && ok3,
        detail: format!(
            "ex1 comp {} comm {}; ex2 comp {} comm {}; conv gamma {:?} comp {:?}",
            ex1.comp_fraction[0],
            ex1.comm_load[0],
            ex2.comp_fraction[0],
            ex2.comm_load[0],
            conv.gamma_a.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            conv.comp_fraction.iter().map(|x| x.to_string()).collect::<Vec<_>>()
        ),
    }
}

fn criterion_8() -> Outcome {
    let plan = build_repetition(3).unwrap();
    let delay = DelayModel::Deterministic {
        durations: vec![vec![2.0, 2.0], vec![1.0, 2.0], vec![f64::INFINITY, f64::INFINITY]],
    };
    let a = random_matrix(6, 6, 1, UNIT).unwrap();
    let x = random_matrix(6, 1, 2, UNIT).unwrap();
    let rep = simulate(&plan, Some((&a, &x)), &delay, 0).unwrap();
    let used: usize = rep.events.iter().filter(|e| e.used).count();
    let slow_and_failed = rep.decode_time == Some(3.0)
        && rep.used_pattern == CompletionPattern::prefix([1, 2, 0])
        && used == 3
        && rep.straggler_set == vec![2]
        && rep.decoded_ok
        && rep.residual.unwrap() < E2E_TOL;

    let mds = vandermonde_plan(4, 6);
    let exp = DelayModel::Exponential { rate: 1.0 };
    let trials = 10_000;
    let mut mismatches = 0;
    for k in 0..trials {
        let seed = trial_seed(7, k);
        let times = completion_times(&mds, &exp, seed).unwrap();
        let mut finish: Vec<f64> = times.iter().map(|t| t[0]).collect();
        finish.sort_by(|a, b| a.total_cmp(b));
        let r = simulate_times(&mds, &times, None).unwrap();
        if r.decode_time != Some(finish[3]) {
            mismatches += 1;
        }
    }
    Outcome {
        pass: slow_and_failed && mismatches == 0,
        detail: format!(
            "slow_and_failed decode_time={:?} used={used} pattern={:?} stragglers={:?}; order-statistic mismatches {mismatches}/{trials}",
            rep.decode_time, rep.used_pattern, rep.straggler_set
        ),
    }
}

/// Largest entrywise difference, relative to the largest entry of `a`.
fn max_rel_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
        / scale
}

fn det3(m: &Matrix) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

fn peel_vs_dense(sys: &RecoverySystem, obs: &[&Matrix]) -> Option<f64> {
    let (p, _) = peel(sys, obs).ok()?;
    let d = solve_dense(sys, obs).unwrap();
    Some(p.iter().zip(&d).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max))
}

fn criterion_9() -> Outcome {
    let mut g = rng::seeded(99);
    // Hermite at multiplicity one against Lagrange.
    let mut herm = 0.0f64;
    for d in 1..=8 {
        let mut pts: Vec<f64> = (0..=d).map(|_| g.random_range(-1.0..1.0)).collect();
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        let nodes: Vec<HermiteNode> = pts.iter().map(|&z| HermiteNode { z, multiplicity: 1 }).collect();
        herm = herm.max(max_rel_diff(
            &lagrange_transform(&pts).unwrap(),
            &hermite_transform(&nodes).unwrap(),
        ));
        let vals: Vec<Matrix> = pts
            .iter()
            .map(|_| random_matrix(2, 2, g.random(), UNIT).unwrap())
            .collect();
        let refs: Vec<&Matrix> = vals.iter().collect();
        let a = interpolate(&pts, &refs).unwrap();
        let b = ccm_core::decoders::hermite_interpolate(&nodes, &refs, pts.len() - 1).unwrap();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.max_abs()));
        herm = herm.max(a.iter().zip(&b).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max) / scale);
    }

    // Peel against dense on every peelable conv pattern and on fountain systems.
    let mut peel_diff = 0.0f64;
    let mut peeled = 0;
    let conv = build_conv_matvec(8, 4, 2, ConvMode::Ones).unwrap();
    let a = random_matrix(8, 8, 3, UNIT).unwrap();
    let x = random_matrix(8, 2, 4, UNIT).unwrap();
    let all = compute_all(&conv, &a, &x).unwrap();
    for p in patterns(&conv, Budget::Workers(2)) {
        let sys = build_recovery_system(&conv, &p).unwrap();
        let res = select(&all, &conv, &p);
        let obs: Vec<&Matrix> = res.iter().map(|r| &r.value).collect();
        if let Some(d) = peel_vs_dense(&sys, &obs) {
            peel_diff = peel_diff.max(d);
            peeled += 1;
        }
    }
    for seed in 0..5 {
        let plan = build_fountain_matvec(100, 10, DegreeDist::default(), seed, 3.0).unwrap();
        let a = random_matrix(4, 100, seed, UNIT).unwrap();
        let x = random_matrix(4, 1, seed + 50, UNIT).unwrap();
        let all = compute_all(&plan, &a, &x).unwrap();
        let p = CompletionPattern::full(&plan);
        let sys = build_recovery_system(&plan, &p).unwrap();
        let res = select(&all, &plan, &p);
        let obs: Vec<&Matrix> = res.iter().map(|r| &r.value).collect();
        if let Some(d) = peel_vs_dense(&sys, &obs) {
            peel_diff = peel_diff.max(d);
            peeled += 1;
        }
    }

    // Confluent 3x3 system determinant.
    let mut det_err = 0.0f64;
    for _ in 0..20 {
        let z1: f64 = g.random_range(-1.0..1.0);
        let z2: f64 = g.random_range(-1.0..1.0);
        let plan = build_derivative_matvec(3, 2, Some(vec![z1, z2])).unwrap();
        let sys = build_recovery_system(&plan, &CompletionPattern::prefix([2, 1])).unwrap();
        let det = det3(&sys.matrix().unwrap());
        det_err = det_err.max(rel(det, (z1 - z2).powi(2)));
    }
    Outcome {
        pass: herm <= EQUIV_TOL && peel_diff <= EQUIV_TOL && peeled > 0 && det_err <= DET_TOL,
        detail: format!(
            "hermite-vs-lagrange {herm:.1e} (relative); peel-vs-dense {peel_diff:.1e} over {peeled} systems; det rel err {det_err:.1e}"
        ),
    }
}

fn criterion_10() -> Outcome {
    let poly = build_poly_matmul(3, 3, 11, None).unwrap();
    let p = worst_case_condition(&poly, Budget::Workers(9), &opts()).unwrap();
    let conv = build_conv_matvec(36, 11, 9, ConvMode::Ones).unwrap();
    let c = worst_case_condition(&conv, Budget::Workers(9), &opts()).unwrap();
    let within = |v: f64, t: f64| v <= t * SOFT_FACTOR && v >= t / SOFT_FACTOR;
    let pts: Vec<String> = poly.eval_points.iter().map(|z| format!("{z:.4}")).collect();
    Outcome {
        pass: within(p.worst, 24753.93) && within(c.worst, 152.12),
        detail: format!(
            "poly m=n=3 N=11 {:.2} (published 24753.93) at points [{}]; conv N=11 tau=9 l=4 {:.2} (published 152.12); \
             wall-clock timings of the cluster experiments are not reproduced (covered by criteria 4, 8, 9)",
            p.worst,
            pts.join(", "),
            c.worst
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 Vandermonde worst-case condition numbers", criterion_1),
        ("2 qualitative ordering at N=15 tau=13", criterion_2),
        ("3 threshold brute force", criterion_3),
        ("4 end-to-end decoding", criterion_4),
        ("5 UDM construction", criterion_5),
        ("6 entangled exponents", criterion_6),
        ("7 loads", criterion_7),
        ("8 simulator fidelity", criterion_8),
        ("9 decoder equivalences", criterion_9),
        ("10 soft conditioning targets", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
