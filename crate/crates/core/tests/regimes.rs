use ccm_core::analysis::{fountain_symbols_needed, verify_threshold, AnalysisOptions};
use ccm_core::decoders::{build_recovery_system, decode, peel, solve_dense, system_for_tasks};
use ccm_core::schemes::{
    build_entangled, build_fountain_matvec, build_matdot, build_mds_matvec, build_poly_matmul, build_repetition,
    compute_all, DegreeDist, EncodingPlan, MdsGenerator, TaskResult,
};
use ccm_core::sim::{batch_reports, batch_simulate, completion_times, simulate, trial_seed, DelayModel};
use ccm_core::{direct_product, random_matrix, CcmError, CompletionPattern, EntryDistribution, Matrix};

const UNIT: EntryDistribution = EntryDistribution::Uniform { low: -1.0, high: 1.0 };

fn select(all: &[Vec<TaskResult>], plan: &EncodingPlan, p: &CompletionPattern) -> Vec<TaskResult> {
    p.tasks(plan)
        .unwrap()
        .into_iter()
        .map(|(w, s)| all[w][s].clone())
        .collect()
}

#[test]
fn vandermonde_mds_threshold_up_to_twelve_workers() {
    for n in 1..=12 {
        for m in 1..=n {
            let plan = build_mds_matvec(m, n, MdsGenerator::Vandermonde { eval_points: None }).unwrap();
            let rep = verify_threshold(&plan, m, &AnalysisOptions::default()).unwrap();
            assert!(rep.holds, "m={m} N={n}: {:?}", rep.counterexample);
        }
    }
}

#[test]
fn random_mds_every_four_subset_decodes() {
    let plan = build_mds_matvec(4, 6, MdsGenerator::Random { seed: 17 }).unwrap();
    let rep = verify_threshold(&plan, 4, &AnalysisOptions::default()).unwrap();
    assert!(rep.holds);
    assert_eq!(rep.patterns_checked, 15);
}

#[test]
fn single_block_schemes_reduce_to_direct_product() {
    let a = random_matrix(5, 3, 1, UNIT).unwrap();
    let b = random_matrix(5, 4, 2, UNIT).unwrap();
    let (want, _) = direct_product(&a, &b).unwrap();
    for plan in [
        build_matdot(1, 1, None).unwrap(),
        build_poly_matmul(1, 1, 1, None).unwrap(),
    ] {
        assert_eq!(plan.num_unknowns(), 1);
        assert!(verify_threshold(&plan, 1, &AnalysisOptions::default()).unwrap().holds);
        let all = compute_all(&plan, &a, &b).unwrap();
        let got = decode(&plan, &all[0]).unwrap();
        assert!(got.relative_error(&want) < 1e-15);
    }
    // A one-block MDS code is plain replication.
    let rep = build_mds_matvec(1, 4, MdsGenerator::Vandermonde { eval_points: None }).unwrap();
    assert!(verify_threshold(&rep, 1, &AnalysisOptions::default()).unwrap().holds);
}

#[test]
fn entangled_with_p1_is_polynomial_code() {
    let e = build_entangled(1, 2, 3, 7, None).unwrap();
    let p = build_poly_matmul(2, 3, 7, None).unwrap();
    assert_eq!(e.coeff_a, p.coeff_a);
    assert_eq!(e.coeff_b, p.coeff_b);
    assert_eq!(e.targets, p.targets);
}

#[test]
fn repetition_survives_any_single_failure() {
    let plan = build_repetition(3).unwrap();
    let a = random_matrix(4, 6, 3, UNIT).unwrap();
    let x = random_matrix(4, 2, 4, UNIT).unwrap();
    let all = compute_all(&plan, &a, &x).unwrap();
    let (want, _) = direct_product(&a, &x).unwrap();
    for keep in [[0, 1], [0, 2], [1, 2]] {
        let p = CompletionPattern::subset(keep);
        let got = decode(&plan, &select(&all, &plan, &p)).unwrap();
        assert!(got.relative_error(&want) < 1e-14);
    }
}

#[test]
fn fountain_peel_overhead_regime() {
    let m = 100;
    let trials = 1000;
    let mut needed = Vec::with_capacity(trials);
    for seed in 0..trials as u64 {
        let plan = build_fountain_matvec(m, 10, DegreeDist::default(), seed, 3.0).unwrap();
        match fountain_symbols_needed(&plan) {
            Ok(s) => needed.push(s as f64 / m as f64),
            Err(CcmError::OverheadExceeded { .. }) => needed.push(f64::INFINITY),
            Err(e) => panic!("{e}"),
        }
    }
    let within = |o: f64| needed.iter().filter(|&&v| v <= o).count();
    assert!(within(1.4) * 2 > trials, "only {} of {trials} by 1.4", within(1.4));
    assert!(
        within(3.0) * 100 >= trials * 99,
        "only {} of {trials} by 3.0",
        within(3.0)
    );
    assert!(needed.iter().all(|&v| v >= 1.0));
}

#[test]
fn fountain_peel_matches_dense_at_overhead_1_3() {
    let m = 100;
    let plan = (0..)
        .map(|seed| build_fountain_matvec(m, 10, DegreeDist::default(), seed, 1.3).unwrap())
        .find(|p| fountain_symbols_needed(p).is_ok())
        .unwrap();
    let a = random_matrix(3, m, 5, UNIT).unwrap();
    let x = random_matrix(3, 1, 6, UNIT).unwrap();
    let all = compute_all(&plan, &a, &x).unwrap();
    let p = CompletionPattern::full(&plan);
    let sys = build_recovery_system(&plan, &p).unwrap();
    let res = select(&all, &plan, &p);
    let obs: Vec<&Matrix> = res.iter().map(|r| &r.value).collect();
    let (peeled, _) = peel(&sys, &obs).unwrap();
    let dense = solve_dense(&sys, &obs).unwrap();
    for (a, b) in peeled.iter().zip(&dense) {
        assert!(a.sub(b).max_abs() <= 1e-12);
    }
    let (want, _) = direct_product(&a, &x).unwrap();
    assert!(decode(&plan, &res).unwrap().relative_error(&want) < 1e-12);
}

#[test]
fn point_mass_one_is_coupon_collection() {
    let m = 20;
    for seed in 0..20 {
        let plan = build_fountain_matvec(m, 4, DegreeDist::PointMass { degree: 1 }, seed, 8.0).unwrap();
        let mut seen = vec![false; m];
        let mut oracle = None;
        for s in 0..plan.coeff_a.rows() {
            let i = plan.coeff_a.row(s).iter().position(|&v| v == 1.0).unwrap();
            seen[i] = true;
            if seen.iter().all(|&b| b) {
                oracle = Some(s + 1);
                break;
            }
        }
        match (oracle, fountain_symbols_needed(&plan)) {
            (Some(o), Ok(n)) => assert_eq!(o, n),
            (None, Err(CcmError::OverheadExceeded { .. })) => {}
            (o, n) => panic!("seed {seed}: oracle {o:?}, got {n:?}"),
        }
    }
}

#[test]
fn coding_beats_waiting_for_every_worker() {
    let plan = build_mds_matvec(4, 6, MdsGenerator::Vandermonde { eval_points: None }).unwrap();
    let delay = DelayModel::Exponential { rate: 1.0 };
    let trials = 10_000;
    let summary = batch_simulate(&plan, &delay, trials, 3).unwrap();
    let uncoded: f64 = (0..trials)
        .map(|k| {
            let t = completion_times(&plan, &delay, trial_seed(3, k)).unwrap();
            t.iter().map(|w| w[0]).fold(0.0, f64::max)
        })
        .sum::<f64>()
        / trials as f64;
    assert_eq!(summary.decoded, trials);
    assert!(summary.mean_decode_time.unwrap() < uncoded);
    assert_eq!(summary, batch_simulate(&plan, &delay, trials, 3).unwrap());
}

#[test]
fn single_trial_batch_is_simulate() {
    let plan = build_poly_matmul(2, 2, 6, None).unwrap();
    let delay = DelayModel::ShiftedExponential { shift: 1.0, rate: 3.0 };
    let batch = batch_reports(&plan, &delay, 1, 9).unwrap();
    let single = simulate(&plan, None, &delay, trial_seed(9, 0)).unwrap();
    assert_eq!(batch, vec![single]);
}

#[test]
fn equal_delays_decode_at_threshold_event() {
    let plan = build_poly_matmul(2, 2, 6, None).unwrap();
    let delay = DelayModel::Deterministic {
        durations: vec![vec![1.0]; 6],
    };
    let rep = simulate(&plan, None, &delay, 0).unwrap();
    assert_eq!(rep.decode_time, Some(1.0));
    assert_eq!(rep.events.iter().filter(|e| e.used).count(), 4);
    assert_eq!(rep.used_pattern, CompletionPattern::prefix([1, 1, 1, 1, 0, 0]));
}

#[test]
fn certain_failure_never_decodes() {
    let plan = build_mds_matvec(2, 3, MdsGenerator::Vandermonde { eval_points: None }).unwrap();
    let delay = DelayModel::Failure {
        prob: 1.0,
        inner: Box::new(DelayModel::Exponential { rate: 1.0 }),
    };
    let rep = simulate(&plan, None, &delay, 4).unwrap();
    assert!(!rep.decoded_ok);
    assert_eq!(rep.decode_time, None);
    assert_eq!(rep.rank_deficit, 2);
    assert!(rep.events.is_empty());
}

#[test]
fn explicit_task_lists_build_systems() {
    let plan = build_repetition(3).unwrap();
    let sys = system_for_tasks(&plan, &[(0, 0), (1, 0), (2, 0)]).unwrap();
    assert!(sys.is_decodable());
    assert!(matches!(system_for_tasks(&plan, &[(0, 2)]), Err(CcmError::Pattern(_))));
    assert!(matches!(
        system_for_tasks(&plan, &[(0, 0), (0, 0)]),
        Err(CcmError::Pattern(_))
    ));
}
