mod common;

use std::collections::HashSet;

use cgpp::bench::{self, solve_exact_original, ExperimentSpec, Method};
use cgpp::colgen::{assemble_x, run_cg, CgConfig};
use cgpp::postprocess::{efficiency, feasibility_restoration, flip_deltas, local_optimization, RestorationOutcome};
use cgpp::qubo::{Qubo, SaConfig};
use cgpp::{eval_quadratic_form, BinarySolution, ProblemInstance};
use common::*;
use proptest::prelude::*;

fn instance_and_x() -> impl Strategy<Value = (ProblemInstance, BinarySolution)> {
    (1usize..=12, 0usize..=4, any::<u64>()).prop_flat_map(|(n, m, seed)| {
        let inst = ProblemInstance::generate_random(n, m, seed);
        proptest::collection::vec(0u8..=1, n).prop_map(move |x| (inst.clone(), BinarySolution::new(x).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quadratic_form_matches_naive((inst, x) in instance_and_x()) {
        prop_assert_eq!(eval_quadratic_form(inst.objective_matrix(), &x).unwrap(), naive_form(inst.objective_matrix(), x.bits()));
        for a in inst.constraint_matrices() {
            prop_assert_eq!(eval_quadratic_form(a, &x).unwrap(), naive_form(a, x.bits()));
        }
    }

    #[test]
    fn violation_is_positive_part_of_negative_margin((inst, x) in instance_and_x()) {
        let r = inst.feasibility_report(&x).unwrap();
        for (v, m) in r.violations.iter().zip(&r.margins) {
            prop_assert_eq!(*v, (-m).max(0.0));
        }
        prop_assert_eq!(r.feasible, r.violations.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generation_is_byte_deterministic(n in 1usize..15, m in 0usize..5, seed in any::<u64>()) {
        let a = ProblemInstance::generate_random(n, m, seed).to_json();
        let b = ProblemInstance::generate_random(n, m, seed).to_json();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(ProblemInstance::from_json(&a).unwrap(), ProblemInstance::generate_random(n, m, seed));
    }

    #[test]
    fn qubo_delta_is_exact((inst, x) in instance_and_x(), i in 0usize..12) {
        let q = Qubo::new(inst.objective_matrix().clone(), 0.5);
        let i = i % inst.n();
        let d = q.delta_energy(&x, i).unwrap();
        prop_assert_eq!(d, q.energy(&x.flipped(i)).unwrap() - q.energy(&x).unwrap());
    }

    #[test]
    fn flip_deltas_are_exact((inst, x) in instance_and_x()) {
        let d = flip_deltas(&inst, &x).unwrap();
        for i in 0..inst.n() {
            let y = x.flipped(i);
            prop_assert_eq!(d.f[i] == 1, x.get(i) == 0);
            prop_assert_eq!(d.p[i], naive_form(inst.objective_matrix(), y.bits()) - naive_form(inst.objective_matrix(), x.bits()));
            for (k, a) in inst.constraint_matrices().iter().enumerate() {
                prop_assert_eq!(d.w[i][k], naive_form(a, y.bits()) - naive_form(a, x.bits()));
            }
        }
    }

    #[test]
    fn efficiency_normalization_peaks_at_one((inst, x) in instance_and_x()) {
        let d = flip_deltas(&inst, &x).unwrap();
        // alpha = 1 isolates pbar.
        let pbar = efficiency(&d, 1.0, &vec![0.0; inst.m()]);
        if d.p.iter().map(|p| -p).fold(f64::NEG_INFINITY, f64::max) > 0.0 {
            prop_assert_eq!(pbar.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
        for k in 0..inst.m() {
            let mut beta = vec![0.0; inst.m()];
            beta[k] = 1.0;
            let wbar = efficiency(&d, 0.0, &beta);
            if (0..inst.n()).map(|i| -d.w[i][k]).fold(f64::NEG_INFINITY, f64::max) > 0.0 {
                prop_assert_eq!(wbar.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
            }
        }
    }

    #[test]
    fn exact_qubo_matches_brute_force(n in 1usize..=8, seed in any::<u64>(), excl in proptest::collection::vec(any::<u8>(), 0..20)) {
        let inst = ProblemInstance::generate_random(n, 0, seed);
        let q = Qubo::new(inst.objective_matrix().clone(), 0.0);
        let exclude: HashSet<BinarySolution> = excl
            .iter()
            .map(|&mask| BinarySolution::new((0..n).map(|i| (mask >> (i % 8)) & 1).collect()).unwrap())
            .collect();
        let mut best: Option<(f64, Vec<u8>)> = None;
        for x in cube(n) {
            if exclude.contains(&BinarySolution::new(x.clone()).unwrap()) {
                continue;
            }
            let e = naive_form(&q.coeffs, &x);
            if best.as_ref().is_none_or(|(b, _)| e < *b) {
                best = Some((e, x));
            }
        }
        match (q.solve_exact(&exclude), best) {
            (Ok(s), Some((e, x))) => {
                prop_assert!(!exclude.contains(&s.x));
                prop_assert_eq!(s.energy, e);
                prop_assert_eq!(s.x.bits(), &x[..]);
            }
            (Err(cgpp::Error::Exhausted { .. }), None) => {}
            (got, want) => prop_assert!(false, "mismatch {:?} vs {:?}", got, want),
        }
    }

    #[test]
    fn restoration_and_local_search_are_sound((inst, x) in instance_and_x()) {
        let r = feasibility_restoration(&inst, &x, 0.1, 1000).unwrap();
        prop_assert!(r.flips <= 1000);
        prop_assert!(r.flips <= 1usize << inst.n());
        if let RestorationOutcome::Feasible(xf) = r.outcome {
            prop_assert!(inst.feasibility_report(&xf).unwrap().feasible);
            let lo = local_optimization(&inst, &xf, 0.9).unwrap();
            prop_assert!(naive_feasible(&inst, lo.x.bits()));
            prop_assert!(lo.trajectory.windows(2).all(|w| w[1] < w[0]));
            prop_assert!(one_flip_optimal(&inst, &lo.x));
        }
    }
}

#[test]
fn annealer_never_beats_enumeration_and_usually_ties() {
    let mut ties = 0;
    for s in 0..100u64 {
        let n = 4 + (s as usize % 9);
        let inst = ProblemInstance::generate_random(n, 0, 1000 + s);
        let q = Qubo::new(inst.objective_matrix().clone(), 0.0);
        let exact = q.solve_exact(&HashSet::new()).unwrap();
        let sa = q.solve_sa(&SaConfig { seed: s, ..SaConfig::default() }).unwrap();
        assert!(sa.energy >= exact.energy);
        assert_eq!(sa.energy, q.energy(&sa.x).unwrap());
        if sa.energy == exact.energy {
            ties += 1;
        }
    }
    assert!(ties >= 95, "annealer matched the optimum on {ties}/100 instances");
}

#[test]
fn oracle_matches_naive_enumeration() {
    for s in 0..60u64 {
        let n = 1 + (s as usize % 12);
        let m = (s as usize / 12) % 4;
        let inst = ProblemInstance::generate_random(n, m, 500 + s);
        let fast = solve_exact_original(&inst).unwrap();
        let slow = naive_optimum(&inst);
        assert_eq!(fast.feasible_exists, slow.is_some());
        if let Some((e, x)) = slow {
            assert_eq!(fast.e_star, Some(e));
            assert_eq!(fast.x_star.unwrap().bits(), &x[..]);
        }
    }
}

#[test]
fn column_generation_invariants() {
    for s in 0..15u64 {
        let n = 6 + (s as usize % 6);
        let inst = ProblemInstance::generate_random(n, 1 + s as usize % 3, 77 + s);
        let r = run_cg(&inst, &[BinarySolution::unit_first(n)], &CgConfig::default()).unwrap();
        for h in r.history.iter().filter(|h| h.added) {
            assert!(h.pricing_obj < -1e-9);
        }
        let objs: Vec<f64> = r.history.iter().map(|h| h.rmp_obj).chain([r.relax_obj]).collect();
        assert!(objs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{objs:?}");
        let x = &r.x_matrix;
        for i in 0..n {
            assert!(x[i][i] >= -1e-9 && x[i][i] <= 1.0 + 1e-9);
            for j in 0..n {
                assert_eq!(x[i][j], x[j][i]);
            }
        }
        assert_eq!(&assemble_x(&r.pool, &r.lambda).unwrap(), x);
        assert!((r.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn experiment_is_deterministic_apart_from_timings() {
    let spec = ExperimentSpec::new(vec![8], vec![0.2, 0.5], 3, 42, vec![Method::RandomPp, Method::CgExactPp, Method::CgSaPp]);
    let strip = |mut rs: Vec<bench::InstanceRecord>| {
        for r in rs.iter_mut() {
            r.time_cg_ms = None;
            r.time_pp_ms = None;
            r.time_total_ms = 0.0;
        }
        rs
    };
    let a = strip(bench::run_experiment(&spec).unwrap());
    let b = strip(bench::run_experiment(&spec).unwrap());
    assert_eq!(a.len(), 2 * 3 * 3);
    assert_eq!(a, b);
    // canonical order: instance-major, then method
    assert_eq!(a[0].method, Method::CgExactPp);
    assert_eq!(a[2].method, Method::RandomPp);
    for r in &a {
        if let (Some(e), Some(es)) = (r.e, r.e_star) {
            assert!(e >= es);
        }
    }
}

#[test]
fn experiment_records_known_shape() {
    let spec = ExperimentSpec::new(vec![10], vec![0.2], 2, 0, vec![Method::CgExactPp]);
    let recs = bench::run_experiment(&spec).unwrap();
    assert_eq!(recs.len(), 2);
    for r in &recs {
        assert_eq!((r.n, r.m), (10, 2));
        assert!(r.error.is_none());
        if r.feasible {
            assert!(r.e.unwrap() >= r.e_star.unwrap());
        }
    }
}

#[test]
fn random_baseline_properties() {
    let pp = cgpp::PpConfig::default();
    for seed in 0..20 {
        let r = bench::random_baseline(&e2(), seed, &pp).unwrap();
        if let Some(x) = r.solution() {
            assert!(e2().feasibility_report(x).unwrap().feasible);
        }
        assert_eq!(r, bench::random_baseline(&e2(), seed, &pp).unwrap());
        let dead = bench::random_baseline(&infeasible_everywhere(4), seed, &pp).unwrap();
        assert!(!dead.is_feasible());
    }
}

#[test]
fn csv_output_has_fixed_header_and_blanks() {
    let spec = ExperimentSpec::new(vec![6], vec![0.3], 1, 5, vec![Method::RandomPp]);
    let recs = bench::run_experiment(&spec).unwrap();
    let mut buf = Vec::new();
    bench::write_csv(&recs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,m,ratio,seed,method,relax_obj,E,E_star,relative_error,hamming,feasible,cg_iterations,cg_termination,restoration_flips,optimization_flips,time_cg_ms,time_pp_ms,time_total_ms"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 18);
    assert_eq!(row[4], "random_pp");
    assert_eq!(row[5], "");
    assert!(row[10] == "true" || row[10] == "false");
}
