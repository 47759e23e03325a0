use cstar_core::asymptotic::{commuting_projection_search, InductiveSystem, Stage};
use cstar_core::models;
use cstar_core::rohlin::expectation_uniqueness_search;
use cstar_core::{
    approx_rep_check, beta_map, build_basic_construction, defect_curve, duality_forward, duality_round_trip,
    relative_commutant_report, rohlin_check, rohlin_criterion, subgroup_inclusion, uniform_trace_expectation,
    AlgebraElement, Embedding, GroupAction, IndexedExpectation, MultiMatrixAlgebra, Subalgebra, ToleranceConfig,
};

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

/// Actions with an exact Rohlin projection, and that projection.
fn rohlin_entries() -> Vec<(&'static str, GroupAction, AlgebraElement)> {
    let t = tol();
    let swap = models::swap_action(2, &t).unwrap();
    let e_swap = swap.algebra().block_unit(0);
    let mut out = vec![("swap", swap, e_swap)];
    for (name, act) in [
        ("Z2", models::cyclic_translation(2, &t).unwrap()),
        ("Z3", models::cyclic_translation(3, &t).unwrap()),
        ("S3", models::s3_translation(&t).unwrap()),
    ] {
        let e = act.algebra().block_unit(0);
        out.push((name, act, e));
    }
    out
}

#[test]
fn round_trip_recovers_the_witness() {
    let t = tol();
    for (name, act, e) in rohlin_entries() {
        let ie = models::canonical_indexed(&act, &t).unwrap();
        let r = duality_round_trip(&ie, &e, &t).unwrap();
        assert!(r.pass, "{name}: {r:?}");
        assert!(r.forward.max_defect() < 1e-9, "{name}");
        assert!(r.witness_error < 1e-9 && r.source_error < 1e-9, "{name}");
    }
}

#[test]
fn approximate_representability_forces_small_relative_commutant() {
    let t = tol();
    for (name, act, e) in rohlin_entries() {
        let ie = models::canonical_indexed(&act, &t).unwrap();
        let bc = build_basic_construction(&ie, &t).unwrap();
        let (w, fwd) = duality_forward(&bc, &e, &t).unwrap();
        assert!(fwd.pass, "{name}: {fwd:?}");
        let ar = approx_rep_check(bc.dual(), &w, &t).unwrap();
        assert!(ar.pass, "{name}: {ar:?}");
        let rc = relative_commutant_report(bc.algebra(), bc.image(), &t).unwrap();
        assert!(rc.contained_in_lower, "{name}: {rc:?}");
    }
}

#[test]
fn swap_relative_commutant_is_the_center() {
    let t = tol();
    let act = models::swap_action(2, &t).unwrap();
    let p = act.fixed_point_algebra(&t).unwrap();
    let rc = relative_commutant_report(&Subalgebra::full(act.algebra()), &p, &t).unwrap();
    assert_eq!(rc.dim, 2);
    assert!(!rc.contained_in_lower);
    assert!(!rc.irreducible);
}

#[test]
fn beta_on_rohlin_entries() {
    let t = tol();
    for (name, act, e) in rohlin_entries() {
        let ie = models::canonical_indexed(&act, &t).unwrap();
        let r = beta_map(&ie, &e, &t).unwrap();
        assert!(r.pass, "{name}: {r:?}");
        assert!(r.multiplicativity < 1e-9 && r.unital < 1e-9 && r.fixes_lower < 1e-9 && r.uniqueness < 1e-9);
    }
}

#[test]
fn beta_on_swap_is_the_first_block_doubled() {
    let t = tol();
    let act = models::swap_action(2, &t).unwrap();
    let ie = models::canonical_indexed(&act, &t).unwrap();
    let a = act.algebra().clone();
    let e = a.block_unit(0);
    let x = a.random_element(&mut t.rng(4));
    let got = cstar_core::rohlin::beta(&ie, &e, &x);
    let expect = a.from_blocks(vec![x.block(0).clone(), x.block(0).clone()]).unwrap();
    assert!(got.distance(&expect) < 1e-12);
    assert!((&got * &e).distance(&(&x * &e)) < 1e-12);
}

#[test]
fn rohlin_actions_are_outer() {
    let t = tol();
    for (name, act, e) in rohlin_entries() {
        let (_, crit) = rohlin_criterion(&act, &e, &t).unwrap();
        assert!(crit.pass, "{name}");
        for g in 1..act.group().order() {
            assert!(act.is_inner(g, &t).is_none(), "{name}: g = {g}");
        }
    }
    let inner = models::inner_z2(&t).unwrap();
    let u = inner.is_inner(1, &t).expect("Ad diag(1,-1) is inner");
    let x = inner.algebra().random_element(&mut t.rng(1));
    assert!((&(&u * &x) * &u.adjoint()).distance(&inner.apply(1, &x)) < 1e-9);
}

#[test]
fn subgroup_inclusion_values() {
    let t = tol();
    let act = models::s3_translation(&t).unwrap();
    let (part, crit) = rohlin_criterion(&act, &act.algebra().block_unit(0), &t).unwrap();
    assert!(crit.pass);
    let sub = subgroup_inclusion(&act, &models::S3_TRANSPOSITION_SUBGROUP, &part.unwrap(), &t).unwrap();
    assert!(sub.report.pass, "{:?}", sub.report);
    assert!((sub.report.index_f.unwrap() - 3.0).abs() < 1e-8);
    // e_H is the indicator of H on C(S3); check its expectations directly.
    let a = act.algebra();
    let e_h = &a.block_unit(0) + &a.block_unit(2);
    assert!(sub.e_h.distance(&e_h) < 1e-12);
    assert!(sub.f.apply(&e_h).distance(&a.unit().scale_real(1.0 / 3.0)) < 1e-10);
    let e = act.canonical_expectation(&t).unwrap();
    assert!(e.apply(&e_h).distance(&a.unit().scale_real(1.0 / 3.0)) < 1e-10);
    assert_eq!(sub.upper.dim(), 3);
    assert_eq!(sub.lower.dim(), 1);
}

#[test]
fn negative_controls() {
    let t = tol();
    let ie = IndexedExpectation::new(&models::pinching(2, &t).unwrap(), &t).unwrap();
    let a = MultiMatrixAlgebra::full_matrix(2);
    let r = rohlin_check(&ie, &a.unit(), &t).unwrap();
    assert!(!r.pass && r.expectation >= 0.5 - 1e-9);
    let r = rohlin_check(&ie, &a.matrix_unit(0, 0, 0), &t).unwrap();
    assert!(!r.pass);

    let inner = models::inner_z2(&t).unwrap();
    let half = a.from_blocks(vec![nalgebra::DMatrix::from_element(2, 2, cstar_core::C64::new(0.5, 0.0))]).unwrap();
    for e in [a.matrix_unit(0, 0, 0), half, a.unit(), a.zero()] {
        let (_, crit) = rohlin_criterion(&inner, &e, &t).unwrap();
        assert!(!crit.pass);
    }
}

#[test]
fn perturbed_witnesses_fail_where_perturbed() {
    let t = tol();
    let act = models::swap_action(2, &t).unwrap();
    let ie = models::canonical_indexed(&act, &t).unwrap();
    let a = act.algebra().clone();

    // Scaling only breaks idempotence and the expectation value.
    let scaled = a.block_unit(0).scale_real(1.0 + 1e-3);
    let r = rohlin_check(&ie, &scaled, &t).unwrap();
    assert!(!r.pass);
    assert!(r.projection > 5e-4 && r.expectation > 1e-4);
    assert!(r.centrality < 1e-12);

    // A non-central projection with the right expectation only breaks centrality.
    let tilted = &a.matrix_unit(0, 0, 0) + &a.matrix_unit(1, 1, 1);
    let r = rohlin_check(&ie, &tilted, &t).unwrap();
    assert!(!r.pass);
    assert!(r.projection < 1e-12 && r.expectation < 1e-12);
    assert!(r.centrality > 0.1);
}

#[test]
fn uniqueness_search_finds_no_alternative() {
    let t = tol();
    for (name, act, e) in rohlin_entries() {
        let ie = models::canonical_indexed(&act, &t).unwrap();
        let bc = build_basic_construction(&ie, &t).unwrap();
        let (w, _) = duality_forward(&bc, &e, &t).unwrap();
        assert!(approx_rep_check(bc.dual(), &w, &t).unwrap().pass);
        let s = expectation_uniqueness_search(bc.dual(), 6, &t).unwrap();
        assert_eq!(s.distinct, 0, "{name}: {s:?}");
    }
}

#[test]
fn uniqueness_search_sees_alternatives_when_they_exist() {
    let t = tol();
    let a = MultiMatrixAlgebra::commutative(2);
    let e = uniform_trace_expectation(&Subalgebra::full(&a), &Subalgebra::scalars(&a), &t).unwrap();
    let s = expectation_uniqueness_search(&e, 6, &t).unwrap();
    assert!(s.distinct > 0, "{s:?}");
}

#[test]
fn inner_action_defects_stay_bounded_below() {
    let t = tol();
    let sys = models::inner_z2_system(3, &t).unwrap();
    for (k, stage) in sys.stages().iter().enumerate() {
        let best = commuting_projection_search(k, stage, 8, &t).unwrap();
        assert!(best.expectation_defect >= 0.5 - 1e-9, "stage {k}: {best:?}");
    }
    // Exhaustive at stage 0: the projections commuting with M2 are 0 and 1.
    let s0 = &sys.stages()[0];
    for e in [s0.algebra.zero(), s0.algebra.unit()] {
        let r = cstar_core::rohlin_defect(0, &e, &s0.generators, &s0.expectation, &s0.target).unwrap();
        assert!((r.expectation_defect - 0.5).abs() < 1e-12);
    }
    let cands: Vec<AlgebraElement> = sys.stages().iter().map(|s| s.algebra.unit()).collect();
    let curve = defect_curve(&sys, &cands, &t).unwrap();
    assert!(!curve.vanishing);
    assert!(curve.records.iter().all(|r| r.max() >= 0.5 - 1e-9));
}

fn constant_swap_system(stages: usize) -> InductiveSystem {
    let t = tol();
    let act = models::swap_action(2, &t).unwrap();
    let a = act.algebra().clone();
    let stage = Stage {
        algebra: a.clone(),
        generators: Subalgebra::full(&a).generators().to_vec(),
        expectation: act.canonical_expectation(&t).unwrap(),
        target: a.unit().scale_real(0.5),
    };
    let embs = (1..stages).map(|_| Embedding::amplification(&a, 1, &t).unwrap()).collect();
    InductiveSystem::new(vec![stage; stages], embs).unwrap()
}

#[test]
fn exact_witnesses_give_a_flat_zero_curve() {
    let sys = constant_swap_system(3);
    let cands = vec![sys.stages()[0].algebra.block_unit(0); 3];
    let curve = defect_curve(&sys, &cands, &tol()).unwrap();
    assert!(curve.vanishing && curve.decreasing);
    assert!(curve.records.iter().all(|r| r.max() <= 1e-12));
}

#[test]
fn synthetic_inverse_curve() {
    // (1−ε)·(1,0) has defect max(ε − ε², ε/2) = ε − ε²; choose ε so that this is 1/n.
    let ns: Vec<f64> = (0..=10).map(|k| 4.0 * 10f64.powi(k)).collect();
    let sys = constant_swap_system(ns.len());
    let a = sys.stages()[0].algebra.clone();
    let cands: Vec<AlgebraElement> = ns
        .iter()
        .map(|&n| {
            let eps = 0.5 * (1.0 - (1.0 - 4.0 / n).sqrt());
            a.block_unit(0).scale_real(1.0 - eps)
        })
        .collect();
    let curve = defect_curve(&sys, &cands, &tol()).unwrap();
    for (r, n) in curve.records.iter().zip(&ns) {
        assert!((r.max() - 1.0 / n).abs() < 1e-9 / n + 1e-15, "{} vs {}", r.max(), 1.0 / n);
    }
    assert!(curve.decreasing && curve.vanishing);
}

#[test]
fn pushing_forward_keeps_commutation_defects() {
    let t = tol();
    let sys = models::inner_z2_system(3, &t).unwrap();
    let a0 = &sys.stages()[0].algebra;
    let e = a0.matrix_unit(0, 0, 0);
    let g = a0.matrix_unit(0, 0, 1);
    let before = e.commutator(&g).norm();
    let e1 = cstar_core::asymptotic::push_forward(&sys, 0, &e).unwrap();
    let g1 = cstar_core::asymptotic::push_forward(&sys, 0, &g).unwrap();
    assert!(e1.commutator(&g1).norm() <= before + 1e-12);
    assert!(cstar_core::asymptotic::push_forward(&sys, 2, &e1).is_err());
}
