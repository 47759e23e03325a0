//! Acceptance suite: twelve criteria, one line each. Runs without the libtest
//! harness so the lines are always shown; exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use cstar_cli::catalog::{self, CatalogEntry};
use cstar_core::models;
use cstar_core::{
    approx_rep_check, beta_map, build_basic_construction, dual_index_check, duality_forward, duality_round_trip,
    quasi_basis_defects, relative_commutant_report, rohlin_check, rohlin_criterion, subgroup_inclusion,
    tunnel_construction, AlgebraElement, IndexedExpectation, ToleranceConfig,
};
use nalgebra::DMatrix;

type Outcome = Result<String, String>;

/// Identity checks over full bases regardless of dimension.
fn tol() -> ToleranceConfig {
    ToleranceConfig { full_check_dim: usize::MAX, ..ToleranceConfig::default() }
}

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn central_projections(a: &cstar_core::MultiMatrixAlgebra) -> Vec<AlgebraElement> {
    (0..1usize << a.block_count())
        .map(|mask| {
            (0..a.block_count())
                .filter(|k| mask >> k & 1 == 1)
                .fold(a.zero(), |p, k| &p + &a.block_unit(k))
        })
        .collect()
}

fn rohlin_entries() -> Vec<CatalogEntry> {
    ["swap-M2", "C(Z/2)", "C(Z/3)", "S3-translation"].iter().map(|n| catalog::find(n).unwrap()).collect()
}

fn index_values() -> Outcome {
    let t = tol();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut check = |name: String, e: cstar_core::ConditionalExpectation, want: f64| -> Result<(), String> {
        let ie = IndexedExpectation::new(&e, &t).map_err(err)?;
        let s = ie.index().scalar().ok_or(format!("{name}: index not scalar"))?;
        worst = worst.max((s - want).abs());
        ensure((s - want).abs() <= 1e-8, format!("{name}: index {s}, expected {want}"))
    };
    for n in 2..=8 {
        check(format!("pinching M{n}"), models::pinching(n, &t).map_err(err)?, n as f64)?;
    }
    for n in 2..=6 {
        let act = models::cyclic_translation(n, &t).map_err(err)?;
        check(format!("C(Z/{n})"), act.canonical_expectation(&t).map_err(err)?, n as f64)?;
    }
    let swap = models::swap_action(2, &t).map_err(err)?;
    check("swap".into(), swap.canonical_expectation(&t).map_err(err)?, 2.0)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("max |error| {worst:.1e}, {secs:.2} s"))
}

fn quasi_basis_identities() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    for entry in catalog::catalog() {
        let e = entry.expectation(&t).map_err(err)?;
        let ie = IndexedExpectation::new(&e, &t).map_err(err)?;
        let d = quasi_basis_defects(&e, ie.quasi_basis(), &t);
        worst = worst.max(d.max());
        ensure(d.max() <= 1e-9, format!("{}: {d:?}", entry.name))?;
    }
    Ok(format!("{} entries, max defect {worst:.1e}", catalog::catalog().len()))
}

fn basic_construction_identities() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut worst_index: f64 = 0.0;
    for entry in catalog::catalog() {
        let ie = IndexedExpectation::new(&entry.expectation(&t).map_err(err)?, &t).map_err(err)?;
        let bc = build_basic_construction(&ie, &t).map_err(err)?;
        let d = bc.defects();
        let m = d.jones_module.max(d.index_identity);
        worst = worst.max(m);
        ensure(m <= 1e-9, format!("{}: {d:?}", entry.name))?;
        if ie.index().scalar().is_some() {
            let r = dual_index_check(&bc, &t).map_err(err)?;
            worst_index = worst_index.max(r.max_error);
            ensure(r.max_error <= 1e-8, format!("{}: {r:?}", entry.name))?;
        }
    }
    Ok(format!("max identity defect {worst:.1e}, max dual index error {worst_index:.1e}"))
}

fn duality() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut worst_src: f64 = 0.0;
    for entry in rohlin_entries() {
        let ie = IndexedExpectation::new(&entry.expectation(&t).map_err(err)?, &t).map_err(err)?;
        let e = entry.witness(&t).map_err(err)?.unwrap();
        let r = duality_round_trip(&ie, &e, &t).map_err(err)?;
        let d = [
            r.forward.max_defect(),
            r.backward.approx_rep.max_defect(),
            r.backward.rohlin.max_defect(),
            r.recover.rohlin.max_defect(),
            r.recover.approx_rep.max_defect(),
            r.recover.pullback_residual,
            r.recover.jones_agreement,
            r.witness_error,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        worst = worst.max(d);
        worst_src = worst_src.max(r.source_error);
        ensure(r.forward.pass && r.backward.pass && r.recover.pass, format!("{}: {r:?}", entry.name))?;
        ensure(d <= 1e-9 && r.source_error <= 1e-9, format!("{}: defect {d:.1e}, source {:.1e}", entry.name, r.source_error))?;
    }
    Ok(format!("max identity defect {worst:.1e}, max recovery error {worst_src:.1e}"))
}

fn tunnel() -> Outcome {
    let t = tol();
    let act = models::swap_action(2, &t).map_err(err)?;
    let ie = models::canonical_indexed(&act, &t).map_err(err)?;
    let e = act.algebra().block_unit(0);
    let tun = tunnel_construction(&ie, &e, &t).map_err(err)?;
    let r = &tun.report;
    ensure(r.projection_defect <= 1e-9 && r.expectation_defect <= 1e-9, format!("E(e) ≠ 1/2: {r:?}"))?;
    ensure(r.f_report.pass, format!("F not an expectation: {:?}", r.f_report))?;
    // span{x e y : x, y ∈ P}, computed here by rank.
    let p = ie.expectation().lower().basis();
    let xe: Vec<AlgebraElement> = p.iter().map(|x| x * &e).collect();
    let cols: Vec<_> = xe.iter().flat_map(|x| p.iter().map(move |y| (x * y).to_vector())).collect();
    let m = DMatrix::from_columns(&cols);
    let sv = m.svd(false, false).singular_values;
    let span = sv.iter().filter(|&&s| s > t.rank_tol * sv.max().max(1.0)).count();
    let dim_a = act.algebra().vector_dim();
    ensure(
        r.full && span == dim_a,
        format!(
            "e = (1,0) is central, so span{{xey}} = M2 ⊕ 0 has dim {span} < dim A = {dim_a} and e is not full \
             (fullness residual {:.3})",
            r.fullness_residual
        ),
    )?;
    Ok(format!("span dim {span} = dim A"))
}

fn criterion_equivalence() -> Outcome {
    let t = tol();
    let mut n = 0;
    for entry in catalog::catalog() {
        let Some(act) = entry.action(&t).map_err(err)? else { continue };
        let ie = models::canonical_indexed(&act, &t).map_err(err)?;
        let mut cands = central_projections(act.algebra());
        cands.extend(entry.witness(&t).map_err(err)?);
        for e in &cands {
            let (_, c) = rohlin_criterion(&act, e, &t).map_err(err)?;
            let r = rohlin_check(&ie, e, &t).map_err(err)?;
            ensure(c.pass == r.pass, format!("{}: criterion {} vs check {}", entry.name, c.pass, r.pass))?;
            n += 1;
        }
    }
    Ok(format!("{n} (action, projection) pairs agree"))
}

fn outerness() -> Outcome {
    let t = tol();
    let mut n = 0;
    for entry in catalog::catalog() {
        let Some(act) = entry.action(&t).map_err(err)? else { continue };
        let mut passes = false;
        for e in central_projections(act.algebra()) {
            passes |= rohlin_criterion(&act, &e, &t).map_err(err)?.1.pass;
        }
        if !passes {
            continue;
        }
        for g in 1..act.group().order() {
            ensure(act.is_inner(g, &t).is_none(), format!("{}: element {g} is inner", entry.name))?;
        }
        n += 1;
    }
    ensure(n > 0, "no Rohlin action found".into())?;
    Ok(format!("{n} Rohlin actions, all non-unit elements outer"))
}

fn subgroup() -> Outcome {
    let t = tol();
    let act = models::s3_translation(&t).map_err(err)?;
    let (part, _) = rohlin_criterion(&act, &act.algebra().block_unit(0), &t).map_err(err)?;
    let s = subgroup_inclusion(&act, &models::S3_TRANSPOSITION_SUBGROUP, &part.ok_or("no partition")?, &t)
        .map_err(err)?;
    let idx = s.f.index().scalar().ok_or("Index F not scalar")?;
    let a = act.algebra();
    let third = a.unit().scale_real(1.0 / 3.0);
    let f_eh = s.f.apply(&s.e_h).distance(&third);
    let e_eh = act.canonical_expectation(&t).map_err(err)?.apply(&s.e_h).distance(&third);
    ensure((idx - 3.0).abs() <= 1e-8, format!("Index F = {idx}"))?;
    ensure(f_eh <= 1e-9 && e_eh <= 1e-9, format!("F(e_H) off by {f_eh:.1e}, E(e_H) off by {e_eh:.1e}"))?;
    Ok(format!("Index F = {idx:.12}, F(e_H) and E(e_H) within {:.1e} of 1/3", f_eh.max(e_eh)))
}

fn relative_commutants() -> Outcome {
    let t = tol();
    let mut n = 0;
    let mut worst: f64 = 0.0;
    for entry in catalog::catalog() {
        let e = entry.expectation(&t).map_err(err)?;
        let ie = IndexedExpectation::new(&e, &t).map_err(err)?;
        let bc = build_basic_construction(&ie, &t).map_err(err)?;
        // Witnesses for E itself among central projections of A, and for Ê
        // among images of Rohlin projections.
        for p in central_projections(e.upper().ambient()) {
            if approx_rep_check(&e, &p, &t).map_err(err)?.pass {
                let rc = relative_commutant_report(e.upper(), e.lower(), &t).map_err(err)?;
                worst = worst.max(rc.containment_defect);
                ensure(rc.contained_in_lower, format!("{}: {rc:?}", entry.name))?;
                n += 1;
            }
        }
        if let Some(w) = entry.witness(&t).map_err(err)? {
            let (lw, _) = duality_forward(&bc, &w, &t).map_err(err)?;
            if approx_rep_check(bc.dual(), &lw, &t).map_err(err)?.pass {
                let rc = relative_commutant_report(bc.algebra(), bc.image(), &t).map_err(err)?;
                worst = worst.max(rc.containment_defect);
                ensure(rc.contained_in_lower, format!("{} (dual): {rc:?}", entry.name))?;
                n += 1;
            }
        }
    }
    ensure(n > 0, "no witness passed".into())?;
    Ok(format!("{n} passing witnesses, max containment defect {worst:.1e}"))
}

fn beta() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for entry in catalog::catalog() {
        let Some(w) = entry.witness(&t).map_err(err)? else { continue };
        let ie = IndexedExpectation::new(&entry.expectation(&t).map_err(err)?, &t).map_err(err)?;
        let r = beta_map(&ie, &w, &t).map_err(err)?;
        let d = r.multiplicativity.max(r.unital).max(r.fixes_lower).max(r.uniqueness);
        worst = worst.max(d);
        ensure(r.pass && d <= 1e-9, format!("{}: {r:?}", entry.name))?;
        n += 1;
    }
    Ok(format!("{n} Rohlin entries, max defect {worst:.1e}"))
}

fn negative_controls() -> Outcome {
    let t = tol();
    for n in 2..=4 {
        let ie = IndexedExpectation::new(&models::pinching(n, &t).map_err(err)?, &t).map_err(err)?;
        let a = ie.expectation().upper().ambient().clone();
        for p in central_projections(&a) {
            let r = rohlin_check(&ie, &p, &t).map_err(err)?;
            ensure(!r.pass, format!("pinching M{n} passed"))?;
            if n == 2 {
                ensure(r.expectation >= 0.5 - 1e-9, format!("pinching M2 expectation defect {}", r.expectation))?;
            }
        }
    }
    let inner = models::inner_z2(&t).map_err(err)?;
    let a = inner.algebra().clone();
    let mut cands = central_projections(&a);
    cands.push(a.matrix_unit(0, 0, 0));
    cands.push(a.from_blocks(vec![DMatrix::from_element(2, 2, cstar_core::C64::new(0.5, 0.0))]).map_err(err)?);
    for e in &cands {
        ensure(!rohlin_criterion(&inner, e, &t).map_err(err)?.1.pass, "inner Z/2 passed the criterion".into())?;
    }
    let swap = models::swap_action(2, &t).map_err(err)?;
    let ie = models::canonical_indexed(&swap, &t).map_err(err)?;
    let b = swap.algebra().clone();
    let scaled = rohlin_check(&ie, &b.block_unit(0).scale_real(1.0 + 1e-3), &t).map_err(err)?;
    ensure(
        !scaled.pass && scaled.projection > 0.0 && scaled.expectation > 0.0 && scaled.centrality <= 1e-12,
        format!("scaled witness: {scaled:?}"),
    )?;
    let tilted = rohlin_check(&ie, &(&b.matrix_unit(0, 0, 0) + &b.matrix_unit(1, 1, 1)), &t).map_err(err)?;
    ensure(
        !tilted.pass && tilted.centrality > 0.0 && tilted.projection <= 1e-12 && tilted.expectation <= 1e-12,
        format!("tilted witness: {tilted:?}"),
    )?;
    Ok(format!(
        "pinching rejected; inner Z/2 rejected; scaled witness defects ({:.1e}, {:.1e}), tilted centrality {:.2}",
        scaled.projection, scaled.expectation, tilted.centrality
    ))
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_cstar"))
            .args(["catalog", "run", "--seed", "0", "--json"])
            .env_remove("CSTAR_TOL")
            .env_remove("CSTAR_RANK_TOL")
            .env_remove("CSTAR_SEED")
            .env_remove("CSTAR_ENTRY")
            .output()
            .map_err(err)
    };
    let a = run()?;
    let b = run()?;
    ensure(a.status.success(), format!("catalog run failed: {}", String::from_utf8_lossy(&a.stdout)))?;
    ensure(!a.stdout.is_empty() && a.stdout == b.stdout, "reports differ between runs".into())?;
    Ok(format!("{} identical bytes", a.stdout.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("index values", index_values),
        ("quasi-basis identities", quasi_basis_identities),
        ("basic construction identities", basic_construction_identities),
        ("duality harness", duality),
        ("tunnel on swap-M2", tunnel),
        ("criterion matches Rohlin check", criterion_equivalence),
        ("Rohlin actions are outer", outerness),
        ("subgroup inclusion S3 ⊃ H2", subgroup),
        ("relative commutant containment", relative_commutants),
        ("beta map", beta),
        ("negative controls", negative_controls),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
