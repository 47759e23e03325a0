//! Built-in examples with expected values, and the runner that checks them.

use cstar_core::models;
use cstar_core::{
    approx_rep_check, beta_map, build_basic_construction, dual_index_check, duality_round_trip, jones_tower,
    relative_commutant_report, rohlin_check, rohlin_criterion, subgroup_inclusion, tower_summary,
    tunnel_construction, AlgebraElement, ConditionalExpectation, GroupAction, IndexedExpectation, Result,
    ToleranceConfig,
};
use serde::Serialize;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// A closed-form value stated for the example in the literature.
    Published,
    /// Computed independently of the code path under test.
    Oracle,
    /// Holds by construction of the input.
    Constructed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    /// `Z/2` swapping the summands of `M_2 ⊕ M_2`.
    Swap,
    /// `Z/n` translating `C(Z/n)`.
    Translation(usize),
    S3Translation,
    /// `C(S_3)^{S_3} ⊂ C(S_3)^H` for `H = {1, (12)}`.
    S3Subgroup,
    Pinching(usize),
    InnerZ2,
    Identity(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub index: f64,
    pub basic_dim: usize,
    /// Whether some projection passes the Rohlin check.
    pub rohlin: bool,
    /// For entries with a tunnel projection: whether it is full.
    pub tunnel_full: Option<bool>,
    pub subgroup_index: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub recipe: Recipe,
    pub expected: Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub max_defect: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub entry: String,
    pub checks: Vec<Check>,
}

impl EntryReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn catalog() -> Vec<CatalogEntry> {
    let e = |index: f64, basic_dim, rohlin| Expected { index, basic_dim, rohlin, tunnel_full: None, subgroup_index: None };
    vec![
        CatalogEntry {
            name: "swap-M2",
            description: "Z/2 swapping the summands of M2 ⊕ M2; fixed points are the diagonal copy of M2",
            recipe: Recipe::Swap,
            expected: Expected { tunnel_full: Some(false), ..e(2.0, 16, true) },
        },
        CatalogEntry {
            name: "C(Z/2)",
            description: "Z/2 translating C(Z/2); fixed points are the scalars",
            recipe: Recipe::Translation(2),
            expected: e(2.0, 4, true),
        },
        CatalogEntry {
            name: "C(Z/3)",
            description: "Z/3 translating C(Z/3); fixed points are the scalars",
            recipe: Recipe::Translation(3),
            expected: e(3.0, 9, true),
        },
        CatalogEntry {
            name: "S3-translation",
            description: "S3 translating C(S3); fixed points are the scalars",
            recipe: Recipe::S3Translation,
            expected: e(6.0, 36, true),
        },
        CatalogEntry {
            name: "S3-subgroup-H2",
            description: "C(S3)^S3 ⊂ C(S3)^H for H = {1, (12)}, with F the restriction of the averaging map",
            recipe: Recipe::S3Subgroup,
            expected: Expected { subgroup_index: Some(3.0), ..e(6.0, 36, true) },
        },
        CatalogEntry {
            name: "pinching-M2",
            description: "diagonal matrices inside M2 with the pinching map",
            recipe: Recipe::Pinching(2),
            expected: Expected { tunnel_full: Some(true), ..e(2.0, 8, false) },
        },
        CatalogEntry {
            name: "pinching-M3",
            description: "diagonal matrices inside M3 with the pinching map",
            recipe: Recipe::Pinching(3),
            expected: Expected { tunnel_full: Some(true), ..e(3.0, 27, false) },
        },
        CatalogEntry {
            name: "inner-Z2",
            description: "Z/2 acting on M2 by Ad diag(1,-1); fixed points are the diagonal",
            recipe: Recipe::InnerZ2,
            expected: e(2.0, 8, false),
        },
        CatalogEntry {
            name: "identity",
            description: "M2 = M2 with the identity map",
            recipe: Recipe::Identity(2),
            expected: e(1.0, 4, true),
        },
    ]
}

pub fn find(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

/// Entries whose name contains `pattern`, in catalog order.
pub fn matching(pattern: Option<&str>) -> Vec<CatalogEntry> {
    catalog().into_iter().filter(|e| pattern.is_none_or(|p| e.name.contains(p))).collect()
}

impl CatalogEntry {
    pub fn action(&self, tol: &ToleranceConfig) -> Result<Option<GroupAction>> {
        Ok(match self.recipe {
            Recipe::Swap => Some(models::swap_action(2, tol)?),
            Recipe::Translation(n) => Some(models::cyclic_translation(n, tol)?),
            Recipe::S3Translation | Recipe::S3Subgroup => Some(models::s3_translation(tol)?),
            Recipe::InnerZ2 => Some(models::inner_z2(tol)?),
            Recipe::Pinching(_) | Recipe::Identity(_) => None,
        })
    }

    pub fn expectation(&self, tol: &ToleranceConfig) -> Result<ConditionalExpectation> {
        match self.recipe {
            Recipe::Pinching(n) => models::pinching(n, tol),
            Recipe::Identity(n) => Ok(models::identity(n)),
            _ => self.action(tol)?.expect("action recipes").canonical_expectation(tol),
        }
    }

    /// The Rohlin projection for entries that have one: the indicator of the
    /// first summand.
    pub fn witness(&self, tol: &ToleranceConfig) -> Result<Option<AlgebraElement>> {
        if !self.expected.rohlin {
            return Ok(None);
        }
        Ok(Some(self.expectation(tol)?.upper().ambient().block_unit(0)))
    }

    pub fn subgroup(&self) -> Option<&'static [usize]> {
        match self.recipe {
            Recipe::S3Subgroup => Some(&models::S3_TRANSPOSITION_SUBGROUP),
            _ => None,
        }
    }
}

fn check(name: &str, pass: bool, max_defect: f64, origin: Origin) -> Check {
    Check { name: name.to_string(), pass, max_defect, origin }
}

/// All central projections of the ambient algebra: sums of block units.
fn central_projections(ie: &IndexedExpectation) -> Vec<AlgebraElement> {
    let a = ie.expectation().upper().ambient();
    let r = a.block_count();
    (0..1usize << r)
        .map(|mask| {
            let mut p = a.zero();
            for k in 0..r {
                if mask >> k & 1 == 1 {
                    p = &p + &a.block_unit(k);
                }
            }
            p
        })
        .collect()
}

const INDEX_TOL: f64 = 1e-8;

/// Runs every check declared for `entry`. Errors are reported as failed checks
/// so that one broken identity does not hide the others.
pub fn run_entry(entry: &CatalogEntry, tol: &ToleranceConfig) -> EntryReport {
    let mut checks = Vec::new();
    if let Err(err) = run_checks(entry, tol, &mut checks) {
        checks.push(check(&format!("error: {err}"), false, f64::INFINITY, Origin::Constructed));
    }
    EntryReport { entry: entry.name.to_string(), checks }
}

fn run_checks(entry: &CatalogEntry, tol: &ToleranceConfig, out: &mut Vec<Check>) -> Result<()> {
    let ex = &entry.expected;
    let e = entry.expectation(tol)?;
    let ie = IndexedExpectation::new(&e, tol)?;

    let err = ie.index().scalar().map_or(f64::INFINITY, |s| (s - ex.index).abs());
    out.push(check("index", err <= INDEX_TOL, err, Origin::Oracle));
    let qd = ie.defects().max();
    out.push(check("quasi_basis", tol.ok(qd), qd, Origin::Oracle));

    let bc = build_basic_construction(&ie, tol)?;
    let bd = bc.defects().max();
    out.push(check("basic_construction", tol.ok(bd), bd, Origin::Oracle));
    let dim = bc.algebra().dim();
    out.push(check("basic_dimension", dim == ex.basic_dim, dim.abs_diff(ex.basic_dim) as f64, Origin::Oracle));
    let di = dual_index_check(&bc, tol)?;
    out.push(check("dual_index", di.pass && di.max_error <= INDEX_TOL, di.max_error, Origin::Oracle));

    if let Some(w) = entry.witness(tol)? {
        let r = rohlin_check(&ie, &w, tol)?;
        out.push(check("rohlin_check", r.pass, r.max_defect(), Origin::Constructed));
        let rt = duality_round_trip(&ie, &w, tol)?;
        let rd = rt.forward.max_defect().max(rt.witness_error).max(rt.source_error);
        out.push(check("duality_round_trip", rt.pass && tol.ok(rd), rd, Origin::Oracle));
        let (lw, _) = cstar_core::duality_forward(&bc, &w, tol)?;
        let ar = approx_rep_check(bc.dual(), &lw, tol)?;
        out.push(check("approx_rep_dual", ar.pass, ar.max_defect(), Origin::Oracle));
        let rc = relative_commutant_report(bc.algebra(), bc.image(), tol)?;
        out.push(check("relative_commutant_dual", rc.contained_in_lower, rc.containment_defect, Origin::Oracle));
        let b = beta_map(&ie, &w, tol)?;
        out.push(check("beta_map", b.pass, b.max_defect(), Origin::Oracle));
    } else {
        // No central projection of A may pass.
        let mut best = f64::INFINITY;
        let mut any = false;
        for p in central_projections(&ie) {
            let r = rohlin_check(&ie, &p, tol)?;
            any |= r.pass;
            best = best.min(r.max_defect());
        }
        out.push(check("rohlin_check_rejects", !any, best, Origin::Oracle));
    }

    if let Some(act) = entry.action(tol)? {
        let cands = match entry.witness(tol)? {
            Some(w) => vec![w],
            None => central_projections(&ie),
        };
        let mut agree = true;
        let mut crit_pass = false;
        for c in &cands {
            let (_, cr) = rohlin_criterion(&act, c, tol)?;
            let rc = rohlin_check(&ie, c, tol)?;
            agree &= cr.pass == rc.pass;
            crit_pass |= cr.pass;
        }
        out.push(check("criterion_matches_check", agree, 0.0, Origin::Oracle));
        out.push(check(
            if ex.rohlin { "rohlin_criterion" } else { "rohlin_criterion_rejects" },
            crit_pass == ex.rohlin,
            0.0,
            Origin::Constructed,
        ));
        let inner: Vec<usize> = (1..act.group().order()).filter(|&g| act.is_inner(g, tol).is_some()).collect();
        if ex.rohlin {
            out.push(check("outer", inner.is_empty(), inner.len() as f64, Origin::Oracle));
        } else if entry.recipe == Recipe::InnerZ2 {
            out.push(check("inner_detected", inner == [1], 0.0, Origin::Constructed));
        }
        if let Some(h) = entry.subgroup() {
            let w = entry.witness(tol)?.expect("subgroup entries have a witness");
            let (part, _) = rohlin_criterion(&act, &w, tol)?;
            let part = part.ok_or_else(|| cstar_core::Error::Precondition("no Rohlin partition".into()))?;
            let sub = subgroup_inclusion(&act, h, &part, tol)?;
            let r = &sub.report;
            let want = ex.subgroup_index.unwrap_or(f64::NAN);
            let ierr = r.index_f.map_or(f64::INFINITY, |s| (s - want).abs());
            out.push(check("subgroup_index", ierr <= INDEX_TOL, ierr, Origin::Published));
            out.push(check("subgroup_f_of_e_h", tol.ok(r.f_eh_defect), r.f_eh_defect, Origin::Published));
            out.push(check("subgroup_e_of_e_h", tol.ok(r.e_eh_defect), r.e_eh_defect, Origin::Published));
            out.push(check("subgroup_composition", tol.ok(r.composition_defect), r.composition_defect, Origin::Oracle));
        }
    }

    match (entry.recipe, ex.tunnel_full) {
        (Recipe::Swap, Some(full)) => {
            let w = entry.witness(tol)?.expect("swap has a witness");
            let t = tunnel_construction(&ie, &w, tol)?;
            let pre = t.report.projection_defect.max(t.report.expectation_defect).max(t.report.f_report.max_defect());
            out.push(check("tunnel_preconditions", tol.ok(pre) && t.report.f_report.pass, pre, Origin::Oracle));
            out.push(check(
                if full { "tunnel_full" } else { "tunnel_not_full" },
                t.report.full == full,
                t.report.fullness_residual,
                Origin::Oracle,
            ));
        }
        (_, Some(full)) => {
            // Tunnel back down from the basic construction through e_P.
            let dual = bc.dual_indexed(tol)?;
            let t = tunnel_construction(&dual, bc.jones_projection(), tol)?;
            let d = t.report.module_defect.unwrap_or(f64::INFINITY).max(t.report.projection_defect);
            out.push(check("jones_tunnel", t.report.pass == full, d, Origin::Oracle));
        }
        _ => {}
    }

    if entry.recipe == Recipe::Identity(2) {
        let s = tower_summary(&jones_tower(&ie, 3, 256, tol)?);
        let flat = s.iter().all(|l| l.algebra_dim == 4 && l.index.is_some_and(|i| (i - 1.0).abs() <= INDEX_TOL));
        let d = s.iter().map(|l| l.max_defect).fold(0.0, f64::max);
        out.push(check("tower_flat", flat, d, Origin::Constructed));
    }
    Ok(())
}

pub fn run_catalog(pattern: Option<&str>, tol: &ToleranceConfig) -> Vec<EntryReport> {
    matching(pattern).iter().map(|e| run_entry(e, tol)).collect()
}
