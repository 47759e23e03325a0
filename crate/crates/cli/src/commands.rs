//! Subcommand implementations. Each returns a JSON report and a pass flag;
//! printing and exit codes are left to the binary.

use std::path::{Path, PathBuf};

use cstar_core::asymptotic::{defect_curve, InductiveSystem};
use cstar_core::{
    approx_rep_check, build_basic_construction, dual_index_check, duality_backward, duality_forward,
    duality_round_trip, jones_tower, models, recover_rohlin_projection, rohlin_check, rohlin_criterion,
    subgroup_inclusion, tower_summary, tunnel_construction, AlgebraElement, ConditionalExpectation, GroupAction,
    IndexedExpectation, ToleranceConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog;
use crate::io::{self, IoError, Result};

pub struct Output {
    pub report: Value,
    pub pass: bool,
}

fn out<T: Serialize>(report: &T, pass: bool) -> Result<Output> {
    Ok(Output { report: serde_json::to_value(report)?, pass })
}

/// An inclusion read from a file or taken from the catalog.
#[derive(Debug, Clone)]
pub enum Source {
    Entry(String),
    File(PathBuf),
}

impl Source {
    pub fn new(entry: Option<String>, file: Option<PathBuf>) -> Result<Self> {
        match (entry, file) {
            (Some(e), None) => Ok(Source::Entry(e)),
            (None, Some(f)) => Ok(Source::File(f)),
            (None, None) => Err(IoError::Schema("give --entry or an input file".into())),
            (Some(_), Some(_)) => Err(IoError::Schema("give --entry or an input file, not both".into())),
        }
    }

    fn entry(&self) -> Result<Option<catalog::CatalogEntry>> {
        match self {
            Source::Entry(name) => {
                catalog::find(name).map(Some).ok_or_else(|| IoError::Schema(format!("no catalog entry named {name:?}")))
            }
            Source::File(_) => Ok(None),
        }
    }

    pub fn expectation(&self, tol: &ToleranceConfig) -> Result<ConditionalExpectation> {
        match self {
            Source::Entry(_) => Ok(self.entry()?.expect("entry source").expectation(tol)?),
            Source::File(p) => io::inclusion(&io::read_json(p)?, tol),
        }
    }

    pub fn action(&self, tol: &ToleranceConfig) -> Result<GroupAction> {
        match self {
            Source::Entry(name) => self
                .entry()?
                .expect("entry source")
                .action(tol)?
                .ok_or_else(|| IoError::Schema(format!("catalog entry {name:?} has no group action"))),
            Source::File(p) => io::group_action(&io::read_json(p)?, tol),
        }
    }

    /// The projection from `--projection`, else the entry's witness.
    fn projection(&self, file: Option<&Path>, ambient: &cstar_core::MultiMatrixAlgebra, tol: &ToleranceConfig) -> Result<AlgebraElement> {
        if let Some(f) = file {
            return io::element(ambient, &io::read_json(f)?);
        }
        self.entry()?
            .map(|e| e.witness(tol))
            .transpose()?
            .flatten()
            .ok_or_else(|| IoError::Schema("give --projection".into()))
    }
}

pub fn index(src: &Source, tol: &ToleranceConfig) -> Result<Output> {
    let e = src.expectation(tol)?;
    let ie = IndexedExpectation::new(&e, tol)?;
    let d = ie.defects();
    let v = ie.index();
    let report = json!({
        "upper_dim": e.upper().dim(),
        "lower_dim": e.lower().dim(),
        "quasi_basis_size": ie.quasi_basis().len(),
        "index_scalar": v.scalar(),
        "index_blocks": v.block_values(),
        "centrality_defect": v.centrality_defect(),
        "defects": d,
    });
    Ok(Output { report, pass: tol.ok(d.max()) })
}

pub fn basic(src: &Source, tol: &ToleranceConfig) -> Result<Output> {
    let ie = IndexedExpectation::new(&src.expectation(tol)?, tol)?;
    let bc = build_basic_construction(&ie, tol)?;
    let di = dual_index_check(&bc, tol)?;
    let d = bc.defects();
    let report = json!({
        "source_dim": ie.expectation().upper().dim(),
        "gns_dim": bc.operator_algebra().vector_dim(),
        "algebra_dim": bc.algebra().dim(),
        "index": ie.index().scalar(),
        "defects": d,
        "dual_index": di,
    });
    Ok(Output { report, pass: tol.ok(d.max()) && di.pass })
}

pub fn tower(src: &Source, levels: usize, dim_cap: usize, tol: &ToleranceConfig) -> Result<Output> {
    let ie = IndexedExpectation::new(&src.expectation(tol)?, tol)?;
    let s = tower_summary(&jones_tower(&ie, levels, dim_cap, tol)?);
    let pass = s.iter().all(|l| tol.ok(l.max_defect));
    out(&json!({ "levels": s }), pass)
}

pub fn tunnel(src: &Source, projection: Option<&Path>, tol: &ToleranceConfig) -> Result<Output> {
    let ie = IndexedExpectation::new(&src.expectation(tol)?, tol)?;
    let e = src.projection(projection, ie.expectation().upper().ambient(), tol)?;
    let t = tunnel_construction(&ie, &e, tol)?;
    out(&t.report, t.report.pass)
}

pub fn rohlin(src: &Source, projection: Option<&Path>, tol: &ToleranceConfig) -> Result<Output> {
    let ie = IndexedExpectation::new(&src.expectation(tol)?, tol)?;
    let e = src.projection(projection, ie.expectation().upper().ambient(), tol)?;
    let r = rohlin_check(&ie, &e, tol)?;
    out(&r, r.pass)
}

pub fn approx_rep(src: &Source, projection: Option<&Path>, tol: &ToleranceConfig) -> Result<Output> {
    let e = src.expectation(tol)?;
    let w = src.projection(projection, e.upper().ambient(), tol)?;
    let r = approx_rep_check(&e, &w, tol)?;
    out(&r, r.pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Direction {
    Forward,
    Backward,
    Roundtrip,
}

/// Forward takes a Rohlin projection for `E`. Backward takes an approximate
/// representability witness for `Ê`, in the operator algebra of the basic
/// construction of `E`; with a catalog entry and no file it uses the image of
/// the entry's witness.
pub fn duality(src: &Source, direction: Direction, projection: Option<&Path>, tol: &ToleranceConfig) -> Result<Output> {
    let ie = IndexedExpectation::new(&src.expectation(tol)?, tol)?;
    let amb = ie.expectation().upper().ambient().clone();
    match direction {
        Direction::Forward => {
            let bc = build_basic_construction(&ie, tol)?;
            let e = src.projection(projection, &amb, tol)?;
            let (w, r) = duality_forward(&bc, &e, tol)?;
            out(&json!({ "report": r, "witness": io::element_json(&w) }), r.pass)
        }
        Direction::Backward => {
            let bc = build_basic_construction(&ie, tol)?;
            let w = match projection {
                Some(f) => io::element(bc.operator_algebra(), &io::read_json(f)?)?,
                None => bc.lambda(&src.projection(None, &amb, tol)?),
            };
            let bc2 = build_basic_construction(&bc.dual_indexed(tol)?, tol)?;
            let (f, r) = duality_backward(&bc2, &w, tol)?;
            let (e, rec) = recover_rohlin_projection(&bc2, &f, tol)?;
            let recovered = bc.lambda_inverse(&e);
            let report = json!({
                "report": r,
                "recover": rec,
                "recovered_projection": io::element_json(&recovered),
            });
            Ok(Output { report, pass: r.pass && rec.pass })
        }
        Direction::Roundtrip => {
            let e = src.projection(projection, &amb, tol)?;
            let r = duality_round_trip(&ie, &e, tol)?;
            out(&r, r.pass)
        }
    }
}

pub fn fixed_point(src: &Source, tol: &ToleranceConfig) -> Result<Output> {
    let act = src.action(tol)?;
    let e = act.canonical_expectation(tol)?;
    let rep = e.verify(tol);
    let report = json!({
        "group_order": act.group().order(),
        "algebra_dim": act.algebra().vector_dim(),
        "fixed_point_dim": e.lower().dim(),
        "action_defects": act.defects(),
        "expectation": rep,
        "inclusion": io::inclusion_json(&e),
    });
    Ok(Output { report, pass: rep.pass })
}

pub fn rohlin_action(src: &Source, projection: Option<&Path>, tol: &ToleranceConfig) -> Result<Output> {
    let act = src.action(tol)?;
    let e = src.projection(projection, act.algebra(), tol)?;
    let (_, crit) = rohlin_criterion(&act, &e, tol)?;
    let ie = models::canonical_indexed(&act, tol)?;
    let check = rohlin_check(&ie, &e, tol)?;
    let inner: Vec<usize> = (1..act.group().order()).filter(|&g| act.is_inner(g, tol).is_some()).collect();
    let report = json!({
        "criterion": crit,
        "rohlin_check": check,
        "agree": crit.pass == check.pass,
        "inner_elements": inner,
    });
    Ok(Output { report, pass: crit.pass && crit.pass == check.pass })
}

pub fn subgroup(src: &Source, subgroup: &[usize], projection: Option<&Path>, tol: &ToleranceConfig) -> Result<Output> {
    let act = src.action(tol)?;
    let e = src.projection(projection, act.algebra(), tol)?;
    let (part, crit) = rohlin_criterion(&act, &e, tol)?;
    let part = part.ok_or_else(|| IoError::Schema(format!("projection is not a Rohlin projection: {crit:?}")))?;
    let s = subgroup_inclusion(&act, subgroup, &part, tol)?;
    out(&s.report, s.report.pass)
}

pub enum SystemSource {
    File(PathBuf),
    InnerZ2 { stages: usize },
}

pub fn curve(src: &SystemSource, tol: &ToleranceConfig) -> Result<Output> {
    let (sys, cands): (InductiveSystem, Vec<AlgebraElement>) = match src {
        SystemSource::File(p) => io::system(&io::read_json(p)?, tol)?,
        SystemSource::InnerZ2 { stages } => {
            let sys = models::inner_z2_system(*stages, tol)?;
            let best = sys
                .stages()
                .iter()
                .enumerate()
                .map(|(k, s)| cstar_core::asymptotic::commuting_projection_search(k, s, tol.sample_count.min(16), tol))
                .collect::<cstar_core::Result<Vec<_>>>()?;
            let report = json!({ "records": best, "vanishing": best.last().is_some_and(|r| tol.ok(r.max())) });
            return Ok(Output { report, pass: true });
        }
    };
    let c = defect_curve(&sys, &cands, tol)?;
    out(&c, true)
}

pub fn catalog_run(pattern: Option<&str>, tol: &ToleranceConfig) -> Result<Output> {
    let reports = catalog::run_catalog(pattern, tol);
    if reports.is_empty() {
        return Err(IoError::Schema(format!("no catalog entry matches {:?}", pattern.unwrap_or(""))));
    }
    let pass = reports.iter().all(catalog::EntryReport::pass);
    out(&reports, pass)
}

pub fn catalog_list() -> Result<Output> {
    let list: Vec<Value> = catalog::catalog()
        .iter()
        .map(|e| json!({ "name": e.name, "description": e.description, "index": e.expected.index }))
        .collect();
    Ok(Output { report: Value::Array(list), pass: true })
}

pub fn catalog_export(name: &str, tol: &ToleranceConfig) -> Result<Output> {
    let entry = catalog::find(name).ok_or_else(|| IoError::Schema(format!("no catalog entry named {name:?}")))?;
    let e = entry.expectation(tol)?;
    out(&io::inclusion_json(&e), true)
}
