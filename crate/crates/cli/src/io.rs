//! JSON formats for algebras, elements, inclusions, actions and inductive
//! systems.
//!
//! An element is `{"blocks": [block, ...]}` with each block a list of rows
//! and each entry a `[re, im]` pair. Real entries may also be written as
//! plain numbers.

use std::path::Path;

use cstar_core::asymptotic::{InductiveSystem, Stage};
use cstar_core::{
    trace_preserving_expectation, AlgebraElement, ConditionalExpectation, Embedding, FiniteGroup, GroupAction,
    MultiMatrixAlgebra, Subalgebra, ToleranceConfig, C64,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] cstar_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(r) => C64::new(r, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

pub type MatrixJson = Vec<Vec<Entry>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AlgebraJson {
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ElementJson {
    pub blocks: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SubalgebraJson {
    /// The *-subalgebra generated by these elements.
    Generators(Vec<ElementJson>),
    /// A spanning set that must already be a *-subalgebra.
    Basis(Vec<ElementJson>),
}

/// `P ⊂ A` with either explicit map data for `E` or trace weights. With
/// neither, `E` is the trace-preserving expectation for unit weights.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InclusionJson {
    pub algebra: AlgebraJson,
    pub subalgebra: SubalgebraJson,
    /// Matrix of `E` on canonical coordinates of `A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_matrix: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum GroupJson {
    Cyclic(usize),
    Symmetric3,
    Table(Vec<Vec<usize>>),
    Permutations(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionJson {
    /// Left translation on `C(G)`.
    Translation,
    /// `Ad u_g`, one unitary per group element.
    Inner { algebra: AlgebraJson, unitaries: Vec<ElementJson> },
    /// One canonical-coordinate matrix per group element.
    Maps { algebra: AlgebraJson, maps: Vec<MatrixJson> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GroupActionJson {
    pub group: GroupJson,
    pub action: ActionJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingJson {
    Amplification(usize),
    Matrix { target: AlgebraJson, matrix: MatrixJson },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageJson {
    pub inclusion: InclusionJson,
    /// Elements that `e` should commute with; the generators of `A` if absent.
    #[serde(default)]
    pub generators: Option<Vec<ElementJson>>,
    /// `E(e)` target; `(Index E)^{-1}` must be supplied explicitly.
    pub target: ElementJson,
    pub candidate: ElementJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SystemJson {
    pub stages: Vec<StageJson>,
    pub embeddings: Vec<EmbeddingJson>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn algebra(j: &AlgebraJson) -> Result<MultiMatrixAlgebra> {
    Ok(MultiMatrixAlgebra::new(j.blocks.clone())?)
}

pub fn matrix(j: &MatrixJson) -> Result<DMatrix<C64>> {
    let rows = j.len();
    let cols = j.first().map_or(0, Vec::len);
    if j.iter().any(|r| r.len() != cols) {
        return Err(IoError::Schema("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, k| j[i][k].value()))
}

pub fn matrix_json(m: &DMatrix<C64>) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| Entry::Complex([m[(i, k)].re, m[(i, k)].im])).collect())
        .collect()
}

pub fn element(a: &MultiMatrixAlgebra, j: &ElementJson) -> Result<AlgebraElement> {
    let blocks = j.blocks.iter().map(matrix).collect::<Result<Vec<_>>>()?;
    Ok(a.from_blocks(blocks)?)
}

pub fn element_json(x: &AlgebraElement) -> ElementJson {
    ElementJson { blocks: x.blocks().iter().map(matrix_json).collect() }
}

pub fn subalgebra(a: &MultiMatrixAlgebra, j: &SubalgebraJson, tol: &ToleranceConfig) -> Result<Subalgebra> {
    Ok(match j {
        SubalgebraJson::Generators(g) => {
            let g = g.iter().map(|x| element(a, x)).collect::<Result<Vec<_>>>()?;
            Subalgebra::generated(a, &g, tol)?
        }
        SubalgebraJson::Basis(b) => {
            let b = b.iter().map(|x| element(a, x)).collect::<Result<Vec<_>>>()?;
            Subalgebra::from_basis(a, &b, tol)?
        }
    })
}

/// Builds and verifies `(A, P, E)`.
pub fn inclusion(j: &InclusionJson, tol: &ToleranceConfig) -> Result<ConditionalExpectation> {
    let a = algebra(&j.algebra)?;
    let p = subalgebra(&a, &j.subalgebra, tol)?;
    let full = Subalgebra::full(&a);
    match (&j.map_matrix, &j.weights) {
        (Some(_), Some(_)) => Err(IoError::Schema("give map_matrix or weights, not both".into())),
        (Some(m), None) => {
            let m = matrix(m)?;
            let n = a.vector_dim();
            if m.shape() != (n, n) {
                return Err(IoError::Schema(format!("map_matrix must be {n}×{n}, found {}×{}", m.nrows(), m.ncols())));
            }
            Ok(ConditionalExpectation::from_canonical_matrix(full, p, &m, tol)?)
        }
        (None, w) => {
            let w = w.clone().unwrap_or_else(|| vec![1.0; a.block_count()]);
            Ok(trace_preserving_expectation(&full, &p, &w, tol)?)
        }
    }
}

pub fn inclusion_json(e: &ConditionalExpectation) -> InclusionJson {
    let a = e.upper().ambient();
    InclusionJson {
        algebra: AlgebraJson { blocks: a.block_dims().to_vec() },
        subalgebra: SubalgebraJson::Basis(e.lower().basis().iter().map(element_json).collect()),
        map_matrix: Some(matrix_json(&e.canonical_matrix())),
        weights: None,
    }
}

pub fn group(j: &GroupJson) -> Result<FiniteGroup> {
    Ok(match j {
        GroupJson::Cyclic(n) => FiniteGroup::cyclic(*n)?,
        GroupJson::Symmetric3 => FiniteGroup::symmetric3(),
        GroupJson::Table(t) => FiniteGroup::new(t.clone())?,
        GroupJson::Permutations(p) => FiniteGroup::from_permutations(p)?,
    })
}

pub fn group_action(j: &GroupActionJson, tol: &ToleranceConfig) -> Result<GroupAction> {
    let g = group(&j.group)?;
    Ok(match &j.action {
        ActionJson::Translation => GroupAction::translation(g, tol)?,
        ActionJson::Inner { algebra: aj, unitaries } => {
            let a = algebra(aj)?;
            let us = unitaries.iter().map(|u| element(&a, u)).collect::<Result<Vec<_>>>()?;
            GroupAction::inner(g, a, us, tol)?
        }
        ActionJson::Maps { algebra: aj, maps } => {
            let a = algebra(aj)?;
            let ms = maps.iter().map(matrix).collect::<Result<Vec<_>>>()?;
            GroupAction::new(g, a, ms, tol)?
        }
    })
}

/// The system together with one candidate projection per stage.
pub fn system(j: &SystemJson, tol: &ToleranceConfig) -> Result<(InductiveSystem, Vec<AlgebraElement>)> {
    let mut stages = Vec::with_capacity(j.stages.len());
    let mut cands = Vec::with_capacity(j.stages.len());
    for s in &j.stages {
        let ex = inclusion(&s.inclusion, tol)?;
        let a = ex.upper().ambient().clone();
        let generators = match &s.generators {
            Some(g) => g.iter().map(|x| element(&a, x)).collect::<Result<Vec<_>>>()?,
            None => Subalgebra::full(&a).generators().to_vec(),
        };
        let target = element(&a, &s.target)?;
        cands.push(element(&a, &s.candidate)?);
        stages.push(Stage { algebra: a, generators, expectation: ex, target });
    }
    if j.embeddings.len() + 1 != stages.len() && !stages.is_empty() {
        return Err(IoError::Schema(format!("{} stages need {} embeddings", stages.len(), stages.len() - 1)));
    }
    let mut embs = Vec::with_capacity(j.embeddings.len());
    for (k, e) in j.embeddings.iter().enumerate() {
        let src = &stages[k].algebra;
        embs.push(match e {
            EmbeddingJson::Amplification(m) => Embedding::amplification(src, *m, tol)?,
            EmbeddingJson::Matrix { target, matrix: m } => {
                Embedding::new(src.clone(), algebra(target)?, matrix(m)?, tol)?
            }
        });
    }
    Ok((InductiveSystem::new(stages, embs)?, cands))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn element_round_trip() {
        let a = MultiMatrixAlgebra::new(vec![1, 2]).unwrap();
        let x = a.random_element(&mut tol().rng(0));
        let back = element(&a, &element_json(&x)).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn real_entries_are_accepted() {
        let j: ElementJson = serde_json::from_str(r#"{"blocks": [[[1, 0], [0, [0, -1]]]]}"#).unwrap();
        let a = MultiMatrixAlgebra::full_matrix(2);
        let x = element(&a, &j).unwrap();
        assert_eq!(x.block(0)[(1, 1)], C64::new(0.0, -1.0));
    }

    #[test]
    fn non_closed_basis_is_rejected() {
        let j: InclusionJson = serde_json::from_str(
            r#"{"algebra": {"blocks": [2]},
                "subalgebra": {"basis": [{"blocks": [[[1, 0], [0, 1]]]}, {"blocks": [[[0, 1], [0, 0]]]}]}}"#,
        )
        .unwrap();
        let err = inclusion(&j, &tol()).unwrap_err().to_string();
        assert!(err.starts_with("subalgebra: adjoint-closure failed"), "{err}");
    }

    #[test]
    fn ragged_matrix_is_a_schema_error() {
        let m: MatrixJson = vec![vec![Entry::Real(1.0)], vec![]];
        assert!(matches!(matrix(&m), Err(IoError::Schema(_))));
    }
}
