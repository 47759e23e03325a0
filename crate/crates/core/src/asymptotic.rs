//! Stage-wise Rohlin diagnostics along an inductive system of multi-matrix
//! algebras, standing in for conditions on the sequence algebra.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::expectation::ConditionalExpectation;
use crate::linalg::{self, C64};
use crate::subspace::{elements_matrix, Subalgebra};
use crate::tolerance::ToleranceConfig;

/// A unital *-homomorphism between multi-matrix algebras, stored on
/// canonical coordinates.
#[derive(Debug, Clone)]
pub struct Embedding {
    source: MultiMatrixAlgebra,
    target: MultiMatrixAlgebra,
    matrix: DMatrix<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingDefects {
    pub multiplicativity: f64,
    pub adjoint: f64,
    pub unit: f64,
    pub injectivity_margin: f64,
}

impl Embedding {
    pub fn new(source: MultiMatrixAlgebra, target: MultiMatrixAlgebra, matrix: DMatrix<C64>, tol: &ToleranceConfig) -> Result<Self> {
        if matrix.nrows() != target.vector_dim() || matrix.ncols() != source.vector_dim() {
            return Err(Error::Precondition(format!(
                "embedding matrix is {}x{}, expected {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                target.vector_dim(),
                source.vector_dim()
            )));
        }
        let emb = Self { source, target, matrix };
        let d = emb.defects(tol);
        for (axiom, v) in [("multiplicativity", d.multiplicativity), ("adjoint", d.adjoint), ("unit", d.unit)] {
            if !tol.ok(v) {
                return Err(Error::EmbeddingAxiom { axiom, defect: v });
            }
        }
        if d.injectivity_margin <= tol.rank_tol {
            return Err(Error::EmbeddingAxiom { axiom: "injectivity", defect: d.injectivity_margin });
        }
        Ok(emb)
    }

    pub fn from_fn(
        source: MultiMatrixAlgebra,
        target: MultiMatrixAlgebra,
        f: impl Fn(&AlgebraElement) -> AlgebraElement,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let imgs: Vec<AlgebraElement> = source.canonical_basis().iter().map(f).collect();
        let matrix = elements_matrix(&target, &imgs);
        Self::new(source, target, matrix, tol)
    }

    /// `x ↦ x ⊗ 1_k`, blockwise.
    pub fn amplification(source: &MultiMatrixAlgebra, k: usize, tol: &ToleranceConfig) -> Result<Self> {
        if k == 0 {
            return Err(Error::Precondition("amplification factor must be positive".into()));
        }
        let target = MultiMatrixAlgebra::new(source.block_dims().iter().map(|n| n * k).collect())?;
        let t2 = target.clone();
        Self::from_fn(source.clone(), target, move |x| amplify(&t2, x, k), tol)
    }

    pub fn source(&self) -> &MultiMatrixAlgebra {
        &self.source
    }

    pub fn target(&self) -> &MultiMatrixAlgebra {
        &self.target
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        self.target.from_vector(&(&self.matrix * x.to_vector()))
    }

    pub fn defects(&self, tol: &ToleranceConfig) -> EmbeddingDefects {
        let basis = self.source.canonical_basis();
        let checks: Vec<AlgebraElement> = if tol.full_check(basis.len()) {
            basis
        } else {
            let mut rng = tol.rng(0xe6);
            (0..tol.spot_checks).map(|_| self.source.random_element(&mut rng)).collect()
        };
        let imgs: Vec<AlgebraElement> = checks.iter().map(|x| self.apply(x)).collect();
        let mut d = EmbeddingDefects {
            multiplicativity: 0.0,
            adjoint: 0.0,
            unit: self.apply(&self.source.unit()).distance(&self.target.unit()),
            injectivity_margin: linalg::smallest_singular_value(&self.matrix),
        };
        for (x, fx) in checks.iter().zip(&imgs) {
            let s = x.norm().max(1.0);
            d.adjoint = d.adjoint.max(self.apply(&x.adjoint()).distance(&fx.adjoint()) / s);
            for (y, fy) in checks.iter().zip(&imgs) {
                let lhs = self.apply(&(x * y));
                d.multiplicativity = d.multiplicativity.max((&lhs - &(fx * fy)).norm() / (s * y.norm().max(1.0)));
            }
        }
        d
    }
}

/// `x ⊗ 1_k` in `target`, whose blocks are `k` times those of `x`.
pub fn amplify(target: &MultiMatrixAlgebra, x: &AlgebraElement, k: usize) -> AlgebraElement {
    let id = DMatrix::<C64>::identity(k, k);
    let blocks = x.blocks().iter().map(|b| b.kronecker(&id)).collect();
    target.from_blocks(blocks).expect("amplified blocks conform")
}

/// Per-stage data: the algebra, the generators to commute with, the
/// expectation and the target value for `E(e)`.
#[derive(Debug, Clone)]
pub struct Stage {
    pub algebra: MultiMatrixAlgebra,
    pub generators: Vec<AlgebraElement>,
    pub expectation: ConditionalExpectation,
    pub target: AlgebraElement,
}

#[derive(Debug, Clone)]
pub struct InductiveSystem {
    stages: Vec<Stage>,
    embeddings: Vec<Embedding>,
}

impl InductiveSystem {
    pub fn new(stages: Vec<Stage>, embeddings: Vec<Embedding>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Precondition("an inductive system needs at least one stage".into()));
        }
        if embeddings.len() + 1 != stages.len() {
            return Err(Error::Precondition(format!(
                "{} stages need {} embeddings, got {}",
                stages.len(),
                stages.len() - 1,
                embeddings.len()
            )));
        }
        for (k, emb) in embeddings.iter().enumerate() {
            if emb.source() != &stages[k].algebra || emb.target() != &stages[k + 1].algebra {
                return Err(Error::Precondition(format!("embedding {k} does not connect stages {k} and {}", k + 1)));
            }
        }
        for s in &stages {
            for g in &s.generators {
                s.algebra.conforms(g)?;
            }
            s.algebra.conforms(&s.target)?;
            if s.expectation.upper().ambient() != &s.algebra {
                return Err(Error::Precondition("stage expectation lives on another algebra".into()));
            }
        }
        Ok(Self { stages, embeddings })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectRecord {
    pub stage: usize,
    /// `max(‖e² − e‖, ‖e − e*‖)`
    pub projection_defect: f64,
    /// `max_a ‖ea − ae‖` over the stage generators.
    pub commutation_defect: f64,
    /// `‖E(e) − target‖`
    pub expectation_defect: f64,
}

impl DefectRecord {
    pub fn max(&self) -> f64 {
        self.projection_defect.max(self.commutation_defect).max(self.expectation_defect)
    }
}

/// All defects in operator norm.
pub fn rohlin_defect(
    stage: usize,
    e: &AlgebraElement,
    gens: &[AlgebraElement],
    ex: &ConditionalExpectation,
    target: &AlgebraElement,
) -> Result<DefectRecord> {
    let amb = ex.upper().ambient();
    amb.conforms(e)?;
    amb.conforms(target)?;
    for g in gens {
        amb.conforms(g)?;
    }
    let projection_defect = (&(e * e) - e).norm().max((e - &e.adjoint()).norm());
    let commutation_defect = gens.iter().map(|a| e.commutator(a).norm()).fold(0.0, f64::max);
    // E is defined on the upper subalgebra; project first so that stray
    // components outside it are not silently dropped.
    let outside = ex.upper().space().distance(e);
    let expectation_defect = (&ex.apply(&ex.upper().project(e)) - target).norm() + outside;
    Ok(DefectRecord { stage, projection_defect, commutation_defect, expectation_defect })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectCurve {
    pub records: Vec<DefectRecord>,
    /// Maximum defect is non-increasing from stage to stage.
    pub decreasing: bool,
    /// Maximum defect at the last stage is within `eq_tol`.
    pub vanishing: bool,
}

pub fn defect_curve(system: &InductiveSystem, candidates: &[AlgebraElement], tol: &ToleranceConfig) -> Result<DefectCurve> {
    if candidates.len() != system.len() {
        return Err(Error::Precondition(format!("{} candidates for {} stages", candidates.len(), system.len())));
    }
    let records = system
        .stages()
        .iter()
        .zip(candidates)
        .enumerate()
        .map(|(k, (s, e))| rohlin_defect(k, e, &s.generators, &s.expectation, &s.target))
        .collect::<Result<Vec<_>>>()?;
    let maxima: Vec<f64> = records.iter().map(DefectRecord::max).collect();
    let decreasing = maxima.windows(2).all(|w| w[1] <= w[0] + tol.eq_tol);
    let vanishing = maxima.last().is_some_and(|&m| tol.ok(m));
    Ok(DefectCurve { records, decreasing, vanishing })
}

/// Pushes a stage candidate forward to the next stage.
pub fn push_forward(system: &InductiveSystem, stage: usize, x: &AlgebraElement) -> Result<AlgebraElement> {
    let emb = system
        .embeddings()
        .get(stage)
        .ok_or_else(|| Error::Precondition(format!("no embedding out of stage {stage}")))?;
    emb.source().conforms(x)?;
    Ok(emb.apply(x))
}

/// Best record over projections commuting with the stage generators.
///
/// The commuting projections are reached as spectral projections of random
/// self-adjoint elements of the commutant of the generators, at every
/// spectral cut. `samples` random elements are tried, plus `0` and `1`.
pub fn commuting_projection_search(stage_index: usize, stage: &Stage, samples: usize, tol: &ToleranceConfig) -> Result<DefectRecord> {
    let amb = &stage.algebra;
    let comm = Subalgebra::full(amb).commutant_of(&stage.generators, tol)?;
    let mut rng = tol.rng(0x5ea + stage_index as u64);
    let mut cands = vec![amb.zero(), amb.unit()];
    for _ in 0..samples {
        let x = comm.space().random_element(&mut rng);
        let h = &x + &x.adjoint();
        let mut cuts = h.hermitian_eigenvalues();
        cuts.dedup_by(|a, b| (*a - *b).abs() < tol.eq_tol);
        for w in cuts.windows(2) {
            cands.push(h.spectral_projection_above(0.5 * (w[0] + w[1])));
        }
    }
    let mut best: Option<DefectRecord> = None;
    for e in &cands {
        let r = rohlin_defect(stage_index, e, &stage.generators, &stage.expectation, &stage.target)?;
        if best.is_none_or(|b| r.max() < b.max()) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least two candidates"))
}
