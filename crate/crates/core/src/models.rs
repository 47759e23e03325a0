//! Small concrete inclusions and actions used by the catalog, the tests and
//! the benches.

use crate::actions::{FiniteGroup, GroupAction};
use crate::algebra::{AlgebraElement, MultiMatrixAlgebra};
use crate::asymptotic::{Embedding, InductiveSystem, Stage};
use crate::error::Result;
use crate::expectation::{uniform_trace_expectation, ConditionalExpectation};
use crate::index::IndexedExpectation;
use crate::subspace::{generated_subalgebra, Subalgebra};
use crate::tolerance::ToleranceConfig;

/// Diagonal matrices inside `M_n`.
pub fn diagonal_subalgebra(n: usize, tol: &ToleranceConfig) -> Result<Subalgebra> {
    let a = MultiMatrixAlgebra::full_matrix(n);
    let units: Vec<AlgebraElement> = (0..n).map(|i| a.matrix_unit(0, i, i)).collect();
    generated_subalgebra(&a, &units, tol)
}

/// The pinching `M_n → diagonal`.
pub fn pinching(n: usize, tol: &ToleranceConfig) -> Result<ConditionalExpectation> {
    let a = MultiMatrixAlgebra::full_matrix(n);
    uniform_trace_expectation(&Subalgebra::full(&a), &diagonal_subalgebra(n, tol)?, tol)
}

/// `Z/2` swapping the two summands of `M_n ⊕ M_n`.
pub fn swap_action(n: usize, tol: &ToleranceConfig) -> Result<GroupAction> {
    let a = MultiMatrixAlgebra::new(vec![n, n])?;
    let a2 = a.clone();
    GroupAction::from_fn(
        FiniteGroup::cyclic(2)?,
        a,
        move |g, x| {
            if g == 0 {
                x.clone()
            } else {
                a2.from_blocks(vec![x.block(1).clone(), x.block(0).clone()]).expect("swap conforms")
            }
        },
        tol,
    )
}

/// `Z/n` acting on `C(Z/n)` by translation.
pub fn cyclic_translation(n: usize, tol: &ToleranceConfig) -> Result<GroupAction> {
    GroupAction::translation(FiniteGroup::cyclic(n)?, tol)
}

/// `S_3` acting on `C(S_3)` by left translation.
pub fn s3_translation(tol: &ToleranceConfig) -> Result<GroupAction> {
    GroupAction::translation(FiniteGroup::symmetric3(), tol)
}

/// `{1, (12)}` inside [`FiniteGroup::symmetric3`].
pub const S3_TRANSPOSITION_SUBGROUP: [usize; 2] = [0, 2];

/// `Z/2` acting on `M_2` by `Ad diag(1, −1)`.
pub fn inner_z2(tol: &ToleranceConfig) -> Result<GroupAction> {
    let a = MultiMatrixAlgebra::full_matrix(2);
    let u = a.diagonal(&[1.0, -1.0]);
    GroupAction::inner(FiniteGroup::cyclic(2)?, a.clone(), vec![a.unit(), u], tol)
}

/// The identity inclusion `M_n = M_n`.
pub fn identity(n: usize) -> ConditionalExpectation {
    ConditionalExpectation::identity(Subalgebra::full(&MultiMatrixAlgebra::full_matrix(n)))
}

/// `Ad (diag(1,−1) ⊗ 1)` on `M_2 → M_4 → …`, amplifying by 2 at each step;
/// the target at every stage is `(1/2)·1`.
pub fn inner_z2_system(stages: usize, tol: &ToleranceConfig) -> Result<InductiveSystem> {
    let mut out = Vec::with_capacity(stages);
    let mut embs = Vec::new();
    let mut alg = MultiMatrixAlgebra::full_matrix(2);
    let mut u = alg.diagonal(&[1.0, -1.0]);
    for k in 0..stages {
        let act = GroupAction::inner(FiniteGroup::cyclic(2)?, alg.clone(), vec![alg.unit(), u.clone()], tol)?;
        out.push(Stage {
            algebra: alg.clone(),
            generators: Subalgebra::full(&alg).generators().to_vec(),
            expectation: act.canonical_expectation(tol)?,
            target: alg.unit().scale_real(0.5),
        });
        if k + 1 < stages {
            let emb = Embedding::amplification(&alg, 2, tol)?;
            u = emb.apply(&u);
            alg = emb.target().clone();
            embs.push(emb);
        }
    }
    InductiveSystem::new(out, embs)
}

/// Indexed canonical expectation of an action.
pub fn canonical_indexed(act: &GroupAction, tol: &ToleranceConfig) -> Result<IndexedExpectation> {
    IndexedExpectation::new(&act.canonical_expectation(tol)?, tol)
}
