//! Benchmark fixtures.

use cstar_core::{models, AlgebraElement, ConditionalExpectation, Result, ToleranceConfig};

/// Inclusions small enough to bench every stage on.
pub fn inclusions(tol: &ToleranceConfig) -> Result<Vec<(&'static str, ConditionalExpectation)>> {
    Ok(vec![
        ("pinching-2", models::pinching(2, tol)?),
        ("pinching-4", models::pinching(4, tol)?),
        ("swap-2", models::swap_action(2, tol)?.canonical_expectation(tol)?),
        ("translation-6", models::cyclic_translation(6, tol)?.canonical_expectation(tol)?),
    ])
}

/// The swap inclusion with its Rohlin projection `(1, 0)`.
pub fn swap_with_witness(tol: &ToleranceConfig) -> Result<(ConditionalExpectation, AlgebraElement)> {
    let act = models::swap_action(2, tol)?;
    let e = act.algebra().block_unit(0);
    Ok((act.canonical_expectation(tol)?, e))
}
