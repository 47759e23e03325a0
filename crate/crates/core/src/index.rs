//! Quasi-bases and the Watatani index.
//!
//! The solver works in the GNS space of `E`. With `{b_j}` an orthonormal
//! basis of the source algebra, the operator `T = Σ_j λ(b_j)† e_P λ(b_j)` is
//! positive, lies in the basic construction, and is invertible exactly when
//! `E` is faithful. Setting `v_j = b_j` and `u_j = η^{-1}(T^{-1} η(b_j*))`
//! gives `Σ_j λ(u_j) e_P λ(v_j) = 1`, which is the left quasi-basis identity,
//! and its adjoint is the right identity. So the `dim² × dim²` linear system
//! for the `u_j` reduces to one `dim × dim` inversion.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{sum_elements, AlgebraElement};
use crate::error::{Error, Result};
use crate::expectation::ConditionalExpectation;
use crate::gns::GnsSpace;
use crate::linalg::{self, C64};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiBasis {
    pairs: Vec<(AlgebraElement, AlgebraElement)>,
}

impl QuasiBasis {
    pub fn new(pairs: Vec<(AlgebraElement, AlgebraElement)>) -> Self {
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(AlgebraElement, AlgebraElement)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `Σ u_i v_i`.
    pub fn index_element(&self, algebra: &crate::algebra::MultiMatrixAlgebra) -> AlgebraElement {
        let prods: Vec<AlgebraElement> = self.pairs.iter().map(|(u, v)| u * v).collect();
        sum_elements(algebra, &prods)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiBasisDefects {
    /// `max ‖a − Σ u_i E(v_i a)‖`
    pub left: f64,
    /// `max ‖a − Σ E(a u_i) v_i‖`
    pub right: f64,
}

impl QuasiBasisDefects {
    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

/// Both identities over the basis of the source algebra (random elements
/// above `full_check_dim`), relative Frobenius norm.
pub fn quasi_basis_defects(e: &ConditionalExpectation, qb: &QuasiBasis, tol: &ToleranceConfig) -> QuasiBasisDefects {
    let upper = e.upper();
    let amb = upper.ambient();
    let mut left: f64 = 0.0;
    let mut right: f64 = 0.0;
    for a in upper.space().check_elements(tol, 0x9b) {
        let l = sum_elements(amb, &qb.pairs.iter().map(|(u, v)| u * &e.apply(&(v * &a))).collect::<Vec<_>>());
        let r = sum_elements(amb, &qb.pairs.iter().map(|(u, v)| &e.apply(&(&a * u)) * v).collect::<Vec<_>>());
        let scale = a.frobenius_norm().max(1.0);
        left = left.max((&l - &a).frobenius_norm() / scale);
        right = right.max((&r - &a).frobenius_norm() / scale);
    }
    QuasiBasisDefects { left, right }
}

/// `T = Σ_j λ(b_j)† e_P λ(b_j)` in the GNS frame.
pub fn t_operator(gns: &GnsSpace) -> DMatrix<C64> {
    let p = gns.jones_matrix();
    let d = gns.dim();
    let mut t = DMatrix::zeros(d, d);
    for l in gns.lambda_basis() {
        let pl = &p * &l;
        t += l.adjoint() * pl;
    }
    (&t + t.adjoint()) * linalg::re(0.5)
}

pub fn solve_quasi_basis(e: &ConditionalExpectation, tol: &ToleranceConfig) -> Result<QuasiBasis> {
    let gns = GnsSpace::new(e, tol)?;
    solve_with_gns(e, &gns, tol)
}

pub(crate) fn solve_with_gns(e: &ConditionalExpectation, gns: &GnsSpace, tol: &ToleranceConfig) -> Result<QuasiBasis> {
    let t = t_operator(gns);
    let (vals, vecs) = linalg::hermitian_eigen(&t);
    let lmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = vals.iter().copied().fold(0.0, f64::max);
    if lmin <= tol.rank_tol * lmax.max(1.0) {
        return Err(Error::InfiniteIndex { residual: lmin });
    }
    let inv_vals = vals.map(|v| linalg::re(1.0 / v));
    let t_inv = &vecs * DMatrix::from_diagonal(&inv_vals) * vecs.adjoint();
    let mut pairs = Vec::with_capacity(gns.dim());
    for b in gns.source().basis() {
        let u = gns.eta_inverse(&(&t_inv * gns.eta(&b.adjoint())));
        if u.frobenius_norm() > tol.rank_tol {
            pairs.push((u, b));
        }
    }
    let qb = QuasiBasis::new(pairs);
    let d = quasi_basis_defects(e, &qb, tol);
    if !tol.ok(d.left) || !tol.ok(d.right) {
        return Err(Error::QuasiBasisInconsistent { left: d.left, right: d.right });
    }
    Ok(qb)
}

/// `Index E = Σ u_i v_i` with its verified properties.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexValue {
    element: AlgebraElement,
    scalar: Option<f64>,
    centrality_defect: f64,
    min_eigenvalue: f64,
}

impl IndexValue {
    pub fn element(&self) -> &AlgebraElement {
        &self.element
    }

    /// Set when the element is `c·1`.
    pub fn scalar(&self) -> Option<f64> {
        self.scalar
    }

    pub fn centrality_defect(&self) -> f64 {
        self.centrality_defect
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Blockwise inverse; well defined because the index is positive and invertible.
    pub fn inverse(&self) -> AlgebraElement {
        self.element.hermitian_function(|t| 1.0 / t)
    }

    /// Distinct eigenvalues per block of the ambient algebra, used for reporting
    /// non-scalar indices.
    pub fn block_values(&self) -> Vec<f64> {
        self.element
            .blocks()
            .iter()
            .map(|b| {
                let n = b.nrows() as f64;
                b.trace().re / n
            })
            .collect()
    }
}

/// Sums the quasi-basis and checks centrality, positivity and invertibility.
pub fn watatani_index(e: &ConditionalExpectation, qb: &QuasiBasis, tol: &ToleranceConfig) -> Result<IndexValue> {
    let upper = e.upper();
    let element = qb.index_element(upper.ambient());
    let scale = element.norm().max(1.0);
    let centrality_defect = upper.commutation_defect(&element) / scale;
    if !tol.ok(centrality_defect) {
        return Err(Error::IndexAxiom { axiom: "centrality", defect: centrality_defect });
    }
    let adj = element.distance(&element.adjoint()) / scale;
    if !tol.ok(adj) {
        return Err(Error::IndexAxiom { axiom: "self-adjointness", defect: adj });
    }
    let min_eigenvalue = element.min_eigenvalue();
    if min_eigenvalue < -tol.eq_tol * scale {
        return Err(Error::IndexAxiom { axiom: "positivity", defect: -min_eigenvalue });
    }
    if min_eigenvalue <= tol.rank_tol {
        return Err(Error::IndexAxiom { axiom: "invertibility", defect: min_eigenvalue });
    }
    let scalar = element.as_real_scalar(tol.eq_tol);
    Ok(IndexValue { element, scalar, centrality_defect, min_eigenvalue })
}

/// An expectation together with a verified quasi-basis and its index.
#[derive(Debug, Clone)]
pub struct IndexedExpectation {
    expectation: ConditionalExpectation,
    quasi_basis: QuasiBasis,
    index: IndexValue,
    defects: QuasiBasisDefects,
}

impl IndexedExpectation {
    pub fn new(e: &ConditionalExpectation, tol: &ToleranceConfig) -> Result<Self> {
        let qb = solve_quasi_basis(e, tol)?;
        Self::from_quasi_basis(e, qb, tol)
    }

    /// Verifies a supplied quasi-basis.
    pub fn from_quasi_basis(e: &ConditionalExpectation, qb: QuasiBasis, tol: &ToleranceConfig) -> Result<Self> {
        let defects = quasi_basis_defects(e, &qb, tol);
        if !tol.ok(defects.max()) {
            return Err(Error::QuasiBasisInconsistent { left: defects.left, right: defects.right });
        }
        let index = watatani_index(e, &qb, tol)?;
        Ok(Self { expectation: e.clone(), quasi_basis: qb, index, defects })
    }

    pub fn expectation(&self) -> &ConditionalExpectation {
        &self.expectation
    }

    pub fn quasi_basis(&self) -> &QuasiBasis {
        &self.quasi_basis
    }

    pub fn index(&self) -> &IndexValue {
        &self.index
    }

    pub fn defects(&self) -> QuasiBasisDefects {
        self.defects
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        self.expectation.apply(x)
    }
}

/// `E^{-1}(x) = Σ u_i x v_i` for `x` commuting with the lower algebra; the
/// result is checked to commute with the upper algebra.
pub fn e_inverse_map(ie: &IndexedExpectation, x: &AlgebraElement, tol: &ToleranceConfig) -> Result<AlgebraElement> {
    let e = ie.expectation();
    e.upper().ambient().conforms(x)?;
    let scale = x.norm().max(1.0);
    let pre = e.lower().commutation_defect(x) / scale;
    if !tol.ok(pre) {
        return Err(Error::Precondition(format!(
            "argument does not commute with the subalgebra (defect {pre:.3e})"
        )));
    }
    let prods: Vec<AlgebraElement> = ie.quasi_basis.pairs.iter().map(|(u, v)| &(u * x) * v).collect();
    let y = sum_elements(e.upper().ambient(), &prods);
    let post = e.upper().commutation_defect(&y) / y.norm().max(1.0);
    if !tol.ok(post) {
        return Err(Error::Verification { check: "E^{-1}(x) commutes with the algebra".into(), defect: post });
    }
    Ok(y)
}

/// Sampled estimate of the largest `c` with `E(x*x) ≥ c·x*x`.
///
/// For each random `x` a bisection finds the largest `c ∈ [0, 1]` with
/// `E(x*x) − c·x*x` positive up to `eq_tol`; the minimum over samples is
/// returned. Sampling can only overestimate the true constant.
pub fn pimsner_popa_margin(e: &ConditionalExpectation, samples: usize, tol: &ToleranceConfig) -> f64 {
    let mut rng = tol.rng(0x99);
    let mut best: f64 = 1.0;
    for _ in 0..samples.max(1) {
        let x = e.upper().space().random_element(&mut rng);
        let xx = &x.adjoint() * &x;
        let exx = e.apply(&xx);
        let scale = xx.norm().max(f64::MIN_POSITIVE);
        let ok = |c: f64| (&exx - &xx.scale_real(c)).min_eigenvalue() >= -tol.eq_tol * scale;
        let (mut lo, mut hi) = (0.0, 1.0);
        if ok(hi) {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min(lo);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MultiMatrixAlgebra;
    use crate::expectation::uniform_trace_expectation;
    use crate::subspace::{generated_subalgebra, Subalgebra};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn pinching(n: usize) -> ConditionalExpectation {
        let a = MultiMatrixAlgebra::full_matrix(n);
        let units: Vec<AlgebraElement> = (0..n).map(|i| a.matrix_unit(0, i, i)).collect();
        let p = generated_subalgebra(&a, &units, &tol()).unwrap();
        uniform_trace_expectation(&Subalgebra::full(&a), &p, &tol()).unwrap()
    }

    #[test]
    fn pinching_index_is_n() {
        for n in 2..=4 {
            let ie = IndexedExpectation::new(&pinching(n), &tol()).unwrap();
            let s = ie.index().scalar().unwrap();
            assert!((s - n as f64).abs() < 1e-9, "n = {n}: {s}");
        }
    }

    #[test]
    fn identity_expectation_has_index_one() {
        let a = MultiMatrixAlgebra::new(vec![2, 1]).unwrap();
        let e = ConditionalExpectation::identity(Subalgebra::full(&a));
        let ie = IndexedExpectation::new(&e, &tol()).unwrap();
        assert!((ie.index().scalar().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn e_inverse_of_sign_matrix_vanishes() {
        let e = pinching(2);
        let ie = IndexedExpectation::new(&e, &tol()).unwrap();
        let a = e.upper().ambient();
        let x = a.diagonal(&[1.0, -1.0]);
        let y = e_inverse_map(&ie, &x, &tol()).unwrap();
        assert!(y.norm() < 1e-10);
        let one = e_inverse_map(&ie, &a.unit(), &tol()).unwrap();
        assert!(one.distance(ie.index().element()) < 1e-10);
        assert!(matches!(e_inverse_map(&ie, &a.matrix_unit(0, 0, 1), &tol()), Err(Error::Precondition(_))));
    }

    #[test]
    fn pimsner_popa_bound_for_pinching() {
        let m = pimsner_popa_margin(&pinching(2), 32, &tol());
        assert!(m >= 0.5 - 1e-9, "{m}");
        let a = MultiMatrixAlgebra::full_matrix(2);
        let id = ConditionalExpectation::identity(Subalgebra::full(&a));
        assert!((pimsner_popa_margin(&id, 8, &tol()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn corrupted_quasi_basis_is_rejected() {
        let e = pinching(2);
        let qb = solve_quasi_basis(&e, &tol()).unwrap();
        let mut pairs = qb.pairs().to_vec();
        pairs[0].0 = pairs[0].0.scale_real(1.5);
        assert!(matches!(
            IndexedExpectation::from_quasi_basis(&e, QuasiBasis::new(pairs), &tol()),
            Err(Error::QuasiBasisInconsistent { .. })
        ));
    }
}
