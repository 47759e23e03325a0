//! Conditional expectations onto unital *-subalgebras.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::subspace::{elements_matrix, Subalgebra};
use crate::tolerance::ToleranceConfig;

/// A linear map `E` from `upper` onto `lower ⊆ upper`.
///
/// The map is stored as a square matrix acting on coordinates in the
/// orthonormal basis of `upper`. When `upper` is the whole ambient algebra
/// that basis is the canonical matrix-unit basis, so the matrix is the
/// canonical one; [`ConditionalExpectation::canonical_matrix`] gives it in
/// every case.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalExpectation {
    upper: Subalgebra,
    lower: Subalgebra,
    map: DMatrix<C64>,
}

/// Axiom defects of a candidate expectation. All defects are relative
/// Frobenius norms except `positivity`, which is the most negative sampled
/// eigenvalue of `E(x*x)` relative to `‖x*x‖`, clipped at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub unitality: f64,
    pub idempotence: f64,
    pub range: f64,
    pub bimodule: f64,
    pub positivity: f64,
    pub pass: bool,
}

impl ExpectationReport {
    pub fn max_defect(&self) -> f64 {
        [self.unitality, self.idempotence, self.range, self.bimodule, self.positivity]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// The first failing axiom, in the order they are listed.
    pub fn first_failure(&self, tol: &ToleranceConfig) -> Option<(&'static str, f64)> {
        [
            ("unitality", self.unitality),
            ("idempotence", self.idempotence),
            ("range", self.range),
            ("bimodule", self.bimodule),
            ("positivity", self.positivity),
        ]
        .into_iter()
        .find(|&(_, d)| !tol.ok(d))
    }
}

impl ConditionalExpectation {
    /// Builds and verifies; the error names the first axiom that failed.
    pub fn new(upper: Subalgebra, lower: Subalgebra, map: DMatrix<C64>, tol: &ToleranceConfig) -> Result<Self> {
        let e = Self::new_unchecked(upper, lower, map)?;
        let report = e.verify(tol);
        if let Some((axiom, defect)) = report.first_failure(tol) {
            return Err(Error::ExpectationAxiom { axiom, defect });
        }
        Ok(e)
    }

    /// Shape and containment checks only.
    pub fn new_unchecked(upper: Subalgebra, lower: Subalgebra, map: DMatrix<C64>) -> Result<Self> {
        if upper.ambient() != lower.ambient() {
            return Err(Error::NonConforming {
                expected: upper.ambient().block_dims().to_vec(),
                found: lower.ambient().block_dims().to_vec(),
            });
        }
        let d = upper.dim();
        if map.nrows() != d || map.ncols() != d {
            return Err(Error::InvalidAlgebra(format!(
                "expectation matrix is {}x{}, expected {d}x{d}",
                map.nrows(),
                map.ncols()
            )));
        }
        Ok(Self { upper, lower, map })
    }

    /// From a matrix in canonical coordinates of the ambient algebra of `upper`.
    pub fn from_canonical_matrix(upper: Subalgebra, lower: Subalgebra, canonical: &DMatrix<C64>, tol: &ToleranceConfig) -> Result<Self> {
        let n = upper.ambient().vector_dim();
        if canonical.nrows() != n || canonical.ncols() != n {
            return Err(Error::InvalidAlgebra(format!(
                "expectation matrix is {}x{}, expected {n}x{n}",
                canonical.nrows(),
                canonical.ncols()
            )));
        }
        let q = upper.space().basis_matrix();
        let map = q.adjoint() * canonical * q;
        Self::new(upper, lower, map, tol)
    }

    /// Tabulates `f` on the basis of `upper` and verifies the result.
    pub fn from_fn(
        upper: Subalgebra,
        lower: Subalgebra,
        f: impl Fn(&AlgebraElement) -> AlgebraElement,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let (e, outside) = Self::tabulate(upper, lower, f)?;
        if !tol.ok(outside) {
            return Err(Error::ExpectationAxiom { axiom: "range", defect: outside });
        }
        let report = e.verify(tol);
        if let Some((axiom, defect)) = report.first_failure(tol) {
            return Err(Error::ExpectationAxiom { axiom, defect });
        }
        Ok(e)
    }

    /// Tabulates `f` without verification. Also returns how far the images
    /// stick out of `upper`, which the stored matrix cannot represent.
    pub fn tabulate(
        upper: Subalgebra,
        lower: Subalgebra,
        f: impl Fn(&AlgebraElement) -> AlgebraElement,
    ) -> Result<(Self, f64)> {
        let images: Vec<AlgebraElement> = upper.basis().iter().map(&f).collect();
        let cols = elements_matrix(upper.ambient(), &images);
        let map = upper.space().coords_of_vectors(&cols);
        let outside = upper.space().max_relative_residual(&cols);
        Ok((Self::new_unchecked(upper, lower, map)?, outside))
    }

    pub fn identity(algebra: Subalgebra) -> Self {
        let d = algebra.dim();
        Self { upper: algebra.clone(), lower: algebra, map: DMatrix::identity(d, d) }
    }

    pub fn upper(&self) -> &Subalgebra {
        &self.upper
    }

    pub fn lower(&self) -> &Subalgebra {
        &self.lower
    }

    /// The matrix in the basis of `upper`.
    pub fn map_matrix(&self) -> &DMatrix<C64> {
        &self.map
    }

    /// The matrix in canonical coordinates, extended by zero off `upper`.
    pub fn canonical_matrix(&self) -> DMatrix<C64> {
        let q = self.upper.space().basis_matrix();
        q * &self.map * q.adjoint()
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        self.upper.element(&(&self.map * self.upper.coords(x)))
    }

    pub fn apply_coords(&self, c: &DVector<C64>) -> DVector<C64> {
        &self.map * c
    }

    /// `E` applied to each column (canonical coordinates), result in canonical coordinates.
    pub fn apply_vectors(&self, cols: &DMatrix<C64>) -> DMatrix<C64> {
        let q = self.upper.space().basis_matrix();
        q * (&self.map * (q.adjoint() * cols))
    }

    pub fn verify(&self, tol: &ToleranceConfig) -> ExpectationReport {
        verify_expectation(self, tol)
    }

    /// `G_ij = τ(b_i* b_j)` over the basis of `upper`, where `τ = tr ∘ E`
    /// and `tr` is the ambient trace restricted to `lower`.
    ///
    /// With `w = E†(1)` (adjoint for the trace pairing), `τ(x) = tr(w* x)` and
    /// `G_ij = conj(coords(b_i w)_j)`, which needs one product per basis element.
    pub fn state_gram(&self) -> DMatrix<C64> {
        let one = self.upper.coords(&self.upper.ambient().unit());
        let w = self.upper.element(&(self.map.adjoint() * one));
        let basis = self.upper.basis();
        let prods: Vec<AlgebraElement> = basis.iter().map(|b| b * &w).collect();
        let k = self.upper.space().coords_of_vectors(&elements_matrix(self.upper.ambient(), &prods));
        let g = k.adjoint();
        (&g + g.adjoint()) * linalg::re(0.5)
    }
}

/// Checks unitality, idempotence, range, the bimodule property over the
/// generators of `lower`, and sampled positivity.
pub fn verify_expectation(e: &ConditionalExpectation, tol: &ToleranceConfig) -> ExpectationReport {
    let upper = &e.upper;
    let lower = &e.lower;
    let amb = upper.ambient();
    let m = &e.map;
    let d = upper.dim();

    let one = amb.unit();
    let unitality = (&e.apply(&one) - &one).frobenius_norm() / one.frobenius_norm().max(1.0);

    let idempotence = (m * m - m).norm() / m.norm().max(1.0);

    // Range: lower sits inside upper, E fixes lower, and E maps into lower.
    let lower_in_upper = upper.space().containment_defect(lower.space());
    let c = upper.space().coords_of_vectors(lower.space().basis_matrix());
    let fixes = (m * &c - &c).norm() / (c.ncols() as f64).sqrt().max(1.0);
    let into = {
        let proj = &c * c.adjoint();
        (m - &proj * m).norm() / m.norm().max(1.0)
    };
    let range = lower_in_upper.max(fixes).max(into);

    let mut bimodule: f64 = 0.0;
    let samples = upper.space().check_elements(tol, 0xb1);
    let gens = lower.commutation_set();
    for a in &samples {
        let ea = e.apply(a);
        for g in &gens {
            let scale = g.frobenius_norm() * a.frobenius_norm();
            let left = (&e.apply(&(g * a)) - &(g * &ea)).frobenius_norm();
            let right = (&e.apply(&(a * g)) - &(&ea * g)).frobenius_norm();
            bimodule = bimodule.max(left.max(right) / scale.max(1.0));
        }
    }

    let mut positivity: f64 = 0.0;
    let mut probes = if tol.full_check(d) { upper.basis() } else { Vec::new() };
    let mut rng = tol.rng(0x905);
    probes.extend((0..tol.sample_count).map(|_| upper.space().random_element(&mut rng)));
    for x in &probes {
        let xx = &x.adjoint() * x;
        let scale = xx.norm();
        if scale == 0.0 {
            continue;
        }
        let lmin = e.apply(&xx).min_eigenvalue();
        positivity = positivity.max((-lmin / scale).max(0.0));
    }

    let mut report = ExpectationReport { unitality, idempotence, range, bimodule, positivity, pass: false };
    report.pass = report.first_failure(tol).is_none();
    report
}

/// The orthogonal projection of `upper` onto `lower` for the inner product
/// `⟨x, y⟩ = Σ_r w_r tr(x_r* y_r)`, one weight per block of the ambient algebra.
pub fn trace_preserving_expectation(
    upper: &Subalgebra,
    lower: &Subalgebra,
    weights: &[f64],
    tol: &ToleranceConfig,
) -> Result<ConditionalExpectation> {
    let amb = upper.ambient();
    if weights.len() != amb.block_count() {
        return Err(Error::Precondition(format!(
            "{} weights given for {} blocks",
            weights.len(),
            amb.block_count()
        )));
    }
    if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
        return Err(Error::Precondition("trace weights must be positive".into()));
    }
    let mut wdiag = DVector::zeros(amb.vector_dim());
    for (r, (&n, off)) in amb.block_dims().iter().zip(amb.block_offsets()).enumerate() {
        for k in 0..n * n {
            wdiag[off + k] = linalg::re(weights[r]);
        }
    }
    let qu = upper.space().basis_matrix();
    let weighted_qu = DMatrix::from_fn(qu.nrows(), qu.ncols(), |i, j| qu[(i, j)] * wdiag[i]);
    let g = qu.adjoint() * weighted_qu;
    let c = qu.adjoint() * lower.space().basis_matrix();
    let small = c.adjoint() * &g * &c;
    let inv = small
        .try_inverse()
        .ok_or(Error::ExpectationAxiom { axiom: "range", defect: f64::INFINITY })?;
    let map = &c * inv * c.adjoint() * g;
    ConditionalExpectation::new(upper.clone(), lower.clone(), map, tol)
}

pub fn uniform_trace_expectation(upper: &Subalgebra, lower: &Subalgebra, tol: &ToleranceConfig) -> Result<ConditionalExpectation> {
    trace_preserving_expectation(upper, lower, &vec![1.0; upper.ambient().block_count()], tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaithfulnessReport {
    pub faithful: bool,
    /// Smallest eigenvalue of the Gram form `τ(E(b_i* b_j))`.
    pub margin: f64,
}

/// Faithfulness through the Gram form of `tr ∘ E` over an orthonormal basis
/// of `upper`, with `tr` the ambient trace restricted to `lower`.
pub fn is_faithful(e: &ConditionalExpectation, tol: &ToleranceConfig) -> FaithfulnessReport {
    let margin = linalg::min_hermitian_eigenvalue(&e.state_gram());
    FaithfulnessReport { faithful: margin > tol.rank_tol, margin }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MultiMatrixAlgebra;
    use crate::subspace::generated_subalgebra;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn diagonal(n: usize) -> (MultiMatrixAlgebra, Subalgebra) {
        let a = MultiMatrixAlgebra::full_matrix(n);
        let units: Vec<AlgebraElement> = (0..n).map(|i| a.matrix_unit(0, i, i)).collect();
        let p = generated_subalgebra(&a, &units, &tol()).unwrap();
        (a, p)
    }

    #[test]
    fn uniform_expectation_onto_diagonal_is_pinching() {
        let (a, p) = diagonal(2);
        let e = uniform_trace_expectation(&Subalgebra::full(&a), &p, &tol()).unwrap();
        let x = a.from_blocks(vec![DMatrix::from_fn(2, 2, |i, j| C64::new((i * 2 + j + 1) as f64, 0.5))]).unwrap();
        let ex = e.apply(&x);
        let expected = a.from_blocks(vec![DMatrix::from_fn(2, 2, |i, j| if i == j { x.block(0)[(i, i)] } else { C64::new(0.0, 0.0) })]).unwrap();
        assert!(ex.distance(&expected) < 1e-12);
        let r = e.verify(&tol());
        assert!(r.pass && r.max_defect() < 1e-12, "{r:?}");
    }

    #[test]
    fn expectation_onto_everything_is_identity() {
        let a = MultiMatrixAlgebra::new(vec![2, 1]).unwrap();
        let full = Subalgebra::full(&a);
        let e = uniform_trace_expectation(&full, &full, &tol()).unwrap();
        assert!((e.map_matrix() - DMatrix::identity(5, 5)).norm() < 1e-12);
        let f = is_faithful(&e, &tol());
        assert!(f.faithful && (f.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_on_diagonal_pair() {
        let a = MultiMatrixAlgebra::new(vec![2, 2]).unwrap();
        let gens: Vec<AlgebraElement> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| &a.matrix_unit(0, i, j) + &a.matrix_unit(1, i, j))
            .collect();
        let p = generated_subalgebra(&a, &gens, &tol()).unwrap();
        assert_eq!(p.dim(), 4);
        let e = uniform_trace_expectation(&Subalgebra::full(&a), &p, &tol()).unwrap();
        let x = a.matrix_unit(0, 0, 1);
        let expected = &a.matrix_unit(0, 0, 1).scale_real(0.5) + &a.matrix_unit(1, 0, 1).scale_real(0.5);
        assert!(e.apply(&x).distance(&expected) < 1e-12);
    }

    #[test]
    fn normalized_trace_onto_diagonal_fails_range() {
        let (a, p) = diagonal(2);
        let canonical = DMatrix::from_fn(4, 4, |i, j| {
            // x ↦ tr(x)/2 · 1: rows/cols 0 and 3 are the diagonal entries.
            if (i == 0 || i == 3) && (j == 0 || j == 3) { linalg::re(0.5) } else { linalg::re(0.0) }
        });
        let e = ConditionalExpectation::new_unchecked(Subalgebra::full(&a), p, canonical).unwrap();
        let r = e.verify(&tol());
        assert!(!r.pass);
        assert!(r.range > 0.1, "{r:?}");
        assert!(r.unitality < 1e-12 && r.idempotence < 1e-12 && r.positivity == 0.0);
    }

    #[test]
    fn signed_state_fails_positivity_only() {
        // E(x) = tr(ρx)·1 with ρ = diag(2, −1).
        let a = MultiMatrixAlgebra::full_matrix(2);
        let scalars = Subalgebra::scalars(&a);
        let canonical = DMatrix::from_fn(4, 4, |i, j| match (i, j) {
            (0 | 3, 0) => linalg::re(2.0),
            (0 | 3, 3) => linalg::re(-1.0),
            _ => linalg::re(0.0),
        });
        let e = ConditionalExpectation::new_unchecked(Subalgebra::full(&a), scalars, canonical).unwrap();
        let r = e.verify(&tol());
        assert!(!r.pass);
        assert!(r.positivity > 0.1);
        assert!(r.unitality.max(r.idempotence).max(r.range).max(r.bimodule) < 1e-12, "{r:?}");
        let err = ConditionalExpectation::new(e.upper().clone(), e.lower().clone(), e.map_matrix().clone(), &tol()).unwrap_err();
        assert!(matches!(err, Error::ExpectationAxiom { axiom: "positivity", .. }));
    }

    #[test]
    fn weighted_expectation_preserves_its_trace() {
        let a = MultiMatrixAlgebra::new(vec![1, 2]).unwrap();
        let p = generated_subalgebra(&a, &[&a.matrix_unit(0, 0, 0) + &a.matrix_unit(1, 0, 0)], &tol()).unwrap();
        let w = [3.0, 0.5];
        let e = trace_preserving_expectation(&Subalgebra::full(&a), &p, &w, &tol()).unwrap();
        let tau = |x: &AlgebraElement| -> C64 {
            x.blocks().iter().zip(w).map(|(b, wr)| b.trace() * wr).sum()
        };
        for b in a.canonical_basis() {
            assert!((tau(&e.apply(&b)) - tau(&b)).norm() < 1e-12);
        }
    }

    #[test]
    fn bad_weights_rejected() {
        let (a, p) = diagonal(2);
        assert!(trace_preserving_expectation(&Subalgebra::full(&a), &p, &[1.0, 1.0], &tol()).is_err());
        assert!(trace_preserving_expectation(&Subalgebra::full(&a), &p, &[0.0], &tol()).is_err());
    }
}
