//! The GNS space of `τ = tr ∘ E` and the left regular representation on it.
//!
//! Vectors are written in a `τ`-orthonormal frame: if `G` is the Gram matrix
//! of `τ` on the trace-orthonormal basis of the source algebra and `S = G^{1/2}`,
//! then `η(a) = S·coords(a)` and `λ(a) = S L(a) S^{-1}`, where `L(a)` is left
//! multiplication in coordinates. In this frame `λ` is a *-homomorphism for
//! the Euclidean adjoint and the Jones projection is `S M_E S^{-1}`.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::expectation::ConditionalExpectation;
use crate::linalg::{self, C64};
use crate::subspace::{elements_matrix, Subalgebra, Subspace};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone)]
pub struct GnsSpace {
    expectation: ConditionalExpectation,
    sqrt_gram: DMatrix<C64>,
    inv_sqrt_gram: DMatrix<C64>,
    margin: f64,
    operators: MultiMatrixAlgebra,
}

impl GnsSpace {
    pub fn new(e: &ConditionalExpectation, tol: &ToleranceConfig) -> Result<Self> {
        let gram = e.state_gram();
        let (s, si, margin) = match linalg::psd_sqrt_pair(&gram, tol.rank_tol) {
            Some(t) => t,
            None => {
                return Err(Error::NotFaithful { margin: linalg::min_hermitian_eigenvalue(&gram) });
            }
        };
        Ok(Self {
            expectation: e.clone(),
            sqrt_gram: s,
            inv_sqrt_gram: si,
            margin,
            operators: MultiMatrixAlgebra::full_matrix(e.upper().dim()),
        })
    }

    pub fn dim(&self) -> usize {
        self.sqrt_gram.nrows()
    }

    pub fn source(&self) -> &Subalgebra {
        self.expectation.upper()
    }

    pub fn expectation(&self) -> &ConditionalExpectation {
        &self.expectation
    }

    /// Smallest eigenvalue of the Gram matrix of `τ`.
    pub fn faithfulness_margin(&self) -> f64 {
        self.margin
    }

    /// `M_d`, where the left action and the Jones projection live.
    pub fn operator_algebra(&self) -> &MultiMatrixAlgebra {
        &self.operators
    }

    pub fn eta(&self, x: &AlgebraElement) -> DVector<C64> {
        &self.sqrt_gram * self.source().coords(x)
    }

    pub fn eta_inverse(&self, v: &DVector<C64>) -> AlgebraElement {
        self.source().element(&(&self.inv_sqrt_gram * v))
    }

    /// `λ(x)` as a `d × d` matrix.
    pub fn left_matrix(&self, x: &AlgebraElement) -> DMatrix<C64> {
        let src = self.source();
        let prods: Vec<AlgebraElement> = src.basis().iter().map(|b| x * b).collect();
        let l = src.space().coords_of_vectors(&elements_matrix(src.ambient(), &prods));
        &self.sqrt_gram * l * &self.inv_sqrt_gram
    }

    /// `λ(x)` as an element of `M_d`.
    pub fn lambda(&self, x: &AlgebraElement) -> AlgebraElement {
        self.operators
            .from_blocks(vec![self.left_matrix(x)])
            .expect("left action is d x d")
    }

    /// `λ` on every basis element of the source, computed in one batch.
    pub fn lambda_basis(&self) -> Vec<DMatrix<C64>> {
        let src = self.source();
        let basis = src.basis();
        basis.iter().map(|b| self.left_matrix(b)).collect()
    }

    /// `η(1)`.
    pub fn unit_vector(&self) -> DVector<C64> {
        self.eta(&self.source().ambient().unit())
    }

    /// The element `a` with `X η(1) = η(a)`; inverts `λ` on its range.
    pub fn lambda_inverse(&self, op: &AlgebraElement) -> AlgebraElement {
        self.eta_inverse(&(op.block(0) * self.unit_vector()))
    }

    pub fn jones_matrix(&self) -> DMatrix<C64> {
        &self.sqrt_gram * self.expectation.map_matrix() * &self.inv_sqrt_gram
    }

    pub fn jones_projection(&self) -> AlgebraElement {
        self.operators
            .from_blocks(vec![self.jones_matrix()])
            .expect("projection is d x d")
    }

    /// `λ(A)` as a subalgebra of `M_d`, with the images of the source
    /// generators as generators.
    pub fn image(&self, tol: &ToleranceConfig) -> Result<Subalgebra> {
        let imgs: Vec<AlgebraElement> = self.source().basis().iter().map(|b| self.lambda(b)).collect();
        let space = Subspace::span(&self.operators, &imgs, tol.rank_tol)?;
        let gens: Vec<AlgebraElement> = self.source().generators().iter().map(|g| self.lambda(g)).collect();
        let sub = Subalgebra::from_parts(space, gens);
        sub.verify(tol)?;
        Ok(sub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::uniform_trace_expectation;
    use crate::subspace::generated_subalgebra;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pinching(n: usize) -> ConditionalExpectation {
        let t = ToleranceConfig::default();
        let a = MultiMatrixAlgebra::full_matrix(n);
        let units: Vec<AlgebraElement> = (0..n).map(|i| a.matrix_unit(0, i, i)).collect();
        let p = generated_subalgebra(&a, &units, &t).unwrap();
        uniform_trace_expectation(&Subalgebra::full(&a), &p, &t).unwrap()
    }

    #[test]
    fn lambda_is_a_star_homomorphism() {
        let e = pinching(3);
        let g = GnsSpace::new(&e, &ToleranceConfig::default()).unwrap();
        let a = e.upper().ambient().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = a.random_element(&mut rng);
        let y = a.random_element(&mut rng);
        let lx = g.left_matrix(&x);
        let ly = g.left_matrix(&y);
        assert!((g.left_matrix(&(&x * &y)) - &lx * &ly).norm() < 1e-10);
        assert!((g.left_matrix(&x.adjoint()) - lx.adjoint()).norm() < 1e-10);
        assert!(g.lambda_inverse(&g.lambda(&x)).distance(&x) < 1e-10);
    }

    #[test]
    fn jones_projection_implements_expectation() {
        let e = pinching(2);
        let g = GnsSpace::new(&e, &ToleranceConfig::default()).unwrap();
        let p = g.jones_matrix();
        assert!((&p * &p - &p).norm() < 1e-12);
        assert!((&p - p.adjoint()).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = e.upper().ambient().random_element(&mut rng);
        let lhs = &p * g.left_matrix(&x) * &p;
        let rhs = g.left_matrix(&e.apply(&x)) * &p;
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn image_has_source_dimension() {
        let e = pinching(2);
        let t = ToleranceConfig::default();
        let g = GnsSpace::new(&e, &t).unwrap();
        assert_eq!(g.image(&t).unwrap().dim(), 4);
    }
}
