//! Linear subspaces of a multi-matrix algebra and unital *-subalgebras.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::algebra::{random_c64, AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, Orthonormalizer, C64};
use crate::tolerance::ToleranceConfig;

/// Coordinate vectors of `elems` as the columns of a matrix.
pub fn elements_matrix(algebra: &MultiMatrixAlgebra, elems: &[AlgebraElement]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(algebra.vector_dim(), elems.len());
    for (j, x) in elems.iter().enumerate() {
        assert_eq!(x.algebra(), algebra, "element lives in a different algebra");
        m.set_column(j, &x.to_vector());
    }
    m
}

/// A subspace stored through an orthonormal basis, orthonormal for the
/// trace pairing `tr(x* y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: MultiMatrixAlgebra,
    q: DMatrix<C64>,
}

impl Subspace {
    pub fn zero(ambient: &MultiMatrixAlgebra) -> Self {
        Self { ambient: ambient.clone(), q: DMatrix::zeros(ambient.vector_dim(), 0) }
    }

    pub fn full(ambient: &MultiMatrixAlgebra) -> Self {
        let n = ambient.vector_dim();
        Self { ambient: ambient.clone(), q: DMatrix::identity(n, n) }
    }

    /// Span of the columns of `cols` (canonical coordinates).
    pub fn from_vectors(ambient: &MultiMatrixAlgebra, cols: &DMatrix<C64>, cutoff: f64) -> Result<Self> {
        if cols.nrows() != ambient.vector_dim() {
            return Err(Error::InvalidAlgebra(format!(
                "coordinate vectors of length {} do not fit {ambient}",
                cols.nrows()
            )));
        }
        let mut o = Orthonormalizer::new(ambient.vector_dim(), cutoff);
        o.extend(cols);
        Ok(Self { ambient: ambient.clone(), q: o.basis() })
    }

    pub fn span(ambient: &MultiMatrixAlgebra, elems: &[AlgebraElement], cutoff: f64) -> Result<Self> {
        for x in elems {
            ambient.conforms(x)?;
        }
        Self::from_vectors(ambient, &elements_matrix(ambient, elems), cutoff)
    }

    /// Trusts that the columns of `q` are orthonormal.
    pub(crate) fn from_orthonormal(ambient: &MultiMatrixAlgebra, q: DMatrix<C64>) -> Self {
        debug_assert_eq!(q.nrows(), ambient.vector_dim());
        Self { ambient: ambient.clone(), q }
    }

    pub fn ambient(&self) -> &MultiMatrixAlgebra {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient.vector_dim()
    }

    /// The orthonormal basis as columns of canonical coordinates.
    pub fn basis_matrix(&self) -> &DMatrix<C64> {
        &self.q
    }

    pub fn basis_element(&self, i: usize) -> AlgebraElement {
        self.ambient.from_vector(&self.q.column(i).into_owned())
    }

    pub fn basis(&self) -> Vec<AlgebraElement> {
        (0..self.dim()).map(|i| self.basis_element(i)).collect()
    }

    /// Coordinates of the orthogonal projection of `x` in the stored basis.
    pub fn coords(&self, x: &AlgebraElement) -> DVector<C64> {
        self.q.adjoint() * x.to_vector()
    }

    pub fn coords_of_vectors(&self, cols: &DMatrix<C64>) -> DMatrix<C64> {
        self.q.adjoint() * cols
    }

    pub fn element(&self, coords: &DVector<C64>) -> AlgebraElement {
        self.ambient.from_vector(&(&self.q * coords))
    }

    pub fn project(&self, x: &AlgebraElement) -> AlgebraElement {
        self.element(&self.coords(x))
    }

    /// Frobenius distance from `x` to the subspace.
    pub fn distance(&self, x: &AlgebraElement) -> f64 {
        let v = x.to_vector();
        (&v - &self.q * (self.q.adjoint() * &v)).norm()
    }

    pub fn contains(&self, x: &AlgebraElement, tol: &ToleranceConfig) -> bool {
        tol.close(self.distance(x), x.frobenius_norm())
    }

    /// Largest relative residual `‖v − QQ†v‖ / max(1, ‖v‖)` over the columns.
    pub fn max_relative_residual(&self, cols: &DMatrix<C64>) -> f64 {
        if cols.ncols() == 0 {
            return 0.0;
        }
        let res = cols - &self.q * (self.q.adjoint() * cols);
        (0..cols.ncols())
            .map(|j| res.column(j).norm() / cols.column(j).norm().max(1.0))
            .fold(0.0, f64::max)
    }

    /// How far `other` sticks out of `self` (zero iff contained).
    pub fn containment_defect(&self, other: &Subspace) -> f64 {
        self.max_relative_residual(&other.q)
    }

    /// `QQ†`, the orthogonal projection in canonical coordinates.
    pub fn projection_matrix(&self) -> DMatrix<C64> {
        &self.q * self.q.adjoint()
    }

    /// `‖Q†Q − 1‖_F`.
    pub fn gram_defect(&self) -> f64 {
        let d = self.dim();
        (self.q.adjoint() * &self.q - DMatrix::identity(d, d)).norm()
    }

    pub fn intersect(&self, other: &Subspace, cutoff: f64) -> Subspace {
        let outside = &self.q - &other.q * (other.q.adjoint() * &self.q);
        let ns = linalg::null_space(&outside, cutoff);
        let mut o = Orthonormalizer::new(self.ambient.vector_dim(), cutoff);
        o.extend(&(&self.q * ns));
        Self { ambient: self.ambient.clone(), q: o.basis() }
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let c = DVector::from_fn(self.dim(), |_, _| random_c64(rng));
        self.element(&c)
    }

    /// The basis when `dim ≤ full_check_dim`, otherwise `spot_checks` random
    /// elements drawn from stream `stream`.
    pub fn check_elements(&self, tol: &ToleranceConfig, stream: u64) -> Vec<AlgebraElement> {
        if tol.full_check(self.dim()) {
            self.basis()
        } else {
            let mut rng = tol.rng(stream);
            (0..tol.spot_checks).map(|_| self.random_element(&mut rng)).collect()
        }
    }
}

/// A unital *-subalgebra, kept together with a generating set.
///
/// Closure under products is checked as `S·G ⊆ S` for the generators `G`,
/// which together with `1 ∈ S`, `G ⊆ S` and `S* = S` shows that `S`
/// contains the algebra generated by `G`; the span was built from words in
/// `G`, so the two agree.
#[derive(Debug, Clone, PartialEq)]
pub struct Subalgebra {
    space: Subspace,
    generators: Vec<AlgebraElement>,
}

impl Subalgebra {
    pub fn full(ambient: &MultiMatrixAlgebra) -> Self {
        let mut gens = Vec::new();
        for (r, &n) in ambient.block_dims().iter().enumerate() {
            gens.push(ambient.matrix_unit(r, 0, 0));
            for i in 1..n {
                gens.push(ambient.matrix_unit(r, i, 0));
                gens.push(ambient.matrix_unit(r, 0, i));
            }
        }
        Self { space: Subspace::full(ambient), generators: gens }
    }

    pub fn scalars(ambient: &MultiMatrixAlgebra) -> Self {
        let u = ambient.unit();
        let q = u.to_vector() / linalg::re(u.frobenius_norm());
        Self {
            space: Subspace::from_orthonormal(ambient, DMatrix::from_column_slice(q.len(), 1, q.as_slice())),
            generators: Vec::new(),
        }
    }

    /// The smallest unital *-subalgebra containing `generators`.
    pub fn generated(ambient: &MultiMatrixAlgebra, generators: &[AlgebraElement], tol: &ToleranceConfig) -> Result<Self> {
        for g in generators {
            ambient.conforms(g)?;
        }
        let mut gens: Vec<AlgebraElement> = Vec::with_capacity(2 * generators.len());
        for g in generators {
            gens.push(g.clone());
            if !g.is_self_adjoint(tol.rank_tol * g.norm().max(1.0)) {
                gens.push(g.adjoint());
            }
        }
        // Words are grown from freshly accepted orthonormal vectors times
        // normalized generators, so norms stay near one at every depth.
        let unit_gens: Vec<AlgebraElement> = gens
            .iter()
            .filter(|g| g.frobenius_norm() > 0.0)
            .map(|g| g.scale_real(1.0 / g.frobenius_norm()))
            .collect();
        let mut o = Orthonormalizer::new(ambient.vector_dim(), tol.rank_tol);
        let mut seed = vec![ambient.unit()];
        seed.extend(unit_gens.iter().cloned());
        let mut fresh = o.extend(&elements_matrix(ambient, &seed)).len();
        while fresh > 0 {
            let basis = o.basis();
            let start = basis.ncols() - fresh;
            let frontier: Vec<AlgebraElement> = (start..basis.ncols())
                .map(|j| ambient.from_vector(&basis.column(j).into_owned()))
                .collect();
            let cands: Vec<AlgebraElement> = frontier
                .iter()
                .flat_map(|f| unit_gens.iter().map(move |g| f * g))
                .collect();
            fresh = o.extend(&elements_matrix(ambient, &cands)).len();
        }
        let sub = Self {
            space: Subspace::from_orthonormal(ambient, o.basis()),
            generators: gens,
        };
        sub.verify(tol)?;
        Ok(sub)
    }

    /// A subalgebra given by a spanning set; every axiom is checked, with the
    /// spanning set itself as the generators.
    pub fn from_basis(ambient: &MultiMatrixAlgebra, elems: &[AlgebraElement], tol: &ToleranceConfig) -> Result<Self> {
        let space = Subspace::span(ambient, elems, tol.rank_tol)?;
        let generators = space.basis();
        let sub = Self { space, generators };
        sub.verify(tol)?;
        Ok(sub)
    }

    pub(crate) fn from_parts(space: Subspace, generators: Vec<AlgebraElement>) -> Self {
        Self { space, generators }
    }

    /// Checks orthonormality, unit, generators, adjoint closure and `S·G ⊆ S`.
    pub fn verify(&self, tol: &ToleranceConfig) -> Result<()> {
        let amb = self.space.ambient();
        let gd = self.space.gram_defect();
        if !tol.ok(gd) {
            return Err(Error::SubalgebraAxiom { axiom: "orthonormality", defect: gd });
        }
        let u = amb.unit();
        let d = self.space.distance(&u) / u.frobenius_norm().max(1.0);
        if !tol.ok(d) {
            return Err(Error::SubalgebraAxiom { axiom: "unit-membership", defect: d });
        }
        let d = self.space.max_relative_residual(&elements_matrix(amb, &self.generators));
        if !tol.ok(d) {
            return Err(Error::SubalgebraAxiom { axiom: "generator-membership", defect: d });
        }
        let basis = self.space.basis();
        let adj: Vec<AlgebraElement> = basis.iter().map(|b| b.adjoint()).collect();
        let d = self.space.max_relative_residual(&elements_matrix(amb, &adj));
        if !tol.ok(d) {
            return Err(Error::SubalgebraAxiom { axiom: "adjoint-closure", defect: d });
        }
        let mut worst: f64 = 0.0;
        for g in &self.generators {
            let prods: Vec<AlgebraElement> = basis.iter().map(|b| b * g).collect();
            worst = worst.max(self.space.max_relative_residual(&elements_matrix(amb, &prods)));
        }
        if !tol.ok(worst) {
            return Err(Error::SubalgebraAxiom { axiom: "product-closure", defect: worst });
        }
        Ok(())
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn ambient(&self) -> &MultiMatrixAlgebra {
        self.space.ambient()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn generators(&self) -> &[AlgebraElement] {
        &self.generators
    }

    pub fn basis(&self) -> Vec<AlgebraElement> {
        self.space.basis()
    }

    pub fn contains(&self, x: &AlgebraElement, tol: &ToleranceConfig) -> bool {
        self.space.contains(x, tol)
    }

    pub fn coords(&self, x: &AlgebraElement) -> DVector<C64> {
        self.space.coords(x)
    }

    pub fn element(&self, coords: &DVector<C64>) -> AlgebraElement {
        self.space.element(coords)
    }

    pub fn project(&self, x: &AlgebraElement) -> AlgebraElement {
        self.space.project(x)
    }

    /// Generators when there are fewer of them than basis elements; used
    /// for commutation checks, where the two are equivalent.
    pub fn commutation_set(&self) -> Vec<AlgebraElement> {
        if !self.generators.is_empty() && self.generators.len() < self.dim() {
            self.generators.clone()
        } else {
            self.basis()
        }
    }

    /// `{x ∈ self : xg = gx for every g in elems}`.
    pub fn commutant_of(&self, elems: &[AlgebraElement], tol: &ToleranceConfig) -> Result<Subalgebra> {
        let amb = self.ambient();
        for g in elems {
            amb.conforms(g)?;
        }
        let d = self.dim();
        let n = amb.vector_dim();
        let basis = self.basis();
        let mut stacked = DMatrix::zeros(n * elems.len(), d);
        for (k, g) in elems.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let c = b.commutator(g).to_vector();
                stacked.view_mut((k * n, j), (n, 1)).copy_from(&c);
            }
        }
        let ns = linalg::null_space(&stacked, tol.rank_tol);
        let space = Subspace::from_vectors(amb, &(self.space.basis_matrix() * ns), tol.rank_tol)?;
        let generators = space.basis();
        let sub = Subalgebra { space, generators };
        sub.verify(tol)?;
        Ok(sub)
    }

    /// `other′ ∩ self`.
    pub fn relative_commutant(&self, other: &Subalgebra, tol: &ToleranceConfig) -> Result<Subalgebra> {
        self.commutant_of(&other.commutation_set(), tol)
    }

    pub fn center(&self, tol: &ToleranceConfig) -> Result<Subalgebra> {
        self.commutant_of(&self.commutation_set(), tol)
    }

    /// Whether `other ⊆ self` up to `eq_tol`.
    pub fn contains_subalgebra(&self, other: &Subalgebra, tol: &ToleranceConfig) -> bool {
        tol.ok(self.space.containment_defect(&other.space))
    }

    /// Largest `‖[x, g]‖` over `g` in the commutation set.
    pub fn commutation_defect(&self, x: &AlgebraElement) -> f64 {
        self.commutation_set()
            .iter()
            .map(|g| x.commutator(g).norm())
            .fold(0.0, f64::max)
    }
}

/// The smallest unital *-subalgebra of `ambient` containing `generators`.
pub fn generated_subalgebra(ambient: &MultiMatrixAlgebra, generators: &[AlgebraElement], tol: &ToleranceConfig) -> Result<Subalgebra> {
    Subalgebra::generated(ambient, generators, tol)
}

/// The commutant of the basis of `s` inside `ambient`.
pub fn commutant_in(ambient: &MultiMatrixAlgebra, s: &Subspace, tol: &ToleranceConfig) -> Result<Subalgebra> {
    if s.ambient() != ambient {
        return Err(Error::NonConforming {
            expected: ambient.block_dims().to_vec(),
            found: s.ambient().block_dims().to_vec(),
        });
    }
    Subalgebra::full(ambient).commutant_of(&s.basis(), tol)
}
