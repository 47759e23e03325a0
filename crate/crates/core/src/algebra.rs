//! Finite direct sums of full complex matrix algebras and their elements.
//!
//! An element of `M_{n_1} ⊕ … ⊕ M_{n_k}` is stored block by block. Its
//! canonical coordinate vector lists the entries of every block in row-major
//! order, block after block, so the coordinate inner product equals the
//! un-normalized trace pairing `tr(x* y)` summed over blocks.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiMatrixAlgebra {
    #[serde(rename = "blocks")]
    block_dims: Vec<usize>,
}

impl MultiMatrixAlgebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidAlgebra("at least one block is required".into()));
        }
        if block_dims.contains(&0) {
            return Err(Error::InvalidAlgebra("block dimensions must be positive".into()));
        }
        Ok(Self { block_dims })
    }

    /// `M_n`.
    pub fn full_matrix(n: usize) -> Self {
        Self::new(vec![n]).expect("n must be positive")
    }

    /// `C(X)` for a set of `points` points, i.e. `ℂ^points`.
    pub fn commutative(points: usize) -> Self {
        Self::new(vec![1; points]).expect("points must be positive")
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn block_count(&self) -> usize {
        self.block_dims.len()
    }

    pub fn vector_dim(&self) -> usize {
        self.block_dims.iter().map(|n| n * n).sum()
    }

    /// Offset of each block inside the coordinate vector.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.block_dims.len());
        let mut acc = 0;
        for n in &self.block_dims {
            off.push(acc);
            acc += n * n;
        }
        off
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.block_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
        }
    }

    pub fn unit(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.block_dims.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        }
    }

    pub fn scalar(&self, c: C64) -> AlgebraElement {
        self.unit().scale(c)
    }

    /// The matrix unit `e_{ij}` of block `block`.
    pub fn matrix_unit(&self, block: usize, i: usize, j: usize) -> AlgebraElement {
        let mut x = self.zero();
        x.blocks[block][(i, j)] = C64::new(1.0, 0.0);
        x
    }

    /// The unit of block `block` (a minimal central projection).
    pub fn block_unit(&self, block: usize) -> AlgebraElement {
        let mut x = self.zero();
        let n = self.block_dims[block];
        x.blocks[block] = DMatrix::identity(n, n);
        x
    }

    /// All matrix units, ordered like the coordinate vector.
    pub fn canonical_basis(&self) -> Vec<AlgebraElement> {
        let mut out = Vec::with_capacity(self.vector_dim());
        for (r, &n) in self.block_dims.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out.push(self.matrix_unit(r, i, j));
                }
            }
        }
        out
    }

    /// Inverse of [`AlgebraElement::to_vector`].
    pub fn from_vector(&self, v: &DVector<C64>) -> AlgebraElement {
        assert_eq!(v.len(), self.vector_dim(), "coordinate vector has wrong length");
        let mut blocks = Vec::with_capacity(self.block_dims.len());
        let mut k = 0;
        for &n in &self.block_dims {
            let m = DMatrix::from_row_iterator(n, n, v.iter().skip(k).take(n * n).copied());
            k += n * n;
            blocks.push(m);
        }
        AlgebraElement { algebra: self.clone(), blocks }
    }

    pub fn from_blocks(&self, blocks: Vec<DMatrix<C64>>) -> Result<AlgebraElement> {
        let found: Vec<usize> = blocks.iter().map(|b| b.nrows()).collect();
        let square = blocks.iter().all(|b| b.is_square());
        if !square || found != self.block_dims {
            return Err(Error::NonConforming {
                expected: self.block_dims.clone(),
                found,
            });
        }
        Ok(AlgebraElement { algebra: self.clone(), blocks })
    }

    /// A block-diagonal element built from real diagonal entries, block by block.
    pub fn diagonal(&self, entries: &[f64]) -> AlgebraElement {
        let total: usize = self.block_dims.iter().sum();
        assert_eq!(entries.len(), total, "need one entry per diagonal position");
        let mut x = self.zero();
        let mut k = 0;
        for (r, &n) in self.block_dims.iter().enumerate() {
            for i in 0..n {
                x.blocks[r][(i, i)] = C64::new(entries[k], 0.0);
                k += 1;
            }
        }
        x
    }

    /// Independent standard complex Gaussian entries (real and imaginary parts
    /// each of variance 1/2).
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let v = DVector::from_fn(self.vector_dim(), |_, _| random_c64(rng));
        self.from_vector(&v)
    }

    pub fn conforms(&self, x: &AlgebraElement) -> Result<()> {
        if x.algebra != *self {
            return Err(Error::NonConforming {
                expected: self.block_dims.clone(),
                found: x.algebra.block_dims.clone(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for MultiMatrixAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.block_dims.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join("⊕"))
    }
}

pub(crate) fn random_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// An immutable element of a [`MultiMatrixAlgebra`].
///
/// Arithmetic operators panic when the operands live in different algebras;
/// fallible entry points check conformance with [`MultiMatrixAlgebra::conforms`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: MultiMatrixAlgebra,
    blocks: Vec<DMatrix<C64>>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn block(&self, r: usize) -> &DMatrix<C64> {
        &self.blocks[r]
    }

    pub fn to_vector(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.algebra.vector_dim());
        let mut k = 0;
        for b in &self.blocks {
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    v[k] = b[(i, j)];
                    k += 1;
                }
            }
        }
        v
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(|b| b.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_blocks(|b| b * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    fn map_blocks(&self, f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> Self {
        Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    fn zip_blocks(&self, other: &Self, f: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>) -> Self {
        assert_eq!(self.algebra, other.algebra, "operands live in different algebras");
        Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// `xy − yx`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest singular value over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::spectral_norm).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Un-normalized trace summed over blocks.
    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// `tr(x* y)`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.algebra, other.algebra, "operands live in different algebras");
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.dotc(b))
            .sum()
    }

    /// Operator-norm distance `‖x − y‖`.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.distance(&self.adjoint()) <= tol
    }

    /// Eigenvalues of the Hermitian part, all blocks together, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| linalg::hermitian_eigen(b).0.iter().copied().collect::<Vec<_>>())
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Blockwise inverse; `None` when some block has a singular value below `cutoff`.
    pub fn inverse(&self, cutoff: f64) -> Option<Self> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            if linalg::smallest_singular_value(b) <= cutoff {
                return None;
            }
            blocks.push(b.clone().try_inverse()?);
        }
        Some(Self { algebra: self.algebra.clone(), blocks })
    }

    /// Apply a real function to the spectrum of the Hermitian part.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> Self {
        self.map_blocks(|b| linalg::hermitian_function(b, &f))
    }

    /// Spectral projection of the Hermitian part onto eigenvalues `> threshold`.
    pub fn spectral_projection_above(&self, threshold: f64) -> Self {
        self.hermitian_function(|t| if t > threshold { 1.0 } else { 0.0 })
    }

    /// `u (u* u)^{-1/2}` blockwise, via the singular value decomposition.
    pub fn polar_unitary(&self) -> Self {
        self.map_blocks(linalg::polar_unitary)
    }

    /// If every block is `c·1` for a common real `c`, return it.
    pub fn as_real_scalar(&self, tol: f64) -> Option<f64> {
        let dim: usize = self.algebra.block_dims.iter().sum();
        let c = self.trace() / C64::new(dim as f64, 0.0);
        let diff = self - &self.algebra.scalar(c);
        if diff.norm() <= tol * c.norm().max(1.0) && c.im.abs() <= tol * c.norm().max(1.0) {
            Some(c.re)
        } else {
            None
        }
    }

    pub fn is_projection(&self, tol: &ToleranceConfig) -> ProjectionReport {
        is_projection(self, tol)
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, b) in self.blocks.iter().enumerate() {
            if r > 0 {
                write!(f, " ⊕ ")?;
            }
            write!(f, "[")?;
            for i in 0..b.nrows() {
                if i > 0 {
                    write!(f, "; ")?;
                }
                let row: Vec<String> = (0..b.ncols()).map(|j| fmt_c64(b[(i, j)])).collect();
                write!(f, "{}", row.join(", "))?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

fn fmt_c64(z: C64) -> String {
    if z.im.abs() < 1e-12 {
        format!("{:.4}", z.re)
    } else {
        format!("{:.4}{:+.4}i", z.re, z.im)
    }
}

impl<'a> Add<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &'a AlgebraElement) -> AlgebraElement {
        self.zip_blocks(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &'a AlgebraElement) -> AlgebraElement {
        self.zip_blocks(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a AlgebraElement> for &'a AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &'a AlgebraElement) -> AlgebraElement {
        self.zip_blocks(rhs, |a, b| a * b)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale_real(-1.0)
    }
}

/// Sum of a non-empty iterator of elements.
pub fn sum_elements<'a>(algebra: &MultiMatrixAlgebra, items: impl IntoIterator<Item = &'a AlgebraElement>) -> AlgebraElement {
    items.into_iter().fold(algebra.zero(), |acc, x| &acc + x)
}

/// Idempotence and self-adjointness defects of a candidate projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionReport {
    /// `‖x² − x‖`
    pub idempotence_defect: f64,
    /// `‖x − x*‖`
    pub adjoint_defect: f64,
    pub pass: bool,
}

impl ProjectionReport {
    pub fn max_defect(&self) -> f64 {
        self.idempotence_defect.max(self.adjoint_defect)
    }
}

pub fn is_projection(x: &AlgebraElement, tol: &ToleranceConfig) -> ProjectionReport {
    let idempotence_defect = (&(x * x) - x).norm();
    let adjoint_defect = x.distance(&x.adjoint());
    ProjectionReport {
        idempotence_defect,
        adjoint_defect,
        pass: idempotence_defect <= tol.eq_tol && adjoint_defect <= tol.eq_tol,
    }
}

/// Largest singular value over blocks.
pub fn operator_norm(x: &AlgebraElement) -> f64 {
    x.norm()
}
