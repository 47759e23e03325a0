//! Dense complex helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Eigen-decomposition of the Hermitian part `(m + m†)/2`, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()) * re(0.5);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_function(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * f(vals[c]));
    scaled * vecs.adjoint()
}

pub fn min_hermitian_eigenvalue(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    hermitian_eigen(m).0[0]
}

/// Singular values in descending order (thin decomposition).
pub fn singular_values(m: &DMatrix<C64>) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(s)
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Smallest singular value of `m` viewed as a map on its column space; zero
/// when there are more columns than rows.
pub fn smallest_singular_value(m: &DMatrix<C64>) -> f64 {
    if m.ncols() == 0 {
        return f64::INFINITY;
    }
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    let reduced = reduce_tall(m);
    singular_values(&reduced).iter().copied().fold(f64::INFINITY, f64::min)
}

/// For a tall matrix, the triangular factor of a QR decomposition: it has the
/// same singular values and right singular vectors.
fn reduce_tall(m: &DMatrix<C64>) -> DMatrix<C64> {
    if m.nrows() > 2 * m.ncols() {
        m.clone().qr().r()
    } else {
        m.clone()
    }
}

pub fn polar_unitary(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

/// Orthonormal basis (as columns) of the kernel of `m`.
///
/// Singular values at or below `cutoff · max(1, σ_max)` count as zero.
pub fn null_space(m: &DMatrix<C64>, cutoff: f64) -> DMatrix<C64> {
    let c = m.ncols();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(c, c);
    }
    let mut work = reduce_tall(m);
    if work.nrows() < c {
        // nalgebra's decomposition is thin, so pad with zero rows to obtain
        // all `c` right singular vectors.
        let mut padded = DMatrix::zeros(c, c);
        padded.view_mut((0, 0), (work.nrows(), c)).copy_from(&work);
        work = padded;
    }
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let thresh = cutoff * smax.max(1.0);
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= thresh).collect();
    let mut out = DMatrix::zeros(c, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        for r in 0..c {
            out[(r, k)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Moore-Penrose pseudo-inverse with the same relative cutoff as [`null_space`].
pub fn pinv(m: &DMatrix<C64>, cutoff: f64) -> DMatrix<C64> {
    if m.is_empty() {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let thresh = cutoff * smax.max(1.0);
    let k = sigma.len();
    let mut vs = v_t.adjoint();
    for j in 0..k {
        let s = sigma[j];
        let inv = if s > thresh { 1.0 / s } else { 0.0 };
        for r in 0..vs.nrows() {
            vs[(r, j)] *= inv;
        }
    }
    vs * u.adjoint()
}

/// `(m^{1/2}, m^{-1/2})` for a positive definite Hermitian matrix; `None`
/// when the smallest eigenvalue is at or below `cutoff`.
pub fn psd_sqrt_pair(m: &DMatrix<C64>, cutoff: f64) -> Option<(DMatrix<C64>, DMatrix<C64>, f64)> {
    let (vals, vecs) = hermitian_eigen(m);
    let lmin = if vals.is_empty() { f64::INFINITY } else { vals[0] };
    if lmin <= cutoff {
        return None;
    }
    let build = |f: &dyn Fn(f64) -> f64| {
        let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * f(vals[c]));
        &scaled * vecs.adjoint()
    };
    Some((build(&|t| t.sqrt()), build(&|t| 1.0 / t.sqrt()), lmin))
}

/// Incremental orthonormalization of column vectors (two-pass classical
/// Gram-Schmidt). A candidate is accepted when its residual exceeds `cutoff`
/// times the larger of its own norm and the largest norm in its batch, so
/// rounding noise in a near-zero column is not mistaken for a new direction.
#[derive(Debug, Clone)]
pub struct Orthonormalizer {
    dim: usize,
    data: Vec<C64>,
    cutoff: f64,
}

impl Orthonormalizer {
    pub fn new(dim: usize, cutoff: f64) -> Self {
        Self { dim, data: Vec::new(), cutoff }
    }

    pub fn from_basis(q: &DMatrix<C64>, cutoff: f64) -> Self {
        Self { dim: q.nrows(), data: q.as_slice().to_vec(), cutoff }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn basis(&self) -> DMatrix<C64> {
        DMatrix::from_column_slice(self.dim, self.len(), &self.data)
    }

    /// Add the columns of `cands`; returns the indices of the accepted columns.
    pub fn extend(&mut self, cands: &DMatrix<C64>) -> Vec<usize> {
        assert_eq!(cands.nrows(), self.dim, "candidate length mismatch");
        let mut accepted = Vec::new();
        if cands.ncols() == 0 {
            return accepted;
        }
        let norms: Vec<f64> = cands.column_iter().map(|c| c.norm()).collect();
        let scale = norms.iter().cloned().fold(0.0, f64::max);
        let mut work = cands.clone();
        // Project the whole batch against the existing basis, twice.
        if !self.is_empty() {
            let q = self.basis();
            for _ in 0..2 {
                let coeff = q.adjoint() * &work;
                work -= &q * coeff;
            }
        }
        let start = self.len();
        for j in 0..work.ncols() {
            if norms[j] == 0.0 {
                continue;
            }
            let mut v = work.column(j).into_owned();
            for _ in 0..2 {
                for k in start..self.len() {
                    let col = &self.data[k * self.dim..(k + 1) * self.dim];
                    let mut dot = ZERO;
                    for (a, b) in col.iter().zip(v.iter()) {
                        dot += a.conj() * b;
                    }
                    for (vi, a) in v.iter_mut().zip(col) {
                        *vi -= a * dot;
                    }
                }
            }
            let r = v.norm();
            if r > self.cutoff * norms[j].max(scale) && r > f64::MIN_POSITIVE {
                v /= re(r);
                self.data.extend(v.iter());
                accepted.push(j);
            }
        }
        accepted
    }
}

/// Row-major coordinate vector of a square matrix, matching the layout of
/// single-block algebra elements.
pub fn row_major(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.transpose().as_slice())
}

pub fn columns_to_matrix(dim: usize, cols: &[DVector<C64>]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DMatrix<C64> {
        let r = rows.len();
        let c = rows[0].len();
        DMatrix::from_fn(r, c, |i, j| re(rows[i][j]))
    }

    #[test]
    fn eigen_sorted_ascending() {
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (vals, vecs) = hermitian_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let back = &vecs * DMatrix::from_diagonal(&vals.map(re)) * vecs.adjoint();
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = m(&[&[1.0, 1.0, 0.0]]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((&a * &ns).norm() < 1e-12);
        assert!((ns.adjoint() * &ns - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_tall_matrix() {
        let mut a = DMatrix::zeros(10, 3);
        for i in 0..10 {
            a[(i, 0)] = re(i as f64);
            a[(i, 1)] = re(2.0 * i as f64);
            a[(i, 2)] = re(1.0);
        }
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!((&a * &ns).norm() < 1e-10);
    }

    #[test]
    fn pinv_inverts_full_rank() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let p = pinv(&a, 1e-12);
        assert!((&p * &a - DMatrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn sqrt_pair_multiplies_to_identity() {
        let a = m(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let (s, si, lmin) = psd_sqrt_pair(&a, 1e-12).unwrap();
        assert!(lmin > 0.0);
        assert!((&s * &s - &a).norm() < 1e-12);
        assert!((&s * &si - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(psd_sqrt_pair(&m(&[&[1.0, 0.0], &[0.0, 0.0]]), 1e-12).is_none());
    }

    #[test]
    fn orthonormalizer_drops_dependent_columns() {
        let mut o = Orthonormalizer::new(3, 1e-10);
        let c = m(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(o.extend(&c), vec![0, 2]);
        assert_eq!(o.extend(&m(&[&[1.0], &[1.0], &[0.0]])), Vec::<usize>::new());
        assert_eq!(o.extend(&m(&[&[1.0], &[1.0], &[1.0]])), vec![0]);
        let q = o.basis();
        assert!((q.adjoint() * &q - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn smallest_singular_value_of_wide_is_zero() {
        assert_eq!(smallest_singular_value(&m(&[&[1.0, 0.0]])), 0.0);
        assert!((smallest_singular_value(&m(&[&[3.0], &[4.0]])) - 5.0).abs() < 1e-12);
    }
}
