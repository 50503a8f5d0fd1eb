//! Dense complex linear algebra shared by every module.
//!
//! All rank decisions in the crate go through [`RankPolicy`]: a singular (or
//! eigen-) value counts as nonzero when it exceeds `rel * largest`, with an
//! absolute floor `abs`.

use std::sync::Once;

use faer::{Mat, MatRef, Par, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub rel: f64,
    pub abs: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self { rel: 1e-10, abs: 1e-12 }
    }
}

impl RankPolicy {
    pub fn cutoff(&self, largest: f64) -> f64 {
        (self.rel * largest).max(self.abs)
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn to_faer(m: &CMatrix) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Decompositions run single-threaded inside faer; callers parallelize over
/// windows instead, which also keeps results independent of the pool size.
fn sequential() {
    static INIT: Once = Once::new();
    INIT.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Products at least this large (in multiply-adds) go through faer.
const FAER_MUL_MIN: usize = 1 << 18;

/// `a b`.
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "mul shape mismatch");
    if a.nrows() * a.ncols() * b.ncols() < FAER_MUL_MIN {
        return a * b;
    }
    sequential();
    from_faer((to_faer(a) * to_faer(b)).as_ref())
}

/// `a† b`.
pub fn adj_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "adj_mul shape mismatch");
    if a.nrows() * a.ncols() * b.ncols() < FAER_MUL_MIN {
        return a.adjoint() * b;
    }
    sequential();
    from_faer((to_faer(a).adjoint() * to_faer(b)).as_ref())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending
/// order. Only the lower triangle is read, so callers should symmetrize
/// inputs that carry rounding noise.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    sequential();
    let eig = to_faer(m).self_adjoint_eigen(Side::Lower).expect("Hermitian eigensolver did not converge");
    let values = eig.S().column_vector().iter().map(|x| x.re).collect();
    (values, from_faer(eig.U()))
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    singular_values(m)[0]
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// Singular values (descending) and all right singular vectors.
fn full_right_svd(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    sequential();
    let f = to_faer(m);
    let svd = if m.nrows() >= m.ncols() { f.thin_svd() } else { f.svd() }.expect("SVD did not converge");
    let values = svd.S().column_vector().iter().map(|x| x.re).collect();
    (values, from_faer(svd.V()))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Vec::new();
    }
    sequential();
    to_faer(m).singular_values().expect("SVD did not converge")
}

pub fn numerical_rank(m: &CMatrix, policy: RankPolicy) -> usize {
    let s = singular_values(m);
    let Some(&largest) = s.first() else { return 0 };
    let cut = policy.cutoff(largest);
    s.iter().filter(|&&x| x > cut).count()
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn column_space(m: &CMatrix, policy: RankPolicy) -> CMatrix {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return CMatrix::zeros(r, 0);
    }
    sequential();
    let svd = to_faer(m).thin_svd().expect("SVD did not converge");
    let values: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
    let cut = policy.cutoff(values[0]);
    let keep = values.iter().take_while(|&&x| x > cut).count();
    from_faer(svd.U().subcols(0, keep))
}

/// Orthonormal basis of the right null space of `m`.
pub fn null_space(m: &CMatrix, policy: RankPolicy) -> CMatrix {
    let (r, c) = m.shape();
    if c == 0 {
        return CMatrix::zeros(0, 0);
    }
    if r == 0 {
        return identity(c);
    }
    let (values, vectors) = full_right_svd(m);
    let cut = policy.cutoff(values.first().copied().unwrap_or(0.0));
    let rank = values.iter().take_while(|&&x| x > cut).count();
    vectors.columns(rank, c - rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `basis` inside `C^n`.
pub fn orthogonal_complement(basis: &CMatrix) -> CMatrix {
    let (n, r) = basis.shape();
    if r == 0 {
        return identity(n);
    }
    if r >= n {
        return CMatrix::zeros(n, 0);
    }
    let proj = hermitize(&(identity(n) - mul(basis, &basis.adjoint())));
    let (values, vectors) = hermitian_eigen(&proj);
    let keep: Vec<usize> = (0..n).filter(|&i| values[i] > 0.5).collect();
    let mut out = CMatrix::zeros(n, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        out.set_column(dst, &vectors.column(src));
    }
    out
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal bases, which equals the operator-norm distance of their
/// orthogonal projectors. Subspaces of different dimension are at distance 1.
pub fn subspace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let residual = a - mul(b, &adj_mul(b, a));
    op_norm(&residual).min(1.0)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().sum()
}

/// Concatenate matrices with equal row counts side by side.
pub fn hstack(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Column-major flattening into a single column vector.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMatrix {
        CMatrix::from_fn(rows, cols, |i, j| C64::new(f(i, j), 0.0))
    }

    #[test]
    fn eigen_is_ascending() {
        let a = m(3, 3, |i, j| if i == j { [3.0, -1.0, 2.0][i] } else { 0.0 });
        let (vals, vecs) = hermitian_eigen(&a);
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn column_space_of_wide_rank_one() {
        let a = m(2, 5, |i, j| (i + 1) as f64 * (j + 1) as f64);
        let q = column_space(&a, RankPolicy::default());
        assert_eq!(q.ncols(), 1);
        assert!((q.column(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix_is_complete() {
        let a = m(1, 3, |_, j| [1.0, 1.0, 0.0][j]);
        let n = null_space(&a, RankPolicy::default());
        assert_eq!(n.ncols(), 2);
        assert!(op_norm(&(&a * &n)) < 1e-12);
    }

    #[test]
    fn complement_and_distance() {
        let e0 = m(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let c = orthogonal_complement(&e0);
        assert_eq!(c.ncols(), 2);
        assert!(op_norm(&(e0.adjoint() * &c)) < 1e-12);
        assert_eq!(subspace_distance(&e0, &c), 1.0);
        assert!(subspace_distance(&e0, &e0) < 1e-15);
    }

    #[test]
    fn op_norm_matches_largest_singular_value() {
        let a = m(3, 2, |i, j| (i as f64) - 2.0 * (j as f64));
        let s = singular_values(&a);
        assert!((op_norm(&a) - s[0]).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn rank_deficient_factorizations(seed in proptest::prelude::any::<u64>(), rows in 2usize..17, cols in 2usize..12, rank in 1usize..6) {
            // Duplicated columns give repeated singular values and exact zeros.
            let mut g = crate::random::rng(seed);
            let a = crate::random::random_matrix(&mut g, rows, rank) * crate::random::random_matrix(&mut g, rank, cols);
            let a = hstack(&[&a, &a.columns(0, 1).into_owned()]);
            let policy = RankPolicy::default();
            let q = column_space(&a, policy);
            let n = null_space(&a, policy);
            let r = rank.min(rows).min(cols);
            proptest::prop_assert_eq!(q.ncols(), r);
            proptest::prop_assert_eq!(n.ncols(), a.ncols() - r);
            let scale = op_norm(&a);
            proptest::prop_assert!(op_norm(&(&a - &q * (q.adjoint() * &a))) <= 1e-12 * scale);
            proptest::prop_assert!(op_norm(&(&a * &n)) <= 1e-12 * scale);
            proptest::prop_assert!(op_norm(&(q.adjoint() * &q - identity(r))) < 1e-12);
        }
    }
}
