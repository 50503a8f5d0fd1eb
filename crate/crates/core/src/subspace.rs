//! Orthogonal projectors and local operators on `H_Λ = (C^d)^{⊗|Λ|}`.
//!
//! A [`Projector`] is stored through an orthonormal basis of either its range
//! or its kernel, whichever the constructor had at hand. The dense matrix is
//! materialized on first use. Lattice operations work on the stored bases, so
//! low-rank kernels of large windows never need a dense eigensolve.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legs::LegSplit;
use crate::linalg::{
    adj_mul, column_space, hermitian_eigen, hermitize, identity, null_space, op_norm,
    mul, orthogonal_complement, subspace_distance, CMatrix, CVector, RankPolicy, C64,
};
use crate::region::{hilbert_dim, Region};

#[derive(Clone, Debug)]
pub enum Frame {
    /// Orthonormal basis of `Ran P`.
    Range(CMatrix),
    /// Orthonormal basis of `Ker P`.
    Kernel(CMatrix),
}

#[derive(Clone, Debug)]
pub struct Projector {
    region: Region,
    site_dim: usize,
    frame: Frame,
    tol: f64,
    dense: OnceLock<CMatrix>,
}

impl Projector {
    fn with_frame(region: Region, site_dim: usize, frame: Frame, tol: f64) -> Self {
        Self { region, site_dim, frame, tol, dense: OnceLock::new() }
    }

    /// Projector onto the span of the given vectors (columns).
    pub fn from_span(vectors: &CMatrix, region: &Region, site_dim: usize, policy: RankPolicy, tol: f64) -> Result<Self> {
        let dim = site_dim.pow(region.len() as u32);
        if vectors.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: vectors.nrows() });
        }
        let basis = column_space(vectors, policy);
        Ok(Self::with_frame(region.clone(), site_dim, Frame::Range(basis), tol))
    }

    /// Projector onto the orthogonal complement of the span of the given vectors.
    pub fn complement_of_span(vectors: &CMatrix, region: &Region, site_dim: usize, policy: RankPolicy, tol: f64) -> Result<Self> {
        Ok(Self::from_span(vectors, region, site_dim, policy, tol)?.complement())
    }

    /// Trusted constructor: `basis` must have orthonormal columns.
    pub fn from_range_basis(basis: CMatrix, region: &Region, site_dim: usize, tol: f64) -> Self {
        Self::with_frame(region.clone(), site_dim, Frame::Range(basis), tol)
    }

    /// Trusted constructor: `basis` must have orthonormal columns.
    pub fn from_kernel_basis(basis: CMatrix, region: &Region, site_dim: usize, tol: f64) -> Self {
        Self::with_frame(region.clone(), site_dim, Frame::Kernel(basis), tol)
    }

    /// Validate a dense matrix as a projector and diagonalize it.
    pub fn from_matrix(m: CMatrix, region: &Region, site_dim: usize, tol: f64) -> Result<Self> {
        let dim = site_dim.pow(region.len() as u32);
        if m.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: m.nrows() });
        }
        let herm = op_norm(&(&m - m.adjoint()));
        if herm > tol {
            return Err(Error::NotProjector(format!("‖P − P†‖ = {herm:.3e}")));
        }
        let idem = op_norm(&(&m * &m - &m));
        if idem > tol {
            return Err(Error::NotProjector(format!("‖P² − P‖ = {idem:.3e}")));
        }
        let (values, vectors) = hermitian_eigen(&hermitize(&m));
        if let Some(v) = values.iter().find(|&&v| v.abs() > tol && (v - 1.0).abs() > tol) {
            return Err(Error::NotProjector(format!("eigenvalue {v} is neither 0 nor 1")));
        }
        let ones: Vec<usize> = (0..dim).filter(|&i| values[i] > 0.5).collect();
        let zeros: Vec<usize> = (0..dim).filter(|&i| values[i] <= 0.5).collect();
        let pick = |idx: &[usize]| {
            let mut b = CMatrix::zeros(dim, idx.len());
            for (dst, &src) in idx.iter().enumerate() {
                b.set_column(dst, &vectors.column(src));
            }
            b
        };
        let frame = if ones.len() <= zeros.len() { Frame::Range(pick(&ones)) } else { Frame::Kernel(pick(&zeros)) };
        let p = Self::with_frame(region.clone(), site_dim, frame, tol);
        let _ = p.dense.set(m);
        Ok(p)
    }

    pub fn zero(region: &Region, site_dim: usize, tol: f64) -> Self {
        let dim = site_dim.pow(region.len() as u32);
        Self::with_frame(region.clone(), site_dim, Frame::Range(CMatrix::zeros(dim, 0)), tol)
    }

    pub fn identity(region: &Region, site_dim: usize, tol: f64) -> Self {
        let dim = site_dim.pow(region.len() as u32);
        Self::with_frame(region.clone(), site_dim, Frame::Kernel(CMatrix::zeros(dim, 0)), tol)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn dim(&self) -> usize {
        match &self.frame {
            Frame::Range(b) | Frame::Kernel(b) => b.nrows(),
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        match &self.frame {
            Frame::Range(b) => b.ncols(),
            Frame::Kernel(b) => b.nrows() - b.ncols(),
        }
    }

    pub fn corank(&self) -> usize {
        self.dim() - self.rank()
    }

    /// `1 − P`.
    pub fn complement(&self) -> Projector {
        let frame = match &self.frame {
            Frame::Range(b) => Frame::Kernel(b.clone()),
            Frame::Kernel(b) => Frame::Range(b.clone()),
        };
        Self::with_frame(self.region.clone(), self.site_dim, frame, self.tol)
    }

    pub fn range_basis(&self) -> CMatrix {
        match &self.frame {
            Frame::Range(b) => b.clone(),
            Frame::Kernel(k) => orthogonal_complement(k),
        }
    }

    pub fn kernel_basis(&self) -> CMatrix {
        match &self.frame {
            Frame::Kernel(k) => k.clone(),
            Frame::Range(b) => orthogonal_complement(b),
        }
    }

    /// Dense matrix of `P`.
    pub fn matrix(&self) -> &CMatrix {
        self.dense.get_or_init(|| match &self.frame {
            Frame::Range(b) => mul(b, &b.adjoint()),
            Frame::Kernel(k) => identity(k.nrows()) - mul(k, &k.adjoint()),
        })
    }

    /// `P x` for each column of `x`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        match &self.frame {
            Frame::Range(b) => mul(b, &adj_mul(b, x)),
            Frame::Kernel(k) => x - mul(k, &adj_mul(k, x)),
        }
    }

    /// `(1 − P) x` for each column of `x`.
    pub fn apply_complement(&self, x: &CMatrix) -> CMatrix {
        match &self.frame {
            Frame::Range(b) => x - mul(b, &adj_mul(b, x)),
            Frame::Kernel(k) => mul(k, &adj_mul(k, x)),
        }
    }

    /// The same projector acting on the translated region. Translation keeps
    /// the lexicographic site order, so the matrix is unchanged.
    pub fn translated(&self, g: &[i64]) -> Projector {
        let mut p = self.clone();
        p.region = self.region.translate(g);
        p
    }

    /// `P ⊗ 1` on a larger region, legs permuted into canonical order.
    pub fn embed(&self, into: &Region) -> Result<Projector> {
        let split = LegSplit::between(&self.region, into, self.site_dim)?;
        let frame = match &self.frame {
            Frame::Range(b) => Frame::Range(split.tensor_with_rest(b)),
            Frame::Kernel(k) => Frame::Kernel(split.tensor_with_rest(k)),
        };
        Ok(Self::with_frame(into.clone(), self.site_dim, frame, self.tol))
    }

    /// Operator-norm distance `‖P − Q‖`.
    pub fn distance(&self, other: &Projector) -> Result<f64> {
        same_space(self, other)?;
        if self.rank() != other.rank() {
            return Ok(1.0);
        }
        let d = match (&self.frame, &other.frame) {
            (Frame::Range(a), Frame::Range(b)) | (Frame::Kernel(a), Frame::Kernel(b)) => subspace_distance(a, b),
            _ if self.rank() <= self.corank() => subspace_distance(&self.range_basis(), &other.range_basis()),
            _ => subspace_distance(&self.kernel_basis(), &other.kernel_basis()),
        };
        Ok(d)
    }

    pub fn to_json(&self) -> ProjectorJson {
        ProjectorJson {
            region: self.region.clone(),
            site_dim: self.site_dim,
            matrix: MatrixJson::from_matrix(self.matrix()),
        }
    }

    pub fn from_json(json: &ProjectorJson, tol: f64) -> Result<Self> {
        Self::from_matrix(json.matrix.to_matrix()?, &json.region, json.site_dim, tol)
    }

    /// Projector invariants evaluated on the dense matrix: Hermiticity and
    /// idempotence residuals.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let m = self.matrix();
        (op_norm(&(m - m.adjoint())), op_norm(&(m * m - m)))
    }
}

fn same_space(p: &Projector, q: &Projector) -> Result<()> {
    if p.region != q.region || p.site_dim != q.site_dim {
        return Err(Error::RegionMismatch { left: p.region.clone(), right: q.region.clone() });
    }
    Ok(())
}

/// Projector onto `Ran P ∩ Ran Q`.
///
/// This is the null space of `(1 − P) + (1 − Q)`, computed inside whichever
/// stored basis is cheaper: restricted to `Ran P` it is the null space of
/// `(1 − Q)|_{Ran P}`, and when both operands are stored through kernels it
/// is the complement of `Ker P + Ker Q`.
pub fn meet(p: &Projector, q: &Projector, policy: RankPolicy) -> Result<Projector> {
    same_space(p, q)?;
    let tol = p.tol.max(q.tol);
    let frame = match (&p.frame, &q.frame) {
        (Frame::Range(a), Frame::Range(b)) => {
            let (small, other) = if a.ncols() <= b.ncols() { (a, q) } else { (b, p) };
            Frame::Range(restricted_null(small, other, policy))
        }
        (Frame::Range(a), Frame::Kernel(_)) => Frame::Range(restricted_null(a, q, policy)),
        (Frame::Kernel(_), Frame::Range(b)) => Frame::Range(restricted_null(b, p, policy)),
        (Frame::Kernel(kp), Frame::Kernel(kq)) => {
            let stacked = crate::linalg::hstack(&[kp, kq]);
            Frame::Kernel(column_space(&stacked, policy))
        }
    };
    Ok(Projector::with_frame(p.region.clone(), p.site_dim, frame, tol))
}

/// Orthonormal basis of `{A x : (1 − Q) A x = 0}` for orthonormal `A`.
fn restricted_null(a: &CMatrix, q: &Projector, policy: RankPolicy) -> CMatrix {
    if a.ncols() == 0 {
        return a.clone();
    }
    let off = q.apply_complement(a);
    let n = null_space(&off, policy);
    let basis = a * n;
    // Re-orthonormalize against rounding drift.
    column_space(&basis, policy)
}

/// Projector onto `Ran P + Ran Q`, i.e. `1 − ((1 − P) ∧ (1 − Q))`.
pub fn join(p: &Projector, q: &Projector, policy: RankPolicy) -> Result<Projector> {
    Ok(meet(&p.complement(), &q.complement(), policy)?.complement())
}

/// `‖P Q − P‖ = ‖(1 − Q) P‖`.
pub fn leq_residual(p: &Projector, q: &Projector) -> Result<f64> {
    same_space(p, q)?;
    let r = match (&p.frame, &q.frame) {
        (Frame::Range(a), _) => op_norm(&q.apply_complement(a)),
        (Frame::Kernel(_), Frame::Kernel(k)) => op_norm(&p.apply(k)),
        (Frame::Kernel(_), Frame::Range(_)) => {
            let pm = p.matrix();
            op_norm(&(pm * q.matrix() - pm))
        }
    };
    Ok(r)
}

/// `P ≤ Q` at the tolerance of `P`.
pub fn leq(p: &Projector, q: &Projector) -> Result<bool> {
    Ok(leq_residual(p, q)? <= p.tol.max(q.tol))
}

/// Frustration-free nesting residual `‖(P_small ⊗ 1) P_big − P_small ⊗ 1‖`
/// for `small.region ⊆ big.region`, evaluated without forming `P_small ⊗ 1`
/// when the big projector has a small kernel.
pub fn nesting_residual(small: &Projector, big: &Projector) -> Result<f64> {
    if small.site_dim != big.site_dim {
        return Err(Error::DimensionMismatch { expected: big.site_dim, found: small.site_dim });
    }
    let split = LegSplit::between(&small.region, &big.region, small.site_dim)?;
    // ‖E (1 − P_big)‖ with E = P_small ⊗ 1.
    match &big.frame {
        Frame::Kernel(k) => Ok(op_norm(&split.apply(small.matrix(), k))),
        Frame::Range(_) => {
            let embedded = split.tensor_with_rest(&small.range_basis());
            Ok(op_norm(&big.apply_complement(&embedded)))
        }
    }
}

/// Dense operator on the Hilbert space of a region.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    region: Region,
    site_dim: usize,
    matrix: CMatrix,
}

impl LocalOperator {
    pub fn new(matrix: CMatrix, region: &Region, site_dim: usize) -> Result<Self> {
        let dim = site_dim.pow(region.len() as u32);
        if matrix.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        Ok(Self { region: region.clone(), site_dim, matrix })
    }

    pub fn identity(region: &Region, site_dim: usize) -> Self {
        let dim = site_dim.pow(region.len() as u32);
        Self { region: region.clone(), site_dim, matrix: identity(dim) }
    }

    pub fn zero(region: &Region, site_dim: usize) -> Self {
        let dim = site_dim.pow(region.len() as u32);
        Self { region: region.clone(), site_dim, matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> LocalOperator {
        Self { region: self.region.clone(), site_dim: self.site_dim, matrix: self.matrix.adjoint() }
    }

    pub fn translated(&self, g: &[i64]) -> LocalOperator {
        Self { region: self.region.translate(g), site_dim: self.site_dim, matrix: self.matrix.clone() }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `a ⊗ 1_{into ∖ region}` with legs in the canonical order of `into`.
    pub fn embed(&self, into: &Region) -> Result<LocalOperator> {
        hilbert_dim(self.site_dim, into.len(), usize::MAX)?;
        let split = LegSplit::between(&self.region, into, self.site_dim)?;
        Ok(Self { region: into.clone(), site_dim: self.site_dim, matrix: split.embed(&self.matrix) })
    }

    /// `(a ⊗ 1) x` for each column of `x`, where `x` lives on `within`.
    pub fn apply_within(&self, within: &Region, x: &CMatrix) -> Result<CMatrix> {
        let split = LegSplit::between(&self.region, within, self.site_dim)?;
        Ok(split.apply(&self.matrix, x))
    }

    /// Product of two operators, both embedded into the union of their regions.
    pub fn compose(&self, other: &LocalOperator) -> Result<LocalOperator> {
        let u = self.region.union(&other.region);
        let a = self.embed(&u)?;
        let b = other.embed(&u)?;
        Ok(Self { region: u, site_dim: self.site_dim, matrix: a.matrix * b.matrix })
    }

    pub fn hermiticity_residual(&self) -> f64 {
        op_norm(&(&self.matrix - self.matrix.adjoint()))
    }
}

/// Row-major complex matrix with entries as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, found: self.data.len() });
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            C64::new(re, im)
        }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectorJson {
    pub region: Region,
    pub site_dim: usize,
    pub matrix: MatrixJson,
}

/// Stack vectors as columns.
pub fn columns(vectors: &[CVector]) -> CMatrix {
    let rows = vectors.first().map_or(0, |v| v.len());
    CMatrix::from_fn(rows, vectors.len(), |i, j| vectors[j][i])
}
