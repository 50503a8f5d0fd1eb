//! Bookkeeping for operators acting on a subset of the tensor legs of a
//! larger region.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64, ZERO};
use crate::region::Region;

/// Splits the basis of a region into (legs of a subregion) ⊗ (remaining legs),
/// both kept in canonical order.
#[derive(Clone, Debug)]
pub struct LegSplit {
    local_dim: usize,
    rest_dim: usize,
    /// Big-space index of local index `i` and rest index `r`, stored at
    /// `i * rest_dim + r`.
    index_of: Vec<usize>,
}

impl LegSplit {
    pub fn new(site_dim: usize, positions: &[usize], n_sites: usize) -> Self {
        let k = positions.len();
        let local_dim = site_dim.pow(k as u32);
        let rest_dim = site_dim.pow((n_sites - k) as u32);
        let total = local_dim * rest_dim;
        let mut is_local = vec![false; n_sites];
        for &p in positions {
            is_local[p] = true;
        }
        let mut index_of = vec![0; total];
        let mut digits = vec![0usize; n_sites];
        for big in 0..total {
            let mut x = big;
            for s in (0..n_sites).rev() {
                digits[s] = x % site_dim;
                x /= site_dim;
            }
            let (mut i, mut r) = (0, 0);
            for s in 0..n_sites {
                if is_local[s] {
                    i = i * site_dim + digits[s];
                } else {
                    r = r * site_dim + digits[s];
                }
            }
            index_of[i * rest_dim + r] = big;
        }
        Self { local_dim, rest_dim, index_of }
    }

    pub fn between(inner: &Region, outer: &Region, site_dim: usize) -> Result<Self> {
        let positions = inner.positions_in(outer).ok_or_else(|| Error::NotContained {
            inner: inner.clone(),
            outer: outer.clone(),
        })?;
        Ok(Self::new(site_dim, &positions, outer.len()))
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn rest_dim(&self) -> usize {
        self.rest_dim
    }

    pub fn total_dim(&self) -> usize {
        self.local_dim * self.rest_dim
    }

    pub fn index(&self, local: usize, rest: usize) -> usize {
        self.index_of[local * self.rest_dim + rest]
    }

    /// Reshape each column into a `local × rest` block and place the blocks
    /// side by side.
    fn gather(&self, vecs: &CMatrix) -> CMatrix {
        let (ld, rd) = (self.local_dim, self.rest_dim);
        let mut out = CMatrix::zeros(ld, rd * vecs.ncols());
        for c in 0..vecs.ncols() {
            for i in 0..ld {
                for r in 0..rd {
                    out[(i, c * rd + r)] = vecs[(self.index(i, r), c)];
                }
            }
        }
        out
    }

    fn scatter(&self, blocks: &CMatrix, ncols: usize) -> CMatrix {
        let (ld, rd) = (self.local_dim, self.rest_dim);
        let mut out = CMatrix::zeros(ld * rd, ncols);
        for c in 0..ncols {
            for i in 0..ld {
                for r in 0..rd {
                    out[(self.index(i, r), c)] = blocks[(i, c * rd + r)];
                }
            }
        }
        out
    }

    /// `(op ⊗ 1) v` for every column `v`, without forming `op ⊗ 1`.
    pub fn apply(&self, op: &CMatrix, vecs: &CMatrix) -> CMatrix {
        assert_eq!(op.shape(), (self.local_dim, self.local_dim));
        assert_eq!(vecs.nrows(), self.total_dim());
        let blocks = self.gather(vecs);
        self.scatter(&(op * blocks), vecs.ncols())
    }

    /// Dense `op ⊗ 1` in the canonical order of the outer region.
    pub fn embed(&self, op: &CMatrix) -> CMatrix {
        assert_eq!(op.shape(), (self.local_dim, self.local_dim));
        let n = self.total_dim();
        let mut out = CMatrix::zeros(n, n);
        for r in 0..self.rest_dim {
            for i in 0..self.local_dim {
                let row = self.index(i, r);
                for j in 0..self.local_dim {
                    let v = op[(i, j)];
                    if v != ZERO {
                        out[(row, self.index(j, r))] = v;
                    }
                }
            }
        }
        out
    }

    /// `target += scale · (op ⊗ 1)`.
    pub fn add_embedded(&self, op: &CMatrix, scale: C64, target: &mut CMatrix) {
        assert_eq!(op.shape(), (self.local_dim, self.local_dim));
        assert_eq!(target.shape(), (self.total_dim(), self.total_dim()));
        for r in 0..self.rest_dim {
            for j in 0..self.local_dim {
                let col = self.index(j, r);
                for i in 0..self.local_dim {
                    let v = op[(i, j)];
                    if v != ZERO {
                        target[(self.index(i, r), col)] += v * scale;
                    }
                }
            }
        }
    }

    /// Trace over the rest legs.
    pub fn partial_trace(&self, op: &CMatrix) -> CMatrix {
        assert_eq!(op.shape(), (self.total_dim(), self.total_dim()));
        let mut out = CMatrix::zeros(self.local_dim, self.local_dim);
        for i in 0..self.local_dim {
            for j in 0..self.local_dim {
                let mut acc = ZERO;
                for r in 0..self.rest_dim {
                    acc += op[(self.index(i, r), self.index(j, r))];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `Σ_v Tr_rest |v⟩⟨v|` over the columns `v`.
    pub fn reduced_density(&self, vecs: &CMatrix) -> CMatrix {
        let blocks = self.gather(vecs);
        &blocks * blocks.adjoint()
    }

    /// Columns `b ⊗ e_r` for every column `b` of `basis` and every rest basis
    /// vector `e_r`; orthonormal whenever `basis` is.
    pub fn tensor_with_rest(&self, basis: &CMatrix) -> CMatrix {
        assert_eq!(basis.nrows(), self.local_dim);
        let rd = self.rest_dim;
        let mut out = CMatrix::zeros(self.total_dim(), basis.ncols() * rd);
        for c in 0..basis.ncols() {
            for r in 0..rd {
                let col = c * rd + r;
                for i in 0..self.local_dim {
                    out[(self.index(i, r), col)] = basis[(i, c)];
                }
            }
        }
        out
    }

    pub fn split_vector(&self, v: &CVector) -> CMatrix {
        CMatrix::from_fn(self.local_dim, self.rest_dim, |i, r| v[self.index(i, r)])
    }
}
