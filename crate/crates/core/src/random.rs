//! Seeded random fixtures. Every random object in the crate is drawn from a
//! [`ChaCha8Rng`] so that runs are reproducible from a single seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{column_space, hermitize, CMatrix, RankPolicy, C64};
use crate::region::Region;
use crate::subspace::Projector;

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    hermitize(&random_matrix(rng, n, n))
}

/// Haar-ish unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    random_matrix(rng, n, n).qr().q()
}

/// Orthonormal basis of a uniformly random `rank`-dimensional subspace.
pub fn random_isometry<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> CMatrix {
    if rank == 0 {
        return CMatrix::zeros(dim, 0);
    }
    column_space(&random_matrix(rng, dim, rank), RankPolicy::default())
}

pub fn random_projector<R: Rng>(rng: &mut R, region: &Region, site_dim: usize, rank: usize, tol: f64) -> Projector {
    let dim = site_dim.pow(region.len() as u32);
    Projector::from_range_basis(random_isometry(rng, dim, rank), region, site_dim, tol)
}
