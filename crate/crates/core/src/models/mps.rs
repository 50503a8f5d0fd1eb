//! Matrix-product construction on chains.
//!
//! `Γ_n(B) = Σ_μ e_{μ1} ⊗ … ⊗ e_{μn} Tr(v_{μn} ⋯ v_{μ1} B)`, and on an interval of
//! length `n ≥ ℓ` the kernel of `p` is the range of `Γ_n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffsys::FfSystem;
use crate::linalg::{column_space, hermitize, identity, kron, null_space, numerical_rank, op_norm, CMatrix, CVector, RankPolicy, C64};
use crate::region::{hilbert_dim, Region};
use crate::serial;
use crate::settings::Settings;
use crate::subspace::Projector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpsSpec {
    pub site_dim: usize,
    pub bond_dim: usize,
    #[serde(with = "serial::matrices")]
    pub v: Vec<CMatrix>,
    /// Fixed point of the dual transfer map; computed when absent.
    #[serde(default, with = "serial::option_matrix", skip_serializing_if = "Option::is_none")]
    pub rho: Option<CMatrix>,
}

/// Residuals of the defining conditions on `v` and `ρ`.
#[derive(Clone, Debug, Serialize)]
pub struct MpsValidation {
    pub isometry_residual: f64,
    pub fixed_point_residual: f64,
    pub unit_eigenvalue_multiplicity: usize,
    pub unit_eigenvalue_algebraic: usize,
}

impl MpsSpec {
    pub fn new(v: Vec<CMatrix>) -> Result<Self> {
        let site_dim = v.len();
        let bond_dim = v.first().map_or(0, |m| m.nrows());
        if site_dim == 0 || bond_dim == 0 {
            return Err(Error::InvalidSpec("need at least one nonempty matrix".into()));
        }
        if v.iter().any(|m| m.shape() != (bond_dim, bond_dim)) {
            return Err(Error::InvalidSpec("matrices must all be k×k".into()));
        }
        Ok(Self { site_dim, bond_dim, v, rho: None })
    }

    fn check_shapes(&self) -> Result<()> {
        if self.v.len() != self.site_dim || self.site_dim == 0 {
            return Err(Error::InvalidSpec(format!("expected {} matrices, found {}", self.site_dim, self.v.len())));
        }
        let k = self.bond_dim;
        if k == 0 || self.v.iter().any(|m| m.shape() != (k, k)) {
            return Err(Error::InvalidSpec("matrices must all be k×k".into()));
        }
        if let Some(r) = &self.rho {
            if r.shape() != (k, k) {
                return Err(Error::InvalidSpec("rho must be k×k".into()));
            }
        }
        Ok(())
    }

    /// Matrix of `B ↦ Σ v B v†` on column-major `vec(B)`.
    pub fn transfer_matrix(&self) -> CMatrix {
        let k = self.bond_dim;
        self.v.iter().fold(CMatrix::zeros(k * k, k * k), |acc, v| acc + kron(&v.conjugate(), v))
    }

    /// Matrix of `B ↦ Σ v† B v`.
    pub fn dual_transfer_matrix(&self) -> CMatrix {
        let k = self.bond_dim;
        self.v.iter().fold(CMatrix::zeros(k * k, k * k), |acc, v| acc + kron(&v.transpose(), &v.adjoint()))
    }

    /// Fixed point of the dual transfer map, Hermitian with unit trace.
    pub fn fixed_point(&self, policy: RankPolicy) -> Result<CMatrix> {
        self.check_shapes()?;
        let k = self.bond_dim;
        let e = self.dual_transfer_matrix() - identity(k * k);
        let ns = null_space(&e, policy);
        if ns.ncols() != 1 {
            return Err(Error::InvalidSpec(format!("dual transfer map has a {}-dimensional fixed space", ns.ncols())));
        }
        let rho = CMatrix::from_column_slice(k, k, ns.column(0).as_slice());
        let tr = rho.trace();
        if tr.norm() < 1e-12 {
            return Err(Error::InvalidSpec("fixed point of the dual transfer map is traceless".into()));
        }
        Ok(hermitize(&(rho / tr)))
    }

    pub fn rho_or_fixed_point(&self, policy: RankPolicy) -> Result<CMatrix> {
        match &self.rho {
            Some(r) => Ok(r.clone()),
            None => self.fixed_point(policy),
        }
    }

    /// Evaluate the defining conditions without failing.
    pub fn validation(&self, policy: RankPolicy) -> Result<MpsValidation> {
        self.check_shapes()?;
        let k = self.bond_dim;
        let s = self.v.iter().fold(CMatrix::zeros(k, k), |acc, v| acc + v * v.adjoint());
        let rho = self.rho_or_fixed_point(policy)?;
        let dual = self.v.iter().fold(CMatrix::zeros(k, k), |acc, v| acc + v.adjoint() * &rho * v);
        let e = self.transfer_matrix() - identity(k * k);
        Ok(MpsValidation {
            isometry_residual: op_norm(&(s - identity(k))),
            fixed_point_residual: op_norm(&(dual - &rho)),
            unit_eigenvalue_multiplicity: null_space(&e, policy).ncols(),
            unit_eigenvalue_algebraic: null_space(&(&e * &e), policy).ncols(),
        })
    }

    /// Fails unless `Σ v v† = 1`, `Σ v† ρ v = ρ` with invertible `ρ`, and the
    /// transfer map has 1 as a nondegenerate eigenvalue.
    pub fn validate(&self, settings: &Settings) -> Result<()> {
        let val = self.validation(settings.rank)?;
        let tol = settings.tol;
        if val.isometry_residual > tol {
            return Err(Error::InvalidSpec(format!("Σ v v† deviates from 1 by {:.3e}", val.isometry_residual)));
        }
        if val.fixed_point_residual > tol {
            return Err(Error::InvalidSpec(format!("Σ v† ρ v deviates from ρ by {:.3e}", val.fixed_point_residual)));
        }
        let rho = self.rho_or_fixed_point(settings.rank)?;
        if numerical_rank(&rho, settings.rank) < self.bond_dim {
            return Err(Error::InvalidSpec("rho is not invertible".into()));
        }
        if val.unit_eigenvalue_multiplicity != 1 || val.unit_eigenvalue_algebraic != 1 {
            return Err(Error::InvalidSpec("eigenvalue 1 of the transfer map is degenerate".into()));
        }
        Ok(())
    }
}

/// Spin-1 valence-bond chain: `k = 2`, `d = 3`, with `v` proportional to
/// `σ⁺`, `σᶻ/√2`, `σ⁻`. The common scale is fixed by `Σ v v† = 1`.
pub fn aklt_spec() -> MpsSpec {
    let c = |re: f64| C64::new(re, 0.0);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let raw = vec![
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]),
        CMatrix::from_row_slice(2, 2, &[c(-r2), c(0.0), c(0.0), c(r2)]),
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(-1.0), c(0.0)]),
    ];
    let s = raw.iter().fold(CMatrix::zeros(2, 2), |acc, v| acc + v * v.adjoint());
    // s is a multiple of the identity for this choice.
    debug_assert!(op_norm(&(&s - identity(2) * s[(0, 0)])) < 1e-14);
    let scale = 1.0 / s[(0, 0)].re.sqrt();
    MpsSpec::new(raw.into_iter().map(|v| v * c(scale)).collect()).expect("well-formed")
}

/// `v_{μn} ⋯ v_{μ1}` for every word `μ`, indexed with `μ1` most significant.
pub fn mps_products(n: usize, spec: &MpsSpec) -> Vec<CMatrix> {
    let mut words = vec![identity(spec.bond_dim)];
    for _ in 0..n {
        words = words.iter().flat_map(|a| spec.v.iter().map(move |v| v * a)).collect();
    }
    words
}

/// `Γ_n(B)`.
pub fn mps_gamma(n: usize, b: &CMatrix, spec: &MpsSpec) -> Result<CVector> {
    if n == 0 {
        return Err(Error::Invalid("Γ_n needs n ≥ 1".into()));
    }
    if b.shape() != (spec.bond_dim, spec.bond_dim) {
        return Err(Error::DimensionMismatch { expected: spec.bond_dim, found: b.nrows() });
    }
    let words = mps_products(n, spec);
    Ok(CVector::from_iterator(words.len(), words.iter().map(|a| (a * b).trace())))
}

/// `Γ_n` as a `d^n × k²` matrix acting on column-major `vec(B)`.
pub fn mps_gamma_matrix(n: usize, spec: &MpsSpec) -> CMatrix {
    let k = spec.bond_dim;
    let words = mps_products(n, spec);
    // Tr(A B) = Σ_ij A_ji B_ij
    CMatrix::from_fn(words.len(), k * k, |w, col| {
        let (i, j) = (col % k, col / k);
        words[w][(j, i)]
    })
}

/// Smallest `n ≤ n_max` with `rank Γ_n = k²`.
pub fn mps_injectivity_length(spec: &MpsSpec, n_max: usize, settings: &Settings) -> Option<usize> {
    let k2 = spec.bond_dim * spec.bond_dim;
    (1..=n_max)
        .take_while(|&n| hilbert_dim(spec.site_dim, n, settings.max_dim).is_ok())
        .find(|&n| numerical_rank(&mps_gamma_matrix(n, spec), settings.rank) == k2)
}

/// All intervals of length at least `ℓ` inside the interval `bbox`, with
/// `p^⊥ = ⟨Ran Γ_len⟩` translated into place.
pub fn mps_system_on(bbox: &Region, spec: &MpsSpec, settings: &Settings) -> Result<FfSystem> {
    spec.check_shapes()?;
    if bbox.dim() != Some(1) || !bbox.is_box() {
        return Err(Error::InvalidRegion(format!("{bbox} is not an interval")));
    }
    let n = bbox.len();
    let ell = mps_injectivity_length(spec, n, settings).ok_or(Error::InjectivityNotFound(n))?;
    let start = bbox.sites()[0][0];
    let kernels: Vec<(usize, CMatrix)> = (ell..=n)
        .into_par_iter()
        .map(|len| {
            hilbert_dim(spec.site_dim, len, settings.max_dim)?;
            Ok((len, column_space(&mps_gamma_matrix(len, spec), settings.rank)))
        })
        .collect::<Result<_>>()?;
    let mut projectors = Vec::new();
    for (len, k) in kernels {
        let base = Projector::from_kernel_basis(k, &Region::interval(0, len), spec.site_dim, settings.tol);
        for a in 0..=(n - len) {
            projectors.push(base.translated(&[start + a as i64]));
        }
    }
    FfSystem::new(spec.site_dim, projectors)
}

/// `mps_system_on` the chain `[0, n)`.
pub fn mps_system(n: usize, spec: &MpsSpec, settings: &Settings) -> Result<FfSystem> {
    mps_system_on(&Region::interval(0, n), spec, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffsys::{check_equivariance, check_ff};
    use crate::linalg::ONE;
    use crate::subspace::{meet, Frame};
    use proptest::prelude::*;

    fn trivial() -> MpsSpec {
        MpsSpec::new(vec![CMatrix::from_element(1, 1, ONE)]).unwrap()
    }

    #[test]
    fn scalar_gamma() {
        let b = CMatrix::from_element(1, 1, C64::new(2.5, -1.0));
        let g = mps_gamma(1, &b, &trivial()).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] - b[(0, 0)]).norm() < 1e-15);
        assert!(mps_gamma(0, &b, &trivial()).is_err());
    }

    #[test]
    fn aklt_spec_is_valid() {
        let spec = aklt_spec();
        let s = Settings::default();
        spec.validate(&s).unwrap();
        let rho = spec.fixed_point(s.rank).unwrap();
        assert!(op_norm(&(rho - identity(2) * C64::new(0.5, 0.0))) < 1e-12);
        assert_eq!(mps_injectivity_length(&spec, 6, &s), Some(2));
    }

    #[test]
    fn gamma_two_of_aklt_has_rank_four() {
        let spec = aklt_spec();
        // Independent oracle: entries Tr(v_ν v_μ E_ij) written out by hand.
        let mut m = CMatrix::zeros(9, 4);
        for mu in 0..3 {
            for nu in 0..3 {
                let a = &spec.v[nu] * &spec.v[mu];
                for i in 0..2 {
                    for j in 0..2 {
                        m[(mu * 3 + nu, i + 2 * j)] = a[(j, i)];
                    }
                }
            }
        }
        assert!(op_norm(&(&m - mps_gamma_matrix(2, &spec))) < 1e-14);
        assert_eq!(numerical_rank(&m, RankPolicy::default()), 4);
        assert_eq!(numerical_rank(&mps_gamma_matrix(1, &spec), RankPolicy::default()), 3);
    }

    #[test]
    fn injectivity_lengths() {
        let s = Settings::default();
        assert_eq!(mps_injectivity_length(&trivial(), 4, &s), Some(1));
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let degenerate = MpsSpec::new(vec![identity(2) * h, identity(2) * h]).unwrap();
        assert_eq!(mps_injectivity_length(&degenerate, 8, &s), None);
        assert!(degenerate.validate(&s).is_err());
        assert!(matches!(mps_system(4, &degenerate, &s), Err(Error::InjectivityNotFound(4))));
    }

    #[test]
    fn aklt_system_is_ff_and_equivariant_with_corank_four() {
        let s = Settings::default();
        let sys = mps_system(6, &aklt_spec(), &s).unwrap();
        assert!(check_ff(&sys, 1e-9).ok);
        assert!(check_equivariance(&sys, &[vec![1], vec![2], vec![3]], 1e-9).unwrap().ok);
        assert!(sys.projectors().all(|p| p.corank() == 4));
        assert!(sys.windows().all(|w| w.len() >= 2));
    }

    #[test]
    fn trivial_spec_gives_rank_one_kernels() {
        let sys = mps_system(3, &trivial(), &Settings::default()).unwrap();
        assert_eq!(sys.len(), 6);
        assert!(sys.projectors().all(|p| p.corank() == 1));
    }

    #[test]
    fn gamma_recursion() {
        let spec = aklt_spec();
        let b = CMatrix::from_fn(2, 2, |i, j| C64::new(i as f64 - 0.3, 0.7 * j as f64 + 0.1));
        for n in 1..4 {
            let direct = mps_gamma(n + 1, &b, &spec).unwrap();
            let d_n = 3usize.pow(n as u32);
            for mu in 0..3 {
                let tail = mps_gamma(n, &(&spec.v[mu] * &b), &spec).unwrap();
                let block = direct.rows(mu * d_n, d_n);
                assert!((block - tail).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn meet_of_overlapping_kernels_is_union_kernel() {
        let s = Settings::default();
        let spec = aklt_spec();
        let sys = mps_system(6, &spec, &s).unwrap();
        for m in 2..=4usize {
            for n in 2..=4usize {
                for p in m.max(n)..=(m + n - 2).min(6) {
                    let lm = Region::interval(0, m);
                    let ln = Region::interval((p - n) as i64, n);
                    let lp = Region::interval(0, p);
                    let a = sys.projector(&lm).unwrap().complement().embed(&lp).unwrap();
                    let b = sys.projector(&ln).unwrap().complement().embed(&lp).unwrap();
                    let got = meet(&a, &b, s.rank).unwrap();
                    let want = sys.projector(&lp).unwrap().complement();
                    assert!(got.distance(&want).unwrap() < 1e-9, "m={m} n={n} p={p}");
                }
            }
        }
    }

    #[test]
    fn kernel_is_stored_as_kernel_frame() {
        let sys = mps_system(3, &aklt_spec(), &Settings::default()).unwrap();
        let p = sys.projector(&Region::interval(0, 3)).unwrap();
        assert!(matches!(p.frame(), Frame::Kernel(k) if k.ncols() == 4));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = aklt_spec();
        let text = serde_json::to_string(&spec).unwrap();
        let back: MpsSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    proptest! {
        #[test]
        fn gamma_is_linear(seed in 0u64..1000, n in 1usize..4) {
            let spec = aklt_spec();
            let mut r = crate::random::rng(seed);
            let b1 = crate::random::random_matrix(&mut r, 2, 2);
            let b2 = crate::random::random_matrix(&mut r, 2, 2);
            let lhs = mps_gamma(n, &(&b1 + &b2), &spec).unwrap();
            let rhs = mps_gamma(n, &b1, &spec).unwrap() + mps_gamma(n, &b2, &spec).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            let g = mps_gamma_matrix(n, &spec);
            let via_matrix = &g * crate::linalg::vectorize(&b1);
            prop_assert!((via_matrix - mps_gamma(n, &b1, &spec).unwrap()).norm() < 1e-12);
        }
    }
}
