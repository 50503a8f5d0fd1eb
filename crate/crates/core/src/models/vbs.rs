//! Valence-bond subspaces on finite windows.
//!
//! A site `g` carries one auxiliary index `x_g(t) ∈ J(t)` per generator `t`.
//! Every `g` whose full bond `g + T` fits in the window contributes the
//! amplitude `Γ(x_{g+t}(t))_{t∈T}`; the physical vector at `g` is
//! `ψ(x_g(t))_{t∈T}`. Indices not touched by any bond stay free, and each
//! free configuration yields one spanning vector of `V_Λ`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffsys::FfSystem;
use crate::linalg::{column_space, CMatrix, CVector, C64, ONE, ZERO};
use crate::models::mps::MpsSpec;
use crate::random::random_matrix;
use crate::region::{hilbert_dim, Region, Site};
use crate::serial;
use crate::settings::Settings;
use crate::subspace::Projector;

/// A decorated site: lattice site plus generator position in `T`.
pub type Decorated = (Site, usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbsSpec {
    pub site_dim: usize,
    /// `T`, with the zero shift first.
    pub generators: Vec<Site>,
    /// `|J(t)|` for each generator.
    pub index_sizes: Vec<usize>,
    /// `ψ(x)` for every `x ∈ ∏ J(t)`, mixed radix with the first generator
    /// most significant.
    #[serde(with = "serial::vectors")]
    pub psi: Vec<CVector>,
    #[serde(with = "serial::scalars")]
    pub gamma: Vec<C64>,
}

fn add(a: &[i64], b: &[i64]) -> Site {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Site {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

impl VbsSpec {
    pub fn new(
        site_dim: usize,
        generators: Vec<Site>,
        index_sizes: Vec<usize>,
        psi: Vec<CVector>,
        gamma: Vec<C64>,
    ) -> Result<Self> {
        let spec = Self { site_dim, generators, index_sizes, psi, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.site_dim == 0 {
            return bad("site dimension must be positive".into());
        }
        let Some(zero) = self.generators.first() else {
            return bad("generator set is empty".into());
        };
        if zero.iter().any(|&x| x != 0) {
            return bad("the first generator must be the zero shift".into());
        }
        let d = zero.len();
        if self.generators.iter().any(|t| t.len() != d) {
            return bad("generators have mixed lattice dimensions".into());
        }
        // Bonds are contracted in canonical site order, which needs every
        // other generator to point forward.
        if self.generators[1..].iter().any(|t| t <= zero) {
            return bad("nonzero generators must be lexicographically positive".into());
        }
        if self.generators.iter().collect::<BTreeSet<_>>().len() != self.generators.len() {
            return bad("repeated generator".into());
        }
        if self.index_sizes.len() != self.generators.len() || self.index_sizes.contains(&0) {
            return bad("need one positive index-set size per generator".into());
        }
        let n = self.config_count();
        if self.psi.len() != n || self.gamma.len() != n {
            return bad(format!("psi and gamma need {n} entries"));
        }
        if self.psi.iter().any(|v| v.len() != self.site_dim) {
            return bad("psi vectors must have length site_dim".into());
        }
        if self.gamma.iter().all(|g| g.norm() == 0.0) {
            return bad("all bond amplitudes vanish".into());
        }
        Ok(())
    }

    pub fn lattice_dim(&self) -> usize {
        self.generators[0].len()
    }

    /// `|∏_t J(t)|`.
    pub fn config_count(&self) -> usize {
        self.index_sizes.iter().product()
    }

    pub fn flat_index(&self, x: &[usize]) -> usize {
        x.iter().zip(&self.index_sizes).fold(0, |acc, (&xi, &n)| acc * n + xi)
    }

    pub fn unflatten(&self, mut i: usize) -> Vec<usize> {
        let mut x = vec![0; self.index_sizes.len()];
        for k in (0..x.len()).rev() {
            x[k] = i % self.index_sizes[k];
            i /= self.index_sizes[k];
        }
        x
    }

    /// Generators `{0, e_1, …, e_d}` with `index_size` values per bond and
    /// Gaussian `ψ`, `Γ`.
    pub fn random<R: Rng>(rng: &mut R, lattice_dim: usize, site_dim: usize, index_size: usize) -> Self {
        let mut generators = vec![vec![0; lattice_dim]];
        for k in 0..lattice_dim {
            let mut e = vec![0; lattice_dim];
            e[k] = 1;
            generators.push(e);
        }
        let index_sizes = vec![index_size; lattice_dim + 1];
        let n: usize = index_sizes.iter().product();
        let psi_m = random_matrix(rng, site_dim, n);
        let gamma_m = random_matrix(rng, n, 1);
        Self {
            site_dim,
            generators,
            index_sizes,
            psi: (0..n).map(|j| psi_m.column(j).into_owned()).collect(),
            gamma: gamma_m.iter().copied().collect(),
        }
    }

    /// The chain spec whose valence-bond subspaces are the ranges of the
    /// matrix-product maps: `ψ(i, j) = Σ_μ v_μ(i, j) e_μ`, `Γ(i, j) = δ_ij`.
    pub fn from_mps(mps: &MpsSpec) -> Self {
        let k = mps.bond_dim;
        let mut psi = Vec::with_capacity(k * k);
        let mut gamma = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                psi.push(CVector::from_iterator(mps.site_dim, mps.v.iter().map(|v| v[(i, j)])));
                gamma.push(if i == j { ONE } else { ZERO });
            }
        }
        Self { site_dim: mps.site_dim, generators: vec![vec![0], vec![1]], index_sizes: vec![k, k], psi, gamma }
    }
}

/// `Λ_T = {g : g + t ∈ Λ for all t ∈ T}`.
pub fn lambda_t(lambda: &Region, generators: &[Site]) -> Region {
    let sites = lambda
        .sites()
        .iter()
        .filter(|g| generators.iter().all(|t| lambda.contains(&add(g, t))))
        .cloned()
        .collect();
    Region::new(sites).expect("subset of a region is a region")
}

/// `Λ_B = {(g + t, t) : g ∈ Λ_T, t ∈ T}`.
pub fn lambda_b(lambda: &Region, generators: &[Site]) -> BTreeSet<Decorated> {
    let lt = lambda_t(lambda, generators);
    lt.sites()
        .iter()
        .flat_map(|g| generators.iter().enumerate().map(move |(k, t)| (add(g, t), k)))
        .collect()
}

/// `C_Λ(X) = ∏_{g ∈ Λ_T} Γ(x_{g+t}(t))_{t∈T}`.
pub fn vbs_amplitude(x: &BTreeMap<Decorated, usize>, lambda: &Region, spec: &VbsSpec) -> Result<C64> {
    let lt = lambda_t(lambda, &spec.generators);
    if lt.is_empty() {
        return Err(Error::InvalidRegion(format!("no full bond fits in {lambda}")));
    }
    let mut amp = ONE;
    for g in lt.sites() {
        let mut idx = Vec::with_capacity(spec.generators.len());
        for (k, t) in spec.generators.iter().enumerate() {
            let key = (add(g, t), k);
            let v = *x
                .get(&key)
                .ok_or_else(|| Error::Invalid(format!("configuration misses decorated site {key:?}")))?;
            if v >= spec.index_sizes[k] {
                return Err(Error::Invalid(format!("index {v} out of range at {key:?}")));
            }
            idx.push(v);
        }
        amp *= spec.gamma[spec.flat_index(&idx)];
    }
    Ok(amp)
}

fn radix_decode(mut i: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = i % dims[k];
        i /= dims[k];
    }
}

/// Orthonormal basis of `V_Λ`, or `None` when no bond fits (then `V_Λ` is
/// the whole space).
///
/// Sites are absorbed one at a time in canonical order. The working matrix
/// has rows indexed by (physical configuration so far, values of bond legs
/// opened but not yet closed) and columns by free-index configurations; its
/// column space is compressed after every site, which leaves the final span
/// unchanged because the remaining steps act linearly on rows.
pub fn vbs_basis(lambda: &Region, spec: &VbsSpec, settings: &Settings) -> Result<Option<CMatrix>> {
    spec.validate()?;
    hilbert_dim(spec.site_dim, lambda.len(), settings.max_dim)?;
    let gens = &spec.generators;
    let nt = gens.len();
    let lt = lambda_t(lambda, gens);
    if lt.is_empty() {
        return Ok(None);
    }
    let d = spec.site_dim;
    let ncfg = spec.config_count();
    let configs: Vec<Vec<usize>> = (0..ncfg).map(|i| spec.unflatten(i)).collect();

    let mut open: Vec<Decorated> = Vec::new();
    let mut m = CMatrix::from_element(1, 1, ONE);
    let mut phys = 1usize;
    for h in lambda.sites() {
        let in_t = lt.contains(h);
        let old_dims: Vec<usize> = open.iter().map(|(_, k)| spec.index_sizes[*k]).collect();
        let old_total: usize = old_dims.iter().product();
        let consumed: Vec<(usize, usize)> =
            open.iter().enumerate().filter(|(_, (s, _))| s == h).map(|(pos, (_, k))| (pos, *k)).collect();
        let remaining: Vec<usize> = (0..open.len()).filter(|p| open[*p].0 != *h).collect();
        let new_legs: Vec<Decorated> =
            if in_t { (1..nt).map(|k| (add(h, &gens[k]), k)).collect() } else { Vec::new() };
        let bonded: Vec<bool> = (0..nt).map(|k| lt.contains(&sub(h, &gens[k]))).collect();
        let free: Vec<usize> = (0..nt).filter(|&k| !bonded[k]).collect();
        let free_total: usize = free.iter().map(|&k| spec.index_sizes[k]).product();
        let rem_dims: Vec<usize> = remaining.iter().map(|&p| old_dims[p]).collect();
        let new_dims: Vec<usize> = new_legs.iter().map(|(_, k)| spec.index_sizes[*k]).collect();
        let new_leg_total: usize = new_dims.iter().product();
        let open_total = rem_dims.iter().product::<usize>() * new_leg_total;

        let cols = m.ncols();
        let mut next = CMatrix::zeros(phys * d * open_total, cols * free_total);
        let mut ov = vec![0usize; old_dims.len()];
        let mut nv = vec![0usize; new_dims.len()];
        let mut gidx = vec![0usize; nt];
        for row in 0..m.nrows() {
            let (p, o) = (row / old_total, row % old_total);
            radix_decode(o, &old_dims, &mut ov);
            let rem_idx = remaining.iter().zip(&rem_dims).fold(0, |acc, (&pos, &n)| acc * n + ov[pos]);
            for (xi, x) in configs.iter().enumerate() {
                if consumed.iter().any(|&(pos, k)| ov[pos] != x[k]) {
                    continue;
                }
                let free_idx = free.iter().fold(0, |acc, &k| acc * spec.index_sizes[k] + x[k]);
                for nl in 0..new_leg_total {
                    let gam = if in_t {
                        radix_decode(nl, &new_dims, &mut nv);
                        gidx[0] = x[0];
                        gidx[1..].copy_from_slice(&nv);
                        spec.gamma[spec.flat_index(&gidx)]
                    } else {
                        ONE
                    };
                    if gam == ZERO {
                        continue;
                    }
                    for mu in 0..d {
                        let coeff = spec.psi[xi][mu] * gam;
                        if coeff == ZERO {
                            continue;
                        }
                        let new_row = (p * d + mu) * open_total + rem_idx * new_leg_total + nl;
                        for c in 0..cols {
                            let v = m[(row, c)];
                            if v != ZERO {
                                next[(new_row, c * free_total + free_idx)] += v * coeff;
                            }
                        }
                    }
                }
            }
        }
        m = column_space(&next, settings.rank);
        phys *= d;
        open = remaining.iter().map(|&p| open[p].clone()).chain(new_legs).collect();
        if m.ncols() == 0 {
            break;
        }
    }
    if m.ncols() == 0 {
        return Err(Error::InvalidSpec(format!("all valence-bond amplitudes vanish on {lambda}")));
    }
    Ok(Some(m))
}

/// Projector onto `V_Λ` (the identity when no bond fits in `Λ`).
pub fn vbs_subspace(lambda: &Region, spec: &VbsSpec, settings: &Settings) -> Result<Projector> {
    Ok(match vbs_basis(lambda, spec, settings)? {
        Some(b) => Projector::from_range_basis(b, lambda, spec.site_dim, settings.tol),
        None => Projector::identity(lambda, spec.site_dim, settings.tol),
    })
}

/// `p_Λ = 1 − ⟨V_Λ⟩` on every box inside `bbox`.
pub fn vbs_system(bbox: &Region, spec: &VbsSpec, settings: &Settings) -> Result<FfSystem> {
    spec.validate()?;
    if bbox.dim() != Some(spec.lattice_dim()) {
        return Err(Error::InvalidRegion(format!("{bbox} does not match the lattice dimension of the valence-bond model")));
    }
    let projectors = bbox
        .sub_boxes()
        .par_iter()
        .map(|w| vbs_subspace(w, spec, settings).map(|v| v.complement()))
        .collect::<Result<Vec<_>>>()?;
    FfSystem::new(spec.site_dim, projectors)
}
