//! Finite-window states, frustration-free ground states, hereditary
//! truncations and local topological order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffsys::{FfSystem, PairResidual};
use crate::legs::LegSplit;
use crate::linalg::{hermitian_eigen, hermitize, hs_norm, identity, op_norm, CMatrix, RankPolicy, C64, ONE};
use crate::models::product_vector;
use crate::region::{hilbert_dim, Region, Site};
use crate::settings::Settings;
use crate::subspace::{leq, nesting_residual, LocalOperator, MatrixJson, Projector};
use crate::CVector;

/// Density matrices on a family of windows.
#[derive(Clone, Debug)]
pub struct WindowState {
    site_dim: usize,
    rho: BTreeMap<Region, CMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowStateJson {
    pub site_dim: usize,
    pub windows: Vec<WindowDensityJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowDensityJson {
    pub region: Region,
    pub matrix: MatrixJson,
}

/// Projector onto the range of a positive matrix.
pub fn support_projection(rho: &CMatrix, region: &Region, site_dim: usize, policy: RankPolicy, tol: f64) -> Projector {
    let (vals, vecs) = hermitian_eigen(&hermitize(rho));
    let largest = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = policy.cutoff(largest);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cut).collect();
    Projector::from_range_basis(vecs.select_columns(&keep), region, site_dim, tol)
}

/// The window containing every other window.
fn top_window<'a>(windows: impl Iterator<Item = &'a Region> + Clone) -> Result<Region> {
    let top = windows.clone().max_by_key(|w| w.len()).cloned().ok_or(Error::WindowMismatch)?;
    if let Some(w) = windows.clone().find(|w| !w.is_subset(&top)) {
        return Err(Error::NotContained { inner: w.clone(), outer: top });
    }
    Ok(top)
}

impl WindowState {
    /// Validates Hermiticity, positivity and unit trace on every window.
    pub fn new(site_dim: usize, rho: BTreeMap<Region, CMatrix>, tol: f64) -> Result<Self> {
        for (w, r) in &rho {
            let dim = hilbert_dim(site_dim, w.len(), usize::MAX)?;
            if r.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: r.nrows() });
            }
            let herm = op_norm(&(r - r.adjoint()));
            let tr = r.trace();
            let lowest = hermitian_eigen(&hermitize(r)).0[0];
            if herm > tol || (tr - ONE).norm() > tol || lowest < -tol {
                return Err(Error::Invalid(format!("matrix on {w} is not a density matrix")));
            }
        }
        Ok(Self { site_dim, rho })
    }

    /// Uniform mixture over the orthonormal columns of `vectors` on `top`,
    /// restricted to each window.
    pub fn from_vectors(vectors: &CMatrix, top: &Region, windows: &[Region], site_dim: usize) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Err(Error::EmptyKernel(top.clone()));
        }
        let norm = C64::new(vectors.ncols() as f64, 0.0);
        let rho = windows
            .par_iter()
            .map(|w| {
                let split = LegSplit::between(w, top, site_dim)?;
                Ok((w.clone(), hermitize(&(split.reduced_density(vectors) / norm))))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Self { site_dim, rho })
    }

    /// Uniform mixture over the kernel of the largest window, with its
    /// marginals on all windows of the system.
    pub fn uniform_ground_state(sys: &FfSystem) -> Result<Self> {
        let top = top_window(sys.windows().collect::<Vec<_>>().into_iter())?;
        let k = sys.projector(&top)?.kernel_basis();
        let windows: Vec<Region> = sys.windows().cloned().collect();
        Self::from_vectors(&k, &top, &windows, sys.site_dim())
    }

    pub fn product(psi0: &CVector, windows: &[Region]) -> Self {
        let rho = windows
            .iter()
            .map(|w| {
                let v = product_vector(psi0, w.len());
                (w.clone(), &v * v.adjoint())
            })
            .collect();
        Self { site_dim: psi0.len(), rho }
    }

    pub fn maximally_mixed(site_dim: usize, windows: &[Region]) -> Self {
        let rho = windows
            .iter()
            .map(|w| {
                let dim = site_dim.pow(w.len() as u32);
                (w.clone(), identity(dim) / C64::new(dim as f64, 0.0))
            })
            .collect();
        Self { site_dim, rho }
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn windows(&self) -> impl Iterator<Item = &Region> + Clone {
        self.rho.keys()
    }

    pub fn rho(&self, window: &Region) -> Result<&CMatrix> {
        self.rho.get(window).ok_or_else(|| Error::MissingWindow(window.clone()))
    }

    pub fn support(&self, window: &Region, settings: &Settings) -> Result<Projector> {
        Ok(support_projection(self.rho(window)?, window, self.site_dim, settings.rank, settings.tol))
    }

    /// `‖Tr_{Ξ∖Λ} ρ_Ξ − ρ_Λ‖` for every stored pair `Λ ⊊ Ξ`.
    pub fn marginal_residuals(&self) -> Result<Vec<PairResidual>> {
        let ws: Vec<&Region> = self.rho.keys().collect();
        let mut pairs = Vec::new();
        for a in &ws {
            for b in &ws {
                if a != b && a.is_subset(b) {
                    pairs.push(((*a).clone(), (*b).clone()));
                }
            }
        }
        pairs
            .par_iter()
            .map(|(a, b)| {
                let split = LegSplit::between(a, b, self.site_dim)?;
                let reduced = split.partial_trace(&self.rho[b]);
                Ok(PairResidual { pair: (a.clone(), b.clone()), value: op_norm(&(reduced - &self.rho[a])) })
            })
            .collect()
    }

    pub fn check_marginals(&self, tol: f64) -> Result<()> {
        for r in self.marginal_residuals()? {
            if r.value > tol {
                return Err(Error::MarginalInconsistent { inner: r.pair.0, outer: r.pair.1, residual: r.value });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> WindowStateJson {
        WindowStateJson {
            site_dim: self.site_dim,
            windows: self
                .rho
                .iter()
                .map(|(w, r)| WindowDensityJson { region: w.clone(), matrix: MatrixJson::from_matrix(r) })
                .collect(),
        }
    }

    pub fn from_json(json: &WindowStateJson, tol: f64) -> Result<Self> {
        let rho = json
            .windows
            .iter()
            .map(|w| Ok((w.region.clone(), w.matrix.to_matrix()?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(json.site_dim, rho, tol)
    }
}

fn same_windows<'a>(a: impl Iterator<Item = &'a Region>, b: impl Iterator<Item = &'a Region>) -> Result<()> {
    if !a.eq(b) {
        return Err(Error::WindowMismatch);
    }
    Ok(())
}

/// Localized approximate unit of the hereditary subalgebra of a state,
/// with the finite truncation `w_N = Σ_{m≤N} 2^{−m} p_{Λ_m}` on a ladder.
#[derive(Clone, Debug)]
pub struct HereditaryTruncation {
    site_dim: usize,
    units: BTreeMap<Region, Projector>,
    ladder: Vec<Region>,
    monotonicity_residual: f64,
    tol: f64,
}

/// Chain of windows: start from the smallest, then repeatedly take the
/// smallest window strictly containing the current one.
pub fn greedy_ladder<'a>(windows: impl Iterator<Item = &'a Region>) -> Vec<Region> {
    let mut ws: Vec<&Region> = windows.collect();
    ws.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    let Some(first) = ws.first() else { return Vec::new() };
    let mut ladder = vec![(*first).clone()];
    while let Some(next) = ws.iter().find(|w| w.len() > ladder.last().unwrap().len() && ladder.last().unwrap().is_subset(w)) {
        ladder.push((*next).clone());
    }
    ladder
}

impl HereditaryTruncation {
    pub fn units(&self) -> &BTreeMap<Region, Projector> {
        &self.units
    }

    pub fn unit(&self, window: &Region) -> Result<&Projector> {
        self.units.get(window).ok_or_else(|| Error::MissingWindow(window.clone()))
    }

    pub fn ladder(&self) -> &[Region] {
        &self.ladder
    }

    /// Largest `‖(p_Λ ⊗ 1)(1 − p_Ξ)‖` over nested windows.
    pub fn monotonicity_residual(&self) -> f64 {
        self.monotonicity_residual
    }

    pub fn monotone(&self) -> bool {
        self.monotonicity_residual <= self.tol
    }

    pub fn as_system(&self) -> Result<FfSystem> {
        FfSystem::new(self.site_dim, self.units.values().cloned())
    }

    /// `w_depth` on the `depth`-th ladder window.
    pub fn truncation(&self, depth: usize, settings: &Settings) -> Result<LocalOperator> {
        if depth == 0 || depth > self.ladder.len() {
            return Err(Error::Invalid(format!("depth {depth} outside 1..={}", self.ladder.len())));
        }
        let top = &self.ladder[depth - 1];
        let dim = hilbert_dim(self.site_dim, top.len(), settings.max_dim)?;
        let mut w = CMatrix::zeros(dim, dim);
        for (m, lam) in self.ladder[..depth].iter().enumerate() {
            let split = LegSplit::between(lam, top, self.site_dim)?;
            let weight = C64::new(0.5f64.powi(m as i32 + 1), 0.0);
            split.add_embedded(self.units[lam].matrix(), weight, &mut w);
        }
        LocalOperator::new(w, top, self.site_dim)
    }

    pub fn w(&self, settings: &Settings) -> Result<LocalOperator> {
        self.truncation(self.ladder.len(), settings)
    }
}

/// `p_Λ(B) = 1 − supp ρ_Λ` on every window, after checking marginal
/// consistency.
pub fn localized_unit(omega: &WindowState, settings: &Settings) -> Result<HereditaryTruncation> {
    omega.check_marginals(settings.tol)?;
    let units: BTreeMap<Region, Projector> = omega
        .rho
        .par_iter()
        .map(|(w, _)| Ok((w.clone(), omega.support(w, settings)?.complement())))
        .collect::<Result<_>>()?;
    let sys = FfSystem::new(omega.site_dim, units.values().cloned())?;
    let monotonicity_residual = sys
        .nested_pairs()
        .par_iter()
        .map(|(a, b)| nesting_residual(&units[a], &units[b]))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let ladder = greedy_ladder(units.keys());
    Ok(HereditaryTruncation { site_dim: omega.site_dim, units, ladder, monotonicity_residual, tol: settings.tol })
}

/// Distance (Hilbert–Schmidt) from `w_depth` of `truncation` to the span of
/// the corners `q_m S_{Λ_m} q_m ⊗ 1` of `presentation` along the first
/// `depth` ladder windows. Computed by cycling the orthogonal projections
/// onto the complements of the corners until the iterate stops moving.
pub fn property_f_residual(
    truncation: &HereditaryTruncation,
    presentation: &BTreeMap<Region, Projector>,
    depth: usize,
    settings: &Settings,
) -> Result<f64> {
    let w = truncation.truncation(depth, settings)?;
    let top = w.region().clone();
    let corners: Vec<(LegSplit, &CMatrix)> = truncation.ladder[..depth]
        .iter()
        .map(|lam| {
            let q = presentation.get(lam).ok_or_else(|| Error::MissingWindow(lam.clone()))?;
            Ok((LegSplit::between(lam, &top, truncation.site_dim)?, q.matrix()))
        })
        .collect::<Result<_>>()?;
    let scale = hs_norm(w.matrix()).max(1.0);
    let mut x = w.into_matrix();
    for _ in 0..10_000 {
        let before = x.clone();
        for (split, q) in &corners {
            let inner = *q * split.partial_trace(&x) * *q / C64::new(split.rest_dim() as f64, 0.0);
            split.add_embedded(&inner, -ONE, &mut x);
        }
        if hs_norm(&(&x - before)) <= 1e-15 * scale {
            break;
        }
    }
    Ok(hs_norm(&x))
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateReport {
    /// `Tr(ρ_Λ p_Λ) ≤ tol` on every window.
    pub ok: bool,
    /// `supp ρ_Λ ≤ p_Λ^⊥` on every window.
    pub support_ok: bool,
    pub worst_trace: f64,
    pub worst_support: f64,
}

pub fn is_ff_ground_state(omega: &WindowState, sys: &FfSystem, settings: &Settings) -> Result<GroundStateReport> {
    same_windows(omega.windows(), sys.windows())?;
    let rows = sys
        .projectors()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|p| {
            let rho = omega.rho(p.region())?;
            let tr = p.apply(rho).trace().re;
            let s = omega.support(p.region(), settings)?;
            Ok((tr, op_norm(&p.apply(&s.range_basis()))))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_trace = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_support = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(GroundStateReport {
        ok: worst_trace <= settings.tol,
        support_ok: worst_support <= settings.tol,
        worst_trace,
        worst_support,
    })
}

/// `supp ρ^ω_Λ ≤ supp ρ^η_Λ` on every window.
pub fn support_leq(omega: &WindowState, eta: &WindowState, settings: &Settings) -> Result<bool> {
    same_windows(omega.windows(), eta.windows())?;
    for w in omega.windows() {
        if !leq(&omega.support(w, settings)?, &eta.support(w, settings)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `‖p^⊥ ã p^⊥ − ω_Λ(ã) p^⊥‖` with `ω_Λ(ã) = Tr(ã p^⊥) / rank p^⊥`.
pub fn ltqo_norm(sys: &FfSystem, a: &LocalOperator, lambda: &Region) -> Result<f64> {
    let p = sys.projector(lambda)?;
    let k = p.kernel_basis();
    let r = k.ncols();
    if r == 0 {
        return Err(Error::EmptyKernel(lambda.clone()));
    }
    let m = k.adjoint() * a.apply_within(lambda, &k)?;
    let omega = m.trace() / C64::new(r as f64, 0.0);
    Ok(op_norm(&(m - identity(r) * omega)))
}

/// `a` translated so that its bounding box sits at the center of `window`.
pub fn centered(a: &LocalOperator, window: &Region) -> Result<LocalOperator> {
    let (alo, ahi) = a.region().bounding_box().ok_or_else(|| Error::InvalidRegion("empty observable".into()))?;
    let (wlo, whi) = window.bounding_box().ok_or_else(|| Error::InvalidRegion("empty window".into()))?;
    let g: Site = (0..alo.len())
        .map(|k| {
            let center = (wlo[k] + whi[k]).div_euclid(2);
            center - (ahi[k] - alo[k]) / 2 - alo[k]
        })
        .collect();
    Ok(a.translated(&g))
}

#[derive(Clone, Debug, Serialize)]
pub struct LtqoRow {
    pub window: Region,
    pub window_size: usize,
    pub observable_id: String,
    pub norm: f64,
    pub corank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LtqoTable {
    pub rows: Vec<LtqoRow>,
    /// Corank of `p_Λ` along the ladder.
    pub coranks: Vec<usize>,
    /// Heuristic: corank 1 on every rung.
    pub unique_state_indicator: bool,
}

/// LTQO norms of each observable, centered in each ladder window.
pub fn ltqo_scan(sys: &FfSystem, observables: &[(String, LocalOperator)], ladder: &[Region]) -> Result<LtqoTable> {
    for pair in ladder.windows(2) {
        if !(pair[0].is_subset(&pair[1]) && pair[0] != pair[1]) {
            return Err(Error::Invalid(format!("ladder is not increasing at {}", pair[1])));
        }
    }
    let mut jobs = Vec::new();
    for w in ladder {
        for (id, a) in observables {
            jobs.push((w, id, a));
        }
    }
    let rows = jobs
        .par_iter()
        .map(|(w, id, a)| {
            let placed = centered(a, w)?;
            Ok(LtqoRow {
                window: (*w).clone(),
                window_size: w.len(),
                observable_id: (*id).clone(),
                norm: ltqo_norm(sys, &placed, w)?,
                corank: sys.projector(w)?.corank(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let coranks = ladder.iter().map(|w| sys.projector(w).map(|p| p.corank())).collect::<Result<Vec<_>>>()?;
    let unique_state_indicator = !coranks.is_empty() && coranks.iter().all(|&c| c == 1);
    Ok(LtqoTable { rows, coranks, unique_state_indicator })
}
