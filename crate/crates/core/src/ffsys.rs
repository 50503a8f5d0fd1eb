//! Frustration-free systems of projections over a finite window family.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::RankPolicy;
use crate::models::ModelSpec;
use crate::region::{Region, Site};
use crate::subspace::{join, leq, meet, nesting_residual, Projector};

/// A family `Λ ↦ p_Λ` over a finite set of windows, stored eagerly.
#[derive(Clone, Debug)]
pub struct FfSystem {
    site_dim: usize,
    projectors: BTreeMap<Region, Projector>,
    generator: Option<ModelSpec>,
}

impl FfSystem {
    pub fn new(site_dim: usize, projectors: impl IntoIterator<Item = Projector>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for p in projectors {
            if p.site_dim() != site_dim {
                return Err(Error::DimensionMismatch { expected: site_dim, found: p.site_dim() });
            }
            if map.insert(p.region().clone(), p).is_some() {
                return Err(Error::Invalid("window stored twice".into()));
            }
        }
        Ok(Self { site_dim, projectors: map, generator: None })
    }

    pub fn with_generator(mut self, spec: ModelSpec) -> Self {
        self.generator = Some(spec);
        self
    }

    pub fn generator(&self) -> Option<&ModelSpec> {
        self.generator.as_ref()
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn windows(&self) -> impl Iterator<Item = &Region> {
        self.projectors.keys()
    }

    pub fn projectors(&self) -> impl Iterator<Item = &Projector> {
        self.projectors.values()
    }

    pub fn get(&self, window: &Region) -> Option<&Projector> {
        self.projectors.get(window)
    }

    pub fn projector(&self, window: &Region) -> Result<&Projector> {
        self.get(window).ok_or_else(|| Error::MissingWindow(window.clone()))
    }

    /// Overwrite the projector stored for its window.
    pub fn replace(&mut self, p: Projector) -> Result<()> {
        if !self.projectors.contains_key(p.region()) {
            return Err(Error::MissingWindow(p.region().clone()));
        }
        self.projectors.insert(p.region().clone(), p);
        Ok(())
    }

    /// All stored pairs `Λ₁ ⊊ Λ₂`, in window order.
    pub fn nested_pairs(&self) -> Vec<(Region, Region)> {
        let ws: Vec<&Region> = self.windows().collect();
        let mut out = Vec::new();
        for a in &ws {
            for b in &ws {
                if a != b && a.is_subset(b) {
                    out.push(((*a).clone(), (*b).clone()));
                }
            }
        }
        out
    }

    fn same_windows(&self, other: &FfSystem) -> Result<()> {
        if self.site_dim != other.site_dim || !self.windows().eq(other.windows()) {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairResidual {
    /// `[inner, outer]`.
    pub pair: (Region, Region),
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FfReport {
    pub ok: bool,
    pub tol: f64,
    pub worst_pair: Option<(Region, Region)>,
    pub worst_residual: f64,
    pub residuals: Vec<PairResidual>,
}

fn summarize(residuals: Vec<PairResidual>, tol: f64) -> FfReport {
    let worst = residuals
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .map(|r| (r.pair.clone(), r.value));
    let worst_residual = worst.as_ref().map_or(0.0, |w| w.1);
    FfReport {
        ok: worst_residual <= tol && residuals.iter().all(|r| r.value.is_finite()),
        tol,
        worst_pair: worst.map(|w| w.0),
        worst_residual,
        residuals,
    }
}

/// Evaluate `‖(p_{Λ₁} ⊗ 1) p_{Λ₂} − p_{Λ₁} ⊗ 1‖` on every stored nested pair.
pub fn check_ff(sys: &FfSystem, tol: f64) -> FfReport {
    let pairs = sys.nested_pairs();
    let residuals: Vec<PairResidual> = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let value = nesting_residual(&sys.projectors[&a], &sys.projectors[&b]).unwrap_or(f64::INFINITY);
            PairResidual { pair: (a, b), value }
        })
        .collect();
    summarize(residuals, tol)
}

/// Windows on which `p_Λ = 1`.
pub fn improper_windows(sys: &FfSystem) -> Vec<Region> {
    sys.projectors().filter(|p| p.corank() == 0).map(|p| p.region().clone()).collect()
}

/// Whether `p_Λ < 1` on every window.
pub fn check_proper(sys: &FfSystem) -> bool {
    improper_windows(sys).is_empty()
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftResidual {
    pub window: Region,
    pub shift: Site,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceReport {
    pub ok: bool,
    pub tol: f64,
    pub worst_residual: f64,
    pub residuals: Vec<ShiftResidual>,
}

/// Compare the translate of `p_Λ` with the stored `p_{Λ+g}` for every window
/// whose translate is stored. A nonzero shift that matches no stored pair is
/// an error.
pub fn check_equivariance(sys: &FfSystem, shifts: &[Site], tol: f64) -> Result<EquivarianceReport> {
    let mut residuals = Vec::new();
    for g in shifts {
        let mut found = false;
        for (w, p) in &sys.projectors {
            let target = w.translate(g);
            let Some(q) = sys.get(&target) else { continue };
            found = true;
            let value = p.translated(g).distance(q)?;
            residuals.push(ShiftResidual { window: w.clone(), shift: g.clone(), value });
        }
        if !found && g.iter().any(|&x| x != 0) {
            return Err(Error::Invalid(format!("no stored window has its translate by {g:?} stored")));
        }
    }
    let worst_residual = residuals.iter().map(|r| r.value).fold(0.0, f64::max);
    Ok(EquivarianceReport { ok: worst_residual <= tol, tol, worst_residual, residuals })
}

fn windowwise(
    s1: &FfSystem,
    s2: &FfSystem,
    op: impl Fn(&Projector, &Projector) -> Result<Projector> + Sync,
) -> Result<FfSystem> {
    s1.same_windows(s2)?;
    let pairs: Vec<(&Projector, &Projector)> = s1.projectors.values().zip(s2.projectors.values()).collect();
    let out: Result<Vec<Projector>> = pairs.into_par_iter().map(|(a, b)| op(a, b)).collect();
    FfSystem::new(s1.site_dim, out?)
}

/// Windowwise meet `{p¹_Λ ∧ p²_Λ}`.
pub fn system_meet(s1: &FfSystem, s2: &FfSystem, policy: RankPolicy) -> Result<FfSystem> {
    windowwise(s1, s2, |a, b| meet(a, b, policy))
}

/// Windowwise join `{p¹_Λ ∨ p²_Λ}`.
pub fn system_join(s1: &FfSystem, s2: &FfSystem, policy: RankPolicy) -> Result<FfSystem> {
    windowwise(s1, s2, |a, b| join(a, b, policy))
}

/// `p¹_Λ ≤ p²_Λ` on every window.
pub fn system_leq(s1: &FfSystem, s2: &FfSystem) -> Result<bool> {
    s1.same_windows(s2)?;
    for (a, b) in s1.projectors.values().zip(s2.projectors.values()) {
        if !leq(a, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}
