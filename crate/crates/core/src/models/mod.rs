//! Constructions of frustration-free systems and the declarative model
//! description read from config files.

pub mod fixtures;
pub mod mps;
pub mod vbs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffsys::{system_join, system_meet, FfSystem};
use crate::hamiltonian::{supporting_system, Interaction};
use crate::linalg::{kron, CMatrix, CVector};
use crate::random::{random_projector, rng};
use crate::region::{hilbert_dim, Region};
use crate::serial;
use crate::settings::Settings;
use crate::subspace::{LocalOperator, Projector};

pub use fixtures::{fixture, fixtures, Fixture};
pub use mps::{aklt_spec, mps_gamma, mps_gamma_matrix, mps_injectivity_length, mps_system, mps_system_on, MpsSpec};
pub use vbs::{lambda_b, lambda_t, vbs_amplitude, vbs_subspace, vbs_system, VbsSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub site_dim: usize,
    #[serde(with = "serial::vector")]
    pub psi: CVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub site_dim: usize,
    pub range: Region,
    #[serde(with = "serial::matrix")]
    pub q: CMatrix,
}

/// A model as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// A bundled fixture, looked up by name.
    Fixture { name: String },
    Vbs(VbsSpec),
    /// Gaussian valence-bond spec on `Z^lattice_dim` with generators
    /// `{0, e_1, …}`.
    RandomVbs { lattice_dim: usize, site_dim: usize, index_size: usize, seed: u64 },
    Mps(MpsSpec),
    Product(ProductSpec),
    /// Supporting projections of the Hamiltonians built from `q`.
    Interaction(InteractionSpec),
    /// Interaction given by a Haar-random projector of the stated rank.
    RandomInteraction { site_dim: usize, range: Region, rank: usize, seed: u64 },
    Meet { left: Box<ModelSpec>, right: Box<ModelSpec> },
    Join { left: Box<ModelSpec>, right: Box<ModelSpec> },
}

impl ModelSpec {
    /// Replace fixture references by their definitions.
    pub fn resolve(&self) -> Result<ModelSpec> {
        Ok(match self {
            ModelSpec::Fixture { name } => fixture(name)?.spec.resolve()?,
            ModelSpec::Meet { left, right } => {
                ModelSpec::Meet { left: Box::new(left.resolve()?), right: Box::new(right.resolve()?) }
            }
            ModelSpec::Join { left, right } => {
                ModelSpec::Join { left: Box::new(left.resolve()?), right: Box::new(right.resolve()?) }
            }
            other => other.clone(),
        })
    }

    pub fn site_dim(&self) -> Result<usize> {
        Ok(match self {
            ModelSpec::Fixture { .. } => self.resolve()?.site_dim()?,
            ModelSpec::Vbs(v) => v.site_dim,
            ModelSpec::RandomVbs { site_dim, .. } => *site_dim,
            ModelSpec::Mps(m) => m.site_dim,
            ModelSpec::Product(p) => p.site_dim,
            ModelSpec::Interaction(i) => i.site_dim,
            ModelSpec::RandomInteraction { site_dim, .. } => *site_dim,
            ModelSpec::Meet { left, right } | ModelSpec::Join { left, right } => {
                let (a, b) = (left.site_dim()?, right.site_dim()?);
                if a != b {
                    return Err(Error::DimensionMismatch { expected: a, found: b });
                }
                a
            }
        })
    }

    /// The interaction behind interaction-type models, if any.
    pub fn interaction(&self, settings: &Settings) -> Result<Option<Interaction>> {
        match self.resolve()? {
            ModelSpec::Interaction(i) => {
                let q = LocalOperator::new(i.q.clone(), &i.range, i.site_dim)?;
                Ok(Some(Interaction::new(q, settings.tol)?))
            }
            ModelSpec::RandomInteraction { site_dim, range, rank, seed } => {
                hilbert_dim(site_dim, range.len(), settings.max_dim)?;
                let p = random_projector(&mut rng(seed), &range, site_dim, rank, settings.tol);
                Ok(Some(Interaction::from_projector(&p)))
            }
            _ => Ok(None),
        }
    }

    /// Build the system on every window of `bbox` the model provides.
    pub fn build(&self, bbox: &Region, settings: &Settings) -> Result<FfSystem> {
        let spec = self.resolve()?;
        let sys = match &spec {
            ModelSpec::Fixture { .. } => unreachable!("resolved"),
            ModelSpec::Vbs(v) => vbs_system(bbox, v, settings)?,
            ModelSpec::RandomVbs { lattice_dim, site_dim, index_size, seed } => {
                let v = VbsSpec::random(&mut rng(*seed), *lattice_dim, *site_dim, *index_size);
                vbs_system(bbox, &v, settings)?
            }
            ModelSpec::Mps(m) => {
                m.validate(settings)?;
                mps_system_on(bbox, m, settings)?
            }
            ModelSpec::Product(p) => {
                if p.psi.len() != p.site_dim {
                    return Err(Error::DimensionMismatch { expected: p.site_dim, found: p.psi.len() });
                }
                product_system(&p.psi, bbox, settings)?
            }
            ModelSpec::Interaction(_) | ModelSpec::RandomInteraction { .. } => {
                let q = spec.interaction(settings)?.expect("interaction model");
                supporting_system(&q, bbox, settings)?
            }
            ModelSpec::Meet { left, right } => {
                system_meet(&left.build(bbox, settings)?, &right.build(bbox, settings)?, settings.rank)?
            }
            ModelSpec::Join { left, right } => {
                system_join(&left.build(bbox, settings)?, &right.build(bbox, settings)?, settings.rank)?
            }
        };
        Ok(sys.with_generator(spec))
    }
}

/// `ψ₀^{⊗Λ}` for a normalized `ψ₀`.
pub fn product_vector(psi0: &CVector, n: usize) -> CMatrix {
    let unit = psi0.unscale(psi0.norm());
    let col = CMatrix::from_column_slice(unit.len(), 1, unit.as_slice());
    (0..n).fold(CMatrix::from_element(1, 1, crate::linalg::ONE), |acc, _| kron(&acc, &col))
}

/// `p_Λ = 1 − |ψ₀^{⊗Λ}⟩⟨ψ₀^{⊗Λ}|` on every box inside `bbox`.
pub fn product_system(psi0: &CVector, bbox: &Region, settings: &Settings) -> Result<FfSystem> {
    if psi0.is_empty() || psi0.norm() == 0.0 {
        return Err(Error::InvalidSpec("product vector must be nonzero".into()));
    }
    let d = psi0.len();
    let projectors = bbox
        .sub_boxes()
        .par_iter()
        .map(|w| {
            hilbert_dim(d, w.len(), settings.max_dim)?;
            Ok(Projector::from_kernel_basis(product_vector(psi0, w.len()), w, d, settings.tol))
        })
        .collect::<Result<Vec<_>>>()?;
    FfSystem::new(d, projectors)
}
