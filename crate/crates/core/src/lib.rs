//! Numerical workbench for frustration-free systems of projections on finite
//! windows of the lattice `Z^d`.
//!
//! The crate builds families `Λ ↦ p_Λ` of orthogonal projectors (from
//! valence-bond and matrix-product constructions, product states, or the
//! supporting projections of local Hamiltonians), verifies the nesting
//! relation `p_{Λ₁} p_{Λ₂} = p_{Λ₁}` for `Λ₁ ⊆ Λ₂`, and analyzes ground
//! states, hereditary truncations, local topological order and half-lattice
//! boundary algebras on those windows.

pub mod boundary;
pub mod error;
pub mod ffsys;
pub mod hamiltonian;
pub mod legs;
pub mod linalg;
pub mod models;
pub mod random;
pub mod region;
pub mod runner;
pub mod serial;
pub mod settings;
pub mod states;
pub mod subspace;

pub use error::{Error, Result};
pub use ffsys::FfSystem;
pub use linalg::{CMatrix, CVector, RankPolicy, C64};
pub use region::{HalfLatticeRegion, Region};
pub use settings::Settings;
pub use subspace::{LocalOperator, Projector};
