use serde::{Deserialize, Serialize};

use crate::linalg::RankPolicy;
use crate::region::DEFAULT_MAX_DIM;

/// Numerical knobs shared by constructors and checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Residual threshold for verification checks.
    pub tol: f64,
    pub rank: RankPolicy,
    /// Largest Hilbert space dimension any window may have.
    pub max_dim: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self { tol: 1e-9, rank: RankPolicy::default(), max_dim: DEFAULT_MAX_DIM }
    }
}

impl Settings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}
