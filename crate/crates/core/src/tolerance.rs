use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every check in the crate.
///
/// `eq_tol` bounds identity defects (measured in operator or Frobenius norm,
/// scaled by `max(1, |reference|)` where a reference magnitude exists).
/// `rank_tol` is the singular-value cutoff used for every rank, span and
/// null-space decision. `sample_count` random elements are drawn for
/// sampled checks such as positivity, seeded from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub eq_tol: f64,
    pub rank_tol: f64,
    pub sample_count: usize,
    pub seed: u64,
    /// Identity checks run over a full basis up to this dimension and over
    /// `spot_checks` random elements beyond it.
    pub full_check_dim: usize,
    pub spot_checks: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eq_tol: 1e-9,
            rank_tol: 1e-10,
            sample_count: 64,
            seed: 0,
            full_check_dim: 64,
            spot_checks: 12,
        }
    }
}

impl ToleranceConfig {
    pub fn new(eq_tol: f64, rank_tol: f64, sample_count: usize) -> Result<Self> {
        let cfg = Self {
            eq_tol,
            rank_tol,
            sample_count,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eq_tol > 0.0 && self.rank_tol > 0.0) {
            return Err(Error::InvalidTolerance("tolerances must be positive".into()));
        }
        if self.sample_count == 0 {
            return Err(Error::InvalidTolerance("sample_count must be positive".into()));
        }
        if self.eq_tol <= self.rank_tol {
            return Err(Error::InvalidTolerance(format!(
                "eq_tol ({:e}) must exceed rank_tol ({:e})",
                self.eq_tol, self.rank_tol
            )));
        }
        Ok(())
    }

    /// `defect <= eq_tol * max(1, scale)`.
    pub fn close(&self, defect: f64, scale: f64) -> bool {
        defect <= self.eq_tol * scale.max(1.0)
    }

    pub fn ok(&self, defect: f64) -> bool {
        defect <= self.eq_tol
    }

    /// Deterministic generator for one named use site, derived from `seed`.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Whether identity checks over a space of dimension `dim` use the full basis.
    pub fn full_check(&self, dim: usize) -> bool {
        dim <= self.full_check_dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let t = ToleranceConfig::default();
        t.validate().unwrap();
        assert_eq!(t.sample_count, 64);
    }

    #[test]
    fn eq_tol_must_exceed_rank_tol() {
        assert!(ToleranceConfig::new(1e-12, 1e-10, 4).is_err());
        assert!(ToleranceConfig::new(1e-9, -1.0, 4).is_err());
        assert!(ToleranceConfig::new(1e-9, 1e-10, 0).is_err());
    }
}
