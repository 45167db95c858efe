use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-mean Gaussian exploration noise whose standard deviation decays
/// exponentially from `sigma_start` to `sigma_end` across episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_start: f64,
    pub sigma_end: f64,
    /// Episodes over which the decay runs; defaults to the whole run.
    #[serde(default)]
    pub decay_episodes: Option<usize>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_start: 0.2,
            sigma_end: 0.01,
            decay_episodes: None,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_start >= 0.0) || !(self.sigma_end >= 0.0) {
            return Err(Error::invalid("noise levels must be non-negative"));
        }
        if (self.sigma_start == 0.0) != (self.sigma_end == 0.0) {
            return Err(Error::invalid(
                "exponential decay needs both noise levels positive or both zero",
            ));
        }
        Ok(())
    }

    /// Standard deviation used throughout `episode` (zero-based).
    pub fn sigma(&self, episode: usize, total_episodes: usize) -> f64 {
        let span = self.decay_episodes.unwrap_or(total_episodes);
        if self.sigma_start == 0.0 || span <= 1 {
            return self.sigma_end;
        }
        if episode + 1 >= span {
            return self.sigma_end;
        }
        let frac = episode as f64 / (span - 1) as f64;
        self.sigma_start * (self.sigma_end / self.sigma_start).powf(frac)
    }
}

/// Adds `N(0, sigma^2)` to every entry and clamps into `[0, 1]`.
pub fn perturb<R: Rng + ?Sized>(action: &mut [f64], sigma: f64, rng: &mut R) {
    for a in action.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *a = (*a + sigma * z).clamp(0.0, 1.0);
    }
}
