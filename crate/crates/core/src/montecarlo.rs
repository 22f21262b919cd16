use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::kahan_sum;
use crate::rng::trial_rng;

const CHUNK: usize = 4096;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = kahan_sum(values.iter().copied()) / k;
        let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (k - 1.0).max(1.0);
        Self {
            mean,
            std_err: (var / k).sqrt(),
            samples: values.len(),
        }
    }

    /// `|mean - target| <= sigmas * std_err`.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_err
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            mean: self.mean * c,
            std_err: self.std_err * c.abs(),
            samples: self.samples,
        }
    }
}

/// Draws `samples` values of `draw`, chunk `c` using stream `c` of `seed`,
/// so the result does not depend on the number of workers.
pub fn sample_parallel<F>(samples: usize, seed: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = trial_rng(seed, c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            (0..count).map(|_| draw(&mut rng)).collect::<Vec<f64>>()
        })
        .collect()
}

pub fn estimate_parallel<F>(samples: usize, seed: u64, draw: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    McEstimate::from_samples(&sample_parallel(samples, seed, draw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn uniform_mean() {
        let est = estimate_parallel(100_000, 3, |r| r.random::<f64>());
        assert!(est.within(0.5, 4.0));
        assert!((est.std_err - (1.0 / 12.0f64 / 1e5).sqrt()).abs() < 1e-5);
        let again = estimate_parallel(100_000, 3, |r| r.random::<f64>());
        assert_eq!(est, again);
    }
}
