use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::{outcome_distribution, Outcome};

/// Outcomes of `μ` independent trials of the local measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub outcomes: Vec<Outcome>,
    pub gamma: f64,
    pub true_theta: [f64; 2],
}

impl MeasurementRecord {
    pub fn empty(gamma: f64, true_theta: [f64; 2]) -> Self {
        MeasurementRecord {
            outcomes: Vec::new(),
            gamma,
            true_theta,
        }
    }

    pub fn mu(&self) -> usize {
        self.outcomes.len()
    }

    /// Occurrences of each outcome, ordered as [`Outcome::ALL`]. The
    /// likelihood of a record depends on nothing else.
    pub fn counts(&self) -> [u64; 4] {
        let mut c = [0u64; 4];
        for o in &self.outcomes {
            c[o.index()] += 1;
        }
        c
    }
}

/// Generator for Monte Carlo stream `stream` under `seed`. ChaCha is
/// counter-based, so streams are independent and reproducible regardless of
/// evaluation order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Categorical sampler over the four outcomes at fixed phases.
#[derive(Debug, Clone, Copy)]
pub struct OutcomeSampler {
    cumulative: [f64; 3],
}

impl OutcomeSampler {
    pub fn new(true_theta: [f64; 2], gamma: f64) -> Self {
        let p = outcome_distribution(true_theta, gamma);
        let total: f64 = p.iter().sum();
        let c0 = p[0] / total;
        let c1 = c0 + p[1] / total;
        let c2 = c1 + p[2] / total;
        OutcomeSampler {
            cumulative: [c0, c1, c2],
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        let u: f64 = rng.random();
        let i = self.cumulative.iter().take_while(|&&c| u >= c).count();
        Outcome::ALL[i]
    }
}

/// Draws `mu` i.i.d. outcomes at `true_theta`; identical for identical seeds.
pub fn simulate_record(gamma: f64, true_theta: [f64; 2], mu: usize, seed: u64) -> MeasurementRecord {
    let mut rng = stream_rng(seed, 0);
    let sampler = OutcomeSampler::new(true_theta, gamma);
    MeasurementRecord {
        outcomes: (0..mu).map(|_| sampler.draw(&mut rng)).collect(),
        gamma,
        true_theta,
    }
}
