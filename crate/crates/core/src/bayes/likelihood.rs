//! Outcome probabilities of the local two-sensor measurement with elements
//! `|n,k> = [|0> + (-1)^n |1>] ⊗ [|0> + (-1)^k |1>] / 2` on the encoded
//! `γ`-state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// One outcome `(n, k)` of the local measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub n: u8,
    pub k: u8,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome { n: 0, k: 0 },
        Outcome { n: 0, k: 1 },
        Outcome { n: 1, k: 0 },
        Outcome { n: 1, k: 1 },
    ];

    pub fn new(n: u8, k: u8) -> Option<Self> {
        (n <= 1 && k <= 1).then_some(Outcome { n, k })
    }

    /// Position in [`Outcome::ALL`].
    #[inline]
    pub fn index(self) -> usize {
        2 * self.n as usize + self.k as usize
    }

    /// The phases `x_± = [θ_1 ± θ_2 ± π(k ± n)] / 2`.
    #[inline]
    fn phases(self, theta: [f64; 2]) -> (f64, f64) {
        let (n, k) = (self.n as f64, self.k as f64);
        let plus = 0.5 * (theta[0] + theta[1] + PI * (k + n));
        let minus = 0.5 * (theta[0] - theta[1] - PI * (k - n));
        (plus, minus)
    }
}

/// `p(n, k | θ) = [cos x_+ + γ cos x_-]² / [2(1 + γ²)]`.
#[inline]
pub fn likelihood_single(outcome: Outcome, theta: [f64; 2], gamma: f64) -> f64 {
    let (xp, xm) = outcome.phases(theta);
    let amp = xp.cos() + gamma * xm.cos();
    amp * amp / (2.0 * (1.0 + gamma * gamma))
}

/// All four outcome probabilities, ordered as [`Outcome::ALL`].
pub fn outcome_distribution(theta: [f64; 2], gamma: f64) -> [f64; 4] {
    Outcome::ALL.map(|o| likelihood_single(o, theta, gamma))
}

/// Unnormalised amplitude `cos x_+ + γ cos x_-` and its gradient; the
/// probability is `amp² / [2(1 + γ²)]`.
#[inline]
pub fn amplitude_with_gradient(outcome: Outcome, theta: [f64; 2], gamma: f64) -> (f64, [f64; 2]) {
    let (xp, xm) = outcome.phases(theta);
    let (sp, sm) = (xp.sin(), gamma * xm.sin());
    (xp.cos() + gamma * xm.cos(), [-0.5 * (sp + sm), -0.5 * (sp - sm)])
}

/// Probability and its gradient with respect to `(θ_1, θ_2)`.
#[inline]
pub fn likelihood_with_gradient(outcome: Outcome, theta: [f64; 2], gamma: f64) -> (f64, [f64; 2]) {
    let (xp, xm) = outcome.phases(theta);
    let norm = 2.0 * (1.0 + gamma * gamma);
    let amp = xp.cos() + gamma * xm.cos();
    let (sp, sm) = (xp.sin(), gamma * xm.sin());
    // d(amp)/dθ_1 = -(sin x_+ + γ sin x_-)/2, d(amp)/dθ_2 = -(sin x_+ - γ sin x_-)/2
    let g1 = -amp * (sp + sm) / norm;
    let g2 = -amp * (sp - sm) / norm;
    (amp * amp / norm, [g1, g2])
}
