use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat prior `1/Δ0` on the hyper-rectangle `center ± widths/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior", into = "RawPrior")]
pub struct PriorBox {
    center: Vec<f64>,
    widths: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPrior {
    center: Vec<f64>,
    widths: Vec<f64>,
}

impl TryFrom<RawPrior> for PriorBox {
    type Error = Error;
    fn try_from(raw: RawPrior) -> Result<Self> {
        PriorBox::new(raw.center, raw.widths)
    }
}

impl From<PriorBox> for RawPrior {
    fn from(p: PriorBox) -> Self {
        RawPrior {
            center: p.center,
            widths: p.widths,
        }
    }
}

impl PriorBox {
    pub fn new(center: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("prior", "needs at least one parameter"));
        }
        if center.len() != widths.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                actual: widths.len(),
            });
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("prior", "center must be finite"));
        }
        if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("prior", "widths must be positive"));
        }
        Ok(PriorBox { center, widths })
    }

    /// The square `[0, π/2]²`, area `π²/4`, centred at `(π/4, π/4)`.
    pub fn quarter_period_2d() -> Self {
        PriorBox::new(vec![FRAC_PI_4; 2], vec![FRAC_PI_2; 2]).expect("valid box")
    }

    /// One full period `[0, 2π]²`.
    pub fn full_period_2d() -> Self {
        PriorBox::new(vec![PI; 2], vec![2.0 * PI; 2]).expect("valid box")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Hypervolume `Δ0 = Π W_i`.
    pub fn volume(&self) -> f64 {
        self.widths.iter().product()
    }

    pub fn density(&self) -> f64 {
        1.0 / self.volume()
    }

    pub fn lower(&self, i: usize) -> f64 {
        self.center[i] - 0.5 * self.widths[i]
    }

    pub fn upper(&self, i: usize) -> f64 {
        self.center[i] + 0.5 * self.widths[i]
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && (0..self.dim()).all(|i| theta[i] >= self.lower(i) && theta[i] <= self.upper(i))
    }

    /// Prior covariance of the parameters: `diag(W_i² / 12)`.
    pub fn variances(&self) -> Vec<f64> {
        self.widths.iter().map(|w| w * w / 12.0).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.lower(i) + self.widths[i] * rng.random::<f64>())
            .collect()
    }
}
