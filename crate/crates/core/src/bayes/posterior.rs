use nalgebra::DVector;

use super::likelihood::{likelihood_single, Outcome};
use super::prior::PriorBox;
use super::record::{simulate_record, MeasurementRecord};
use crate::error::{Error, Result};
use crate::functions::LinearFunctionSet;

/// Default grid resolution per axis.
pub const DEFAULT_RESOLUTION: usize = 200;

/// Cells whose log-posterior sits this far below the maximum contribute less
/// than `e^-745` and are skipped.
const LOG_UNDERFLOW: f64 = -745.0;

/// Relative slack when comparing a cell against its neighbours in the peak finder.
const PEAK_TIE_TOLERANCE: f64 = 1e-9;

/// Log-likelihood of each outcome at the midpoints of a `g × g` grid over a
/// two-parameter prior box. A record only enters through its outcome counts,
/// so one table serves every posterior for the same strategy and box.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    lower: [f64; 2],
    step: [f64; 2],
    resolution: usize,
    log_lik: [Vec<f64>; 4],
}

impl LikelihoodTable {
    pub fn new(gamma: f64, prior: &PriorBox, resolution: usize) -> Result<Self> {
        check_box(prior)?;
        if resolution < 2 {
            return Err(Error::invalid("resolution", "need at least 2 cells per axis"));
        }
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        let lower = [prior.lower(0), prior.lower(1)];
        let step = [
            prior.widths()[0] / resolution as f64,
            prior.widths()[1] / resolution as f64,
        ];
        let log_lik = Outcome::ALL.map(|o| {
            let mut v = Vec::with_capacity(resolution * resolution);
            for i in 0..resolution {
                let t1 = lower[0] + (i as f64 + 0.5) * step[0];
                for j in 0..resolution {
                    let t2 = lower[1] + (j as f64 + 0.5) * step[1];
                    v.push(likelihood_single(o, [t1, t2], gamma).ln());
                }
            }
            v
        });
        Ok(LikelihoodTable {
            lower,
            step,
            resolution,
            log_lik,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Unnormalised log-posterior into `out`; returns its maximum.
    fn log_posterior_into(&self, counts: &[u64; 4], out: &mut Vec<f64>) -> Result<f64> {
        let cells = self.resolution * self.resolution;
        out.clear();
        out.resize(cells, 0.0);
        for (c, table) in counts.iter().zip(&self.log_lik) {
            if *c == 0 {
                continue;
            }
            let c = *c as f64;
            for (acc, l) in out.iter_mut().zip(table) {
                *acc += c * l;
            }
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY || max.is_nan() {
            return Err(Error::ZeroPosterior);
        }
        Ok(max)
    }

    /// Normalised posterior density for a record summarised by its counts.
    pub fn posterior(&self, counts: &[u64; 4]) -> Result<PosteriorGrid> {
        let mut values = Vec::new();
        let max = self.log_posterior_into(counts, &mut values)?;
        let mut total = 0.0;
        for v in values.iter_mut() {
            let x = *v - max;
            *v = if x < LOG_UNDERFLOW { 0.0 } else { x.exp() };
            total += *v;
        }
        let norm = 1.0 / (total * self.step[0] * self.step[1]);
        values.iter_mut().for_each(|v| *v *= norm);
        Ok(PosteriorGrid {
            lower: self.lower,
            step: self.step,
            resolution: self.resolution,
            values,
        })
    }

    /// Posterior mean and covariance without materialising the grid.
    /// `scratch` is reused between calls to avoid reallocating.
    pub fn moments(&self, counts: &[u64; 4], scratch: &mut Vec<f64>) -> Result<PosteriorMoments> {
        let max = self.log_posterior_into(counts, scratch)?;
        let g = self.resolution;
        // Accumulate relative to the box centre to limit cancellation.
        let half = [0.5 * g as f64 * self.step[0], 0.5 * g as f64 * self.step[1]];
        let mut s = [0.0f64; 6]; // weight, x, y, xx, xy, yy
        for i in 0..g {
            let x = (i as f64 + 0.5) * self.step[0] - half[0];
            let row = &scratch[i * g..(i + 1) * g];
            let mut r = [0.0f64; 3]; // weight, Σw·y, Σw·y²
            for (j, lp) in row.iter().enumerate() {
                let e = lp - max;
                if e < LOG_UNDERFLOW {
                    continue;
                }
                let w = e.exp();
                let y = (j as f64 + 0.5) * self.step[1] - half[1];
                r[0] += w;
                r[1] += w * y;
                r[2] += w * y * y;
            }
            s[0] += r[0];
            s[1] += r[0] * x;
            s[2] += r[1];
            s[3] += r[0] * x * x;
            s[4] += r[1] * x;
            s[5] += r[2];
        }
        let inv = 1.0 / s[0];
        let mx = s[1] * inv;
        let my = s[2] * inv;
        let centre = [self.lower[0] + half[0], self.lower[1] + half[1]];
        Ok(PosteriorMoments {
            mean: [centre[0] + mx, centre[1] + my],
            covariance: [
                [s[3] * inv - mx * mx, s[4] * inv - mx * my],
                [s[4] * inv - mx * my, s[5] * inv - my * my],
            ],
        })
    }
}

fn check_box(prior: &PriorBox) -> Result<()> {
    if prior.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: prior.dim(),
        });
    }
    if prior.widths().iter().any(|w| *w > 2.0 * std::f64::consts::PI * (1.0 + 1e-12)) {
        return Err(Error::invalid("prior", "each width must fit within one 2π period"));
    }
    Ok(())
}

/// First and second posterior moments of `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
}

/// Posterior for a measurement record on a midpoint grid over the prior box.
pub fn posterior(record: &MeasurementRecord, prior: &PriorBox, resolution: usize) -> Result<PosteriorGrid> {
    LikelihoodTable::new(record.gamma, prior, resolution)?.posterior(&record.counts())
}

/// Posterior mean mapped through the functions: `Vᵀ E[θ | m] + a`.
pub fn optimal_estimates(post: &PosteriorGrid, funcs: &LinearFunctionSet) -> Result<DVector<f64>> {
    let m = post.mean();
    funcs.evaluate(&DVector::from_column_slice(&m))
}

/// Posterior over the full period `[0, 2π]²` under a uniform prior, for a
/// record simulated at `true_theta`.
pub fn posterior_landscape(
    gamma: f64,
    true_theta: [f64; 2],
    mu: usize,
    resolution: usize,
    seed: u64,
) -> Result<PosteriorGrid> {
    let record = simulate_record(gamma, true_theta, mu, seed);
    posterior(&record, &PriorBox::full_period_2d(), resolution)
}

/// A local maximum of the posterior density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub cell: (usize, usize),
    pub theta: [f64; 2],
    pub density: f64,
}

/// Posterior density on a `g × g` midpoint grid; cell `(i, j)` is centred at
/// `(θ_1, θ_2) = lower + (i + 1/2, j + 1/2)·step`, stored row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    lower: [f64; 2],
    step: [f64; 2],
    resolution: usize,
    values: Vec<f64>,
}

impl PosteriorGrid {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn density(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution + j]
    }

    pub fn cell_area(&self) -> f64 {
        self.step[0] * self.step[1]
    }

    pub fn step(&self) -> [f64; 2] {
        self.step
    }

    /// Cell-centre coordinates along axis `axis`.
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.resolution)
            .map(|i| self.lower[axis] + (i as f64 + 0.5) * self.step[axis])
            .collect()
    }

    pub fn theta(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.lower[0] + (i as f64 + 0.5) * self.step[0],
            self.lower[1] + (j as f64 + 0.5) * self.step[1],
        ]
    }

    /// `Σ density · cell area`; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn mean(&self) -> [f64; 2] {
        let a = self.cell_area();
        let mut m = [0.0; 2];
        for i in 0..self.resolution {
            for j in 0..self.resolution {
                let w = self.density(i, j) * a;
                let t = self.theta(i, j);
                m[0] += w * t[0];
                m[1] += w * t[1];
            }
        }
        m
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let a = self.cell_area();
        let m = self.mean();
        let mut c = [[0.0; 2]; 2];
        for i in 0..self.resolution {
            for j in 0..self.resolution {
                let w = self.density(i, j) * a;
                let t = self.theta(i, j);
                let d = [t[0] - m[0], t[1] - m[1]];
                for r in 0..2 {
                    for s in 0..2 {
                        c[r][s] += w * d[r] * d[s];
                    }
                }
            }
        }
        c
    }

    /// Area of the smallest set of cells holding at least `level` of the mass.
    pub fn credible_area(&self, level: f64) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        let a = self.cell_area();
        let mut mass = 0.0;
        let mut cells = 0usize;
        for x in v {
            if mass >= level {
                break;
            }
            mass += x * a;
            cells += 1;
        }
        cells as f64 * a
    }

    /// Cells at least as high as their eight neighbours and above half the
    /// global maximum. With `periodic` the grid wraps at its edges (use it for
    /// a full-period domain); otherwise edge cells compare only against
    /// neighbours inside the grid.
    pub fn peaks(&self, periodic: bool) -> Vec<Peak> {
        let g = self.resolution as isize;
        let gmax = self.values.iter().copied().fold(0.0, f64::max);
        if gmax <= 0.0 {
            return Vec::new();
        }
        let slack = PEAK_TIE_TOLERANCE * gmax;
        let at = |i: isize, j: isize| -> Option<f64> {
            let (i, j) = if periodic {
                (i.rem_euclid(g), j.rem_euclid(g))
            } else if i < 0 || j < 0 || i >= g || j >= g {
                return None;
            } else {
                (i, j)
            };
            Some(self.values[(i * g + j) as usize])
        };
        let mut out = Vec::new();
        for i in 0..g {
            for j in 0..g {
                let v = self.values[(i * g + j) as usize];
                if v < 0.5 * gmax {
                    continue;
                }
                let is_max = (-1..=1)
                    .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
                    .filter(|&(di, dj)| (di, dj) != (0, 0))
                    .all(|(di, dj)| at(i + di, j + dj).is_none_or(|n| n <= v + slack));
                if is_max {
                    out.push(Peak {
                        cell: (i as usize, j as usize),
                        theta: self.theta(i as usize, j as usize),
                        density: v,
                    });
                }
            }
        }
        out
    }

    pub fn peak_count(&self, periodic: bool) -> usize {
        self.peaks(periodic).len()
    }
}
