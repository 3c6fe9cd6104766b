//! Asymptotic Cramér–Rao uncertainty for linear functions on sensor-symmetric
//! networks, and the correlation strength that minimises it.
//!
//! With `N` the normalisation term, `G` the geometry parameter, `v` the common
//! generator variance and `J` the common correlation strength, the bound is
//!
//! ```text
//! ε_cr = N h(J, G, d) / (4 μ v),   h = [1 + (d-2-G)J] / [(1-J)(1+(d-1)J)]
//! ```
//!
//! which is finite on `1/(1-d) < J < 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fisher::{strength_interval, InfoMatrix};
use crate::functions::LinearFunctionSet;

const DOMAIN_SLACK: f64 = 1e-12;

/// Scan range and resolution for [`balanced_gamma`].
pub const BALANCED_SCAN_MAX: f64 = 10.0;
pub const BALANCED_SCAN_STEPS: usize = 10_000;
pub const BALANCED_ROOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundComponents {
    pub normalization: f64,
    pub v: f64,
    pub strength: f64,
    pub geometry: f64,
    pub d: usize,
}

/// Asymptotic bound `ε_cr` for `μ` trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticBound {
    pub value: f64,
    pub mu: u64,
    pub components: BoundComponents,
}

impl AsymptoticBound {
    /// The same configuration at a different trial count.
    pub fn at(&self, mu: u64) -> AsymptoticBound {
        AsymptoticBound {
            value: self.value * self.mu as f64 / mu as f64,
            mu,
            components: self.components,
        }
    }
}

fn check_strength(j: f64, d: usize) -> Result<()> {
    let (lower, upper) = strength_interval(d);
    if j > lower && j < upper {
        Ok(())
    } else {
        Err(Error::StrengthOutOfRange {
            strength: j,
            lower,
            upper,
        })
    }
}

fn check_geometry(g: f64, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::invalid("d", format!("need d >= 2, got {d}")));
    }
    let upper = (d - 1) as f64;
    if !(g >= -1.0 - DOMAIN_SLACK && g <= upper + DOMAIN_SLACK) {
        return Err(Error::invalid("G", format!("{g} is outside [-1, {upper}]")));
    }
    Ok(())
}

fn check_mu(mu: u64) -> Result<()> {
    if mu == 0 {
        return Err(Error::invalid("mu", "need at least one trial"));
    }
    Ok(())
}

/// The geometry–correlation factor `h(J, G, d)`.
pub fn h_factor(j: f64, g: f64, d: usize) -> Result<f64> {
    check_geometry(g, d)?;
    check_strength(j, d)?;
    let df = d as f64;
    Ok((1.0 + (df - 2.0 - g) * j) / ((1.0 - j) * (1.0 + (df - 1.0) * j)))
}

/// `∂h/∂J = [(d-1)(d-2-G)J² + 2(d-1)J - G] / [(1-J)²(1+(d-1)J)²]`.
pub fn h_slope(j: f64, g: f64, d: usize) -> Result<f64> {
    check_geometry(g, d)?;
    check_strength(j, d)?;
    let b = (d - 1) as f64;
    let num = b * (b - 1.0 - g) * j * j + 2.0 * b * j - g;
    let den = (1.0 - j).powi(2) * (1.0 + b * j).powi(2);
    Ok(num / den)
}

/// `Tr(W Vᵀ F_q⁻¹ V) / μ` by Cholesky solve.
pub fn crb_general(funcs: &LinearFunctionSet, fq: &InfoMatrix, mu: u64) -> Result<f64> {
    check_mu(mu)?;
    if fq.dim() != funcs.num_params() {
        return Err(Error::DimensionMismatch {
            expected: funcs.num_params(),
            actual: fq.dim(),
        });
    }
    fq.ensure_invertible()?;
    let chol = fq.matrix.clone().cholesky().ok_or(Error::Singular {
        eigenvalue: fq.min_eigenvalue(),
    })?;
    let v = funcs.coefficients();
    let x = chol.solve(v);
    let total: f64 = v
        .column_iter()
        .zip(x.column_iter())
        .zip(funcs.weights().iter())
        .map(|((f, s), w)| w * f.dot(&s))
        .sum();
    Ok(total / mu as f64)
}

/// `N h(J, G, d) / (4 μ v)`.
pub fn crb_sensor_symmetric(n: f64, v: f64, j: f64, g: f64, d: usize, mu: u64) -> Result<AsymptoticBound> {
    check_mu(mu)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid("N", "must be positive"));
    }
    if !(v > 0.0 && v <= 0.25) {
        return Err(Error::invalid("v", format!("4v = {} is outside (0, 1]", 4.0 * v)));
    }
    let h = h_factor(j, g, d)?;
    Ok(AsymptoticBound {
        value: n * h / (4.0 * mu as f64 * v),
        mu,
        components: BoundComponents {
            normalization: n,
            v,
            strength: j,
            geometry: g,
            d,
        },
    })
}

/// Optimal correlation strength for geometry `G` when `4v = 1`.
///
/// Evaluated as `G / [(d-1)(1 + s)]` with `s = sqrt((G+1)(d-1-G)/(d-1))`, which
/// is the textbook `(1 - s)/(G + 2 - d)` with the removable singularity at
/// `G = d - 2` cancelled.
pub fn j_opt(g: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid("d", format!("need d >= 2, got {d}")));
    }
    let b = (d - 1) as f64;
    if !(g > -1.0 && g < b) {
        return Err(Error::invalid("G", format!("{g} is outside the open interval (-1, {b})")));
    }
    let s = ((g + 1.0) * (b - g) / b).sqrt();
    Ok(g / (b * (1.0 + s)))
}

/// Non-negative `γ` whose two-sensor state realises `j_opt(G, 2)`.
pub fn gamma_opt(g: f64) -> Result<f64> {
    if !(g > -1.0 && g < 1.0) {
        return Err(Error::invalid("G", format!("{g} is outside (-1, 1)")));
    }
    let j = j_opt(g, 2)?;
    Ok(((1.0 - j) / (1.0 + j)).sqrt())
}

/// Two-sensor bound as a function of `γ` (`N = 1`, `4v = 1`):
/// `(1 + γ²)[(1 - G) + (1 + G)γ²] / (4 μ γ²)`.
pub fn eps_qbit(gamma: f64, g: f64, mu: u64) -> Result<f64> {
    check_mu(mu)?;
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::invalid("gamma", "bound diverges at gamma = 0"));
    }
    let g2 = gamma * gamma;
    Ok((1.0 + g2) * ((1.0 - g) + (1.0 + g) * g2) / (4.0 * mu as f64 * g2))
}

/// Positive `γ` whose single-trial bound is the midpoint of the bounds for
/// `gamma_loc` and `gamma_ent`, ascending.
pub fn balanced_gamma(gamma_loc: f64, gamma_ent: f64, g: f64) -> Result<Vec<f64>> {
    let target = 0.5 * (eps_qbit(gamma_loc, g, 1)? + eps_qbit(gamma_ent, g, 1)?);
    let residual = |x: f64| eps_qbit(x, g, 1).map(|e| e - target);

    let step = BALANCED_SCAN_MAX / BALANCED_SCAN_STEPS as f64;
    let mut roots = Vec::new();
    let mut prev_x = step;
    let mut prev_r = residual(prev_x)?;
    if prev_r == 0.0 {
        roots.push(prev_x);
    }
    for i in 2..=BALANCED_SCAN_STEPS {
        let x = i as f64 * step;
        let r = residual(x)?;
        if r == 0.0 {
            roots.push(x);
        } else if prev_r != 0.0 && (prev_r < 0.0) != (r < 0.0) {
            roots.push(bisect(&residual, prev_x, x)?);
        }
        prev_x = x;
        prev_r = r;
    }
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    while hi - lo > BALANCED_ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Checks that `j_opt(G, d)` is the minimum of `h` on the invertible range:
/// the slope is negative just above `1/(1-d)`, positive just below 1, and `h`
/// at the optimum does not exceed either probe.
pub fn verify_jopt_is_minimum(g: f64, d: usize) -> bool {
    let Ok(j) = j_opt(g, d) else {
        return false;
    };
    let (lower, upper) = strength_interval(d);
    let eps = 1e-4 * (upper - lower);
    let probes = [lower + eps, upper - eps];
    let slopes = probes.map(|p| h_slope(p, g, d));
    let values = probes.map(|p| h_factor(p, g, d));
    let (Ok(h_opt), [Ok(s_lo), Ok(s_hi)], [Ok(h_lo), Ok(h_hi)]) = (h_factor(j, g, d), slopes, values) else {
        return false;
    };
    s_lo < 0.0 && s_hi > 0.0 && h_opt <= h_lo && h_opt <= h_hi
}
