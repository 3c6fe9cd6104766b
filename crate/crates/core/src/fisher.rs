//! Quantum and classical Fisher information matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bayes::likelihood::{amplitude_with_gradient, Outcome};
use crate::error::{Error, Result};
use crate::network::PureState;

/// Relative threshold below which the smallest eigenvalue counts as zero.
pub const INVERTIBILITY_TOLERANCE: f64 = 1e-10;


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InfoKind {
    Quantum,
    Classical,
}

/// Symmetric positive semi-definite information matrix with its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    pub matrix: DMatrix<f64>,
    pub kind: InfoKind,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub invertible: bool,
}

impl InfoMatrix {
    /// Symmetrises `matrix` and computes its spectrum numerically.
    pub fn from_matrix(matrix: DMatrix<f64>, kind: InfoKind) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let mut eigenvalues: Vec<f64> = sym.clone().symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        InfoMatrix::with_spectrum(sym, kind, eigenvalues)
    }

    fn with_spectrum(matrix: DMatrix<f64>, kind: InfoKind, mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let invertible = is_invertible(&eigenvalues);
        InfoMatrix {
            matrix,
            kind,
            eigenvalues,
            invertible,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Returns `Error::Singular` naming the smallest eigenvalue unless invertible.
    pub fn ensure_invertible(&self) -> Result<()> {
        if self.invertible {
            Ok(())
        } else {
            Err(Error::Singular {
                eigenvalue: self.min_eigenvalue(),
            })
        }
    }
}

fn is_invertible(eigenvalues: &[f64]) -> bool {
    match (eigenvalues.first(), eigenvalues.last()) {
        (Some(&lo), Some(&hi)) => hi > 0.0 && lo > INVERTIBILITY_TOLERANCE * hi,
        _ => false,
    }
}

/// `(F_q)_ij = <σ_z,i σ_z,j> - <σ_z,i><σ_z,j>` for a pure probe.
pub fn qfi_pure(state: &PureState) -> InfoMatrix {
    let d = state.num_qubits();
    let z = state.z_expectations();
    let zz = state.zz_expectations();
    let m = DMatrix::from_fn(d, d, |i, j| zz[i][j] - z[i] * z[j]);
    InfoMatrix::from_matrix(m, InfoKind::Quantum)
}

/// `F_q = 4v[(1 - J) I + J·ones]` with its closed-form spectrum
/// `4v[1 + (d-1)J]` (once) and `4v(1 - J)` (`d - 1` times).
pub fn qfi_sensor_symmetric(v: f64, j: f64, d: usize) -> Result<InfoMatrix> {
    check_symmetric_inputs(v, j, d)?;
    let scale = 4.0 * v;
    let m = DMatrix::from_fn(d, d, |a, b| if a == b { scale } else { scale * j });
    let lambda1 = scale * (1.0 + (d - 1) as f64 * j);
    let lambda2 = scale * (1.0 - j);
    let mut eig = vec![lambda2; d - 1];
    eig.push(lambda1);
    Ok(InfoMatrix::with_spectrum(m, InfoKind::Quantum, eig))
}

/// Closed-form inverse of the sensor-symmetric QFI:
/// `{[1 + (d-1)J] I - J·ones} / {4v(1 - J)[1 + (d-1)J]}`.
pub fn qfi_inverse_closed_form(v: f64, j: f64, d: usize) -> Result<DMatrix<f64>> {
    check_symmetric_inputs(v, j, d)?;
    if v <= 0.0 {
        return Err(Error::Singular { eigenvalue: 0.0 });
    }
    let (lower, upper) = strength_interval(d);
    if !(j > lower && j < upper) {
        return Err(Error::StrengthOutOfRange {
            strength: j,
            lower,
            upper,
        });
    }
    let a = 1.0 + (d - 1) as f64 * j;
    let denom = 4.0 * v * (1.0 - j) * a;
    Ok(DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            (a - j) / denom
        } else {
            -j / denom
        }
    }))
}

/// Open interval `(1/(1-d), 1)` of strengths with an invertible QFI.
pub fn strength_interval(d: usize) -> (f64, f64) {
    (1.0 / (1.0 - d as f64), 1.0)
}

fn check_symmetric_inputs(v: f64, j: f64, d: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::invalid("d", "need at least one sensor"));
    }
    if !(0.0..=0.25).contains(&v) {
        return Err(Error::invalid("v", format!("4v = {} is outside [0, 1]", 4.0 * v)));
    }
    if !(-1.0..=1.0).contains(&j) {
        return Err(Error::invalid("J", format!("{j} is outside [-1, 1]")));
    }
    // Below 1/(1-d) the matrix has a negative eigenvalue and is not a covariance.
    if d >= 2 && j < strength_interval(d).0 - 1e-12 {
        return Err(Error::invalid(
            "J",
            format!("{j} is below 1/(1-d) = {}; no state has this covariance", strength_interval(d).0),
        ));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma == 0.0 {
        return Err(Error::invalid("gamma", "need 0 < |gamma| < inf"));
    }
    Ok(())
}

/// Classical Fisher information of the local four-outcome measurement on the
/// encoded two-sensor `γ`-state, from the analytic likelihood gradient.
///
/// With `p = A²/N`, each outcome contributes `(∂p)(∂p)ᵀ/p = 4 (∂A)(∂A)ᵀ/N`,
/// which stays finite where an outcome has zero probability.
pub fn classical_fim_povm2(gamma: f64, theta: [f64; 2]) -> Result<InfoMatrix> {
    check_gamma(gamma)?;
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("theta", "must be finite"));
    }
    let norm = 2.0 * (1.0 + gamma * gamma);
    let mut f = [[0.0; 2]; 2];
    for o in Outcome::ALL {
        let (_, g) = amplitude_with_gradient(o, theta, gamma);
        for a in 0..2 {
            for b in 0..2 {
                f[a][b] += 4.0 * g[a] * g[b] / norm;
            }
        }
    }
    let m = DMatrix::from_row_slice(2, 2, &[f[0][0], f[0][1], f[1][0], f[1][1]]);
    Ok(InfoMatrix::from_matrix(m, InfoKind::Classical))
}

/// Largest entry-wise gap between the classical information of the local
/// measurement and the QFI of the `γ`-state over a grid of phases.
pub fn povm_fisher_gap(gamma: f64, theta_grid: &[[f64; 2]]) -> Result<f64> {
    check_gamma(gamma)?;
    let fq = qfi_pure(&PureState::gamma_state_2(gamma)?);
    let mut worst: f64 = 0.0;
    for &theta in theta_grid {
        let fc = classical_fim_povm2(gamma, theta)?;
        worst = worst.max((&fc.matrix - &fq.matrix).abs().max());
    }
    Ok(worst)
}

/// True when the local measurement saturates the QFI at every grid point.
pub fn verify_povm_optimality(gamma: f64, theta_grid: &[[f64; 2]], tol: f64) -> Result<bool> {
    Ok(povm_fisher_gap(gamma, theta_grid)? <= tol)
}

/// Uniform `n × n` grid of phase pairs over `[lo, hi]²`, endpoints included.
pub fn phase_grid(n: usize, lo: f64, hi: f64) -> Vec<[f64; 2]> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n)
        .flat_map(|i| (0..n).map(move |j| [lo + i as f64 * step, lo + j as f64 * step]))
        .collect()
}
