//! Qubit network probes.
//!
//! A network of `d` qubit sensors is described by a dense state vector over
//! `2^d` computational basis states. Sensor 1 is the most significant bit of
//! the basis index, so `|i_1 i_2 ... i_d>` sits at index `i_1 i_2 ... i_d`
//! read as a binary number. Each sensor picks up its phase through the
//! generator `K_i = sigma_z,i / 2`; all generators are diagonal and commute.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest network a dense state vector is allowed to describe.
pub const MAX_QUBITS: usize = 20;

/// Normalisation tolerance for state vectors.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Tolerance used when deciding whether a correlation profile is sensor-symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Default purity tolerance for [`PureState::is_product_state`].
pub const PRODUCT_TOLERANCE: f64 = 1e-9;

/// Variances at or below this value leave the correlation strength undefined.
const ZERO_VARIANCE: f64 = 1e-14;

/// Pure state of a `d`-qubit sensing network.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps an amplitude vector after checking its length and norm.
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubits(num_qubits, 1)?;
        let expected = 1usize << num_qubits;
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(
                "amplitudes",
                format!("squared norm is {norm}, expected 1"),
            ));
        }
        Ok(PureState {
            num_qubits,
            amplitudes,
        })
    }

    /// Builds a state from unnormalised real amplitudes.
    pub fn from_real_unnormalized(num_qubits: usize, raw: &[f64]) -> Result<Self> {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("amplitudes", "cannot normalise a zero vector"));
        }
        let amplitudes = raw.iter().map(|&x| Complex64::new(x / norm, 0.0)).collect();
        PureState::new(num_qubits, amplitudes)
    }

    /// Two-sensor probe `[|00> + g(|01> + |10>) + |11>] / sqrt(2(1 + g^2))`.
    pub fn gamma_state_2(gamma: f64) -> Result<Self> {
        PureState::gamma_state(gamma, 2)
    }

    /// `d`-sensor generalisation of [`PureState::gamma_state_2`]: amplitude 1 on
    /// `|0...0>` and `|1...1>`, amplitude `gamma` on every other basis state.
    pub fn gamma_state(gamma: f64, d: usize) -> Result<Self> {
        check_qubits(d, 2)?;
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
        let dim = 1usize << d;
        let norm = (2.0 * (1.0 + ((1u64 << (d - 1)) - 1) as f64 * gamma * gamma)).sqrt();
        let amplitudes = (0..dim)
            .map(|i| {
                let a = if i == 0 || i == dim - 1 { 1.0 } else { gamma };
                Complex64::new(a / norm, 0.0)
            })
            .collect();
        PureState::new(d, amplitudes)
    }

    /// Separable probe `(sqrt(a)|0> + sqrt(1 - a)|1>)^{⊗d}`.
    pub fn product_state(a: f64, d: usize) -> Result<Self> {
        check_qubits(d, 1)?;
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::invalid("a", format!("{a} is outside [0, 1]")));
        }
        let single = [a.sqrt(), (1.0 - a).sqrt()];
        PureState::tensor_product(&vec![[single[0].into(), single[1].into()]; d])
    }

    /// Tensor product of single-qubit states, sensor 1 first. Each factor is
    /// normalised before the product is taken.
    pub fn tensor_product(factors: &[[Complex64; 2]]) -> Result<Self> {
        let d = factors.len();
        check_qubits(d, 1)?;
        let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
        for f in factors {
            let n = (f[0].norm_sqr() + f[1].norm_sqr()).sqrt();
            if n == 0.0 || !n.is_finite() {
                return Err(Error::invalid("factors", "zero single-qubit factor"));
            }
            let (f0, f1) = (f[0] / n, f[1] / n);
            amplitudes = amplitudes
                .iter()
                .flat_map(|&a| [a * f0, a * f1])
                .collect();
        }
        PureState::new(d, amplitudes)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Basis probabilities `|a_i|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bit of sensor `k` (0-based) in basis index `index`.
    #[inline]
    pub fn bit(&self, index: usize, k: usize) -> usize {
        (index >> (self.num_qubits - 1 - k)) & 1
    }

    /// Applies `exp(-i K·theta)` with `K_k = sigma_z,k / 2`.
    pub fn apply_encoding(&self, theta: &[f64]) -> Result<PureState> {
        if theta.len() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: theta.len(),
            });
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let phase: f64 = theta
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| if self.bit(i, k) == 0 { t } else { -t })
                    .sum();
                a * Complex64::from_polar(1.0, -0.5 * phase)
            })
            .collect();
        Ok(PureState {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }

    /// `<sigma_z,i>` for every sensor.
    pub fn z_expectations(&self) -> Vec<f64> {
        let probs = self.probabilities();
        (0..self.num_qubits)
            .map(|k| {
                probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| if self.bit(i, k) == 0 { *p } else { -*p })
                    .sum()
            })
            .collect()
    }

    /// `<sigma_z,i sigma_z,j>` for every pair, diagonal included (always 1).
    pub fn zz_expectations(&self) -> Vec<Vec<f64>> {
        let d = self.num_qubits;
        let probs = self.probabilities();
        let mut zz = vec![vec![0.0; d]; d];
        for (i, p) in probs.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            for a in 0..d {
                for b in a..d {
                    let s = if self.bit(i, a) == self.bit(i, b) { *p } else { -*p };
                    zz[a][b] += s;
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                zz[a][b] = zz[b][a];
            }
        }
        zz
    }

    /// Generator variances, covariances and correlation strengths.
    pub fn correlation_profile(&self) -> CorrelationProfile {
        let d = self.num_qubits;
        let z = self.z_expectations();
        let zz = self.zz_expectations();

        let variances: Vec<f64> = z.iter().map(|m| 0.25 * (1.0 - m * m)).collect();
        let covariances: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            variances[i]
                        } else {
                            0.25 * (zz[i][j] - z[i] * z[j])
                        }
                    })
                    .collect()
            })
            .collect();
        let strengths = StrengthMatrix::from_fn(d, |i, j| {
            let (vi, vj) = (variances[i], variances[j]);
            (vi > ZERO_VARIANCE && vj > ZERO_VARIANCE).then(|| covariances[i][j] / (vi * vj).sqrt())
        });

        let mean_v = variances.iter().sum::<f64>() / d as f64;
        let v_equal = variances
            .iter()
            .all(|v| (v - mean_v).abs() <= SYMMETRY_TOLERANCE);
        let off_diag: Vec<f64> = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| covariances[i][j])
            .collect();
        let mean_c = if off_diag.is_empty() {
            0.0
        } else {
            off_diag.iter().sum::<f64>() / off_diag.len() as f64
        };
        let c_equal = off_diag
            .iter()
            .all(|c| (c - mean_c).abs() <= SYMMETRY_TOLERANCE);
        let all_zero = variances.iter().all(|v| *v <= ZERO_VARIANCE);
        let any_zero = variances.iter().any(|v| *v <= ZERO_VARIANCE);
        let sensor_symmetric = v_equal && c_equal && (!any_zero || all_zero);

        let common_v = sensor_symmetric.then_some(mean_v);
        let common_j = (sensor_symmetric && !all_zero && d >= 2).then(|| mean_c / mean_v);

        CorrelationProfile {
            variances,
            covariances,
            strengths,
            sensor_symmetric,
            common_v,
            common_j,
        }
    }

    /// Reduced density matrix of sensor `k` as `(rho_00, rho_11, rho_01)`.
    pub fn reduced_qubit(&self, k: usize) -> (f64, f64, Complex64) {
        let mask = 1usize << (self.num_qubits - 1 - k);
        let mut r00 = 0.0;
        let mut r11 = 0.0;
        let mut r01 = Complex64::new(0.0, 0.0);
        for (i, a) in self.amplitudes.iter().enumerate() {
            if i & mask == 0 {
                r00 += a.norm_sqr();
                r01 += a * self.amplitudes[i | mask].conj();
            } else {
                r11 += a.norm_sqr();
            }
        }
        (r00, r11, r01)
    }

    /// Purity `Tr(rho_k^2)` of the single-sensor reduced state.
    pub fn qubit_purity(&self, k: usize) -> f64 {
        let (r00, r11, r01) = self.reduced_qubit(k);
        r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr()
    }

    /// Full-product test: every single-sensor reduced state is pure to `tol`.
    pub fn is_product_state(&self, tol: f64) -> bool {
        (0..self.num_qubits).all(|k| self.qubit_purity(k) >= 1.0 - tol)
    }
}

/// Inter-sensor correlation strength `c_ij / sqrt(v_i v_j)` of a `γ`-state.
pub fn gamma_state_strength(gamma: f64, d: usize) -> f64 {
    let g2 = gamma * gamma;
    (1.0 - g2) / (1.0 + ((1u64 << (d - 1)) - 1) as f64 * g2)
}

/// Range of strengths `[lo, hi]` reachable by the `γ`-family for `d` sensors.
/// The lower end is approached but not attained as `|γ| → ∞`.
pub fn gamma_family_strength_range(d: usize) -> (f64, f64) {
    (-1.0 / ((1u64 << (d - 1)) - 1) as f64, 1.0)
}

fn check_qubits(d: usize, min: usize) -> Result<()> {
    if d < min {
        return Err(Error::invalid("d", format!("need at least {min} qubits, got {d}")));
    }
    if d > MAX_QUBITS {
        return Err(Error::invalid(
            "d",
            format!("{d} qubits exceeds the dense-vector cap of {MAX_QUBITS}"),
        ));
    }
    Ok(())
}

/// Symmetric matrix of correlation strengths; entries touching a sensor with
/// zero generator variance are undefined (`None`).
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthMatrix {
    d: usize,
    entries: Vec<Option<f64>>,
}

impl StrengthMatrix {
    fn from_fn(d: usize, f: impl Fn(usize, usize) -> Option<f64>) -> Self {
        let entries = (0..d * d).map(|n| f(n / d, n % d)).collect();
        StrengthMatrix { d, entries }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.d + j]
    }

    pub fn all_defined(&self) -> bool {
        self.entries.iter().all(Option::is_some)
    }
}

/// Second moments of the generators on a probe.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    /// `v_i = <K_i^2> - <K_i>^2`, so `4 v_i` lies in `[0, 1]`.
    pub variances: Vec<f64>,
    /// `c_ij = <K_i K_j> - <K_i><K_j>`; the diagonal holds `v_i`.
    pub covariances: Vec<Vec<f64>>,
    pub strengths: StrengthMatrix,
    pub sensor_symmetric: bool,
    pub common_v: Option<f64>,
    pub common_j: Option<f64>,
}
