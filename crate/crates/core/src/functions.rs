//! Linear functions of the local phases, `f(θ) = Vᵀθ + a`, and the two
//! scalars that summarise them for a sensor-symmetric network: the
//! normalisation term `N = Tr(W VᵀV)` and the geometry parameter
//! `G = Tr(W Vᵀ X V) / N`, where `X` is the matrix of ones minus the identity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// A set of `l` linear functions of `d` phases with importance weights.
///
/// Column `j` of `coefficients` is the coefficient vector `f_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunctionSet", into = "RawFunctionSet")]
pub struct LinearFunctionSet {
    coefficients: DMatrix<f64>,
    offsets: DVector<f64>,
    weights: DVector<f64>,
}

impl LinearFunctionSet {
    pub fn new(coefficients: DMatrix<f64>, offsets: DVector<f64>, weights: DVector<f64>) -> Result<Self> {
        let l = coefficients.ncols();
        if coefficients.nrows() == 0 || l == 0 {
            return Err(Error::invalid("V", "coefficient matrix is empty"));
        }
        if offsets.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: offsets.len(),
            });
        }
        if weights.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: weights.len(),
            });
        }
        if coefficients.iter().chain(offsets.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("V", "entries must be finite"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("weights", "must be finite and non-negative"));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::invalid("weights", format!("sum to {total}, expected 1")));
        }
        if coefficients.iter().all(|x| *x == 0.0) {
            return Err(Error::invalid("V", "all coefficients vanish"));
        }
        Ok(LinearFunctionSet {
            coefficients,
            offsets,
            weights,
        })
    }

    /// Functions with zero offsets and uniform weights `1/l`.
    pub fn uniform(coefficients: DMatrix<f64>) -> Result<Self> {
        let l = coefficients.ncols();
        LinearFunctionSet::new(
            coefficients,
            DVector::zeros(l),
            DVector::from_element(l, 1.0 / l.max(1) as f64),
        )
    }

    /// The two-sensor example pair `f_1 = (2θ_1 + πθ_2)/sqrt(4 + π²)`,
    /// `f_2 = (2θ_1 + θ_2)/sqrt(5)` with equal weights.
    pub fn two_sensor_example() -> Self {
        use std::f64::consts::PI;
        let s1 = (4.0 + PI * PI).sqrt();
        let s2 = 5f64.sqrt();
        let v = DMatrix::from_row_slice(2, 2, &[2.0 / s1, 2.0 / s2, PI / s1, 1.0 / s2]);
        LinearFunctionSet::uniform(v).expect("static example is valid")
    }

    /// Number of phases `d`.
    pub fn num_params(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Number of functions `l`.
    pub fn num_functions(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// `Vᵀθ + a`.
    pub fn evaluate(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        if theta.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                actual: theta.len(),
            });
        }
        Ok(self.coefficients.tr_mul(theta) + &self.offsets)
    }

    /// `Σ_j w_j (f_jᵀ δ)²`: weighted squared error of the functions for a
    /// parameter error `δ`.
    pub fn weighted_sq_error(&self, delta: &[f64]) -> f64 {
        self.coefficients
            .column_iter()
            .zip(self.weights.iter())
            .map(|(f, w)| {
                let e: f64 = f.iter().zip(delta).map(|(a, b)| a * b).sum();
                w * e * e
            })
            .sum()
    }

    /// `Tr(W Vᵀ Σ V)` for a parameter covariance `Σ`.
    pub fn weighted_trace(&self, sigma: &DMatrix<f64>) -> f64 {
        self.coefficients
            .column_iter()
            .zip(self.weights.iter())
            .map(|(f, w)| w * (f.transpose() * sigma * f)[(0, 0)])
            .sum()
    }

    /// Normalisation term `N = Σ_j w_j |f_j|²`.
    pub fn normalization_term(&self) -> f64 {
        self.coefficients
            .column_iter()
            .zip(self.weights.iter())
            .map(|(f, w)| w * f.norm_squared())
            .sum()
    }

    /// Geometry parameter and per-function angles to the all-ones direction.
    pub fn geometry(&self) -> Result<GeometryReport> {
        let n = self.normalization_term();
        if n <= 0.0 {
            return Err(Error::invalid(
                "weights",
                "normalisation term vanishes (every weighted function is zero)",
            ));
        }
        let d = self.num_params();
        let x = x_matrix(d);
        let geometry = self.weighted_trace(&x) / n;
        let sqrt_d = (d as f64).sqrt();
        let angles = self
            .coefficients
            .column_iter()
            .map(|f| {
                let norm = f.norm();
                (norm > 0.0).then(|| (f.sum() / (norm * sqrt_d)).clamp(-1.0, 1.0).acos())
            })
            .collect();
        Ok(GeometryReport {
            normalization: n,
            geometry,
            angles,
        })
    }
}

/// `N` and `G` for a function set, plus the angle between each `f_j` and the
/// all-ones vector (`None` for a zero column).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    pub normalization: f64,
    pub geometry: f64,
    pub angles: Vec<Option<f64>>,
}

/// `X = ones - identity`.
pub fn x_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { 1.0 })
}

/// Eigendecomposition of `X`: eigenvalues `(d-1, -1, ..., -1)` and an
/// orthogonal `U_X` whose first column is `1/sqrt(d)`.
///
/// The degenerate eigenspace has no canonical basis. For `d = 2` and `d = 3`
/// the conventional matrices are returned; otherwise the standard basis is
/// projected onto the complement of the ones vector and orthonormalised in
/// index order.
pub fn x_eigendecomposition(d: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if d < 2 {
        return Err(Error::invalid("d", format!("need d >= 2, got {d}")));
    }
    let mut values = DVector::from_element(d, -1.0);
    values[0] = (d - 1) as f64;

    let u = match d {
        2 => DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]) / 2f64.sqrt(),
        3 => {
            let (r2, r3) = (2f64.sqrt(), 3f64.sqrt());
            DMatrix::from_row_slice(3, 3, &[r2, r3, 1.0, r2, -r3, 1.0, r2, 0.0, -2.0]) / 6f64.sqrt()
        }
        _ => gram_schmidt_complement(d),
    };
    Ok((values, u))
}

fn gram_schmidt_complement(d: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_element(d, 1.0 / (d as f64).sqrt())];
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = DVector::zeros(d);
        v[k] = 1.0;
        // two passes keep the result orthogonal to rounding
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    DMatrix::from_columns(&basis)
}

/// Single function `f = U_X·1` with unit weight; its geometry parameter is 0.
pub fn clustered_zero_geometry_function(d: usize) -> Result<LinearFunctionSet> {
    let (_, u) = x_eigendecomposition(d)?;
    let f = &u * DVector::from_element(d, 1.0);
    LinearFunctionSet::new(
        DMatrix::from_column_slice(d, 1, f.as_slice()),
        DVector::zeros(1),
        DVector::from_element(1, 1.0),
    )
}

/// JSON layout: `V` as a list of `d` rows of length `l`.
#[derive(Serialize, Deserialize)]
struct RawFunctionSet {
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    #[serde(default)]
    a: Option<Vec<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

impl TryFrom<RawFunctionSet> for LinearFunctionSet {
    type Error = Error;

    fn try_from(raw: RawFunctionSet) -> Result<Self> {
        let d = raw.v.len();
        let l = raw.v.first().map_or(0, Vec::len);
        if d == 0 || l == 0 {
            return Err(Error::invalid("V", "coefficient matrix is empty"));
        }
        if let Some(row) = raw.v.iter().find(|r| r.len() != l) {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: row.len(),
            });
        }
        let flat: Vec<f64> = raw.v.into_iter().flatten().collect();
        let a = raw.a.unwrap_or_else(|| vec![0.0; l]);
        let w = raw.weights.unwrap_or_else(|| vec![1.0 / l as f64; l]);
        LinearFunctionSet::new(
            DMatrix::from_row_slice(d, l, &flat),
            DVector::from_vec(a),
            DVector::from_vec(w),
        )
    }
}

impl From<LinearFunctionSet> for RawFunctionSet {
    fn from(f: LinearFunctionSet) -> Self {
        RawFunctionSet {
            v: f
                .coefficients
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            a: Some(f.offsets.iter().copied().collect()),
            weights: Some(f.weights.iter().copied().collect()),
        }
    }
}
