use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{covariance, mean_center, sym_eigen, Matrix};

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// when deciding the rank of the data.
const RANK_REL_TOL: f64 = 1e-12;
const CUMULATIVE_SLACK: f64 = 1e-12;

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaTarget {
    FixedDims(usize),
    /// Smallest number of leading components whose cumulative explained
    /// variance ratio reaches the threshold.
    VarianceThreshold(f64),
}

impl Default for PcaTarget {
    fn default() -> Self {
        PcaTarget::FixedDims(50)
    }
}

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x d`, rows are principal axes in descending variance order.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Every eigenvalue of the covariance, descending, negatives clamped to 0.
    pub spectrum: Vec<f64>,
    pub requested: PcaTarget,
    /// Set when a fixed dimension request exceeded the numerical rank and was
    /// reduced to it.
    pub clamped_from: Option<usize>,
}

impl PcaModel {
    pub fn dims(&self) -> usize {
        self.components.rows()
    }

    pub fn input_dims(&self) -> usize {
        self.components.cols()
    }
}

pub fn pca_fit(m: &Matrix, target: PcaTarget) -> Result<PcaModel> {
    match target {
        PcaTarget::FixedDims(0) => return Err(Error::config("number of principal components must be at least 1")),
        PcaTarget::VarianceThreshold(tau) if !(tau > 0.0 && tau <= 1.0) => {
            return Err(Error::config(format!("variance threshold {tau} is outside (0, 1]")))
        }
        _ => {}
    }
    if m.rows() < 2 {
        return Err(Error::DegenerateInput("PCA needs at least two samples".to_string()));
    }

    let (centered, mean) = mean_center(m)?;
    let cov = covariance(&centered)?;
    let eig = sym_eigen(&cov)?;
    let spectrum: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let largest = spectrum[0];
    if largest <= 0.0 {
        return Err(Error::DegenerateInput(
            "all samples are identical; covariance has rank 0".to_string(),
        ));
    }
    let rank = spectrum.iter().take_while(|&&v| v > RANK_REL_TOL * largest).count();
    let total: f64 = spectrum.iter().filter(|&&v| v > 0.0).sum();
    let ratios: Vec<f64> = spectrum.iter().map(|v| v / total).collect();

    let (k, clamped_from) = match target {
        PcaTarget::FixedDims(k) if k > rank => (rank, Some(k)),
        PcaTarget::FixedDims(k) => (k, None),
        PcaTarget::VarianceThreshold(tau) => {
            let mut cumulative = 0.0;
            let mut k = rank;
            for (i, r) in ratios.iter().enumerate().take(rank) {
                cumulative += r;
                if cumulative >= tau - CUMULATIVE_SLACK {
                    k = i + 1;
                    break;
                }
            }
            (k, None)
        }
    };

    let d = m.cols();
    let mut components = Matrix::zeros(k, d);
    for c in 0..k {
        for j in 0..d {
            components[(c, j)] = eig.vectors[(j, c)];
        }
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance: spectrum[..k].to_vec(),
        explained_variance_ratio: ratios[..k].to_vec(),
        spectrum,
        requested: target,
        clamped_from,
    })
}

/// Projects each row onto the model's components after removing the mean.
pub fn pca_transform(model: &PcaModel, m: &Matrix) -> Result<Matrix> {
    let d = model.input_dims();
    if m.cols() != d {
        return Err(Error::input(format!(
            "model was fit on {d} columns, input has {}",
            m.cols()
        )));
    }
    let k = model.dims();
    let mut out = Matrix::zeros(m.rows(), k);
    let mut shifted = vec![0.0; d];
    for (i, row) in m.row_iter().enumerate() {
        for ((s, x), mu) in shifted.iter_mut().zip(row).zip(&model.mean) {
            *s = x - mu;
        }
        for c in 0..k {
            out[(i, c)] = model.components.row(c).iter().zip(&shifted).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}
