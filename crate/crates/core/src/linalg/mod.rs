//! Dense row-major matrices, symmetric eigen-decomposition and PCA.
//!
//! Everything is computed in `f64`. Embedding files store `f32`, which is
//! widened on load.

mod eigen;
mod matrix;
mod pca;

pub use eigen::{sym_eigen, SymEigen};
pub use matrix::{covariance, mean_center, Matrix};
pub use pca::{pca_fit, pca_transform, PcaModel, PcaTarget};

/// `N x d` sample representations, one row per sample.
pub type EmbeddingMatrix = Matrix;

/// `N x k` projections onto the leading principal axes.
pub type ReducedEmbeddings = Matrix;

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
