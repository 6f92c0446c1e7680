//! k-means++ seeding and Lloyd iteration.
//!
//! Distances are squared Euclidean throughout. Ties in nearest-centroid
//! assignment go to the lowest cluster id, and all randomness comes from one
//! ChaCha stream consumed sequentially during seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: DEFAULT_K,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Row-major `k x dims` centroid coordinates.
    pub centroids: Vec<f64>,
    pub dims: usize,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// True when the last Lloyd step left every assignment unchanged.
    pub converged: bool,
    /// Inertia after each assignment step, starting with the seeded centroids.
    pub inertia_history: Vec<f64>,
}

impl Clustering {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dims..(j + 1) * self.dims]
    }

    pub fn centroid_matrix(&self) -> Matrix {
        Matrix::new(self.k, self.dims, self.centroids.clone()).expect("centroids are finite and non-empty")
    }

    /// Member indices of every cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.assignments {
            out[c] += 1;
        }
        out
    }

    /// Checks that this clustering describes the rows of `x`.
    pub fn check_against(&self, x: &Matrix) -> Result<()> {
        if self.assignments.len() != x.rows() {
            return Err(Error::input(format!(
                "clustering covers {} samples, embeddings have {}",
                self.assignments.len(),
                x.rows()
            )));
        }
        if self.dims != x.cols() {
            return Err(Error::input(format!(
                "centroids have {} dims, embeddings have {}",
                self.dims,
                x.cols()
            )));
        }
        self.check_labels()
    }

    /// Checks the centroid buffer shape and that every label is below `k`.
    pub fn check_labels(&self) -> Result<()> {
        if self.centroids.len() != self.k * self.dims {
            return Err(Error::input("centroid buffer does not match k x dims"));
        }
        if let Some(&bad) = self.assignments.iter().find(|&&c| c >= self.k) {
            return Err(Error::input(format!(
                "cluster id {bad} out of range for k = {}",
                self.k
            )));
        }
        Ok(())
    }
}

fn check_k(x: &Matrix, k: usize) -> Result<()> {
    if k == 0 || k > x.rows() {
        return Err(Error::config(format!(
            "cluster count {k} must be between 1 and the number of samples ({})",
            x.rows()
        )));
    }
    Ok(())
}

/// Picks `k` distinct rows of `x` as initial centroids with the D² rule.
pub fn kmeans_pp_init(x: &Matrix, k: usize, seed: u64) -> Result<Matrix> {
    let picks = kmeans_pp_indices(x, k, seed)?;
    x.select_rows(&picks)
}

/// Row indices chosen by k-means++ seeding, in pick order.
pub fn kmeans_pp_indices(x: &Matrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(x, k)?;
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);

    let first = rng.random_range(0..n);
    picks.push(first);
    chosen[first] = true;
    let mut nearest: Vec<f64> = x.row_iter().map(|r| squared_distance(r, x.row(first))).collect();

    while picks.len() < k {
        let total: f64 = nearest.iter().zip(&chosen).filter(|(_, &c)| !c).map(|(d, _)| d).sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = None;
            for i in 0..n {
                if chosen[i] || nearest[i] <= 0.0 {
                    continue;
                }
                last_positive = Some(i);
                acc += nearest[i];
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.or(last_positive).expect("positive total implies a candidate")
        } else {
            // Every remaining row coincides with a centroid.
            let remaining: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            remaining[rng.random_range(0..remaining.len())]
        };
        picks.push(next);
        chosen[next] = true;
        let row = x.row(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(x.row(i), row));
        }
    }
    Ok(picks)
}

/// Nearest centroid for every row; ties go to the lowest cluster id.
pub fn assign(x: &Matrix, centroids: &Matrix) -> Result<Vec<usize>> {
    if x.cols() != centroids.cols() {
        return Err(Error::input(format!(
            "points have {} dims, centroids have {}",
            x.cols(),
            centroids.cols()
        )));
    }
    Ok(assign_raw(x, centroids.as_slice(), centroids.cols()).0)
}

fn assign_raw(x: &Matrix, centroids: &[f64], dims: usize) -> (Vec<usize>, Vec<f64>) {
    let mut labels = Vec::with_capacity(x.rows());
    let mut dists = Vec::with_capacity(x.rows());
    for row in x.row_iter() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centroids.chunks_exact(dims).enumerate() {
            let d = squared_distance(row, c);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        labels.push(best);
        dists.push(best_d);
    }
    (labels, dists)
}

/// Recomputes centroids as member means. Empty clusters are reseeded at the
/// point currently farthest from its own centroid (lowest index on ties),
/// which is then moved into the reseeded cluster.
fn update_centroids(x: &Matrix, labels: &mut [usize], centroids: &mut [f64], k: usize) {
    let dims = x.cols();
    let mut sums = vec![0.0; k * dims];
    let mut counts = vec![0usize; k];
    for (row, &c) in x.row_iter().zip(labels.iter()) {
        counts[c] += 1;
        for (s, v) in sums[c * dims..(c + 1) * dims].iter_mut().zip(row) {
            *s += v;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            let n = counts[j] as f64;
            for (c, s) in centroids[j * dims..(j + 1) * dims]
                .iter_mut()
                .zip(&sums[j * dims..(j + 1) * dims])
            {
                *c = s / n;
            }
        }
    }
    if counts.iter().all(|&c| c > 0) {
        return;
    }

    let mut own: Vec<f64> = x
        .row_iter()
        .zip(labels.iter())
        .map(|(row, &c)| squared_distance(row, &centroids[c * dims..(c + 1) * dims]))
        .collect();
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut far = 0;
        for i in 1..own.len() {
            if own[i] > own[far] {
                far = i;
            }
        }
        counts[labels[far]] -= 1;
        labels[far] = j;
        counts[j] = 1;
        centroids[j * dims..(j + 1) * dims].copy_from_slice(x.row(far));
        own[far] = 0.0;
    }
}

/// Lloyd's algorithm from k-means++ seeds.
///
/// Stops when assignments stop changing, when the relative inertia
/// improvement is at most `tol`, or after `max_iter` update steps. The
/// returned centroids are the member means of the returned assignments.
pub fn kmeans(x: &Matrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<Clustering> {
    check_k(x, k)?;
    if max_iter == 0 {
        return Err(Error::config("max_iter must be at least 1"));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::config(format!("tolerance {tol} must be non-negative")));
    }
    let dims = x.cols();
    let mut centroids = kmeans_pp_init(x, k, seed)?.into_vec();
    let (mut labels, dists) = assign_raw(x, &centroids, dims);
    let mut inertia: f64 = dists.iter().sum();
    let mut history = vec![inertia];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        update_centroids(x, &mut labels, &mut centroids, k);
        let (next, dists) = assign_raw(x, &centroids, dims);
        let next_inertia: f64 = dists.iter().sum();
        iterations += 1;
        history.push(next_inertia);
        let unchanged = next == labels;
        let improvement = inertia - next_inertia;
        labels = next;
        let previous = inertia;
        inertia = next_inertia;
        if unchanged {
            converged = true;
            break;
        }
        if improvement <= tol * previous {
            break;
        }
    }

    // Final centroids are the member means of the final assignment.
    let mut final_labels = labels.clone();
    update_centroids(x, &mut final_labels, &mut centroids, k);
    if final_labels == labels {
        let own: f64 = x
            .row_iter()
            .zip(&labels)
            .map(|(row, &c)| squared_distance(row, &centroids[c * dims..(c + 1) * dims]))
            .sum();
        inertia = own;
    } else {
        // An empty cluster was reseeded; keep the reseeded labelling.
        labels = final_labels;
        inertia = x
            .row_iter()
            .zip(&labels)
            .map(|(row, &c)| squared_distance(row, &centroids[c * dims..(c + 1) * dims]))
            .sum();
        converged = false;
    }

    Ok(Clustering {
        k,
        centroids,
        dims,
        assignments: labels,
        inertia,
        iterations_run: iterations,
        converged,
        inertia_history: history,
    })
}
