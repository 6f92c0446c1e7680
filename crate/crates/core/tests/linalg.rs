mod common;

use common::{classic_jacobi, naive_covariance, random_matrix, random_rows, rng, unsigned_gap};
use proptest::prelude::*;
use rand::Rng;
use repair_select::linalg::{covariance, mean_center, pca_fit, pca_transform, sym_eigen, Matrix, PcaModel, PcaTarget};

fn reconstruct(model: &PcaModel, reduced: &Matrix) -> Matrix {
    let mut out = reduced.matmul(&model.components).unwrap();
    for i in 0..out.rows() {
        for (v, mu) in out.row_mut(i).iter_mut().zip(&model.mean) {
            *v += mu;
        }
    }
    out
}

fn max_gap(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn centered_columns_sum_to_zero() {
    let mut r = rng(1);
    let m = random_matrix(&mut r, 5, 3);
    let (c, mean) = mean_center(&m).unwrap();
    for j in 0..3 {
        let col: f64 = (0..5).map(|i| c[(i, j)]).sum();
        assert!(col.abs() < 1e-12, "column {j} sums to {col}");
        let direct: f64 = (0..5).map(|i| m[(i, j)]).sum::<f64>() / 5.0;
        assert!((direct - mean[j]).abs() < 1e-15);
    }
}

#[test]
fn covariance_matches_double_loop() {
    let mut r = rng(2);
    let rows = random_rows(&mut r, 8, 4);
    let m = Matrix::from_rows(&rows).unwrap();
    let (c, _) = mean_center(&m).unwrap();
    let s = covariance(&c).unwrap();
    let oracle = naive_covariance(&rows);
    for a in 0..4 {
        for b in 0..4 {
            assert!((s[(a, b)] - oracle[a][b]).abs() < 1e-12);
            assert_eq!(s[(a, b)], s[(b, a)]);
        }
        assert!(s[(a, a)] >= 0.0);
    }
}

fn random_symmetric(r: &mut rand_chacha::ChaCha8Rng, d: usize) -> Matrix {
    let mut s = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = r.random_range(-5.0..5.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

#[test]
fn eigen_residuals_on_random_symmetric_matrices() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let d = r.random_range(1..=10);
        let s = random_symmetric(&mut r, d);
        let e = sym_eigen(&s).unwrap();
        let sum: f64 = e.values.iter().sum();
        assert!((sum - s.trace()).abs() < 1e-9);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..d {
            let x = e.vector(i);
            let resid = (0..d)
                .map(|row| ((0..d).map(|c| s[(row, c)] * x[c]).sum::<f64>() - e.values[i] * x[row]).abs())
                .fold(0.0, f64::max);
            assert!(resid <= 1e-8 * (1.0 + e.values[i].abs()), "residual {resid}");
        }
        let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
        assert!(max_gap(&vtv, &Matrix::identity(d)) <= 1e-8);
    }
}

#[test]
fn eigen_sign_rule() {
    let mut r = rng(4);
    for _ in 0..200 {
        let d = r.random_range(1..=8);
        let e = sym_eigen(&random_symmetric(&mut r, d)).unwrap();
        for i in 0..d {
            let v = e.vector(i);
            let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let lead = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-12)).unwrap();
            assert!(v[lead] > 0.0);
        }
    }
}

/// Eight points at `±a_j` along four orthogonal axes, rotated by a random
/// orthogonal matrix. The sample covariance is exactly `Q diag(spectrum) Qᵀ`.
fn planted(spectrum: [f64; 4], seed: u64) -> Matrix {
    let mut r = rng(seed);
    let sym: Vec<Vec<f64>> = {
        let s = random_symmetric(&mut r, 4);
        (0..4).map(|i| (0..4).map(|j| s[(i, j)]).collect()).collect()
    };
    let (_, q) = classic_jacobi(&sym);
    let n = 8.0;
    let mut rows = Vec::new();
    for (axis, lambda) in spectrum.iter().enumerate() {
        let a = (lambda * (n - 1.0) / 2.0).sqrt();
        for sign in [1.0, -1.0] {
            rows.push((0..4).map(|c| sign * a * q[axis][c] + 3.0).collect::<Vec<f64>>());
        }
    }
    Matrix::from_rows(&rows).unwrap()
}

#[test]
fn planted_spectrum_threshold() {
    let m = planted([4.0, 2.0, 1.0, 1.0], 5);
    let model = pca_fit(&m, PcaTarget::VarianceThreshold(0.75)).unwrap();
    assert_eq!(model.dims(), 2);
    for (got, want) in model.spectrum.iter().zip([4.0, 2.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    let model = pca_fit(&m, PcaTarget::VarianceThreshold(0.76)).unwrap();
    assert_eq!(model.dims(), 3);
}

#[test]
fn full_rank_ratios_sum_to_one_and_round_trip() {
    let mut r = rng(6);
    let m = random_matrix(&mut r, 30, 5);
    let model = pca_fit(&m, PcaTarget::FixedDims(5)).unwrap();
    assert!((model.explained_variance_ratio.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let reduced = pca_transform(&model, &m).unwrap();
    assert!(max_gap(&reconstruct(&model, &reduced), &m) < 1e-8);
}

#[test]
fn planted_rank_two_reconstructs_exactly() {
    let mut r = rng(7);
    let basis = random_rows(&mut r, 2, 6);
    let rows: Vec<Vec<f64>> = (0..25)
        .map(|_| {
            let (a, b): (f64, f64) = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
            (0..6).map(|j| 1.5 + a * basis[0][j] + b * basis[1][j]).collect()
        })
        .collect();
    let m = Matrix::from_rows(&rows).unwrap();
    let model = pca_fit(&m, PcaTarget::FixedDims(2)).unwrap();
    let reduced = pca_transform(&model, &m).unwrap();
    assert_eq!(reduced.cols(), 2);
    assert!(max_gap(&reconstruct(&model, &reduced), &m) < 1e-8);
    // Asking for more than the rank clamps to it.
    assert_eq!(pca_fit(&m, PcaTarget::FixedDims(6)).unwrap().dims(), 2);
}

#[test]
fn mirrored_data_has_identical_components() {
    let mut r = rng(8);
    for _ in 0..20 {
        let m = random_matrix(&mut r, 12, 4);
        let (c, mean) = mean_center(&m).unwrap();
        let mirror: Vec<Vec<f64>> = (0..12).map(|i| (0..4).map(|j| mean[j] - c[(i, j)]).collect()).collect();
        let mut both: Vec<Vec<f64>> = (0..12).map(|i| m.row(i).to_vec()).collect();
        both.extend(mirror.iter().cloned());
        let a = pca_fit(&m, PcaTarget::FixedDims(4)).unwrap();
        let b = pca_fit(&Matrix::from_rows(&mirror).unwrap(), PcaTarget::FixedDims(4)).unwrap();
        let u = pca_fit(&Matrix::from_rows(&both).unwrap(), PcaTarget::FixedDims(4)).unwrap();
        assert!(max_gap(&a.components, &b.components) < 1e-8);
        assert!(max_gap(&a.components, &u.components) < 1e-8);
    }
}

#[test]
fn total_variance_is_conserved() {
    let mut r = rng(9);
    for _ in 0..50 {
        let n = r.random_range(2..40);
        let d = r.random_range(1..8);
        let m = random_matrix(&mut r, n, d);
        let model = pca_fit(&m, PcaTarget::FixedDims(d)).unwrap();
        let (c, _) = mean_center(&m).unwrap();
        let trace = covariance(&c).unwrap().trace();
        assert!((model.spectrum.iter().sum::<f64>() - trace).abs() < 1e-9);
    }
}

#[test]
fn components_agree_with_classic_jacobi() {
    let mut r = rng(10);
    for _ in 0..30 {
        let n = r.random_range(12..40);
        let d = r.random_range(2..8);
        let rows = random_rows(&mut r, n, d);
        let model = pca_fit(&Matrix::from_rows(&rows).unwrap(), PcaTarget::FixedDims(d)).unwrap();
        let (values, vectors) = classic_jacobi(&naive_covariance(&rows));
        for i in 0..d {
            assert!((model.spectrum[i] - values[i]).abs() < 1e-8);
            assert!(unsigned_gap(model.components.row(i), &vectors[i]) < 1e-8);
        }
    }
}

proptest! {
    #[test]
    fn components_are_orthonormal(seed in any::<u64>(), n in 2usize..30, d in 1usize..8) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r, n, d);
        let model = pca_fit(&m, PcaTarget::FixedDims(d)).unwrap();
        let k = model.dims();
        let g = model.components.matmul(&model.components.transpose()).unwrap();
        prop_assert!(max_gap(&g, &Matrix::identity(k)) <= 1e-8);
        prop_assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(model.explained_variance_ratio.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}
