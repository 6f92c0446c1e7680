use crate::error::{Error, Result};

use super::Matrix;

const SYMMETRY_TOL: f64 = 1e-9;
const OFF_DIAGONAL_REL_TOL: f64 = 1e-11;
const MAX_SWEEPS: usize = 100;
// Entries within this relative margin of the largest magnitude count as tied
// for the sign rule, so rounding noise cannot flip an eigenvector.
const SIGN_TIE_REL: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

impl SymEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|r| self.vectors[(r, i)]).collect()
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Iterates full sweeps of plane rotations until the off-diagonal Frobenius
/// norm drops to `1e-11 * ||S||_F`, giving up after 100 sweeps. Each
/// eigenvector is flipped so that its largest-magnitude entry is positive
/// (first such entry on ties).
pub fn sym_eigen(s: &Matrix) -> Result<SymEigen> {
    let n = s.rows();
    if s.cols() != n {
        return Err(Error::input(format!("matrix is {}x{}, not square", n, s.cols())));
    }
    let scale = s.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (s[(i, j)] - s[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::input(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    s[(i, j)],
                    s[(j, i)]
                )));
            }
        }
    }

    let mut a = s.clone();
    // Symmetrize exactly so rotations see one value per pair.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = OFF_DIAGONAL_REL_TOL * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::ConvergenceFailure { sweeps, off_norm: off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));

    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let max_abs = (0..n).fold(0.0_f64, |m, r| m.max(v[(r, src)].abs()));
        let lead = (0..n)
            .find(|&r| v[(r, src)].abs() >= max_abs * (1.0 - SIGN_TIE_REL))
            .unwrap_or(0);
        let sign = if v[(lead, src)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[(r, dst)] = sign * v[(r, src)];
        }
    }

    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `a[p][q]` with the rotation `A <- JᵀAJ`, accumulating `V <- VJ`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.rows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(s: &Matrix, e: &SymEigen, i: usize) -> f64 {
        let x = e.vector(i);
        let n = s.rows();
        (0..n)
            .map(|r| {
                let sx: f64 = (0..n).map(|c| s[(r, c)] * x[c]).sum();
                (sx - e.values[i] * x[r]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn diagonal_input() {
        let s = Matrix::from_rows(&[[1.0, 0.0], [0.0, 3.0]]).unwrap();
        let e = sym_eigen(&s).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0]);
        assert_eq!(e.vector(1), vec![1.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // Characteristic polynomial (2-x)^2 - 1 = 0 gives 3 and 1.
        let s = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigen(&s).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - h).abs() < 1e-12 && (v0[1] - h).abs() < 1e-12);
        assert!((v1[0] - h).abs() < 1e-12 && (v1[1] + h).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let s = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_matrix() {
        let e = sym_eigen(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn dense_six_by_six() {
        let vals = [
            4.0, 1.0, -2.0, 0.5, 0.0, 3.0, //
            1.0, 2.0, 0.0, 1.5, -1.0, 0.2, //
            -2.0, 0.0, 5.0, 0.3, 0.7, -0.4, //
            0.5, 1.5, 0.3, -1.0, 2.0, 0.0, //
            0.0, -1.0, 0.7, 2.0, 3.0, 1.1, //
            3.0, 0.2, -0.4, 0.0, 1.1, 0.5,
        ];
        let s = Matrix::new(6, 6, vals.to_vec()).unwrap();
        let e = sym_eigen(&s).unwrap();
        let sum: f64 = e.values.iter().sum();
        assert!((sum - s.trace()).abs() < 1e-9);
        for i in 0..6 {
            assert!(residual(&s, &e, i) <= 1e-8 * (1.0 + e.values[i].abs()));
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
