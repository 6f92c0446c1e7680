//! Reference implementations and fixtures shared by the integration tests.
//!
//! Everything here is deliberately naive and shares no code with the library
//! paths it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repair_select::linalg::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    Matrix::from_rows(&random_rows(rng, n, d)).unwrap()
}

/// Two tight blobs far apart; the first `a` rows belong to blob 0.
pub fn two_blobs(rng: &mut ChaCha8Rng, a: usize, b: usize, d: usize) -> Matrix {
    let mut rows = Vec::new();
    for i in 0..a + b {
        let offset = if i < a { 0.0 } else { 50.0 };
        rows.push(
            (0..d)
                .map(|_| offset + rng.random_range(-1.0..1.0))
                .collect::<Vec<f64>>(),
        );
    }
    Matrix::from_rows(&rows).unwrap()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Element-by-element covariance with the textbook double loop.
pub fn naive_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for r in rows {
                s += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
            cov[a][b] = s / (n as f64 - 1.0);
        }
    }
    cov
}

/// Classical Jacobi: always annihilate the largest off-diagonal entry.
/// Returns eigenvalues descending and matching unit eigenvectors (unsigned).
pub fn classic_jacobi(s: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = s.len();
    let mut a = s.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let norm: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..100_000 {
        let (mut p, mut q, mut big) = (0, 0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big <= 1e-15 * norm.max(1e-300) {
            break;
        }
        let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (sn, cs) = theta.sin_cos();
        for k in 0..n {
            let (x, y) = (a[k][p], a[k][q]);
            a[k][p] = cs * x - sn * y;
            a[k][q] = sn * x + cs * y;
        }
        for k in 0..n {
            let (x, y) = (a[p][k], a[q][k]);
            a[p][k] = cs * x - sn * y;
            a[q][k] = sn * x + cs * y;
        }
        for row in v.iter_mut() {
            let (x, y) = (row[p], row[q]);
            row[p] = cs * x - sn * y;
            row[q] = sn * x + cs * y;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = idx.iter().map(|&i| a[i][i]).collect();
    let vectors = idx.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (values, vectors)
}

/// Distance between two unit vectors up to sign.
pub fn unsigned_gap(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, m, &mut Vec::new(), &mut out);
    out
}

pub fn radius_of(points: &[Vec<f64>], centers: &[usize]) -> f64 {
    points
        .iter()
        .map(|p| {
            centers
                .iter()
                .map(|&c| dist(p, &points[c]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Smallest covering radius over every choice of `m` centers.
pub fn optimal_kcenter_radius(points: &[Vec<f64>], m: usize) -> f64 {
    subsets(points.len(), m)
        .iter()
        .map(|c| radius_of(points, c))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum sum of squared distances to cluster means over every labelling
/// of `points` into at most `k` groups.
pub fn optimal_partition_cost(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let d = points[0].len();
        let mut cost = 0.0;
        for g in 0..k {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == g)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mean: Vec<f64> = (0..d)
                .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64)
                .collect();
            cost += members.iter().map(|p| dist(p, &mean).powi(2)).sum::<f64>();
        }
        best = best.min(cost);
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Canonical form of a labelling: groups as sorted index lists, sorted.
pub fn partition(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups.sort();
    groups
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

/// A printed table cell: value and number of decimals shown.
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub value: f64,
    pub decimals: usize,
}

impl Cell {
    pub fn parse(s: &str) -> Option<Cell> {
        if s.is_empty() {
            return None;
        }
        let decimals = s.split_once('.').map_or(0, |(_, frac)| frac.len());
        Some(Cell {
            value: s.parse().ok()?,
            decimals,
        })
    }

    /// Half a unit in the last printed place, beyond what two-decimal
    /// rounding already accounts for.
    pub fn extra_rounding(&self) -> f64 {
        if self.decimals >= 2 {
            0.0
        } else {
            0.5 * 10f64.powi(-(self.decimals as i32))
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutcomeRow {
    pub model: String,
    pub method: String,
    pub strategy: String,
    pub ppl_lambada: Cell,
    pub ppl_wiki: Cell,
    pub toxicity: Cell,
    pub rps: Option<Cell>,
    pub ops: Cell,
}

#[derive(Debug, Clone)]
pub struct EfficiencyRow {
    pub model: String,
    pub method: String,
    pub strategy: String,
    pub res: Option<Cell>,
}

pub fn outcome_rows() -> Vec<OutcomeRow> {
    let mut r = csv::Reader::from_path(data_dir().join("outcomes.csv")).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            OutcomeRow {
                model: rec[0].to_string(),
                method: rec[1].to_string(),
                strategy: rec[2].to_string(),
                ppl_lambada: Cell::parse(&rec[3]).unwrap(),
                ppl_wiki: Cell::parse(&rec[4]).unwrap(),
                toxicity: Cell::parse(&rec[5]).unwrap(),
                rps: Cell::parse(&rec[6]),
                ops: Cell::parse(&rec[7]).unwrap(),
            }
        })
        .collect()
}

pub fn efficiency_rows() -> Vec<EfficiencyRow> {
    let mut r = csv::Reader::from_path(data_dir().join("efficiency.csv")).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            EfficiencyRow {
                model: rec[0].to_string(),
                method: rec[1].to_string(),
                strategy: rec[2].to_string(),
                res: Cell::parse(&rec[6]),
            }
        })
        .collect()
}

pub fn find<'a>(rows: &'a [OutcomeRow], model: &str, method: &str, strategy: &str) -> &'a OutcomeRow {
    rows.iter()
        .find(|r| r.model == model && r.method == method && r.strategy == strategy)
        .unwrap_or_else(|| panic!("no row {model}/{method}/{strategy}"))
}
