use rand::Rng;

use super::{check_alpha, rng, target_size, KCenterStart, SelectionManifest, Strategy};
use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

/// Greedy farthest-point traversal of `m` points from `start`.
///
/// Each step adds the point whose distance to the chosen set is largest,
/// lowest index on ties.
pub fn kcenter_order(x: &Matrix, m: usize, start: usize) -> Result<Vec<usize>> {
    let n = x.rows();
    if start >= n {
        return Err(Error::config(format!(
            "k-center start {start} out of range for {n} samples"
        )));
    }
    let m = m.min(n);
    let mut order = Vec::with_capacity(m);
    let mut taken = vec![false; n];
    let mut gap: Vec<f64> = vec![f64::INFINITY; n];
    let mut next = start;
    while order.len() < m {
        order.push(next);
        taken[next] = true;
        let center = x.row(next);
        for (i, g) in gap.iter_mut().enumerate() {
            *g = g.min(squared_distance(x.row(i), center));
        }
        let mut best: Option<usize> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            if best.is_none_or(|b| gap[i] > gap[b]) {
                best = Some(i);
            }
        }
        match best {
            Some(b) => next = b,
            None => break,
        }
    }
    Ok(order)
}

/// Largest distance from any point to its nearest center.
pub fn covering_radius(x: &Matrix, centers: &[usize]) -> f64 {
    x.row_iter()
        .map(|p| {
            centers
                .iter()
                .map(|&c| squared_distance(p, x.row(c)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}

pub fn select_kcenter(x: &Matrix, alpha: f64, start: KCenterStart, seed: u64) -> Result<SelectionManifest> {
    check_alpha(alpha)?;
    let n = x.rows();
    let first = match start {
        KCenterStart::FixedIndex(i) => i,
        KCenterStart::Seeded => rng(seed).random_range(0..n),
    };
    let order = kcenter_order(x, target_size(n, alpha), first)?;
    let mut manifest = SelectionManifest::new(Strategy::KCenter, alpha, n, order);
    if start == KCenterStart::Seeded {
        manifest.seed = Some(seed);
    }
    Ok(manifest)
}
