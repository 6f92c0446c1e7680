use rand::seq::index;

use super::{check_alpha, rng, target_size, SelectionManifest, Strategy};
use crate::error::{Error, Result};

/// Uniform sample of `target_size(n, alpha)` indices without replacement.
pub fn select_random(n: usize, alpha: f64, seed: u64) -> Result<SelectionManifest> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::input("cannot select from an empty dataset"));
    }
    let m = target_size(n, alpha);
    let picked = index::sample(&mut rng(seed), n, m).into_vec();
    let mut manifest = SelectionManifest::new(Strategy::Random, alpha, n, picked);
    manifest.seed = Some(seed);
    Ok(manifest)
}

fn check_scores(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::input("score vector is empty"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::input(format!("score {i} is not finite")));
    }
    Ok(())
}

/// The `target_size` highest-scoring samples.
pub fn select_grand(scores: &[f64], alpha: f64) -> Result<SelectionManifest> {
    check_alpha(alpha)?;
    check_scores(scores)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(target_size(n, alpha));
    Ok(SelectionManifest::new(Strategy::GraNd, alpha, n, order))
}

/// Bin index of every score: `[min, max]` cut into `bins` equal-width
/// intervals, the last one closed. Identical scores all land in bin 0.
pub fn ccs_bins(scores: &[f64], bins: usize) -> Result<Vec<usize>> {
    check_scores(scores)?;
    if bins == 0 {
        return Err(Error::config("ccs_bins must be at least 1"));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    Ok(scores
        .iter()
        .map(|&s| {
            if span <= 0.0 {
                0
            } else {
                let pos = ((s - lo) * bins as f64 / span).floor();
                (pos.max(0.0) as usize).min(bins - 1)
            }
        })
        .collect())
}

/// Per-bin quotas for coverage-centric selection.
///
/// `total` is split evenly across all bins by largest remainder (leftover
/// units to the lowest bin ids). Quota beyond a bin's population is then
/// handed out one unit at a time, cycling through the bins with spare room in
/// descending population order.
pub fn ccs_quotas(populations: &[usize], total: usize) -> Vec<usize> {
    let bins = populations.len();
    let capacity: usize = populations.iter().sum();
    let total = total.min(capacity);
    let mut quotas: Vec<usize> = (0..bins)
        .map(|b| total / bins + usize::from(b < total % bins))
        .collect();

    let mut excess = 0;
    for (q, &p) in quotas.iter_mut().zip(populations) {
        if *q > p {
            excess += *q - p;
            *q = p;
        }
    }
    let mut order: Vec<usize> = (0..bins).collect();
    order.sort_by(|&a, &b| populations[b].cmp(&populations[a]).then(a.cmp(&b)));
    while excess > 0 {
        for &b in &order {
            if excess == 0 {
                break;
            }
            if quotas[b] < populations[b] {
                quotas[b] += 1;
                excess -= 1;
            }
        }
    }
    quotas
}

/// Coverage-centric selection: equal-width difficulty bins, uniform draws
/// within each bin.
pub fn select_ccs(scores: &[f64], alpha: f64, bins: usize, seed: u64) -> Result<SelectionManifest> {
    check_alpha(alpha)?;
    let labels = ccs_bins(scores, bins)?;
    let n = scores.len();
    let mut members = vec![Vec::new(); bins];
    for (i, &b) in labels.iter().enumerate() {
        members[b].push(i);
    }
    let populations: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = ccs_quotas(&populations, target_size(n, alpha));

    let mut rng = rng(seed);
    let mut picked = Vec::with_capacity(quotas.iter().sum());
    for (group, &q) in members.iter().zip(&quotas) {
        if q == 0 {
            continue;
        }
        picked.extend(index::sample(&mut rng, group.len(), q).into_iter().map(|k| group[k]));
    }
    let mut manifest = SelectionManifest::new(Strategy::Ccs, alpha, n, picked);
    manifest.seed = Some(seed);
    Ok(manifest)
}
