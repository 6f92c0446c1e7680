use std::collections::BTreeMap;

use rand::seq::index;

use super::{apportion, check_alpha, check_fraction, rng, target_size, SelectionManifest, Strategy};
use crate::cluster::Clustering;
use crate::error::Result;
use crate::linalg::{squared_distance, Matrix};

/// Per-cluster quotas: the global target apportioned by cluster size.
pub fn saps_quotas(clustering: &Clustering, alpha: f64) -> Vec<usize> {
    let n = clustering.assignments.len();
    apportion(&clustering.sizes(), target_size(n, alpha))
}

/// Members of each cluster sorted by descending distance to their centroid,
/// lower index first on ties.
fn ranked_members(clustering: &Clustering, x: &Matrix) -> Vec<Vec<usize>> {
    clustering
        .members()
        .into_iter()
        .enumerate()
        .map(|(j, members)| {
            let centroid = clustering.centroid(j);
            let dist: Vec<f64> = members.iter().map(|&i| squared_distance(x.row(i), centroid)).collect();
            let mut order: Vec<usize> = (0..members.len()).collect();
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(members[a].cmp(&members[b])));
            order.iter().map(|&k| members[k]).collect()
        })
        .collect()
}

fn finish(strategy: Strategy, alpha: f64, n: usize, per_cluster: BTreeMap<usize, Vec<usize>>) -> SelectionManifest {
    let selected: Vec<usize> = per_cluster.values().flatten().copied().collect();
    let mut manifest = SelectionManifest::new(strategy, alpha, n, selected);
    manifest.per_cluster = Some(per_cluster);
    manifest
}

/// Boundary-aware selection: within each cluster keep the members farthest
/// from the centroid, up to the cluster's quota.
pub fn select_saps(clustering: &Clustering, x: &Matrix, alpha: f64) -> Result<SelectionManifest> {
    boundary_mix(clustering, x, 1.0, alpha)
}

/// Like [`select_saps`] but takes `round(fraction * quota)` boundary members
/// per cluster and fills the rest of the quota with the members nearest the
/// centroid.
pub fn boundary_mix(clustering: &Clustering, x: &Matrix, fraction: f64, alpha: f64) -> Result<SelectionManifest> {
    check_alpha(alpha)?;
    check_fraction(fraction)?;
    clustering.check_against(x)?;
    let quotas = saps_quotas(clustering, alpha);
    let ranked = ranked_members(clustering, x);

    let mut per_cluster = BTreeMap::new();
    for (j, (members, &quota)) in ranked.iter().zip(&quotas).enumerate() {
        let boundary = ((fraction * quota as f64) + 0.5).floor() as usize;
        let boundary = boundary.min(quota);
        let center = quota - boundary;
        let mut chosen: Vec<usize> = members[..boundary].to_vec();
        chosen.extend(members[members.len() - center..].iter().rev());
        chosen.sort_unstable();
        per_cluster.insert(j, chosen);
    }
    let mut manifest = finish(Strategy::Saps, alpha, x.rows(), per_cluster);
    manifest.boundary_fraction = Some(fraction);
    Ok(manifest)
}

/// Same quotas as [`select_saps`], members drawn uniformly within clusters.
pub fn select_saps_soft(clustering: &Clustering, alpha: f64, seed: u64) -> Result<SelectionManifest> {
    check_alpha(alpha)?;
    clustering.check_labels()?;
    let quotas = saps_quotas(clustering, alpha);
    let mut rng = rng(seed);
    let mut per_cluster = BTreeMap::new();
    for (j, (members, &quota)) in clustering.members().iter().zip(&quotas).enumerate() {
        let mut chosen: Vec<usize> = index::sample(&mut rng, members.len(), quota)
            .into_iter()
            .map(|k| members[k])
            .collect();
        chosen.sort_unstable();
        per_cluster.insert(j, chosen);
    }
    let mut manifest = finish(Strategy::SapsSoft, alpha, clustering.assignments.len(), per_cluster);
    manifest.seed = Some(seed);
    Ok(manifest)
}
