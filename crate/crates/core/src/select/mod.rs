//! Subset selection strategies.
//!
//! Every strategy returns a [`SelectionManifest`] whose `selected` list is
//! sorted, distinct and exactly [`target_size`] long. Ties of any kind
//! (distance, score, apportionment remainder) go to the lower index or id.

mod kcenter;
mod saps;
mod scored;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kcenter::{covering_radius, kcenter_order, select_kcenter};
pub use saps::{boundary_mix, saps_quotas, select_saps, select_saps_soft};
pub use scored::{ccs_bins, ccs_quotas, select_ccs, select_grand, select_random};

pub const DEFAULT_CCS_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "kcenter")]
    KCenter,
    #[serde(rename = "grand")]
    GraNd,
    #[serde(rename = "ccs")]
    Ccs,
    #[serde(rename = "saps")]
    Saps,
    #[serde(rename = "saps-soft")]
    SapsSoft,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::KCenter => "kcenter",
            Strategy::GraNd => "grand",
            Strategy::Ccs => "ccs",
            Strategy::Saps => "saps",
            Strategy::SapsSoft => "saps-soft",
        }
    }

    /// Whether the strategy reads the embedding payload at all.
    pub fn needs_geometry(self) -> bool {
        matches!(self, Strategy::KCenter | Strategy::Saps | Strategy::SapsSoft)
    }

    /// Whether the strategy runs PCA and k-means before selecting.
    pub fn needs_clustering(self) -> bool {
        matches!(self, Strategy::Saps | Strategy::SapsSoft)
    }

    pub fn needs_scores(self) -> bool {
        matches!(self, Strategy::GraNd | Strategy::Ccs)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KCenterStart {
    /// Start from a point drawn uniformly with the selection seed.
    #[default]
    Seeded,
    FixedIndex(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub ccs_bins: usize,
    #[serde(default)]
    pub kcenter_start: KCenterStart,
    /// Share of each SAPS cluster quota taken farthest-first; the rest is
    /// taken nearest-first. `1.0` is plain SAPS.
    #[serde(default = "default_fraction")]
    pub boundary_fraction: f64,
}

fn default_bins() -> usize {
    DEFAULT_CCS_BINS
}

fn default_fraction() -> f64 {
    1.0
}

impl SelectionConfig {
    pub fn new(strategy: Strategy, alpha: f64, seed: u64) -> Self {
        SelectionConfig {
            strategy,
            alpha,
            seed,
            ccs_bins: DEFAULT_CCS_BINS,
            kcenter_start: KCenterStart::Seeded,
            boundary_fraction: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.ccs_bins == 0 {
            return Err(Error::config("ccs_bins must be at least 1"));
        }
        check_fraction(self.boundary_fraction)?;
        if self.boundary_fraction != 1.0 && self.strategy != Strategy::Saps {
            return Err(Error::config("boundary_fraction only applies to the saps strategy"));
        }
        Ok(())
    }
}

/// Where a recorded digest came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigestScope {
    /// The whole file.
    File,
    /// Only the header; the payload was never read.
    Header,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub embedding_sha256: Option<String>,
    pub embedding_digest_scope: Option<DigestScope>,
    pub scores_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub strategy: Strategy,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub boundary_fraction: Option<f64>,
    pub population: usize,
    pub target_size: usize,
    pub actual_size: usize,
    pub selected: Vec<usize>,
    /// Cluster id to selected members, for cluster-based strategies.
    pub per_cluster: Option<BTreeMap<usize, Vec<usize>>>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl SelectionManifest {
    pub(crate) fn new(strategy: Strategy, alpha: f64, population: usize, mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        SelectionManifest {
            strategy,
            alpha,
            seed: None,
            boundary_fraction: None,
            population,
            target_size: target_size(population, alpha),
            actual_size: selected.len(),
            selected,
            per_cluster: None,
            provenance: Provenance::default(),
        }
    }

    /// Checks distinctness, range, size bookkeeping and the per-cluster union.
    pub fn validate(&self) -> Result<()> {
        if self.actual_size != self.selected.len() {
            return Err(Error::input("actual_size does not match the selected list"));
        }
        if self.selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("selected indices must be strictly increasing"));
        }
        if let Some(&last) = self.selected.last() {
            if last >= self.population {
                return Err(Error::input(format!(
                    "index {last} out of range for population {}",
                    self.population
                )));
            }
        }
        if let Some(per) = &self.per_cluster {
            let mut union: Vec<usize> = per.values().flatten().copied().collect();
            union.sort_unstable();
            if union != self.selected {
                return Err(Error::input("per-cluster subsets do not union to the selection"));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config(format!("sampling ratio {alpha} is outside (0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_fraction(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::config(format!("boundary fraction {f} is outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `alpha * n` rounded half-up, clamped to `[1, n]`.
pub fn target_size(n: usize, alpha: f64) -> usize {
    // The slack absorbs representation error in products such as 0.15 * 10.
    let raw = (alpha * n as f64 + 0.5 + 1e-9).floor();
    (raw.max(1.0) as usize).min(n.max(1))
}

/// Largest-remainder apportionment of `total` proportional to `sizes`.
///
/// Floors of `total * size / sum` are handed out first, then one extra unit
/// each in descending remainder order (lower id on ties). Quotas are capped at
/// their size; any shortfall goes one unit at a time to the group with the
/// most spare capacity (lower id on ties).
pub fn apportion(sizes: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = sizes.iter().sum();
    let total = total.min(sum);
    if sum == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| total * s / sum).collect();
    let mut order: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(j, &s)| ((total * s) % sum, j)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = quotas.iter().sum();
    for &(_, j) in order.iter().take(total - assigned) {
        quotas[j] += 1;
    }

    let mut shortfall = 0;
    for (q, &s) in quotas.iter_mut().zip(sizes) {
        if *q > s {
            shortfall += *q - s;
            *q = s;
        }
    }
    while shortfall > 0 {
        let j = (0..sizes.len())
            .max_by(|&a, &b| (sizes[a] - quotas[a]).cmp(&(sizes[b] - quotas[b])).then(b.cmp(&a)))
            .expect("non-empty");
        quotas[j] += 1;
        shortfall -= 1;
    }
    quotas
}
