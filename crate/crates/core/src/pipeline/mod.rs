//! Loading inputs, running reduce → cluster → select → score, and writing
//! manifests and reports.

pub mod formats;
mod report;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cluster::{kmeans, Clustering, KMeansConfig};
use crate::error::{Error, Result};
use crate::linalg::{pca_fit, pca_transform, Matrix, PcaTarget};
use crate::metrics::{score_run, RepairScores};
use crate::select::{
    boundary_mix, select_ccs, select_grand, select_kcenter, select_random, select_saps_soft, DigestScope, Provenance,
    SelectionConfig, SelectionManifest, Strategy,
};

pub use formats::{
    load_embeddings, load_evals, load_scores, load_scores_for, read_emb_header, read_embeddings, save_embeddings,
    sha256_hex, write_atomic, CountingReader, EmbHeader,
};
pub use report::{render_manifest_human, render_scores_human};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const CLUSTERING_FILE: &str = "clustering.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Machine,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPaths {
    pub vanilla: PathBuf,
    pub full: PathBuf,
    pub partial: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub embedding_path: PathBuf,
    #[serde(default)]
    pub score_path: Option<PathBuf>,
    #[serde(default)]
    pub eval_paths: Option<EvalPaths>,
    #[serde(default)]
    pub pca: PcaTarget,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    pub selection: SelectionConfig,
    /// Allowed toxicity degradation relative to the full repair.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub report_format: ReportFormat,
}

impl PipelineConfig {
    pub fn new(embedding_path: impl Into<PathBuf>, selection: SelectionConfig, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            embedding_path: embedding_path.into(),
            score_path: None,
            eval_paths: None,
            pca: PcaTarget::default(),
            kmeans: KMeansConfig::default(),
            selection,
            epsilon: None,
            output_dir: output_dir.into(),
            report_format: ReportFormat::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let config: PipelineConfig = serde_json::from_reader(BufReader::new(File::open(path)?))
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        match self.pca {
            PcaTarget::FixedDims(0) => return Err(Error::config("pca dims must be at least 1")),
            PcaTarget::VarianceThreshold(t) if !(t > 0.0 && t <= 1.0) => {
                return Err(Error::config(format!("variance threshold {t} is outside (0, 1]")))
            }
            _ => {}
        }
        if self.kmeans.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.kmeans.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        if self.kmeans.tol.is_nan() || self.kmeans.tol < 0.0 {
            return Err(Error::config("tol must be non-negative"));
        }
        if self.selection.strategy.needs_scores() && self.score_path.is_none() {
            return Err(Error::config(format!(
                "strategy {} needs a score file",
                self.selection.strategy
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::config(format!("epsilon {e} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Wall-clock seconds per stage, millisecond resolution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub reduce_seconds: f64,
    pub cluster_seconds: f64,
    pub select_seconds: f64,
    /// Everything between loaded inputs and a finished manifest.
    pub sampling_seconds: f64,
    /// Externally measured repair time, when supplied.
    pub repair_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSummary {
    /// `pca` or `identity` when the data had no variance to reduce.
    pub method: String,
    pub input_dims: usize,
    pub output_dims: usize,
    pub clamped_from: Option<usize>,
    pub cumulative_variance_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSummary {
    pub k: usize,
    pub requested_k: usize,
    pub inertia: f64,
    pub iterations_run: usize,
    pub converged: bool,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: SelectionManifest,
    pub manifest_sha256: String,
    pub scores: Option<RepairScores>,
    pub reduction: Option<ReductionSummary>,
    pub clustering: Option<ClusteringSummary>,
    /// Bytes read from the embedding file.
    pub embedding_bytes_read: u64,
    pub timings: Timings,
    pub config_echo: PipelineConfig,
}

/// Serializes with sorted object keys and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn save_manifest(path: &Path, manifest: &SelectionManifest) -> Result<()> {
    write_atomic(path, to_canonical_json(manifest)?.as_bytes())
}

pub fn load_manifest(path: &Path) -> Result<SelectionManifest> {
    let text = fs::read_to_string(path)?;
    let manifest: SelectionManifest = serde_json::from_str(&text).map_err(|e| Error::FormatLine {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })?;
    manifest.validate()?;
    Ok(manifest)
}

fn seconds(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1000.0).round() / 1000.0
}

struct Inputs {
    n: usize,
    embeddings: Option<Matrix>,
    bytes_read: u64,
    provenance: Provenance,
    scores: Option<Vec<f64>>,
}

fn load_inputs(config: &PipelineConfig) -> Result<Inputs> {
    let strategy = config.selection.strategy;
    let mut provenance = Provenance::default();
    let (n, embeddings, bytes_read) = if strategy.needs_geometry() {
        let bytes = fs::read(&config.embedding_path)?;
        provenance.embedding_sha256 = Some(sha256_hex(&bytes));
        provenance.embedding_digest_scope = Some(DigestScope::File);
        let m = read_embeddings(&mut &bytes[..])?;
        (m.rows(), Some(m), bytes.len() as u64)
    } else {
        let mut r = CountingReader::new(File::open(&config.embedding_path)?);
        let header = read_emb_header(&mut r)?;
        let mut raw = formats::EMB_MAGIC.to_vec();
        raw.extend_from_slice(&header.rows.to_le_bytes());
        raw.extend_from_slice(&header.cols.to_le_bytes());
        provenance.embedding_sha256 = Some(sha256_hex(&raw));
        provenance.embedding_digest_scope = Some(DigestScope::Header);
        (header.rows as usize, None, r.bytes_read())
    };

    let scores = if strategy.needs_scores() {
        let path = config.score_path.as_ref().expect("validated");
        let bytes = fs::read(path)?;
        provenance.scores_sha256 = Some(sha256_hex(&bytes));
        let text = String::from_utf8(bytes).map_err(|e| Error::FormatAt {
            offset: e.utf8_error().valid_up_to() as u64,
            message: "score file is not UTF-8".into(),
        })?;
        let scores = formats::parse_scores(&text)?;
        if scores.len() != n {
            return Err(Error::input(format!(
                "{} has {} scores but the embeddings have {n} samples",
                path.display(),
                scores.len()
            )));
        }
        Some(scores)
    } else {
        None
    };

    Ok(Inputs {
        n,
        embeddings,
        bytes_read,
        provenance,
        scores,
    })
}

/// PCA with the configured target; data without any variance passes through
/// unreduced.
fn reduce(x: &Matrix, target: PcaTarget) -> Result<(Matrix, ReductionSummary)> {
    match pca_fit(x, target) {
        Ok(model) => {
            let reduced = pca_transform(&model, x)?;
            let summary = ReductionSummary {
                method: "pca".into(),
                input_dims: x.cols(),
                output_dims: model.dims(),
                clamped_from: model.clamped_from,
                cumulative_variance_ratio: Some(model.explained_variance_ratio.iter().sum()),
            };
            Ok((reduced, summary))
        }
        Err(Error::DegenerateInput(_)) => {
            let summary = ReductionSummary {
                method: "identity".into(),
                input_dims: x.cols(),
                output_dims: x.cols(),
                clamped_from: None,
                cumulative_variance_ratio: None,
            };
            Ok((x.clone(), summary))
        }
        Err(e) => Err(e),
    }
}

/// Everything a run produces, before anything is written.
pub struct RunOutput {
    pub report: RunReport,
    pub clustering: Option<Clustering>,
}

/// Runs the configured selection without touching the output directory.
pub fn execute(config: &PipelineConfig) -> Result<RunOutput> {
    config.validate()?;
    let sel = &config.selection;
    let inputs = load_inputs(config)?;

    let mut timings = Timings::default();
    let mut reduction = None;
    let mut clustering = None;
    let sampling_start = Instant::now();

    let mut manifest = match sel.strategy {
        Strategy::Random => timed(&mut timings.select_seconds, || {
            select_random(inputs.n, sel.alpha, sel.seed)
        })?,
        Strategy::GraNd => {
            let scores = inputs.scores.as_deref().expect("loaded");
            timed(&mut timings.select_seconds, || select_grand(scores, sel.alpha))?
        }
        Strategy::Ccs => {
            let scores = inputs.scores.as_deref().expect("loaded");
            timed(&mut timings.select_seconds, || {
                select_ccs(scores, sel.alpha, sel.ccs_bins, sel.seed)
            })?
        }
        Strategy::KCenter => {
            let x = inputs.embeddings.as_ref().expect("loaded");
            timed(&mut timings.select_seconds, || {
                select_kcenter(x, sel.alpha, sel.kcenter_start, sel.seed)
            })?
        }
        Strategy::Saps | Strategy::SapsSoft => {
            let x = inputs.embeddings.as_ref().expect("loaded");
            let (reduced, summary) = timed(&mut timings.reduce_seconds, || reduce(x, config.pca))?;
            reduction = Some(summary);
            let k = config.kmeans.k.min(reduced.rows());
            let c = timed(&mut timings.cluster_seconds, || {
                kmeans(&reduced, k, sel.seed, config.kmeans.max_iter, config.kmeans.tol)
            })?;
            let m = timed(&mut timings.select_seconds, || {
                if sel.strategy == Strategy::Saps {
                    boundary_mix(&c, &reduced, sel.boundary_fraction, sel.alpha)
                } else {
                    select_saps_soft(&c, sel.alpha, sel.seed)
                }
            })?;
            clustering = Some(c);
            m
        }
    };
    timings.sampling_seconds = seconds(sampling_start);

    manifest.seed = Some(sel.seed);
    manifest.provenance = inputs.provenance;
    manifest.validate()?;

    let scores = match &config.eval_paths {
        Some(paths) => {
            let vanilla = formats::load_single_eval(&paths.vanilla)?;
            let full = formats::load_single_eval(&paths.full)?;
            let partial = formats::load_single_eval(&paths.partial)?;
            Some(score_run(&vanilla, &partial, &full, sel.alpha, config.epsilon)?)
        }
        None => None,
    };

    let manifest_sha256 = sha256_hex(to_canonical_json(&manifest)?.as_bytes());
    let clustering_summary = clustering.as_ref().map(|c: &Clustering| ClusteringSummary {
        k: c.k,
        requested_k: config.kmeans.k,
        inertia: c.inertia,
        iterations_run: c.iterations_run,
        converged: c.converged,
        sizes: c.sizes(),
    });

    Ok(RunOutput {
        report: RunReport {
            manifest,
            manifest_sha256,
            scores,
            reduction,
            clustering: clustering_summary,
            embedding_bytes_read: inputs.bytes_read,
            timings,
            config_echo: config.clone(),
        },
        clustering,
    })
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    *slot = seconds(start);
    out
}

/// Runs the pipeline and writes `manifest.json`, `report.json` and, for
/// cluster-based strategies, `clustering.json` into the output directory.
///
/// Nothing is written unless every stage succeeded; each file is replaced
/// atomically.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    let out = execute(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;

    let mut files: BTreeMap<&str, String> = BTreeMap::new();
    files.insert(MANIFEST_FILE, to_canonical_json(&out.report.manifest)?);
    files.insert(REPORT_FILE, to_canonical_json(&out.report)?);
    if let Some(c) = &out.clustering {
        files.insert(CLUSTERING_FILE, to_canonical_json(c)?);
    }
    for (name, body) in &files {
        write_atomic(&dir.join(name), body.as_bytes())?;
    }
    Ok(out.report)
}

pub fn load_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::FormatLine {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}
