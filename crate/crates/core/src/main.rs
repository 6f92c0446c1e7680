use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use repair_select::cluster::{kmeans, KMeansConfig, DEFAULT_K, DEFAULT_MAX_ITER, DEFAULT_TOL};
use repair_select::linalg::{pca_fit, pca_transform, PcaTarget};
use repair_select::metrics::{score_run, RepairScores};
use repair_select::pipeline::{
    self, formats, load_embeddings, load_manifest, render_manifest_human, render_scores_human, run_pipeline,
    save_embeddings, to_canonical_json, write_atomic, EvalPaths, PipelineConfig, ReportFormat,
};
use repair_select::select::{KCenterStart, SelectionConfig, Strategy, DEFAULT_CCS_BINS};
use repair_select::{Error, Result};

#[derive(Parser)]
#[command(
    name = "repair-select",
    version,
    about = "Select high-value subsets of repair data and score repairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project embeddings onto their leading principal components.
    Reduce(ReduceArgs),
    /// Cluster embeddings with k-means++ / Lloyd and write the clustering as JSON.
    Cluster(ClusterArgs),
    /// Run a selection strategy and write manifest.json and report.json.
    Select(Box<SelectArgs>),
    /// Compute RPS, RES and OPS from evaluation CSV files.
    Score(ScoreArgs),
    /// Print a saved manifest.
    Report(ReportArgs),
}

#[derive(Args)]
#[group(id = "target", required = false, multiple = false)]
struct DimsArgs {
    /// Keep exactly this many principal components.
    #[arg(long, group = "target")]
    dims: Option<usize>,
    /// Keep the fewest components reaching this cumulative variance ratio.
    #[arg(long, group = "target")]
    variance: Option<f64>,
}

impl DimsArgs {
    fn target(&self) -> PcaTarget {
        match (self.dims, self.variance) {
            (_, Some(t)) => PcaTarget::VarianceThreshold(t),
            (Some(k), None) => PcaTarget::FixedDims(k),
            (None, None) => PcaTarget::default(),
        }
    }
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    dims: DimsArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Kcenter,
    Grand,
    Ccs,
    Saps,
    SapsSoft,
    /// SAPS with a mix of boundary and center samples.
    Mix,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Machine,
    Human,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Machine => ReportFormat::Machine,
            FormatArg::Human => ReportFormat::Human,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Pipeline configuration as JSON (the `config_echo` of a report works).
    #[arg(long, conflicts_with_all = ["strategy", "input", "output_dir"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "config")]
    strategy: Option<StrategyArg>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CCS_BINS)]
    bins: usize,
    #[arg(long)]
    boundary_fraction: Option<f64>,
    /// Start k-center traversal at this index instead of a seeded random one.
    #[arg(long)]
    kcenter_start: Option<usize>,
    #[command(flatten)]
    dims: DimsArgs,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, required_unless_present = "config")]
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    output_dir: Option<PathBuf>,
    #[arg(long, requires_all = ["full", "partial"])]
    vanilla: Option<PathBuf>,
    #[arg(long, requires_all = ["vanilla", "partial"])]
    full: Option<PathBuf>,
    #[arg(long, requires_all = ["vanilla", "full"])]
    partial: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "machine")]
    format: FormatArg,
}

impl SelectArgs {
    fn into_config(self) -> Result<PipelineConfig> {
        if let Some(path) = &self.config {
            return PipelineConfig::load(path);
        }
        let strategy = match self.strategy.expect("required by clap") {
            StrategyArg::Random => Strategy::Random,
            StrategyArg::Kcenter => Strategy::KCenter,
            StrategyArg::Grand => Strategy::GraNd,
            StrategyArg::Ccs => Strategy::Ccs,
            StrategyArg::Saps | StrategyArg::Mix => Strategy::Saps,
            StrategyArg::SapsSoft => Strategy::SapsSoft,
        };
        if matches!(self.strategy, Some(StrategyArg::Mix)) && self.boundary_fraction.is_none() {
            return Err(Error::InvalidConfig("--strategy mix needs --boundary-fraction".into()));
        }
        let mut selection = SelectionConfig::new(strategy, self.alpha, self.seed);
        selection.ccs_bins = self.bins;
        selection.boundary_fraction = self.boundary_fraction.unwrap_or(1.0);
        if let Some(i) = self.kcenter_start {
            selection.kcenter_start = KCenterStart::FixedIndex(i);
        }
        let mut config = PipelineConfig::new(
            self.input.expect("required by clap"),
            selection,
            self.output_dir.expect("required by clap"),
        );
        config.score_path = self.scores;
        config.pca = self.dims.target();
        config.kmeans = KMeansConfig {
            k: self.k,
            max_iter: self.max_iter,
            tol: self.tol,
        };
        if let (Some(vanilla), Some(full), Some(partial)) = (self.vanilla, self.full, self.partial) {
            config.eval_paths = Some(EvalPaths { vanilla, full, partial });
        }
        config.epsilon = self.epsilon;
        config.report_format = self.format.into();
        Ok(config)
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    vanilla: PathBuf,
    #[arg(long)]
    full: PathBuf,
    /// One or more partial-repair records; each row is scored.
    #[arg(long)]
    partial: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "machine")]
    format: FormatArg,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "machine")]
    format: FormatArg,
}

fn reduce(args: ReduceArgs) -> Result<()> {
    let x = load_embeddings(&args.input)?;
    let model = pca_fit(&x, args.dims.target())?;
    let reduced = pca_transform(&model, &x)?;
    save_embeddings(&args.output, &reduced)?;
    let kept: f64 = model.explained_variance_ratio.iter().sum();
    eprintln!(
        "reduced {}x{} to {} dims, explained variance {:.4}{}",
        x.rows(),
        x.cols(),
        model.dims(),
        kept,
        model
            .clamped_from
            .map(|k| format!(" (requested {k}, clamped to rank)"))
            .unwrap_or_default()
    );
    Ok(())
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let x = load_embeddings(&args.input)?;
    let c = kmeans(&x, args.k, args.seed, args.max_iter, args.tol)?;
    write_atomic(&args.output, to_canonical_json(&c)?.as_bytes())?;
    eprintln!(
        "k={} inertia={:.6} iterations={} converged={}",
        c.k, c.inertia, c.iterations_run, c.converged
    );
    Ok(())
}

fn select(args: SelectArgs) -> Result<()> {
    let config = args.into_config()?;
    let report = run_pipeline(&config)?;
    match config.report_format {
        ReportFormat::Machine => print!("{}", to_canonical_json(&report)?),
        ReportFormat::Human => {
            print!("{}", render_manifest_human(&report.manifest));
            println!("sampling time   {:.3} s", report.timings.sampling_seconds);
            if let Some(s) = &report.scores {
                print!("{}", render_scores_human(std::slice::from_ref(s)));
            }
        }
    }
    Ok(())
}

fn single(path: &Path) -> Result<repair_select::metrics::EvalRecord> {
    let mut records = formats::load_evals(path)?;
    if records.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "{} must hold exactly one record, found {}",
            path.display(),
            records.len()
        )));
    }
    Ok(records.remove(0))
}

fn score(args: ScoreArgs) -> Result<()> {
    let vanilla = single(&args.vanilla)?;
    let full = single(&args.full)?;
    let partials = formats::load_evals(&args.partial)?;
    if partials.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} has no records",
            args.partial.display()
        )));
    }
    let scores = partials
        .iter()
        .map(|p| score_run(&vanilla, p, &full, args.alpha, args.epsilon))
        .collect::<Result<Vec<RepairScores>>>()?;
    match args.format {
        FormatArg::Machine => print!("{}", to_canonical_json(&scores)?),
        FormatArg::Human => print!("{}", render_scores_human(&scores)),
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    match args.format {
        FormatArg::Machine => print!("{}", pipeline::to_canonical_json(&manifest)?),
        FormatArg::Human => print!("{}", render_manifest_human(&manifest)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reduce(a) => reduce(a),
        Command::Cluster(a) => cluster(a),
        Command::Select(a) => select(*a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
