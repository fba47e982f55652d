//! Command-line front end: `select`, `score`, `synth` and `evaluate`.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input file, 3 bad
//! configuration or usage.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use datatailor::selection::{self, PrincipleMetrics, ScoredSample, SelectionConfig, Threads};
use datatailor::synth::{self, SynthSpec};
use datatailor::{container, Dataset, Error as CoreError, UniquenessAggregation, WardVariant};
use serde::Serialize;

pub mod format;

pub use format::fmt_g9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    fn input(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

/// Classifies an error raised while running the pipeline on loaded data.
fn pipeline_error(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidArgument(_) => CliError::Config(e.to_string()),
        CoreError::Io(_) => CliError::Internal(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "datatailor",
    version,
    about = "Coreset selection for multimodal instruction data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a coreset; writes selection.json and scores.csv into --out.
    Select {
        container: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score every sample; writes a CSV to --out.
    Score {
        container: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic container from a JSON spec.
    Synth {
        spec: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compute principle metrics of a subset (one id per line).
    Evaluate {
        container: PathBuf,
        subset: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON selection config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (select) or file (score, synth, evaluate).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, a positive integer or "auto".
    #[arg(long)]
    pub threads: Option<String>,
    /// Fraction of the dataset to keep, in (0, 1]
    #[arg(long)]
    pub k: Option<f64>,
    /// Dendrogram cut as a fraction of the largest merge cost, in (0, 1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Generator seed (synth only)
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    fn resolve_config(&self) -> CliResult<SelectionConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => SelectionConfig::default(),
        };
        if let Some(t) = &self.threads {
            cfg.threads = parse_threads(t).ok_or_else(|| {
                CliError::Config(format!("--threads must be a positive integer or \"auto\", got {t:?}"))
            })?;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code. Messages go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Select { container, common } => cmd_select(container, common),
        Command::Score { container, common } => cmd_score(container, common),
        Command::Synth { spec, common } => cmd_synth(spec, common),
        Command::Evaluate {
            container,
            subset,
            common,
        } => cmd_evaluate(container, subset, common),
    }
}

fn load(path: &Path) -> CliResult<Dataset> {
    container::load_container(path).map_err(|e| CliError::input(path, e))
}

/// Configuration echoed into selection.json. Thread count is left out so the
/// file does not depend on how the run was parallelized.
#[derive(Serialize)]
struct ConfigEcho {
    k: f64,
    lambda: f64,
    ward_variant: WardVariant,
    uniqueness_aggregation: UniquenessAggregation,
}

#[derive(Serialize)]
struct PlanEntry<'a> {
    task: &'a str,
    x_p: f64,
    size: usize,
    k_p: f64,
    count: usize,
}

#[derive(Serialize)]
struct MetricsOut {
    size: usize,
    #[serde(flatten)]
    metrics: PrincipleMetrics,
}

#[derive(Serialize)]
struct SelectionOut<'a> {
    config: ConfigEcho,
    plan: Vec<PlanEntry<'a>>,
    selected: &'a [u64],
    metrics: MetricsOut,
}

pub fn cmd_select(container: &Path, common: &CommonArgs) -> CliResult<()> {
    let cfg = common.resolve_config()?;
    let dataset = load(container)?;
    let result = selection::select(&dataset, &cfg).map_err(pipeline_error)?;
    let metrics = if result.selected.is_empty() {
        // round(k |S|) can be zero for tiny datasets
        PrincipleMetrics {
            mean_informativeness: 0.0,
            uniqueness_proxy: 0.0,
            representativeness_proxy: 0.0,
            cluster_coverage: 0.0,
        }
    } else {
        selection::evaluate_subset(&dataset, &result.selected, &result.clusters).map_err(pipeline_error)?
    };

    let out = SelectionOut {
        config: ConfigEcho {
            k: cfg.k,
            lambda: cfg.lambda,
            ward_variant: cfg.ward_variant,
            uniqueness_aggregation: cfg.uniqueness_aggregation,
        },
        plan: result
            .plan
            .tasks
            .iter()
            .map(|t| PlanEntry {
                task: &dataset.tasks[t.task],
                x_p: t.x_p,
                size: t.size,
                k_p: t.k_p,
                count: t.count,
            })
            .collect(),
        selected: &result.selected,
        metrics: MetricsOut {
            size: result.selected.len(),
            metrics,
        },
    };
    let json = to_json(&out)?;
    let csv = scores_csv(&dataset, &result.scored, Some(&result.selected));

    let dir = common.out_or(".");
    fs::create_dir_all(&dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    write_all_atomic(&[
        (dir.join("selection.json"), json.into_bytes()),
        (dir.join("scores.csv"), csv.into_bytes()),
    ])
}

pub fn cmd_score(container: &Path, common: &CommonArgs) -> CliResult<()> {
    let cfg = common.resolve_config()?;
    let dataset = load(container)?;
    let scores = selection::score(&dataset, &cfg).map_err(pipeline_error)?;
    let csv = scores_csv(&dataset, &scores.scored, None);
    write_all_atomic(&[(common.out_or("scores.csv"), csv.into_bytes())])
}

pub fn cmd_synth(spec_path: &Path, common: &CommonArgs) -> CliResult<()> {
    let cfg = common.resolve_config()?;
    let text = fs::read_to_string(spec_path).map_err(|e| CliError::input(spec_path, e))?;
    let spec: SynthSpec = serde_json::from_str(&text).map_err(|e| CliError::input(spec_path, e))?;
    let (dataset, _) = synth::generate(&spec, cfg.seed).map_err(|e| CliError::input(spec_path, e))?;
    let bytes = container::encode(&dataset).map_err(|e| CliError::Internal(e.to_string()))?;
    write_all_atomic(&[(common.out_or("synth.dtlr"), bytes)])
}

pub fn cmd_evaluate(container: &Path, subset_path: &Path, common: &CommonArgs) -> CliResult<()> {
    let cfg = common.resolve_config()?;
    let dataset = load(container)?;
    let subset = read_subset(subset_path)?;
    let scores = selection::score(&dataset, &cfg).map_err(pipeline_error)?;
    let metrics = selection::evaluate_subset(&dataset, &subset, &scores.clusters).map_err(|e| match e {
        CoreError::UnknownId(_) | CoreError::EmptySubset => CliError::input(subset_path, e),
        e => pipeline_error(e),
    })?;
    let mut distinct = subset.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let json = to_json(&MetricsOut {
        size: distinct.len(),
        metrics,
    })?;
    write_all_atomic(&[(common.out_or("metrics.json"), json.into_bytes())])
}

/// One id per line; blank lines and surrounding whitespace are ignored.
pub fn read_subset(path: &Path) -> CliResult<Vec<u64>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim()
                .parse::<u64>()
                .map_err(|e| CliError::input(path, format!("line {}: {:?} is not an id: {e}", n + 1, l.trim())))
        })
        .collect()
}

pub const SCORE_COLUMNS: [&str; 9] = [
    "sample_id",
    "task",
    "rounds",
    "cluster_id",
    "v_inf_raw",
    "v_inf",
    "v_uni",
    "v_rep",
    "v_synergy",
];

/// Score table in ascending sample id order. The `selected` column is added
/// only when a selection is given.
pub fn scores_csv(dataset: &Dataset, scored: &[ScoredSample], selected: Option<&[u64]>) -> String {
    let mut out = SCORE_COLUMNS.join(",");
    if selected.is_some() {
        out.push_str(",selected");
    }
    out.push('\n');

    let chosen: HashSet<u64> = selected.unwrap_or(&[]).iter().copied().collect();
    let mut rows: Vec<_> = scored.iter().collect();
    rows.sort_by_key(|s| s.id);
    for s in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.id,
            csv_field(&dataset.tasks[s.task_id as usize]),
            s.rounds,
            s.cluster_id,
            fmt_g9(s.v_inf_raw),
            fmt_g9(s.v_inf),
            fmt_g9(s.v_uni),
            fmt_g9(s.v_rep),
            fmt_g9(s.v_synergy),
        );
        if selected.is_some() {
            out.push_str(if chosen.contains(&s.id) { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes every file to a temporary sibling first and renames only once all
/// contents are on disk, so a failure never leaves a partial output behind.
fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> CliResult<()> {
    let internal = |p: &Path, e: std::io::Error| CliError::Internal(format!("{}: {e}", p.display()));
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let parent = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&parent).map_err(|e| internal(path, e))?;
        tmp.write_all(bytes).map_err(|e| internal(path, e))?;
        tmp.as_file().sync_all().map_err(|e| internal(path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| internal(path, e.error))?;
    }
    Ok(())
}

/// Threads value as accepted on the command line.
pub fn parse_threads(s: &str) -> Option<Threads> {
    let v = match s.parse::<u64>() {
        Ok(n) => serde_json::Value::from(n),
        Err(_) => serde_json::Value::from(s),
    };
    serde_json::from_value(v).ok()
}
