//! `chop`: split spatial work into padded chunks and run it on a worker pool.

mod job;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use chop::bench::{run_benchmark, synth_dataset, BenchCase, SynthSpec};
use chop::dataio::{
    save_features_csv, save_features_geojson, save_partitions, write_raster, FeatureFormat, ResultTable,
};
use chop::error::exit;
use chop::partition::{build_partitions, GridSpec};
use chop::raster::RasterKind;
use chop::{Error, Result};

use job::{load_job, GridConfig, JobConfig};

#[derive(Parser)]
#[command(name = "chop", version, about = "Parallel spatial operations over padded chunks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a partition of the anchor points and save it as JSON.
    Partition(PartitionArgs),
    /// Run one task over a partition, hierarchy or region split.
    Run(RunArgs),
    /// Run extract_at once per raster file.
    Multiraster(MultirasterArgs),
    /// Write a deterministic synthetic dataset.
    Synth(SynthArgs),
    /// Time a synthetic task across worker counts.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct GridArgs {
    /// grid | quantile | advanced | balanced
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 1, requires = "mode")]
    nx: usize,
    #[arg(long, default_value_t = 1, requires = "mode")]
    ny: usize,
    /// Breaks per axis for quantile grids.
    #[arg(long, default_value_t = 1, requires = "mode")]
    nq: usize,
    /// Number of groups for balanced partitions.
    #[arg(long, default_value_t = 1, requires = "mode")]
    groups: usize,
    /// Smallest chunk an advanced grid keeps unmerged.
    #[arg(long, default_value_t = 1, requires = "mode")]
    min_features: usize,
    #[arg(long, default_value_t = 0.0, requires = "mode")]
    padding: f64,
}

impl GridArgs {
    fn config(&self) -> Option<GridConfig> {
        Some(GridConfig {
            mode: self.mode.clone()?,
            nx: self.nx,
            ny: self.ny,
            nq: self.nq,
            groups: self.groups,
            min_features: self.min_features,
            padding: self.padding,
        })
    }
}

#[derive(Args)]
struct InputArgs {
    /// csv | geojson; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, default_value = "id")]
    id: String,
    #[arg(long, default_value = "x")]
    x_col: String,
    #[arg(long, default_value = "y")]
    y_col: String,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    input_args: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("job").multiple(true)))]
struct JobArgs {
    /// JSON job file; replaces the task flags below.
    #[arg(long, conflicts_with = "job")]
    config: Option<PathBuf>,

    /// extract_at | summarize_aw | sedc | nearest
    #[arg(long, group = "job", required_unless_present = "config")]
    task: Option<String>,
    #[arg(long, group = "job")]
    x: Option<PathBuf>,
    #[arg(long, group = "job", required_unless_present = "config")]
    y: Option<PathBuf>,
    #[arg(long, group = "job")]
    format: Option<String>,
    #[arg(long, group = "job")]
    id: Option<String>,
    #[arg(long, group = "job")]
    x_col: Option<String>,
    #[arg(long, group = "job")]
    y_col: Option<String>,

    #[arg(long, group = "job")]
    radius: Option<f64>,
    #[arg(long, group = "job")]
    stat: Option<String>,
    #[arg(long, group = "job")]
    bandwidth: Option<f64>,
    #[arg(long, group = "job")]
    maxdist: Option<f64>,
    #[arg(long, group = "job", value_delimiter = ',')]
    value_cols: Vec<String>,

    /// Bind an op argument to x or y, e.g. `targets=x`.
    #[arg(long, group = "job", value_parser = parse_binding)]
    arg_map: Vec<(String, String)>,
    /// Pad y instead of x; x becomes the anchor.
    #[arg(long, group = "job")]
    pad_y: bool,
    #[arg(long, group = "job", num_args = 0..=1, default_missing_value = "true")]
    capture_errors: Option<bool>,
    /// Stop scheduling chunks after the first failure.
    #[arg(long, group = "job")]
    fail_fast: bool,

    #[arg(long, env = "CHOP_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force these chunk ids to fail.
    #[arg(long, hide = true, value_delimiter = ',')]
    fail_chunk: Vec<usize>,
}

fn parse_binding(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ROLE=x|y, got {s:?}"))?;
    Ok((k.to_string(), v.to_string()))
}

impl JobArgs {
    /// Folds flags into a job; flags left unset take the config-file defaults.
    fn job(&self) -> Result<JobConfig> {
        let mut job = match &self.config {
            Some(path) => load_job(path)?,
            None => {
                let mut job = JobConfig::new(
                    self.task.clone().unwrap_or_default(),
                    self.y.clone().unwrap_or_default(),
                );
                job.x = self.x.clone();
                job.format = self.format.clone();
                if let Some(v) = &self.id {
                    job.id = v.clone();
                }
                if let Some(v) = &self.x_col {
                    job.x_col = v.clone();
                }
                if let Some(v) = &self.y_col {
                    job.y_col = v.clone();
                }
                if let Some(v) = self.radius {
                    job.radius = v;
                }
                if let Some(v) = &self.stat {
                    job.stat = v.clone();
                }
                job.bandwidth = self.bandwidth;
                job.maxdist = self.maxdist;
                job.value_cols = self.value_cols.clone();
                job.arg_map = self.arg_map.iter().cloned().collect::<BTreeMap<_, _>>();
                job.pad_y = self.pad_y;
                if let Some(v) = self.capture_errors {
                    job.capture_errors = v;
                }
                job.fail_fast = self.fail_fast;
                job
            }
        };
        if self.workers.is_some() {
            job.workers = self.workers;
        }
        if self.out.is_some() {
            job.out = self.out.clone();
        }
        Ok(job)
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("split").multiple(false)))]
struct RunArgs {
    #[command(flatten)]
    job: JobArgs,
    /// Saved partition file.
    #[arg(long, group = "split", conflicts_with = "config")]
    partition: Option<PathBuf>,
    /// Anchor attribute; one chunk per distinct value.
    #[arg(long, group = "split", conflicts_with = "config")]
    hierarchy: Option<String>,
    /// Polygon file; one chunk per region.
    #[arg(long, group = "split", conflicts_with = "config")]
    regions: Option<PathBuf>,
    #[arg(long, requires = "regions")]
    regions_id: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct MultirasterArgs {
    #[command(flatten)]
    job: JobArgs,
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["raster_list", "config"])]
    rasters: Vec<PathBuf>,
    /// File with one raster path per line.
    #[arg(long, conflicts_with = "config")]
    raster_list: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    n_points: usize,
    /// Raster columns and rows.
    #[arg(long, default_value_t = 500)]
    raster_size: usize,
    #[arg(long, default_value = "continuous")]
    kind: String,
    #[arg(long, default_value_t = 8)]
    categories: usize,
    #[arg(long, default_value_t = 50)]
    n_lines: usize,
    /// Directory for points.csv, lines.geojson and raster.asc.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// extract | nearest | frequency
    #[arg(long, default_value = "extract")]
    case: String,
    #[arg(long, default_value_t = 10_000)]
    n_points: usize,
    #[arg(long, default_value_t = 500)]
    raster_size: usize,
    #[arg(long, default_value = "1,2,4,8", value_delimiter = ',')]
    workers: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Buffer radius for the extract cases.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 4)]
    nx: usize,
    #[arg(long, default_value_t = 4)]
    ny: usize,
    #[arg(long, default_value_t = 50.0)]
    padding: f64,
    /// Directory for runs.csv and summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn cmd_partition(a: &PartitionArgs) -> Result<i32> {
    let grid = a
        .grid
        .config()
        .ok_or_else(|| Error::InvalidParameter("--mode is required".into()))?
        .to_spec()?;
    let format = match &a.input_args.format {
        Some(f) => f.parse()?,
        None => FeatureFormat::from_path(&a.input)
            .ok_or_else(|| Error::InvalidParameter("cannot tell the input format; pass --format".into()))?,
    };
    let anchors = chop::dataio::load_features(
        &a.input,
        format,
        &a.input_args.id,
        &a.input_args.x_col,
        &a.input_args.y_col,
    )?;
    let parts = build_partitions(&anchors, &grid)?;
    save_partitions(&parts, &a.out)?;
    let mut counts = parts.member_counts();
    counts.sort_unstable();
    eprintln!(
        "{} chunks; members min {} median {} max {}",
        parts.len(),
        counts.first().unwrap_or(&0),
        counts.get(counts.len() / 2).unwrap_or(&0),
        counts.last().unwrap_or(&0)
    );
    Ok(exit::OK)
}

fn finish(job: &JobConfig, table: &ResultTable, code: i32, failed: &[usize]) -> Result<i32> {
    write_output(&table.to_csv_bytes(), job.out.as_deref())?;
    if failed.is_empty() {
        eprintln!("{} rows", table.rows.len());
    } else {
        eprintln!("{} rows; chunks failed: {failed:?}", table.rows.len());
    }
    Ok(code)
}

fn cmd_run(a: &RunArgs) -> Result<i32> {
    let mut job = a.job.job()?;
    if a.job.config.is_some() && a.grid.mode.is_some() {
        return Err(Error::InvalidParameter(
            "--mode cannot be combined with --config".into(),
        ));
    }
    if a.job.config.is_none() {
        job.partition = a.partition.clone();
        job.hierarchy = a.hierarchy.clone();
        job.regions = a.regions.clone();
        job.regions_id = a.regions_id.clone();
        job.grid = a.grid.config();
    }
    if !job.rasters.is_empty() {
        return Err(Error::InvalidParameter(
            "raster lists belong to `chop multiraster`".into(),
        ));
    }
    let out = job.execute(&a.job.fail_chunk)?;
    finish(&job, &out.table, out.exit_code(), &out.failed_chunks)
}

fn cmd_multiraster(a: &MultirasterArgs) -> Result<i32> {
    let mut job = a.job.job()?;
    if a.job.config.is_none() {
        job.rasters = match &a.raster_list {
            Some(list) => std::fs::read_to_string(list)
                .map_err(|e| Error::Io {
                    path: list.clone(),
                    source: e,
                })?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(PathBuf::from)
                .collect(),
            None => a.rasters.clone(),
        };
    }
    if job.rasters.is_empty() {
        return Err(Error::InvalidParameter("give --rasters or --raster-list".into()));
    }
    let out = job.execute(&a.job.fail_chunk)?;
    finish(&job, &out.table, out.exit_code(), &out.failed_chunks)
}

fn synth_spec(
    seed: u64,
    n_points: usize,
    size: usize,
    kind: RasterKind,
    categories: usize,
    n_lines: usize,
) -> SynthSpec {
    SynthSpec {
        seed,
        n_points,
        raster_ncols: size,
        raster_nrows: size,
        raster_kind: kind,
        n_categories: categories,
        n_lines,
        ..Default::default()
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let spec = synth_spec(
        a.seed,
        a.n_points,
        a.raster_size,
        a.kind.parse()?,
        a.categories,
        a.n_lines,
    );
    let data = synth_dataset(&spec)?;
    create_dir(&a.out)?;
    save_features_csv(&data.points, a.out.join("points.csv"), "id")?;
    save_features_geojson(&data.lines, a.out.join("lines.geojson"), "id")?;
    write_raster(&data.raster, a.out.join("raster.asc"))?;
    eprintln!(
        "wrote {} points, {} lines and a {}x{} raster to {}",
        data.points.len(),
        data.lines.len(),
        a.raster_size,
        a.raster_size,
        a.out.display()
    );
    Ok(exit::OK)
}

fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let case: BenchCase = a.case.parse()?;
    let n_lines = if case == BenchCase::Nearest { 200 } else { 0 };
    let spec = synth_spec(a.seed, a.n_points, a.raster_size, case.raster_kind(), 8, n_lines);
    let data = synth_dataset(&spec)?;
    let task = case.task(&data, a.radius);
    let report = run_benchmark(
        case.as_str(),
        &task,
        &GridSpec::grid(a.nx, a.ny, a.padding),
        &a.workers,
        a.repeats,
    )?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_output(&report.runs_csv(), Some(&dir.join("runs.csv")))?;
        write_output(&report.summary_csv(), Some(&dir.join("summary.csv")))?;
    }
    write_output(&report.summary_csv(), None)?;
    eprintln!("checksum {}; {:.2}s in total", report.checksum, report.total_s);
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Partition(a) => cmd_partition(a),
        Command::Run(a) => cmd_run(a),
        Command::Multiraster(a) => cmd_multiraster(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("chop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
