//! Runs an operation over chunks on a pool of worker threads.
//!
//! Anchor features (one output row each) are split between chunks; each
//! chunk sees only the context that intersects its padded box. Chunks are
//! pulled from a shared queue, and results are merged by chunk id, so the
//! output is identical for any number of workers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use crate::dataio::{load_raster, Cell, Feature, FeatureSet, ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::geoops::{self, freq_column, sedc_column, OpRow, SedcParams};
use crate::partition::{Group, PartitionSet};
use crate::raster::{window_for_bbox, Raster, RasterKind, Stat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    ExtractAt,
    SummarizeAw,
    SummarizeSedc,
    NearestDistance,
}

impl Op {
    pub fn as_str(&self) -> &'static str {
        match self {
            Op::ExtractAt => "extract_at",
            Op::SummarizeAw => "summarize_aw",
            Op::SummarizeSedc => "summarize_sedc",
            Op::NearestDistance => "nearest_distance",
        }
    }

    /// Role names as `(role bound to x, role bound to y)` by default. The
    /// second role is the anchor.
    pub fn roles(&self) -> (&'static str, &'static str) {
        match self {
            Op::ExtractAt => ("raster", "features"),
            Op::SummarizeAw | Op::SummarizeSedc => ("sources", "targets"),
            Op::NearestDistance => ("features", "points"),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "extract_at" | "extract" => Op::ExtractAt,
            "summarize_aw" | "aw" => Op::SummarizeAw,
            "summarize_sedc" | "sedc" => Op::SummarizeSedc,
            "nearest_distance" | "nearest" => Op::NearestDistance,
            other => return Err(Error::InvalidParameter(format!("unknown task {other:?}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub enum DatasetRef {
    /// Opened by every worker that needs it.
    RasterPath(PathBuf),
    Raster(Arc<Raster>),
    Features(Arc<FeatureSet>),
}

impl DatasetRef {
    fn describe(&self) -> &'static str {
        match self {
            DatasetRef::RasterPath(_) | DatasetRef::Raster(_) => "a raster",
            DatasetRef::Features(_) => "features",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Buffer radius (extract_at); context expansion for hierarchy runs.
    pub radius: f64,
    pub stat: Stat,
    pub bandwidth: Option<f64>,
    pub maxdist: Option<f64>,
    pub value_columns: Vec<String>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            radius: 0.0,
            stat: Stat::Mean,
            bandwidth: None,
            maxdist: None,
            value_columns: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    X,
    Y,
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Slot::X),
            "y" => Ok(Slot::Y),
            other => Err(Error::InvalidParameter(format!(
                "arg_map targets must be \"x\" or \"y\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub op: Op,
    pub x: DatasetRef,
    pub y: DatasetRef,
    pub params: Params,
    /// When set, `y` is the padded context and `x` the anchor.
    pub pad_y: bool,
    /// Rebinds the op's role names onto `x`/`y`.
    pub arg_map: BTreeMap<String, Slot>,
}

impl TaskSpec {
    pub fn new(op: Op, x: DatasetRef, y: DatasetRef, params: Params) -> Self {
        TaskSpec {
            op,
            x,
            y,
            params,
            pad_y: false,
            arg_map: BTreeMap::new(),
        }
    }

    fn slot(&self, s: Slot) -> &DatasetRef {
        match s {
            Slot::X => &self.x,
            Slot::Y => &self.y,
        }
    }

    /// Slots of the (context, anchor) roles after applying `arg_map`.
    fn bindings(&self) -> Result<(Slot, Slot)> {
        let (ctx_role, anchor_role) = self.op.roles();
        for key in self.arg_map.keys() {
            if key != ctx_role && key != anchor_role {
                return Err(Error::InvalidParameter(format!(
                    "arg_map: {} has no argument {key:?} (expected {ctx_role:?} or {anchor_role:?})",
                    self.op
                )));
            }
        }
        let ctx = self.arg_map.get(ctx_role).copied().unwrap_or(Slot::X);
        let anchor = self.arg_map.get(anchor_role).copied().unwrap_or(Slot::Y);
        if ctx == anchor {
            return Err(Error::InvalidParameter(format!(
                "arg_map binds {ctx_role:?} and {anchor_role:?} to the same argument"
            )));
        }
        let expected = if self.pad_y { Slot::X } else { Slot::Y };
        if anchor != expected {
            return Err(Error::InvalidParameter(format!(
                "{} produces one row per {anchor_role:?}, which must be the anchor ({}) when pad_y is {}",
                self.op,
                if self.pad_y { "x" } else { "y" },
                self.pad_y
            )));
        }
        Ok((ctx, anchor))
    }

    fn sedc_params(&self) -> Result<SedcParams> {
        let bw = self
            .params
            .bandwidth
            .ok_or_else(|| Error::InvalidParameter("summarize_sedc needs a bandwidth".into()))?;
        SedcParams::new(bw, self.params.maxdist, self.params.value_columns.clone())
    }

    /// Distance by which a hierarchy group's box is grown to collect context.
    fn reach(&self) -> Result<f64> {
        Ok(match self.op {
            Op::SummarizeSedc => self.sedc_params()?.maxdist,
            _ => self.params.radius,
        })
    }

    /// The dataset producing one output row per feature.
    pub fn anchors(&self) -> Result<Arc<FeatureSet>> {
        let (_, anchor_slot) = self.bindings()?;
        match self.slot(anchor_slot) {
            DatasetRef::Features(fs) => Ok(fs.clone()),
            other => Err(Error::InvalidInput(format!(
                "{}: {:?} must be features, got {}",
                self.op,
                self.op.roles().1,
                other.describe()
            ))),
        }
    }

    /// Resolves roles and checks parameters against the data.
    fn bind(&self) -> Result<Bound> {
        let (ctx_slot, anchor_slot) = self.bindings()?;
        let (ctx_role, anchor_role) = self.op.roles();
        let anchors = match self.slot(anchor_slot) {
            DatasetRef::Features(fs) => fs.clone(),
            other => {
                return Err(Error::InvalidInput(format!(
                    "{}: {anchor_role:?} must be features, got {}",
                    self.op,
                    other.describe()
                )))
            }
        };
        let p = &self.params;
        let context = match (self.op, self.slot(ctx_slot)) {
            (Op::ExtractAt, DatasetRef::RasterPath(path)) => Context::Raster(RasterSource::Path(path.clone())),
            (Op::ExtractAt, DatasetRef::Raster(r)) => Context::Raster(RasterSource::Memory(r.clone())),
            (Op::ExtractAt, other) => {
                return Err(Error::InvalidInput(format!(
                    "extract_at: {ctx_role:?} must be a raster, got {}",
                    other.describe()
                )))
            }
            (_, DatasetRef::Features(fs)) => Context::Features(fs.clone()),
            (op, other) => {
                return Err(Error::InvalidInput(format!(
                    "{op}: {ctx_role:?} must be features, got {}",
                    other.describe()
                )))
            }
        };
        let op = match (self.op, &context) {
            (Op::ExtractAt, Context::Raster(src)) => {
                geoops::check_extract(anchors.kind(), p.radius)?;
                if let (Stat::Frequency, RasterSource::Memory(r)) = (p.stat, src) {
                    if r.kind() != RasterKind::Categorical {
                        return Err(Error::InvalidParameter(
                            "frequency requires a categorical raster".into(),
                        ));
                    }
                }
                BoundOp::Extract {
                    radius: p.radius,
                    stat: p.stat,
                }
            }
            (Op::SummarizeAw, Context::Features(src)) => {
                geoops::check_polygons(&anchors, "targets")?;
                geoops::check_polygons(src, "sources")?;
                geoops::check_aw(&p.value_columns, p.stat)?;
                check_numeric(src, &p.value_columns)?;
                BoundOp::Aw {
                    value_columns: p.value_columns.clone(),
                    stat: p.stat,
                }
            }
            (Op::SummarizeSedc, Context::Features(src)) => {
                let sp = self.sedc_params()?;
                geoops::check_points(&anchors, "targets")?;
                geoops::check_points(src, "sources")?;
                check_numeric(src, &sp.value_columns)?;
                BoundOp::Sedc(sp)
            }
            (Op::NearestDistance, Context::Features(src)) => {
                geoops::check_points(&anchors, "points")?;
                geoops::check_nearest_context(src)?;
                if src.is_empty() {
                    return Err(Error::InvalidInput(
                        "nearest_distance needs at least one feature to measure to".into(),
                    ));
                }
                BoundOp::Nearest
            }
            _ => unreachable!("context kind follows the op"),
        };
        let context_boxes = match &context {
            Context::Features(fs) => fs.features().iter().map(|f| f.geometry.bbox()).collect(),
            Context::Raster(_) => Vec::new(),
        };
        Ok(Bound {
            anchors,
            context,
            context_boxes,
            op,
        })
    }

    /// Output columns between `chunk_id` and `pad_warning`, excluding
    /// per-category frequency columns.
    pub fn columns(&self) -> Vec<String> {
        let p = &self.params;
        match self.op {
            Op::ExtractAt => match p.stat {
                Stat::Count | Stat::Frequency => vec!["count".into()],
                s => vec![s.name().into(), "count".into()],
            },
            Op::SummarizeAw => {
                let mut c = p.value_columns.clone();
                c.push("coverage".into());
                c
            }
            Op::SummarizeSedc => {
                let mut c: Vec<String> = p.value_columns.iter().map(|v| sedc_column(v)).collect();
                c.push("n_sources".into());
                c
            }
            Op::NearestDistance => vec!["distance".into(), "nearest_id".into()],
        }
    }
}

fn check_numeric(fs: &FeatureSet, columns: &[String]) -> Result<()> {
    let all: Vec<usize> = (0..fs.len()).collect();
    for c in columns {
        geoops::numeric_column(fs, c, &all)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum RasterSource {
    Path(PathBuf),
    Memory(Arc<Raster>),
}

enum Context {
    Raster(RasterSource),
    Features(Arc<FeatureSet>),
}

enum BoundOp {
    Extract { radius: f64, stat: Stat },
    Aw { value_columns: Vec<String>, stat: Stat },
    Sedc(SedcParams),
    Nearest,
}

struct Bound {
    anchors: Arc<FeatureSet>,
    context: Context,
    context_boxes: Vec<BBox>,
    op: BoundOp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub workers: usize,
    /// Record chunk failures as error rows instead of aborting the run.
    pub capture_errors: bool,
    /// Stop handing out chunks after the first failure; chunks not started
    /// get error rows.
    pub fail_fast: bool,
    /// Chunk ids forced to fail, for exercising error handling.
    pub inject_failures: BTreeSet<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: 1,
            capture_errors: true,
            fail_fast: false,
            inject_failures: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    pub fn with_workers(workers: usize) -> Self {
        RunConfig {
            workers,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// One anchor row computed by a chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkRow {
    pub row: OpRow,
    pub pad_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkResult {
    pub chunk_id: usize,
    /// Group key or raster path, for runs that label their chunks.
    pub label: Option<String>,
    pub member_ids: Vec<String>,
    pub outcome: std::result::Result<Vec<ChunkRow>, String>,
}

/// Column layout shared by every chunk of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TableLayout {
    pub label_column: Option<String>,
    pub columns: Vec<String>,
    pub frequency: bool,
}

/// Concatenates chunk results in chunk-id order. Failed chunks contribute
/// one error row per member (or a single row with an empty id when they had
/// none).
pub fn merge_chunks(layout: &TableLayout, mut chunks: Vec<ChunkResult>) -> Result<ResultTable> {
    chunks.sort_by_key(|c| c.chunk_id);
    if let Some(w) = chunks.windows(2).find(|w| w[0].chunk_id == w[1].chunk_id) {
        return Err(Error::Internal(format!("chunk {} reported twice", w[0].chunk_id)));
    }
    let cats: BTreeSet<i64> = if layout.frequency {
        chunks
            .iter()
            .filter_map(|c| c.outcome.as_ref().ok())
            .flat_map(|rows| rows.iter().flat_map(|r| r.row.categories.keys().copied()))
            .collect()
    } else {
        BTreeSet::new()
    };
    let mut columns = Vec::new();
    columns.extend(layout.label_column.iter().cloned());
    columns.extend(layout.columns.iter().cloned());
    columns.extend(cats.iter().map(|&c| freq_column(c)));
    columns.push("pad_warning".into());
    let width = columns.len();
    let label_cell = |c: &ChunkResult| c.label.clone().map_or(Cell::Null, Cell::Text);

    let mut table = ResultTable::new(columns);
    for chunk in chunks {
        match &chunk.outcome {
            Ok(rows) => {
                for r in rows {
                    let mut values = Vec::with_capacity(width);
                    if layout.label_column.is_some() {
                        values.push(label_cell(&chunk));
                    }
                    values.extend(r.row.values.iter().cloned());
                    values.extend(
                        cats.iter()
                            .map(|c| Cell::Float(r.row.categories.get(c).copied().unwrap_or(0.0))),
                    );
                    values.push(Cell::Bool(r.pad_warning));
                    table.rows.push(ResultRow {
                        id: r.row.id.clone(),
                        chunk_id: Some(chunk.chunk_id),
                        values,
                        error: None,
                    });
                }
            }
            Err(message) => {
                let error_row = |id: &str| {
                    let mut values = vec![Cell::Null; width];
                    if layout.label_column.is_some() {
                        values[0] = label_cell(&chunk);
                    }
                    ResultRow {
                        id: id.to_string(),
                        chunk_id: Some(chunk.chunk_id),
                        values,
                        error: Some(message.clone()),
                    }
                };
                if chunk.member_ids.is_empty() {
                    table.rows.push(error_row(""));
                } else {
                    table.rows.extend(chunk.member_ids.iter().map(|id| error_row(id)));
                }
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: ResultTable,
    /// Times each chunk was executed, indexed by chunk id.
    pub executions: Vec<usize>,
    /// Ids of chunks that failed or were skipped.
    pub failed_chunks: Vec<usize>,
}

impl RunOutput {
    pub fn had_errors(&self) -> bool {
        !self.failed_chunks.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.had_errors() {
            crate::error::exit::PARTIAL
        } else {
            crate::error::exit::OK
        }
    }
}

struct Job {
    chunk_id: usize,
    label: Option<String>,
    members: Vec<usize>,
    /// `None` runs against the whole context.
    padded: Option<BBox>,
    padding: f64,
    raster: Option<RasterSource>,
}

/// Runs `task` with one chunk per partition cell.
pub fn run_grid(task: &TaskSpec, parts: &PartitionSet, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let bound = task.bind()?;
    parts.validate()?;
    parts.check_covers(&bound.anchors)?;
    let jobs = parts
        .chunks
        .iter()
        .map(|c| Job {
            chunk_id: c.chunk_id,
            label: None,
            members: positions(&bound.anchors, &c.member_ids),
            padded: Some(c.padded),
            padding: parts.padding,
            raster: None,
        })
        .collect();
    run_jobs(task, &bound, jobs, None, cfg)
}

/// Runs `task` with one chunk per group, in the given group order. Context
/// is whatever intersects the bounding box of the group's anchors grown by
/// the task's radius (or cutoff distance for SEDC).
pub fn run_hierarchy(task: &TaskSpec, groups: &[Group], cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let bound = task.bind()?;
    let reach = task.reach()?;
    let mut seen = vec![false; bound.anchors.len()];
    let mut jobs = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        let mut members = Vec::with_capacity(g.member_ids.len());
        for id in &g.member_ids {
            let pos = bound
                .anchors
                .position(id)
                .ok_or_else(|| Error::InvalidInput(format!("group {:?} references unknown id {id:?}", g.key)))?;
            if std::mem::replace(&mut seen[pos], true) {
                return Err(Error::InvalidInput(format!("id {id:?} belongs to more than one group")));
            }
            members.push(pos);
        }
        let padded = members
            .iter()
            .map(|&m| bound.anchors.get(m).geometry.bbox())
            .reduce(|a, b| a.union(&b))
            .map(|b| b.expand(reach));
        jobs.push(Job {
            chunk_id: i,
            label: Some(g.key.clone()),
            members,
            padded,
            padding: reach,
            raster: None,
        });
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidInput(format!(
            "id {:?} is not in any group",
            bound.anchors.get(missing).id
        )));
    }
    run_jobs(task, &bound, jobs, Some("group"), cfg)
}

/// Runs an `extract_at` task once per raster file over the full anchor set.
/// The task's own raster argument is replaced by each path in turn.
pub fn run_multirasters(task: &TaskSpec, raster_paths: &[PathBuf], cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if task.op != Op::ExtractAt {
        return Err(Error::InvalidParameter(format!(
            "multi-raster runs need extract_at, got {}",
            task.op
        )));
    }
    if raster_paths.is_empty() {
        return Err(Error::InvalidParameter("no raster paths given".into()));
    }
    let mut task = task.clone();
    let (ctx_slot, _) = task.bindings()?;
    let placeholder = DatasetRef::RasterPath(raster_paths[0].clone());
    match ctx_slot {
        Slot::X => task.x = placeholder,
        Slot::Y => task.y = placeholder,
    }
    let bound = task.bind()?;
    let all: Vec<usize> = (0..bound.anchors.len()).collect();
    let jobs = raster_paths
        .iter()
        .enumerate()
        .map(|(i, p)| Job {
            chunk_id: i,
            label: Some(p.display().to_string()),
            members: all.clone(),
            padded: None,
            padding: 0.0,
            raster: Some(RasterSource::Path(p.clone())),
        })
        .collect();
    run_jobs(&task, &bound, jobs, Some("raster"), cfg)
}

fn positions(fs: &FeatureSet, ids: &[String]) -> Vec<usize> {
    ids.iter()
        .map(|id| fs.position(id).expect("coverage checked"))
        .collect()
}

type RasterCache = HashMap<PathBuf, Arc<Raster>>;

fn open_raster(
    src: &RasterSource,
    kind: RasterKind,
    cache: &mut RasterCache,
) -> std::result::Result<Arc<Raster>, String> {
    match src {
        RasterSource::Memory(r) => Ok(r.clone()),
        RasterSource::Path(p) => {
            if let Some(r) = cache.get(p) {
                return Ok(r.clone());
            }
            let r = Arc::new(load_raster(p, kind).map_err(|e| e.to_string())?);
            cache.insert(p.clone(), r.clone());
            Ok(r)
        }
    }
}

fn run_chunk(bound: &Bound, job: &Job, cache: &mut RasterCache) -> std::result::Result<Vec<ChunkRow>, String> {
    let anchors: Vec<&Feature> = job.members.iter().map(|&m| bound.anchors.get(m)).collect();
    let context_subset = || -> Vec<usize> {
        match job.padded {
            Some(b) => (0..bound.context_boxes.len())
                .filter(|&i| bound.context_boxes[i].intersects(&b))
                .collect(),
            None => (0..bound.context_boxes.len()).collect(),
        }
    };
    let out = match (&bound.op, &bound.context) {
        (BoundOp::Extract { radius, stat }, Context::Raster(src)) => {
            let kind = if *stat == Stat::Frequency {
                RasterKind::Categorical
            } else {
                RasterKind::Continuous
            };
            let r = open_raster(job.raster.as_ref().unwrap_or(src), kind, cache)?;
            let window = match job.padded {
                Some(b) => window_for_bbox(&r, &b),
                None => r.full_window(),
            };
            geoops::extract_at_in(&r, &window, &anchors, *radius, *stat)
        }
        (BoundOp::Aw { value_columns, stat }, Context::Features(src)) => {
            geoops::summarize_aw_in(&anchors, src, &context_subset(), value_columns, *stat)
        }
        (BoundOp::Sedc(p), Context::Features(src)) => geoops::summarize_sedc_in(&anchors, src, &context_subset(), p),
        (BoundOp::Nearest, Context::Features(src)) => {
            let ctx: Vec<&Feature> = context_subset().into_iter().map(|i| src.get(i)).collect();
            geoops::nearest_distance_in(&anchors, &ctx)
        }
        _ => unreachable!("bound op matches its context"),
    }
    .map_err(|e| e.to_string())?;
    Ok(out
        .rows
        .into_iter()
        .map(|row| {
            let pad_warning = match job.padded {
                None => false,
                Some(b) => row.reach.is_none_or(|r| !b.contains_bbox(&r)) || row.interaction > job.padding,
            };
            ChunkRow { row, pad_warning }
        })
        .collect())
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "chunk panicked".to_string()
    }
}

fn run_jobs(task: &TaskSpec, bound: &Bound, jobs: Vec<Job>, label: Option<&str>, cfg: &RunConfig) -> Result<RunOutput> {
    let n_jobs = jobs.len();
    let counters: Vec<AtomicUsize> = (0..n_jobs).map(|_| AtomicUsize::new(0)).collect();
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let halt_on_error = cfg.fail_fast || !cfg.capture_errors;
    let (tx, rx) = mpsc::channel::<(usize, std::result::Result<Vec<ChunkRow>, String>)>();

    std::thread::scope(|s| {
        for _ in 0..cfg.workers.min(n_jobs.max(1)) {
            let tx = tx.clone();
            let (jobs, counters, next, stop) = (&jobs, &counters, &next, &stop);
            s.spawn(move || {
                let mut cache = RasterCache::new();
                loop {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= jobs.len() {
                        break;
                    }
                    let job = &jobs[i];
                    counters[i].fetch_add(1, Ordering::SeqCst);
                    let outcome = if cfg.inject_failures.contains(&job.chunk_id) {
                        Err(format!("injected failure in chunk {}", job.chunk_id))
                    } else {
                        catch_unwind(AssertUnwindSafe(|| run_chunk(bound, job, &mut cache)))
                            .unwrap_or_else(|p| Err(panic_message(p)))
                    };
                    if outcome.is_err() && halt_on_error {
                        stop.store(true, Ordering::SeqCst);
                    }
                    if tx.send((i, outcome)).is_err() {
                        break;
                    }
                }
            });
        }
    });
    drop(tx);

    let mut outcomes: Vec<Option<std::result::Result<Vec<ChunkRow>, String>>> = (0..n_jobs).map(|_| None).collect();
    for (i, outcome) in rx {
        outcomes[i] = Some(outcome);
    }
    let first_failure = jobs
        .iter()
        .zip(&outcomes)
        .filter_map(|(j, o)| match o {
            Some(Err(msg)) => Some((j.chunk_id, msg.clone())),
            _ => None,
        })
        .min_by_key(|(id, _)| *id);
    if !cfg.capture_errors {
        if let Some((chunk_id, message)) = first_failure {
            return Err(Error::ChunkFailed { chunk_id, message });
        }
    }

    let mut failed_chunks = Vec::new();
    let mut chunks = Vec::with_capacity(n_jobs);
    for (job, outcome) in jobs.iter().zip(outcomes) {
        let outcome = outcome.unwrap_or_else(|| {
            Err(match &first_failure {
                Some((id, _)) => format!("not run: chunk {id} failed first"),
                None => "not run".to_string(),
            })
        });
        if outcome.is_err() {
            failed_chunks.push(job.chunk_id);
        }
        chunks.push(ChunkResult {
            chunk_id: job.chunk_id,
            label: job.label.clone(),
            member_ids: job.members.iter().map(|&m| bound.anchors.get(m).id.clone()).collect(),
            outcome,
        });
    }
    let layout = TableLayout {
        label_column: label.map(str::to_string),
        columns: task.columns(),
        frequency: task.op == Op::ExtractAt && task.params.stat == Stat::Frequency,
    };
    let mut executions = vec![0; n_jobs];
    for (job, c) in jobs.iter().zip(&counters) {
        executions[job.chunk_id] = c.load(Ordering::SeqCst);
    }
    failed_chunks.sort_unstable();
    Ok(RunOutput {
        table: merge_chunks(&layout, chunks)?,
        executions,
        failed_chunks,
    })
}

/// Runs `task` on the whole data in one chunk, without padding checks.
pub fn run_single(task: &TaskSpec) -> Result<RunOutput> {
    let bound = task.bind()?;
    let job = Job {
        chunk_id: 0,
        label: None,
        members: (0..bound.anchors.len()).collect(),
        padded: None,
        padding: 0.0,
        raster: None,
    };
    run_jobs(task, &bound, vec![job], None, &RunConfig::default())
}
