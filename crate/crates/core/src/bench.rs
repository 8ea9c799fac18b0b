//! Synthetic workloads, timed sweeps over worker counts, and scaling metrics.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::dataio::{format_float, AttrValue, Feature, FeatureSet};
use crate::error::{Error, Result};
use crate::executor::{run_grid, DatasetRef, Op, Params, RunConfig, TaskSpec};
use crate::geom::{BBox, Geometry, Point, Polyline};
use crate::partition::{build_partitions, GridSpec};
use crate::raster::{Raster, RasterKind, Stat};

/// `(speedup, efficiency)` = `(t1/tn, t1/(n·tn))`.
pub fn efficiency(t1: f64, n: usize, tn: f64) -> Result<(f64, f64)> {
    if !(t1 > 0.0 && tn > 0.0 && t1.is_finite() && tn.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "times must be positive, got t1={t1}, tn={tn}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("worker count must be >= 1".into()));
    }
    Ok((t1 / tn, t1 / (n as f64 * tn)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Median,
    Mean,
}

impl Aggregation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregation::Median => "median",
            Aggregation::Mean => "mean",
        }
    }

    pub fn apply(&self, samples: &[f64]) -> f64 {
        assert!(!samples.is_empty());
        match self {
            Aggregation::Mean => samples.iter().sum::<f64>() / samples.len() as f64,
            Aggregation::Median => {
                let mut s = samples.to_vec();
                s.sort_by(f64::total_cmp);
                let m = s.len() / 2;
                if s.len() % 2 == 1 {
                    s[m]
                } else {
                    0.5 * (s[m - 1] + s[m])
                }
            }
        }
    }
}

/// Scaling of one worker count against the single-worker run of the same
/// sweep. Speedup and efficiency are derived, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchMetrics {
    pub case: String,
    pub n: usize,
    pub t1: f64,
    pub tn: f64,
    pub repeats: usize,
    pub aggregation: Aggregation,
}

impl BenchMetrics {
    pub fn speedup(&self) -> f64 {
        self.t1 / self.tn
    }

    pub fn efficiency(&self) -> f64 {
        self.t1 / (self.n as f64 * self.tn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_points: usize,
    pub extent: BBox,
    /// The raster spans the extent's width; cells are square, so its height
    /// is `raster_nrows · width / raster_ncols` from the extent's bottom.
    pub raster_ncols: usize,
    pub raster_nrows: usize,
    pub raster_kind: RasterKind,
    pub n_categories: usize,
    pub n_lines: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            n_points: 1000,
            extent: BBox {
                xmin: 0.0,
                ymin: 0.0,
                xmax: 1000.0,
                ymax: 1000.0,
            },
            raster_ncols: 100,
            raster_nrows: 100,
            raster_kind: RasterKind::Continuous,
            n_categories: 8,
            n_lines: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub points: FeatureSet,
    pub lines: FeatureSet,
    pub raster: Raster,
}

/// Uniform draws in `[0, 1)` from ChaCha8 (rand_chacha 0.3) seeded with
/// `seed_from_u64(seed)`, one stream per output: 0 points, 1 raster, 2
/// lines. Each draw is the top 53 bits of `next_u64` scaled by 2⁻⁵³.
struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Uniform(rng)
    }

    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Deterministic synthetic inputs: uniform points carrying a value `v` in
/// `[0, 100)`, a raster of uniform values in `[0, 100)` (or categories
/// `1..=n_categories`), and short random two-vertex lines.
pub fn synth_dataset(s: &SynthSpec) -> Result<SynthData> {
    if s.extent.is_degenerate() {
        return Err(Error::InvalidParameter(
            "synthetic extent must have positive area".into(),
        ));
    }
    if s.raster_kind == RasterKind::Categorical && s.n_categories == 0 {
        return Err(Error::InvalidParameter("n_categories must be >= 1".into()));
    }
    let (w, h) = (s.extent.width(), s.extent.height());

    let mut u = Uniform::new(s.seed, 0);
    let points = (0..s.n_points)
        .map(|i| {
            let p = Point::new(s.extent.xmin + u.next() * w, s.extent.ymin + u.next() * h);
            Feature {
                id: format!("p{i}"),
                geometry: Geometry::Point(p),
                attributes: vec![AttrValue::Number(100.0 * u.next())],
            }
        })
        .collect();
    let points = FeatureSet::new(vec!["v".into()], points)?;

    let mut u = Uniform::new(s.seed, 1);
    let values = (0..s.raster_ncols * s.raster_nrows)
        .map(|_| match s.raster_kind {
            RasterKind::Continuous => 100.0 * u.next(),
            RasterKind::Categorical => {
                1.0 + ((u.next() * s.n_categories as f64) as usize).min(s.n_categories - 1) as f64
            }
        })
        .collect();
    let cellsize = w / s.raster_ncols.max(1) as f64;
    let raster = Raster::new(
        s.raster_ncols,
        s.raster_nrows,
        s.extent.xmin,
        s.extent.ymin,
        cellsize,
        -9999.0,
        values,
        s.raster_kind,
    )?;

    let mut u = Uniform::new(s.seed, 2);
    let max_len = 0.1 * w.min(h);
    let lines = (0..s.n_lines)
        .map(|i| {
            let a = Point::new(s.extent.xmin + u.next() * w, s.extent.ymin + u.next() * h);
            let angle = u.next() * std::f64::consts::TAU;
            let len = max_len * (0.1 + 0.9 * u.next());
            let b = Point::new(a.x + len * angle.cos(), a.y + len * angle.sin());
            Ok(Feature {
                id: format!("l{i}"),
                geometry: Geometry::Polyline(Polyline::new(vec![a, b])?),
                attributes: vec![],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lines = FeatureSet::new(vec![], lines)?;
    Ok(SynthData { points, lines, raster })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchCase {
    /// Buffered mean over a continuous raster.
    Extract,
    /// Distance from each point to the nearest line.
    Nearest,
    /// Buffered category tabulation over a categorical raster.
    Frequency,
}

impl BenchCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchCase::Extract => "extract",
            BenchCase::Nearest => "nearest",
            BenchCase::Frequency => "frequency",
        }
    }

    pub fn raster_kind(&self) -> RasterKind {
        match self {
            BenchCase::Frequency => RasterKind::Categorical,
            _ => RasterKind::Continuous,
        }
    }

    /// Task over synthetic data; the points are the anchors.
    pub fn task(&self, data: &SynthData, radius: f64) -> TaskSpec {
        let points = DatasetRef::Features(Arc::new(data.points.clone()));
        match self {
            BenchCase::Nearest => TaskSpec::new(
                Op::NearestDistance,
                DatasetRef::Features(Arc::new(data.lines.clone())),
                points,
                Params::default(),
            ),
            BenchCase::Extract | BenchCase::Frequency => TaskSpec::new(
                Op::ExtractAt,
                DatasetRef::Raster(Arc::new(data.raster.clone())),
                points,
                Params {
                    radius,
                    stat: if *self == BenchCase::Frequency {
                        Stat::Frequency
                    } else {
                        Stat::Mean
                    },
                    ..Params::default()
                },
            ),
        }
    }
}

impl fmt::Display for BenchCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "extract" => BenchCase::Extract,
            "nearest" => BenchCase::Nearest,
            "frequency" => BenchCase::Frequency,
            other => return Err(Error::InvalidParameter(format!("unknown benchmark case {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTiming {
    pub case: String,
    pub workers: usize,
    pub repeat: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub runs: Vec<RunTiming>,
    /// Median-aggregated metrics per worker count, then mean-aggregated.
    pub metrics: Vec<BenchMetrics>,
    /// SHA-256 of the single-worker result CSV.
    pub checksum: String,
    /// Wall time of the whole sweep, including partitioning and checks.
    pub total_s: f64,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed()))
}

/// Times `task` under a grid built from `grid` for each worker count
/// (`1` is added when missing). Every worker count must first reproduce the
/// single-worker output byte for byte. Only the executor run is timed.
pub fn run_benchmark(
    case: &str,
    task: &TaskSpec,
    grid: &GridSpec,
    workers: &[usize],
    repeats: usize,
) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    if workers.contains(&0) {
        return Err(Error::InvalidParameter("worker counts must be >= 1".into()));
    }
    let sweep_start = Instant::now();
    let mut counts = vec![1];
    counts.extend(workers.iter().copied().filter(|&w| w != 1));
    counts.dedup();

    let anchors = task.anchors()?;
    let parts = build_partitions(&anchors, grid)?;
    let reference = run_grid(task, &parts, &RunConfig::with_workers(1))?;
    if reference.had_errors() {
        return Err(Error::Internal(format!(
            "benchmark reference run failed in chunks {:?}",
            reference.failed_chunks
        )));
    }
    let reference = reference.table.to_csv_bytes();
    let checksum = format!("{:x}", Sha256::digest(&reference));

    let mut runs = Vec::new();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for &w in &counts {
        let cfg = RunConfig::with_workers(w);
        let gate = run_grid(task, &parts, &cfg)?;
        if gate.table.to_csv_bytes() != reference {
            return Err(Error::Internal(format!(
                "benchmark gate: output with {w} workers differs from the single-worker output"
            )));
        }
        let mut times = Vec::with_capacity(repeats);
        for repeat in 0..repeats {
            let mut elapsed = timed(|| run_grid(task, &parts, &cfg))?.1;
            if elapsed.is_zero() {
                elapsed = timed(|| run_grid(task, &parts, &cfg))?.1;
                if elapsed.is_zero() {
                    return Err(Error::Internal("timer reported zero elapsed time twice".into()));
                }
            }
            let s = elapsed.as_secs_f64();
            runs.push(RunTiming {
                case: case.to_string(),
                workers: w,
                repeat,
                elapsed_s: s,
            });
            times.push(s);
        }
        samples.push(times);
    }

    let mut metrics = Vec::new();
    for agg in [Aggregation::Median, Aggregation::Mean] {
        let t1 = agg.apply(&samples[0]);
        for (&w, times) in counts.iter().zip(&samples) {
            metrics.push(BenchMetrics {
                case: case.to_string(),
                n: w,
                t1,
                tn: agg.apply(times),
                repeats,
                aggregation: agg,
            });
        }
    }
    Ok(BenchReport {
        runs,
        metrics,
        checksum,
        total_s: sweep_start.elapsed().as_secs_f64(),
    })
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

impl BenchReport {
    /// `case,workers,repeat,elapsed_s`.
    pub fn runs_csv(&self) -> Vec<u8> {
        csv_bytes(
            &["case", "workers", "repeat", "elapsed_s"],
            self.runs.iter().map(|r| {
                vec![
                    r.case.clone(),
                    r.workers.to_string(),
                    r.repeat.to_string(),
                    format_float(r.elapsed_s),
                ]
            }),
        )
    }

    /// `case,aggregation,workers,repeats,t1,tn,speedup,efficiency,checksum`.
    pub fn summary_csv(&self) -> Vec<u8> {
        csv_bytes(
            &[
                "case",
                "aggregation",
                "workers",
                "repeats",
                "t1",
                "tn",
                "speedup",
                "efficiency",
                "checksum",
            ],
            self.metrics.iter().map(|m| {
                vec![
                    m.case.clone(),
                    m.aggregation.as_str().to_string(),
                    m.n.to_string(),
                    m.repeats.to_string(),
                    format_float(m.t1),
                    format_float(m.tn),
                    format_float(m.speedup()),
                    format_float(m.efficiency()),
                    self.checksum.clone(),
                ]
            }),
        )
    }
}
