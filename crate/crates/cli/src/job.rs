//! Job description shared by `chop run`, `chop multiraster` and `--config`
//! files. Flags are first folded into a [`JobConfig`], so a config file and
//! the equivalent flags go through exactly the same code.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use chop::dataio::{load_features, load_partitions, load_raster, FeatureFormat, FeatureSet};
use chop::executor::{
    run_grid, run_hierarchy, run_multirasters, run_single, DatasetRef, Op, Params, RunConfig, RunOutput, Slot, TaskSpec,
};
use chop::partition::{build_partitions, group_by_attribute, group_by_regions, GridSpec, PartitionMode};
use chop::raster::{RasterKind, Stat};
use chop::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub mode: String,
    #[serde(default = "one")]
    pub nx: usize,
    #[serde(default = "one")]
    pub ny: usize,
    #[serde(default = "one")]
    pub nq: usize,
    #[serde(default = "one")]
    pub groups: usize,
    #[serde(default = "one")]
    pub min_features: usize,
    #[serde(default)]
    pub padding: f64,
}

fn one() -> usize {
    1
}

impl GridConfig {
    pub fn to_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec {
            mode: self.mode.parse::<PartitionMode>()?,
            nx: self.nx,
            ny: self.ny,
            nq: self.nq,
            n_groups: self.groups,
            min_features: self.min_features,
            padding: self.padding,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub task: String,
    /// Context input (raster `.asc` or features). Optional for multi-raster jobs.
    #[serde(default)]
    pub x: Option<PathBuf>,
    pub y: PathBuf,
    #[serde(default)]
    pub rasters: Vec<PathBuf>,
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default = "default_x_col")]
    pub x_col: String,
    #[serde(default = "default_y_col")]
    pub y_col: String,
    #[serde(default)]
    pub format: Option<String>,

    #[serde(default)]
    pub radius: f64,
    #[serde(default = "default_stat")]
    pub stat: String,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub maxdist: Option<f64>,
    #[serde(default)]
    pub value_cols: Vec<String>,

    #[serde(default)]
    pub partition: Option<PathBuf>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub hierarchy: Option<String>,
    #[serde(default)]
    pub regions: Option<PathBuf>,
    #[serde(default)]
    pub regions_id: Option<String>,

    #[serde(default)]
    pub pad_y: bool,
    #[serde(default)]
    pub arg_map: BTreeMap<String, String>,

    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "yes")]
    pub capture_errors: bool,
    #[serde(default)]
    pub fail_fast: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_id() -> String {
    "id".into()
}

fn default_x_col() -> String {
    "x".into()
}

fn default_y_col() -> String {
    "y".into()
}

fn default_stat() -> String {
    "mean".into()
}

fn yes() -> bool {
    true
}

pub fn load_job(path: &Path) -> Result<JobConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        line: Some(e.inner().line()),
        message: format!("at {}: {}", e.path(), e.inner()),
    })
}

fn is_raster_path(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("asc"))
}

fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::Io {
            path: p.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        })
    }
}

impl JobConfig {
    pub fn new(task: String, y: PathBuf) -> Self {
        JobConfig {
            task,
            x: None,
            y,
            rasters: Vec::new(),
            id: default_id(),
            x_col: default_x_col(),
            y_col: default_y_col(),
            format: None,
            radius: 0.0,
            stat: default_stat(),
            bandwidth: None,
            maxdist: None,
            value_cols: Vec::new(),
            partition: None,
            grid: None,
            hierarchy: None,
            regions: None,
            regions_id: None,
            pad_y: false,
            arg_map: BTreeMap::new(),
            workers: None,
            capture_errors: true,
            fail_fast: false,
            out: None,
        }
    }

    fn feature_format(&self, path: &Path) -> Result<FeatureFormat> {
        match &self.format {
            Some(f) => f.parse(),
            None => FeatureFormat::from_path(path).ok_or_else(|| {
                Error::InvalidParameter(format!("cannot tell the format of {}; pass --format", path.display()))
            }),
        }
    }

    pub fn load_features(&self, path: &Path) -> Result<FeatureSet> {
        load_features(path, self.feature_format(path)?, &self.id, &self.x_col, &self.y_col)
    }

    /// A single raster is read here, so a malformed file fails before any
    /// chunk runs.
    fn dataset(&self, path: &Path) -> Result<DatasetRef> {
        require_file(path)?;
        if is_raster_path(path) {
            let kind = if self.stat.parse::<Stat>()? == Stat::Frequency {
                RasterKind::Categorical
            } else {
                RasterKind::Continuous
            };
            Ok(DatasetRef::Raster(Arc::new(load_raster(path, kind)?)))
        } else {
            Ok(DatasetRef::Features(Arc::new(self.load_features(path)?)))
        }
    }

    fn check_partition_flags(&self) -> Result<()> {
        let given: Vec<&str> = [
            self.partition.is_some().then_some("partition"),
            self.grid.is_some().then_some("grid"),
            self.hierarchy.is_some().then_some("hierarchy"),
            self.regions.is_some().then_some("regions"),
        ]
        .into_iter()
        .flatten()
        .collect();
        if given.len() > 1 {
            return Err(Error::InvalidParameter(format!(
                "choose one way to split the work, got {}",
                given.join(" and ")
            )));
        }
        if self.regions_id.is_some() && self.regions.is_none() {
            return Err(Error::InvalidParameter("regions_id needs regions".into()));
        }
        if !self.rasters.is_empty() && !given.is_empty() {
            return Err(Error::InvalidParameter(
                "multi-raster jobs split by raster file and take no partition".into(),
            ));
        }
        Ok(())
    }

    pub fn run_config(&self, inject_failures: &[usize]) -> Result<RunConfig> {
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        Ok(RunConfig {
            workers,
            capture_errors: self.capture_errors,
            fail_fast: self.fail_fast,
            inject_failures: inject_failures.iter().copied().collect(),
        })
    }

    pub fn task(&self) -> Result<TaskSpec> {
        let op: Op = self.task.parse()?;
        let params = Params {
            radius: self.radius,
            stat: self.stat.parse()?,
            bandwidth: self.bandwidth,
            maxdist: self.maxdist,
            value_columns: self.value_cols.clone(),
        };
        let x = match (&self.x, self.rasters.first()) {
            (Some(x), _) => self.dataset(x)?,
            (None, Some(r)) => DatasetRef::RasterPath(r.clone()),
            (None, None) => return Err(Error::InvalidParameter("missing x input".into())),
        };
        let y = self.dataset(&self.y)?;
        let mut task = TaskSpec::new(op, x, y, params);
        task.pad_y = self.pad_y;
        task.arg_map = self
            .arg_map
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.parse::<Slot>()?)))
            .collect::<Result<_>>()?;
        Ok(task)
    }

    pub fn execute(&self, inject_failures: &[usize]) -> Result<RunOutput> {
        self.check_partition_flags()?;
        let cfg = self.run_config(inject_failures)?;
        // missing files in a multi-raster job become error rows, not a load failure
        let task = self.task()?;
        if !self.rasters.is_empty() {
            return run_multirasters(&task, &self.rasters, &cfg);
        }
        if let Some(path) = &self.partition {
            return run_grid(&task, &load_partitions(path)?, &cfg);
        }
        if let Some(grid) = &self.grid {
            let parts = build_partitions(&*task.anchors()?, &grid.to_spec()?)?;
            return run_grid(&task, &parts, &cfg);
        }
        if let Some(column) = &self.hierarchy {
            let groups = group_by_attribute(&*task.anchors()?, column)?;
            return run_hierarchy(&task, &groups, &cfg);
        }
        if let Some(path) = &self.regions {
            require_file(path)?;
            let regions = self.load_features(path)?;
            let groups = group_by_regions(&*task.anchors()?, &regions, self.regions_id.as_deref())?;
            return run_hierarchy(&task, &groups, &cfg);
        }
        if !cfg.inject_failures.is_empty() {
            return Err(Error::InvalidParameter(
                "failure injection needs a partitioned run".into(),
            ));
        }
        run_single(&task)
    }
}
