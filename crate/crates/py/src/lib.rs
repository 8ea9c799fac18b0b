//! Python module `chop`: the datasets, partitions, spatial operations and
//! the parallel runner of the Rust crate.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyFileNotFoundError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::IntoPyObjectExt;

use chop::bench::{self, SynthSpec};
use chop::dataio::{self, AttrValue, Cell, Feature, FeatureFormat};
use chop::executor::{self, DatasetRef, Op, Params, RunConfig, TaskSpec};
use chop::geom::{Geometry, Point};
use chop::geoops::{self, SedcParams};
use chop::partition::{self, GridSpec, PartitionMode};
use chop::raster::{RasterKind, Stat};
use chop::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(m) | Error::InvalidInput(m) | Error::UnsupportedGeometry(m) => PyValueError::new_err(m),
        Error::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
            PyFileNotFoundError::new_err(e.to_string())
        }
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Load { .. } => PyValueError::new_err(e.to_string()),
        Error::ChunkFailed { .. } | Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for chop::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Square-cell grid, row 0 at the top.
#[pyclass(name = "Raster", module = "chop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRaster(Arc<chop::raster::Raster>);

#[pymethods]
impl PyRaster {
    #[new]
    #[pyo3(signature = (ncols, nrows, xll, yll, cellsize, values, nodata = -9999.0, kind = "continuous"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        values: Vec<f64>,
        nodata: f64,
        kind: &str,
    ) -> PyResult<Self> {
        let kind: RasterKind = kind.parse().py()?;
        let r = chop::raster::Raster::new(ncols, nrows, xll, yll, cellsize, nodata, values, kind).py()?;
        Ok(PyRaster(Arc::new(r)))
    }

    /// Reads an ESRI ASCII grid.
    #[staticmethod]
    #[pyo3(signature = (path, kind = "continuous"))]
    fn load(path: PathBuf, kind: &str) -> PyResult<Self> {
        Ok(PyRaster(Arc::new(dataio::load_raster(path, kind.parse().py()?).py()?)))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataio::write_raster(&self.0, path).py()
    }

    #[getter]
    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    #[getter]
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    #[getter]
    fn cellsize(&self) -> f64 {
        self.0.cellsize()
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind().to_string()
    }

    /// `(xmin, ymin, xmax, ymax)`.
    #[getter]
    fn extent(&self) -> (f64, f64, f64, f64) {
        let b = self.0.extent();
        (b.xmin, b.ymin, b.xmax, b.ymax)
    }

    fn value(&self, row: usize, col: usize) -> PyResult<f64> {
        if row >= self.0.nrows() || col >= self.0.ncols() {
            return Err(PyValueError::new_err(format!(
                "cell ({row}, {col}) is outside the raster"
            )));
        }
        Ok(self.0.value(row, col))
    }

    fn __repr__(&self) -> String {
        format!(
            "Raster({}x{}, cellsize={}, {})",
            self.0.ncols(),
            self.0.nrows(),
            self.0.cellsize(),
            self.0.kind()
        )
    }
}

/// Ordered, uniquely identified features of one geometry kind.
#[pyclass(name = "FeatureSet", module = "chop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFeatureSet(Arc<dataio::FeatureSet>);

fn attr_to_py(py: Python<'_>, a: &AttrValue) -> PyResult<Py<PyAny>> {
    match a {
        AttrValue::Null => Ok(py.None()),
        AttrValue::Number(v) => v.into_py_any(py),
        AttrValue::Text(s) => s.into_py_any(py),
    }
}

#[pymethods]
impl PyFeatureSet {
    /// Point features from parallel coordinate lists. `values` maps column
    /// names to one number per point.
    #[staticmethod]
    #[pyo3(signature = (ids, xs, ys, values = None))]
    fn from_points(
        ids: Vec<String>,
        xs: Vec<f64>,
        ys: Vec<f64>,
        values: Option<Vec<(String, Vec<f64>)>>,
    ) -> PyResult<Self> {
        let values = values.unwrap_or_default();
        if xs.len() != ids.len() || ys.len() != ids.len() || values.iter().any(|(_, v)| v.len() != ids.len()) {
            return Err(PyValueError::new_err(
                "ids, xs, ys and every value column must have the same length",
            ));
        }
        let columns = values.iter().map(|(name, _)| name.clone()).collect();
        let features = ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| Feature {
                id,
                geometry: Geometry::Point(Point::new(xs[i], ys[i])),
                attributes: values.iter().map(|(_, v)| AttrValue::Number(v[i])).collect(),
            })
            .collect();
        Ok(PyFeatureSet(Arc::new(dataio::FeatureSet::new(columns, features).py()?)))
    }

    /// Reads a point CSV or a GeoJSON FeatureCollection; the format is taken
    /// from the extension unless given.
    #[staticmethod]
    #[pyo3(signature = (path, id = "id", x = "x", y = "y", format = None))]
    fn load(path: PathBuf, id: &str, x: &str, y: &str, format: Option<&str>) -> PyResult<Self> {
        let format = match format {
            Some(f) => f.parse().py()?,
            None => FeatureFormat::from_path(&path)
                .ok_or_else(|| PyValueError::new_err("cannot tell the format from the extension; pass format="))?,
        };
        Ok(PyFeatureSet(Arc::new(
            dataio::load_features(path, format, id, x, y).py()?,
        )))
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.features().iter().map(|f| f.id.clone()).collect()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.0.columns().to_vec()
    }

    /// `"point"`, `"polyline"`, `"polygon"`, or `None` when empty.
    #[getter]
    fn kind(&self) -> Option<String> {
        self.0.kind().map(|k| k.to_string())
    }

    fn column(&self, py: Python<'_>, name: &str) -> PyResult<Vec<Py<PyAny>>> {
        let at = self
            .0
            .column_index(name)
            .ok_or_else(|| PyValueError::new_err(format!("no column {name:?}")))?;
        self.0
            .features()
            .iter()
            .map(|f| attr_to_py(py, &f.attributes[at]))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("FeatureSet({} features, columns={:?})", self.0.len(), self.0.columns())
    }
}

#[pyclass(name = "PartitionSet", module = "chop", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPartitionSet(Arc<partition::PartitionSet>);

#[pymethods]
impl PyPartitionSet {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyPartitionSet(Arc::new(dataio::load_partitions(path).py()?)))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataio::save_partitions(&self.0, path).py()
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode.to_string()
    }

    #[getter]
    fn padding(&self) -> f64 {
        self.0.padding
    }

    fn member_counts(&self) -> Vec<usize> {
        self.0.member_counts()
    }

    fn member_ids(&self, chunk_id: usize) -> PyResult<Vec<String>> {
        self.0
            .chunks
            .get(chunk_id)
            .map(|c| c.member_ids.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no chunk {chunk_id}")))
    }

    fn to_json(&self) -> String {
        dataio::partitions_to_string(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "PartitionSet({}, {} chunks, padding={})",
            self.0.mode,
            self.0.len(),
            self.0.padding
        )
    }
}

/// Rows keyed by anchor id. `rows()` yields `(id, chunk_id, values, error)`.
#[pyclass(name = "ResultTable", module = "chop", frozen)]
struct PyResultTable(dataio::ResultTable);

fn cell_to_py(py: Python<'_>, c: &Cell) -> PyResult<Py<PyAny>> {
    match c {
        Cell::Null => Ok(py.None()),
        Cell::Float(v) => v.into_py_any(py),
        Cell::Int(v) => v.into_py_any(py),
        Cell::Bool(v) => v.into_py_any(py),
        Cell::Text(s) => s.into_py_any(py),
    }
}

type PyRow = (String, Option<usize>, Vec<Py<PyAny>>, Option<String>);

#[pymethods]
impl PyResultTable {
    /// Value columns, without `id`, `chunk_id` and `error`.
    #[getter]
    fn columns(&self) -> Vec<String> {
        self.0.columns.clone()
    }

    fn rows(&self, py: Python<'_>) -> PyResult<Vec<PyRow>> {
        self.0
            .rows
            .iter()
            .map(|r| {
                let values = r.values.iter().map(|c| cell_to_py(py, c)).collect::<PyResult<_>>()?;
                Ok((r.id.clone(), r.chunk_id, values, r.error.clone()))
            })
            .collect()
    }

    /// One column by name, in row order.
    fn column(&self, py: Python<'_>, name: &str) -> PyResult<Vec<Py<PyAny>>> {
        let at = self
            .0
            .column_index(name)
            .ok_or_else(|| PyValueError::new_err(format!("no column {name:?}")))?;
        self.0.rows.iter().map(|r| cell_to_py(py, &r.values[at])).collect()
    }

    #[getter]
    fn has_errors(&self) -> bool {
        self.0.has_errors()
    }

    fn to_csv(&self) -> String {
        String::from_utf8(self.0.to_csv_bytes()).expect("CSV output is UTF-8")
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataio::save_table(&self.0, path).py()
    }

    fn __len__(&self) -> usize {
        self.0.rows.len()
    }

    fn __repr__(&self) -> String {
        format!("ResultTable({} rows, columns={:?})", self.0.rows.len(), self.0.columns)
    }
}

#[pyclass(name = "RunOutput", module = "chop", frozen)]
struct PyRunOutput {
    table: Py<PyResultTable>,
    failed_chunks: Vec<usize>,
    exit_code: i32,
}

#[pymethods]
impl PyRunOutput {
    #[getter]
    fn table(&self, py: Python<'_>) -> Py<PyResultTable> {
        self.table.clone_ref(py)
    }

    #[getter]
    fn failed_chunks(&self) -> Vec<usize> {
        self.failed_chunks.clone()
    }

    /// 0 when every chunk succeeded, 4 otherwise.
    #[getter]
    fn exit_code(&self) -> i32 {
        self.exit_code
    }
}

#[pyfunction]
#[pyo3(signature = (features, mode, nx = 1, ny = 1, nq = 1, n_groups = 1, min_features = 1, padding = 0.0))]
#[allow(clippy::too_many_arguments)]
fn build_partitions(
    features: &PyFeatureSet,
    mode: &str,
    nx: usize,
    ny: usize,
    nq: usize,
    n_groups: usize,
    min_features: usize,
    padding: f64,
) -> PyResult<PyPartitionSet> {
    let spec = GridSpec {
        mode: mode.parse::<PartitionMode>().py()?,
        nx,
        ny,
        nq,
        n_groups,
        min_features,
        padding,
    };
    Ok(PyPartitionSet(Arc::new(
        partition::build_partitions(&features.0, &spec).py()?,
    )))
}

#[pyfunction]
#[pyo3(signature = (raster, features, radius = 0.0, stat = "mean"))]
fn extract_at(raster: &PyRaster, features: &PyFeatureSet, radius: f64, stat: &str) -> PyResult<PyResultTable> {
    let out = geoops::extract_at(&raster.0, &features.0, radius, stat.parse().py()?).py()?;
    Ok(PyResultTable(out.into_table()))
}

#[pyfunction]
#[pyo3(signature = (targets, sources, value_columns, stat = "mean"))]
fn summarize_aw(
    targets: &PyFeatureSet,
    sources: &PyFeatureSet,
    value_columns: Vec<String>,
    stat: &str,
) -> PyResult<PyResultTable> {
    let out = geoops::summarize_aw(&targets.0, &sources.0, &value_columns, stat.parse().py()?).py()?;
    Ok(PyResultTable(out.into_table()))
}

#[pyfunction]
#[pyo3(signature = (targets, sources, bandwidth, value_columns, maxdist = None))]
fn summarize_sedc(
    targets: &PyFeatureSet,
    sources: &PyFeatureSet,
    bandwidth: f64,
    value_columns: Vec<String>,
    maxdist: Option<f64>,
) -> PyResult<PyResultTable> {
    let p = SedcParams::new(bandwidth, maxdist, value_columns).py()?;
    Ok(PyResultTable(
        geoops::summarize_sedc(&targets.0, &sources.0, &p).py()?.into_table(),
    ))
}

#[pyfunction]
fn nearest_distance(points: &PyFeatureSet, features: &PyFeatureSet) -> PyResult<PyResultTable> {
    Ok(PyResultTable(
        geoops::nearest_distance(&points.0, &features.0).py()?.into_table(),
    ))
}

fn dataset(obj: &Bound<'_, PyAny>) -> PyResult<DatasetRef> {
    if let Ok(r) = obj.cast::<PyRaster>() {
        return Ok(DatasetRef::Raster(r.get().0.clone()));
    }
    if let Ok(f) = obj.cast::<PyFeatureSet>() {
        return Ok(DatasetRef::Features(f.get().0.clone()));
    }
    if let Ok(path) = obj.extract::<PathBuf>() {
        return Ok(DatasetRef::RasterPath(path));
    }
    Err(PyValueError::new_err(
        "expected a Raster, a FeatureSet or a raster path",
    ))
}

/// Runs `op` in parallel, one chunk per partition cell, or over the whole
/// data in one chunk when `partitions` is omitted. `x` is the padded context
/// and `y` the anchor (swapped with `pad_y=True`).
#[pyfunction]
#[pyo3(signature = (
    op, x, y, partitions = None, *, radius = 0.0, stat = "mean", bandwidth = None, maxdist = None,
    value_columns = Vec::new(), pad_y = false, workers = 1, capture_errors = true, fail_fast = false
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    op: &str,
    x: &Bound<'_, PyAny>,
    y: &Bound<'_, PyAny>,
    partitions: Option<&PyPartitionSet>,
    radius: f64,
    stat: &str,
    bandwidth: Option<f64>,
    maxdist: Option<f64>,
    value_columns: Vec<String>,
    pad_y: bool,
    workers: usize,
    capture_errors: bool,
    fail_fast: bool,
) -> PyResult<PyRunOutput> {
    let params = Params {
        radius,
        stat: stat.parse::<Stat>().py()?,
        bandwidth,
        maxdist,
        value_columns,
    };
    let mut task = TaskSpec::new(op.parse::<Op>().py()?, dataset(x)?, dataset(y)?, params);
    task.pad_y = pad_y;
    let cfg = RunConfig {
        workers,
        capture_errors,
        fail_fast,
        ..Default::default()
    };
    let parts = partitions.map(|p| p.0.clone());
    let out = py
        .detach(move || match parts {
            Some(p) => executor::run_grid(&task, &p, &cfg),
            None => executor::run_single(&task),
        })
        .py()?;
    Ok(PyRunOutput {
        exit_code: out.exit_code(),
        failed_chunks: out.failed_chunks,
        table: Py::new(py, PyResultTable(out.table))?,
    })
}

/// `(speedup, efficiency)` of a run taking `tn` seconds on `n` workers
/// against `t1` on one.
#[pyfunction]
fn efficiency(t1: f64, n: usize, tn: f64) -> PyResult<(f64, f64)> {
    bench::efficiency(t1, n, tn).py()
}

/// Deterministic synthetic `(points, lines, raster)` on a 1000×1000 extent.
#[pyfunction]
#[pyo3(signature = (seed = 42, n_points = 1000, raster_size = 100, kind = "continuous", n_categories = 8, n_lines = 50))]
fn synth(
    seed: u64,
    n_points: usize,
    raster_size: usize,
    kind: &str,
    n_categories: usize,
    n_lines: usize,
) -> PyResult<(PyFeatureSet, PyFeatureSet, PyRaster)> {
    let data = bench::synth_dataset(&SynthSpec {
        seed,
        n_points,
        raster_ncols: raster_size,
        raster_nrows: raster_size,
        raster_kind: kind.parse().py()?,
        n_categories,
        n_lines,
        ..Default::default()
    })
    .py()?;
    Ok((
        PyFeatureSet(Arc::new(data.points)),
        PyFeatureSet(Arc::new(data.lines)),
        PyRaster(Arc::new(data.raster)),
    ))
}

#[pymodule]
#[pyo3(name = "chop")]
fn chop_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRaster>()?;
    m.add_class::<PyFeatureSet>()?;
    m.add_class::<PyPartitionSet>()?;
    m.add_class::<PyResultTable>()?;
    m.add_class::<PyRunOutput>()?;
    m.add_function(wrap_pyfunction!(build_partitions, m)?)?;
    m.add_function(wrap_pyfunction!(extract_at, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_aw, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_sedc, m)?)?;
    m.add_function(wrap_pyfunction!(nearest_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    Ok(())
}
