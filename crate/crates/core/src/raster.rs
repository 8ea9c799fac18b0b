//! In-memory rasters, cell windows, exact coverage fractions and weighted
//! zonal statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::{clip_to_band, clip_to_columns, signed_area, BBox, Point, Polygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RasterKind {
    #[default]
    Continuous,
    Categorical,
}

impl FromStr for RasterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(RasterKind::Continuous),
            "categorical" => Ok(RasterKind::Categorical),
            other => Err(Error::InvalidParameter(format!("unknown raster kind {other:?}"))),
        }
    }
}

impl fmt::Display for RasterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RasterKind::Continuous => "continuous",
            RasterKind::Categorical => "categorical",
        })
    }
}

/// Square-cell grid. Values are row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    ncols: usize,
    nrows: usize,
    xll: f64,
    yll: f64,
    cellsize: f64,
    nodata: f64,
    values: Vec<f64>,
    kind: RasterKind,
}

impl Raster {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
        kind: RasterKind,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidInput(format!(
                "raster must be non-empty, got {ncols}x{nrows}"
            )));
        }
        if !(cellsize > 0.0 && cellsize.is_finite()) {
            return Err(Error::InvalidInput(format!("cellsize must be > 0, got {cellsize}")));
        }
        if !xll.is_finite() || !yll.is_finite() {
            return Err(Error::InvalidInput("raster origin must be finite".into()));
        }
        if values.len() != ncols * nrows {
            return Err(Error::InvalidInput(format!(
                "expected {} values for {ncols}x{nrows} raster, got {}",
                ncols * nrows,
                values.len()
            )));
        }
        if kind == RasterKind::Categorical {
            let bad = values
                .iter()
                .find(|v| !is_nodata(**v, nodata) && category_of(**v).is_none());
            if let Some(v) = bad {
                return Err(Error::InvalidInput(format!(
                    "categorical raster holds non-integer value {v}"
                )));
            }
        }
        Ok(Raster {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
            kind,
        })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn xll(&self) -> f64 {
        self.xll
    }

    pub fn yll(&self) -> f64 {
        self.yll
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn kind(&self) -> RasterKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn ytop(&self) -> f64 {
        self.yll + self.nrows as f64 * self.cellsize
    }

    pub fn extent(&self) -> BBox {
        BBox {
            xmin: self.xll,
            ymin: self.yll,
            xmax: self.xll + self.ncols as f64 * self.cellsize,
            ymax: self.ytop(),
        }
    }

    pub fn full_window(&self) -> CellWindow {
        CellWindow {
            row0: 0,
            col0: 0,
            nrows: self.nrows,
            ncols: self.ncols,
        }
    }

    /// Cell rectangle computed from global indices, so cropped and full
    /// computations see bitwise identical cell edges.
    pub fn cell_bbox(&self, row: usize, col: usize) -> BBox {
        let ytop = self.ytop();
        BBox {
            xmin: self.xll + col as f64 * self.cellsize,
            xmax: self.xll + (col + 1) as f64 * self.cellsize,
            ymax: ytop - row as f64 * self.cellsize,
            ymin: ytop - (row + 1) as f64 * self.cellsize,
        }
    }

    /// Cell containing `p` under the half-open rule `[x, x+cs) × (y−cs, y]`.
    pub fn cell_at(&self, p: Point) -> Option<(usize, usize)> {
        let fx = ((p.x - self.xll) / self.cellsize).floor();
        let fy = ((self.ytop() - p.y) / self.cellsize).floor();
        if !(fx >= 0.0 && fy >= 0.0) || fx >= self.ncols as f64 || fy >= self.nrows as f64 {
            return None;
        }
        Some((fy as usize, fx as usize))
    }

    pub fn is_valid(&self, v: f64) -> bool {
        !is_nodata(v, self.nodata)
    }
}

fn is_nodata(v: f64, nodata: f64) -> bool {
    v.to_bits() == nodata.to_bits() || v.is_nan()
}

fn category_of(v: f64) -> Option<i64> {
    (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
}

/// Rectangular block of cells; may be empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellWindow {
    pub row0: usize,
    pub col0: usize,
    pub nrows: usize,
    pub ncols: usize,
}

impl CellWindow {
    pub fn is_empty(&self) -> bool {
        self.nrows == 0 || self.ncols == 0
    }

    pub fn intersect(&self, other: &CellWindow) -> CellWindow {
        let r0 = self.row0.max(other.row0);
        let c0 = self.col0.max(other.col0);
        let r1 = (self.row0 + self.nrows).min(other.row0 + other.nrows);
        let c1 = (self.col0 + self.ncols).min(other.col0 + other.ncols);
        if r1 <= r0 || c1 <= c0 {
            return CellWindow::default();
        }
        CellWindow {
            row0: r0,
            col0: c0,
            nrows: r1 - r0,
            ncols: c1 - c0,
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row0 && row < self.row0 + self.nrows && col >= self.col0 && col < self.col0 + self.ncols
    }
}

/// Smallest window holding every cell whose rectangle intersects `b`.
///
/// Cells that only touch `b` along an edge are left out unless `b` itself is
/// degenerate and lies on that edge.
pub fn window_for_bbox(r: &Raster, b: &BBox) -> CellWindow {
    let ext = r.extent();
    if !ext.intersects(b) {
        return CellWindow::default();
    }
    let cs = r.cellsize;
    let span = |lo: f64, hi: f64, n: usize| -> (usize, usize) {
        let first = (lo / cs).floor().max(0.0);
        let last = ((hi / cs).ceil() - 1.0).max(first).min(n as f64 - 1.0);
        let first = first.min(n as f64 - 1.0);
        (first as usize, last as usize)
    };
    let (c0, c1) = span(b.xmin - r.xll, b.xmax - r.xll, r.ncols);
    let ytop = r.ytop();
    let (r0, r1) = span(ytop - b.ymax, ytop - b.ymin, r.nrows);
    CellWindow {
        row0: r0,
        col0: c0,
        nrows: r1 - r0 + 1,
        ncols: c1 - c0 + 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageCell {
    pub row: usize,
    pub col: usize,
    /// Covered share of the cell area, in (0, 1].
    pub fraction: f64,
}

/// Exact per-cell coverage of `poly` over the whole raster.
pub fn coverage_fractions(r: &Raster, poly: &Polygon) -> Vec<CoverageCell> {
    coverage_fractions_in(r, poly, &r.full_window())
}

/// Coverage restricted to the cells of `window`. Cells are emitted in
/// row-major order and every cell value depends only on its global index,
/// so any window containing the polygon gives the same result as the full
/// raster.
pub fn coverage_fractions_in(r: &Raster, poly: &Polygon, window: &CellWindow) -> Vec<CoverageCell> {
    let w = window.intersect(&window_for_bbox(r, &poly.bbox()));
    let mut out = Vec::new();
    if w.is_empty() {
        return out;
    }
    let cell_area = r.cellsize * r.cellsize;
    let rings: Vec<&[crate::geom::Point]> = poly.rings().map(|ring| ring.vertices()).collect();
    let mut strips: Vec<Vec<Point>> = vec![Vec::new(); rings.len()];
    let mut scratch = Vec::new();
    let mut piece = Vec::new();

    for row in w.row0..w.row0 + w.nrows {
        let band = r.cell_bbox(row, w.col0);
        let mut any = false;
        for (strip, ring) in strips.iter_mut().zip(&rings) {
            clip_to_band(ring, band.ymin, band.ymax, &mut scratch, strip);
            any |= !strip.is_empty();
        }
        if !any {
            continue;
        }
        for col in w.col0..w.col0 + w.ncols {
            let cell = r.cell_bbox(row, col);
            let mut area = 0.0;
            for strip in strips.iter().filter(|s| !s.is_empty()) {
                clip_to_columns(strip, cell.xmin, cell.xmax, &mut scratch, &mut piece);
                area += signed_area(&piece);
            }
            let fraction = area / cell_area;
            if fraction > 0.0 {
                out.push(CoverageCell {
                    row,
                    col,
                    fraction: fraction.min(1.0),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stat {
    Mean,
    Sum,
    Count,
    Min,
    Max,
    Stdev,
    Frequency,
}

impl Stat {
    pub fn name(&self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Sum => "sum",
            Stat::Count => "count",
            Stat::Min => "min",
            Stat::Max => "max",
            Stat::Stdev => "stdev",
            Stat::Frequency => "frequency",
        }
    }
}

impl FromStr for Stat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mean" => Stat::Mean,
            "sum" => Stat::Sum,
            "count" => Stat::Count,
            "min" => Stat::Min,
            "max" => Stat::Max,
            "stdev" => Stat::Stdev,
            "frequency" => Stat::Frequency,
            other => return Err(Error::InvalidParameter(format!("unknown statistic {other:?}"))),
        })
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatValue {
    Scalar(Option<f64>),
    /// Category → summed coverage weight.
    Frequency(BTreeMap<i64, f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatResult {
    pub value: StatValue,
    /// Σ coverage weight over valid cells.
    pub count: f64,
}

/// Weighted summary of the covered cells. Nodata cells are skipped; an empty
/// selection yields a null value with count 0.
pub fn zonal_stat(r: &Raster, cells: &[CoverageCell], stat: Stat) -> Result<StatResult> {
    if stat == Stat::Frequency {
        if r.kind != RasterKind::Categorical {
            return Err(Error::InvalidParameter(
                "frequency requires a categorical raster".into(),
            ));
        }
        let mut freq = BTreeMap::new();
        let mut count = 0.0;
        for c in cells {
            let v = r.value(c.row, c.col);
            if !r.is_valid(v) {
                continue;
            }
            let key = category_of(v).expect("validated on construction");
            *freq.entry(key).or_insert(0.0) += c.fraction;
            count += c.fraction;
        }
        return Ok(StatResult {
            value: StatValue::Frequency(freq),
            count,
        });
    }

    let mut sum_w = 0.0;
    let mut sum_wv = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in cells {
        let v = r.value(c.row, c.col);
        if !r.is_valid(v) {
            continue;
        }
        sum_w += c.fraction;
        sum_wv += c.fraction * v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if sum_w == 0.0 {
        let value = (stat == Stat::Count).then_some(0.0);
        return Ok(StatResult {
            value: StatValue::Scalar(value),
            count: 0.0,
        });
    }
    let mean = if lo == hi { lo } else { (sum_wv / sum_w).clamp(lo, hi) };
    let value = match stat {
        Stat::Mean => mean,
        Stat::Sum => sum_wv,
        Stat::Count => sum_w,
        Stat::Min => lo,
        Stat::Max => hi,
        Stat::Stdev => {
            let mut ss = 0.0;
            for c in cells {
                let v = r.value(c.row, c.col);
                if r.is_valid(v) {
                    ss += c.fraction * (v - mean) * (v - mean);
                }
            }
            (ss / sum_w).sqrt()
        }
        Stat::Frequency => unreachable!(),
    };
    Ok(StatResult {
        value: StatValue::Scalar(Some(value)),
        count: sum_w,
    })
}

/// Value of the cell holding `p`, or `None` outside the raster or on nodata.
pub fn value_at_point(r: &Raster, p: Point) -> Option<f64> {
    let (row, col) = r.cell_at(p)?;
    let v = r.value(row, col);
    r.is_valid(v).then_some(v)
}
