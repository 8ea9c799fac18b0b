//! The summarizers run by the executor.
//!
//! Every operation takes an anchor set (one output row per feature, in
//! order) and context data, and returns an [`OpOutput`]. The public entry
//! points run on whole datasets; the executor calls the crate-internal
//! variants with per-chunk subsets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::dataio::{AttrValue, Cell, Feature, FeatureSet, ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::geom::{
    buffer_point, clip_to_convex, point_segment_distance, polygon_area, signed_area, BBox, Geometry, GeometryKind,
    Point, Polygon, DEFAULT_BUFFER_SEGMENTS,
};
use crate::raster::{coverage_fractions_in, zonal_stat, CellWindow, CoverageCell, Raster, RasterKind, Stat, StatValue};

#[derive(Debug, Clone, PartialEq)]
pub struct OpRow {
    pub id: String,
    /// Aligned with [`OpOutput::columns`].
    pub values: Vec<Cell>,
    /// Category weights (frequency stat only).
    pub categories: BTreeMap<i64, f64>,
    /// Area the row's result was computed from; `None` when no context was
    /// available at all.
    pub reach: Option<BBox>,
    /// Interaction distance the result depends on (buffer radius, cutoff,
    /// nearest distance).
    pub interaction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpOutput {
    pub columns: Vec<String>,
    /// Whether per-category `freq_<k>` columns follow the fixed columns.
    pub frequency: bool,
    pub rows: Vec<OpRow>,
}

pub fn freq_column(category: i64) -> String {
    format!("freq_{category}")
}

impl OpOutput {
    /// Categories observed in any row.
    pub fn categories(&self) -> BTreeSet<i64> {
        self.rows.iter().flat_map(|r| r.categories.keys().copied()).collect()
    }

    /// Result table with one `freq_<k>` column per observed category
    /// (0 where a row saw none of it).
    pub fn into_table(self) -> ResultTable {
        let cats = self.categories();
        let mut table = ResultTable::new(self.columns);
        table.columns.extend(cats.iter().map(|&c| freq_column(c)));
        for row in self.rows {
            let mut values = row.values;
            values.extend(
                cats.iter()
                    .map(|c| Cell::Float(row.categories.get(c).copied().unwrap_or(0.0))),
            );
            table.rows.push(ResultRow {
                id: row.id,
                chunk_id: None,
                values,
                error: None,
            });
        }
        table
    }
}

fn all(fs: &FeatureSet) -> Vec<&Feature> {
    fs.features().iter().collect()
}

pub(crate) fn numeric_column(fs: &FeatureSet, column: &str, subset: &[usize]) -> Result<Vec<Option<f64>>> {
    let at = fs
        .column_index(column)
        .ok_or_else(|| Error::InvalidInput(format!("value column {column:?} not found")))?;
    subset
        .iter()
        .map(|&i| {
            let f = fs.get(i);
            match &f.attributes[at] {
                AttrValue::Null => Ok(None),
                AttrValue::Number(v) => Ok(Some(*v)),
                AttrValue::Text(s) => Err(Error::InvalidInput(format!(
                    "feature {:?}: {column:?} is not numeric ({s:?})",
                    f.id
                ))),
            }
        })
        .collect()
}

// ---------------------------------------------------------------- extract_at

pub(crate) fn check_extract(kind: Option<GeometryKind>, radius: f64) -> Result<()> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be finite and >= 0, got {radius}"
        )));
    }
    match kind {
        Some(GeometryKind::Polyline) => Err(Error::UnsupportedGeometry(
            "extract_at does not accept line features".into(),
        )),
        Some(GeometryKind::Polygon) if radius > 0.0 => Err(Error::UnsupportedGeometry(
            "buffered polygon extraction is not supported; use radius 0".into(),
        )),
        _ => Ok(()),
    }
}

fn extract_columns(stat: Stat) -> Vec<String> {
    match stat {
        Stat::Count | Stat::Frequency => vec!["count".into()],
        s => vec![s.name().into(), "count".into()],
    }
}

/// Zonal statistic of `x` for every feature of `y`: the containing cell for
/// points when `radius` is 0, a 64-gon buffer otherwise, and the polygon
/// itself for polygons.
pub fn extract_at(x: &Raster, y: &FeatureSet, radius: f64, stat: Stat) -> Result<OpOutput> {
    check_extract(y.kind(), radius)?;
    extract_at_in(x, &x.full_window(), &all(y), radius, stat)
}

/// [`extract_at`] reading only the cells of `window`.
pub(crate) fn extract_at_in(
    r: &Raster,
    window: &CellWindow,
    anchors: &[&Feature],
    radius: f64,
    stat: Stat,
) -> Result<OpOutput> {
    if stat == Stat::Frequency && r.kind() != RasterKind::Categorical {
        return Err(Error::InvalidParameter(
            "frequency requires a categorical raster".into(),
        ));
    }
    let mut rows = Vec::with_capacity(anchors.len());
    for f in anchors {
        let (cells, reach) = match &f.geometry {
            Geometry::Point(p) if radius == 0.0 => {
                let cells = match r.cell_at(*p) {
                    Some((row, col)) if window.contains(row, col) => vec![CoverageCell {
                        row,
                        col,
                        fraction: 1.0,
                    }],
                    _ => Vec::new(),
                };
                (cells, BBox::of_point(*p))
            }
            Geometry::Point(p) => {
                let buffer = buffer_point(*p, radius, DEFAULT_BUFFER_SEGMENTS)?;
                (coverage_fractions_in(r, &buffer, window), buffer.bbox())
            }
            Geometry::Polygon(poly) if radius == 0.0 => (coverage_fractions_in(r, poly, window), poly.bbox()),
            g => {
                check_extract(Some(g.kind()), radius)?;
                unreachable!()
            }
        };
        let res = zonal_stat(r, &cells, stat)?;
        let mut categories = BTreeMap::new();
        let values = match res.value {
            StatValue::Frequency(freq) => {
                categories = freq;
                vec![Cell::Float(res.count)]
            }
            StatValue::Scalar(v) if stat == Stat::Count => vec![Cell::from(v)],
            StatValue::Scalar(v) => vec![Cell::from(v), Cell::Float(res.count)],
        };
        rows.push(OpRow {
            id: f.id.clone(),
            values,
            categories,
            reach: Some(reach),
            interaction: radius,
        });
    }
    Ok(OpOutput {
        columns: extract_columns(stat),
        frequency: stat == Stat::Frequency,
        rows,
    })
}

// ------------------------------------------------------------- summarize_aw

pub(crate) fn check_polygons(fs: &FeatureSet, role: &str) -> Result<()> {
    match fs.kind() {
        None | Some(GeometryKind::Polygon) => Ok(()),
        Some(k) => Err(Error::InvalidInput(format!("{role} must be polygons, got {k}"))),
    }
}

pub(crate) fn check_points(fs: &FeatureSet, role: &str) -> Result<()> {
    match fs.kind() {
        None | Some(GeometryKind::Point) => Ok(()),
        Some(k) => Err(Error::InvalidInput(format!("{role} must be points, got {k}"))),
    }
}

fn x_at(a: Point, b: Point, y: f64) -> f64 {
    if y == a.y {
        a.x
    } else if y == b.y {
        b.x
    } else {
        a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
    }
}

/// Splits a polygon into convex counterclockwise trapezoids (possibly
/// degenerate to triangles) between consecutive vertex heights.
pub fn trapezoids(poly: &Polygon) -> Vec<[Point; 4]> {
    let mut ys: Vec<f64> = poly.rings().flat_map(|r| r.vertices().iter().map(|p| p.y)).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let edges: Vec<(Point, Point)> = poly
        .rings()
        .flat_map(|r| {
            let v = r.vertices();
            (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
        })
        .filter(|(a, b)| a.y != b.y)
        .map(|(a, b)| if a.y < b.y { (a, b) } else { (b, a) })
        .collect();
    let mut out = Vec::new();
    let mut crossings: Vec<(f64, f64, f64)> = Vec::new();
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        let ym = 0.5 * (y0 + y1);
        crossings.clear();
        for &(a, b) in &edges {
            if a.y <= y0 && b.y >= y1 {
                crossings.push((x_at(a, b, ym), x_at(a, b, y0), x_at(a, b, y1)));
            }
        }
        crossings.sort_by(|p, q| p.0.total_cmp(&q.0));
        for pair in crossings.chunks_exact(2) {
            let (l, r) = (pair[0], pair[1]);
            out.push([
                Point::new(l.1, y0),
                Point::new(r.1, y0),
                Point::new(r.2, y1),
                Point::new(l.2, y1),
            ]);
        }
    }
    out
}

fn trapezoid_bbox(t: &[Point; 4]) -> BBox {
    BBox::from_points(t.iter()).expect("four points")
}

/// Exact area of `target ∩ source`.
pub fn intersection_area(target: &Polygon, source: &Polygon) -> f64 {
    let traps: Vec<([Point; 4], BBox)> = trapezoids(target)
        .into_iter()
        .map(|t| (t, trapezoid_bbox(&t)))
        .collect();
    pieces_area(&traps, source)
}

fn pieces_area(traps: &[([Point; 4], BBox)], source: &Polygon) -> f64 {
    let sb = source.bbox();
    let mut area = 0.0;
    for (t, tb) in traps {
        if !tb.intersects(&sb) {
            continue;
        }
        for ring in source.rings() {
            area += signed_area(&clip_to_convex(ring.vertices(), t));
        }
    }
    area
}

/// Shares of source values transferred to each target by intersection
/// area: `mean` weights by intersected area, `sum` by the share of each
/// source's area. A `coverage` column holds the intersected fraction of the
/// target.
pub fn summarize_aw(
    targets: &FeatureSet,
    sources: &FeatureSet,
    value_columns: &[String],
    stat: Stat,
) -> Result<OpOutput> {
    check_polygons(targets, "targets")?;
    check_polygons(sources, "sources")?;
    let idx: Vec<usize> = (0..sources.len()).collect();
    summarize_aw_in(&all(targets), sources, &idx, value_columns, stat)
}

pub(crate) fn check_aw(value_columns: &[String], stat: Stat) -> Result<()> {
    if !matches!(stat, Stat::Mean | Stat::Sum) {
        return Err(Error::InvalidParameter(format!(
            "summarize_aw supports mean and sum, got {stat}"
        )));
    }
    if value_columns.is_empty() {
        return Err(Error::InvalidParameter(
            "summarize_aw needs at least one value column".into(),
        ));
    }
    Ok(())
}

pub(crate) fn summarize_aw_in(
    targets: &[&Feature],
    sources: &FeatureSet,
    subset: &[usize],
    value_columns: &[String],
    stat: Stat,
) -> Result<OpOutput> {
    check_aw(value_columns, stat)?;
    let values: Vec<Vec<Option<f64>>> = value_columns
        .iter()
        .map(|c| numeric_column(sources, c, subset))
        .collect::<Result<_>>()?;
    let polys: Vec<(&Polygon, BBox)> = subset
        .iter()
        .map(|&i| match &sources.get(i).geometry {
            Geometry::Polygon(p) => Ok((p, p.bbox())),
            g => Err(Error::InvalidInput(format!(
                "sources must be polygons, got {}",
                g.kind()
            ))),
        })
        .collect::<Result<_>>()?;

    let mut columns = value_columns.to_vec();
    columns.push("coverage".into());
    let mut rows = Vec::with_capacity(targets.len());
    let mut hits: Vec<(usize, f64)> = Vec::new();
    for f in targets {
        let Geometry::Polygon(target) = &f.geometry else {
            return Err(Error::InvalidInput(format!(
                "targets must be polygons, got {}",
                f.geometry.kind()
            )));
        };
        let tb = target.bbox();
        let traps: Vec<([Point; 4], BBox)> = trapezoids(target)
            .into_iter()
            .map(|t| (t, trapezoid_bbox(&t)))
            .collect();
        hits.clear();
        for (k, (src, sb)) in polys.iter().enumerate() {
            if !sb.intersects(&tb) {
                continue;
            }
            let a = pieces_area(&traps, src);
            if a > 0.0 {
                hits.push((k, a));
            }
        }
        let covered: f64 = hits.iter().map(|&(_, a)| a).sum();
        let mut row_values: Vec<Cell> = values
            .iter()
            .map(|vals| match stat {
                Stat::Mean => aw_mean(&hits, vals),
                _ => aw_sum(&hits, vals, &polys),
            })
            .map(Cell::from)
            .collect();
        row_values.push(Cell::Float(covered / polygon_area(target)));
        rows.push(OpRow {
            id: f.id.clone(),
            values: row_values,
            categories: BTreeMap::new(),
            reach: Some(tb),
            interaction: 0.0,
        });
    }
    Ok(OpOutput {
        columns,
        frequency: false,
        rows,
    })
}

/// Area-weighted mean, accumulated as offsets from the first value so that
/// constant inputs come back unchanged.
fn aw_mean(hits: &[(usize, f64)], vals: &[Option<f64>]) -> Option<f64> {
    let mut it = hits.iter().filter_map(|&(k, a)| vals[k].map(|v| (a, v)));
    let (a0, v0) = it.next()?;
    let mut sum_a = a0;
    let mut sum_d = 0.0;
    for (a, v) in it {
        sum_a += a;
        sum_d += a * (v - v0);
    }
    Some(v0 + sum_d / sum_a)
}

fn aw_sum(hits: &[(usize, f64)], vals: &[Option<f64>], polys: &[(&Polygon, BBox)]) -> Option<f64> {
    let mut any = false;
    let mut total = 0.0;
    for &(k, a) in hits {
        if let Some(v) = vals[k] {
            let share = a / polygon_area(polys[k].0);
            // a source lying wholly inside the target passes its full value
            let share = if share > 1.0 - 1e-12 { 1.0 } else { share };
            total += v * share;
            any = true;
        }
    }
    any.then_some(total)
}

// ------------------------------------------------------------ summarize_sedc

/// Parameters of the sum of exponentially decaying contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct SedcParams {
    /// Distance at which a contribution has decayed to `exp(-3)`.
    pub bandwidth: f64,
    /// Hard cutoff; sources farther away contribute nothing.
    pub maxdist: f64,
    pub value_columns: Vec<String>,
}

impl SedcParams {
    /// `maxdist` defaults to twice the bandwidth.
    pub fn new(bandwidth: f64, maxdist: Option<f64>, value_columns: Vec<String>) -> Result<Self> {
        let p = SedcParams {
            bandwidth,
            maxdist: maxdist.unwrap_or(2.0 * bandwidth),
            value_columns,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be > 0, got {}",
                self.bandwidth
            )));
        }
        if !(self.maxdist >= self.bandwidth && self.maxdist.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "maxdist must be finite and >= bandwidth ({}), got {}",
                self.bandwidth, self.maxdist
            )));
        }
        if self.value_columns.is_empty() {
            return Err(Error::InvalidParameter("sedc needs at least one value column".into()));
        }
        Ok(())
    }

    /// Weight of a source at distance `d`.
    pub fn weight(&self, d: f64) -> f64 {
        if d > self.maxdist {
            0.0
        } else {
            sedc_weight(d, self.bandwidth)
        }
    }
}

pub fn sedc_weight(d: f64, bandwidth: f64) -> f64 {
    (-3.0 * d / bandwidth).exp()
}

pub fn sedc_column(value_column: &str) -> String {
    format!("sedc_{value_column}")
}

/// For every target and value column, `Σ v·exp(−3d/bandwidth)` over the
/// sources within `maxdist`, plus the number of such sources.
pub fn summarize_sedc(targets: &FeatureSet, sources: &FeatureSet, p: &SedcParams) -> Result<OpOutput> {
    check_points(targets, "targets")?;
    check_points(sources, "sources")?;
    let idx: Vec<usize> = (0..sources.len()).collect();
    summarize_sedc_in(&all(targets), sources, &idx, p)
}

pub(crate) fn summarize_sedc_in(
    targets: &[&Feature],
    sources: &FeatureSet,
    subset: &[usize],
    p: &SedcParams,
) -> Result<OpOutput> {
    p.validate()?;
    let values: Vec<Vec<Option<f64>>> = p
        .value_columns
        .iter()
        .map(|c| numeric_column(sources, c, subset))
        .collect::<Result<_>>()?;
    let pts: Vec<Point> = subset
        .iter()
        .map(|&i| match &sources.get(i).geometry {
            Geometry::Point(q) => Ok(*q),
            g => Err(Error::InvalidInput(format!("sources must be points, got {}", g.kind()))),
        })
        .collect::<Result<_>>()?;

    // buckets of side maxdist: every source in range sits in the 3×3 block
    // around the target's bucket
    let origin = BBox::from_points(pts.iter()).map_or(Point::new(0.0, 0.0), |b| Point::new(b.xmin, b.ymin));
    let key = |q: Point| -> (i64, i64) {
        (
            ((q.x - origin.x) / p.maxdist).floor() as i64,
            ((q.y - origin.y) / p.maxdist).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, q) in pts.iter().enumerate() {
        buckets.entry(key(*q)).or_default().push(k);
    }

    let mut columns: Vec<String> = p.value_columns.iter().map(|c| sedc_column(c)).collect();
    columns.push("n_sources".into());
    let mut rows = Vec::with_capacity(targets.len());
    let mut candidates = Vec::new();
    for f in targets {
        let Geometry::Point(t) = &f.geometry else {
            return Err(Error::InvalidInput(format!(
                "targets must be points, got {}",
                f.geometry.kind()
            )));
        };
        let (kx, ky) = key(*t);
        candidates.clear();
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(b) = buckets.get(&(kx.saturating_add(dx), ky.saturating_add(dy))) {
                    candidates.extend_from_slice(b);
                }
            }
        }
        // source order keeps the sums independent of the bucketing
        candidates.sort_unstable();
        let mut sums = vec![0.0; values.len()];
        let mut n = 0i64;
        for &k in &candidates {
            let d = t.distance(&pts[k]);
            if d > p.maxdist {
                continue;
            }
            n += 1;
            let w = sedc_weight(d, p.bandwidth);
            for (s, vals) in sums.iter_mut().zip(&values) {
                if let Some(v) = vals[k] {
                    *s += v * w;
                }
            }
        }
        let mut row_values: Vec<Cell> = sums.into_iter().map(Cell::Float).collect();
        row_values.push(Cell::Int(n));
        rows.push(OpRow {
            id: f.id.clone(),
            values: row_values,
            categories: BTreeMap::new(),
            reach: Some(BBox::of_point(*t).expand(p.maxdist)),
            interaction: p.maxdist,
        });
    }
    Ok(OpOutput {
        columns,
        frequency: false,
        rows,
    })
}

// ---------------------------------------------------------- nearest_distance

pub(crate) fn check_nearest_context(fs: &FeatureSet) -> Result<()> {
    match fs.kind() {
        Some(GeometryKind::Polygon) => Err(Error::InvalidInput(
            "nearest_distance needs point or line features".into(),
        )),
        _ => Ok(()),
    }
}

/// Distance from `p` to the closest part of `g` (points and lines only).
pub fn feature_distance(p: Point, g: &Geometry) -> f64 {
    match g {
        Geometry::Point(q) => p.distance(q),
        Geometry::Polyline(l) => l
            .segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min),
        Geometry::Polygon(_) => unreachable!("checked by caller"),
    }
}

/// Distance from each point of `y` to the nearest feature of `x`, with that
/// feature's id. The first of several equally near features wins.
pub fn nearest_distance(y: &FeatureSet, x: &FeatureSet) -> Result<OpOutput> {
    if x.is_empty() {
        return Err(Error::InvalidInput(
            "nearest_distance needs at least one feature to measure to".into(),
        ));
    }
    check_points(y, "nearest_distance origins")?;
    check_nearest_context(x)?;
    nearest_distance_in(&all(y), &all(x))
}

pub(crate) fn nearest_distance_in(anchors: &[&Feature], context: &[&Feature]) -> Result<OpOutput> {
    if let Some(f) = context.iter().find(|f| f.geometry.kind() == GeometryKind::Polygon) {
        return Err(Error::InvalidInput(format!(
            "nearest_distance needs point or line features, {:?} is a polygon",
            f.id
        )));
    }
    let boxes: Vec<BBox> = context.iter().map(|f| f.geometry.bbox()).collect();
    let mut rows = Vec::with_capacity(anchors.len());
    for f in anchors {
        let Geometry::Point(p) = &f.geometry else {
            return Err(Error::InvalidInput(format!(
                "nearest_distance origins must be points, got {}",
                f.geometry.kind()
            )));
        };
        let mut best = f64::INFINITY;
        let mut best_at = None;
        for (k, (c, b)) in context.iter().zip(&boxes).enumerate() {
            // the margin keeps pruning from ever dropping a true candidate
            if b.distance_sq_to(*p) > best * best * (1.0 + 1e-9) {
                continue;
            }
            let d = feature_distance(*p, &c.geometry);
            if d < best {
                best = d;
                best_at = Some(k);
            }
        }
        let (values, reach, interaction) = match best_at {
            Some(k) => (
                vec![Cell::Float(best), Cell::Text(context[k].id.clone())],
                Some(BBox::of_point(*p).expand(best)),
                best,
            ),
            None => (vec![Cell::Null, Cell::Null], None, f64::INFINITY),
        };
        rows.push(OpRow {
            id: f.id.clone(),
            values,
            categories: BTreeMap::new(),
            reach,
            interaction,
        });
    }
    Ok(OpOutput {
        columns: vec!["distance".into(), "nearest_id".into()],
        frequency: false,
        rows,
    })
}
