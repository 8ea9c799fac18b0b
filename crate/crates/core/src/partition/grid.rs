use crate::dataio::FeatureSet;
use crate::error::{Error, Result};
use crate::geom::{BBox, Point};

use super::{Chunk, PartitionMode, PartitionSet};

fn breaks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            }
        })
        .collect()
}

fn chunks_from_breaks(xs: &[f64], ys: &[f64], padding: f64) -> Vec<Chunk> {
    let intervals = |b: &[f64]| -> Vec<(f64, f64)> {
        if b.len() == 1 {
            vec![(b[0], b[0])]
        } else {
            b.windows(2).map(|w| (w[0], w[1])).collect()
        }
    };
    let (xi, yi) = (intervals(xs), intervals(ys));
    let mut chunks = Vec::with_capacity(xi.len() * yi.len());
    for &(ymin, ymax) in &yi {
        for &(xmin, xmax) in &xi {
            let core = BBox { xmin, ymin, xmax, ymax };
            chunks.push(Chunk {
                chunk_id: chunks.len(),
                core,
                padded: core.expand(padding),
                member_ids: Vec::new(),
            });
        }
    }
    chunks
}

/// `nx × ny` equal cells tiling `extent`, row-major from the minimum corner.
/// Members are left empty; see [`assign_to_partition`].
pub fn make_regular_grid(extent: &BBox, nx: usize, ny: usize, padding: f64) -> Result<PartitionSet> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid needs nx, ny >= 1, got {nx}x{ny}"
        )));
    }
    if extent.is_degenerate() {
        return Err(Error::InvalidParameter(format!(
            "grid extent is degenerate: {extent:?}"
        )));
    }
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "padding must be finite and >= 0, got {padding}"
        )));
    }
    let xs = breaks(extent.xmin, extent.xmax, nx);
    let ys = breaks(extent.ymin, extent.ymax, ny);
    Ok(PartitionSet {
        mode: PartitionMode::Grid,
        padding,
        chunks: chunks_from_breaks(&xs, &ys, padding),
    })
}

/// Linear-interpolation quantile of sorted data (`h = (n−1)·p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn axis_breaks(mut values: Vec<f64>, nq: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut b = Vec::with_capacity(nq + 1);
    b.push(values[0]);
    for i in 1..nq {
        b.push(quantile(&values, i as f64 / nq as f64));
    }
    b.push(values[values.len() - 1]);
    b.dedup();
    b
}

/// Irregular grid from independent x and y quantile breaks, with the outer
/// edges on the data bounds. Coinciding breaks collapse their empty cells.
pub fn make_quantile_grid(points: &FeatureSet, nq: usize, padding: f64) -> Result<PartitionSet> {
    if nq == 0 {
        return Err(Error::InvalidParameter("nq must be >= 1".into()));
    }
    let pts = points.points()?;
    if pts.is_empty() {
        return Err(Error::InvalidInput("cannot partition an empty dataset".into()));
    }
    let xs = axis_breaks(pts.iter().map(|p| p.x).collect(), nq);
    let ys = axis_breaks(pts.iter().map(|p| p.y).collect(), nq);
    let set = PartitionSet {
        mode: PartitionMode::GridQuantile,
        padding,
        chunks: chunks_from_breaks(&xs, &ys, padding),
    };
    Ok(assign_to_partition(points, set))
}

/// Chunk index for `p` under the half-open rule; the last row and column
/// (those reaching the overall maximum edge `gx`/`gy`) are closed.
fn locate_with_max(chunks: &[Chunk], p: Point, gx: f64, gy: f64) -> usize {
    let within = |v: f64, lo: f64, hi: f64, global_hi: f64| v >= lo && (v < hi || (hi == global_hi && v <= hi));
    if let Some(i) = chunks
        .iter()
        .position(|c| within(p.x, c.core.xmin, c.core.xmax, gx) && within(p.y, c.core.ymin, c.core.ymax, gy))
    {
        return i;
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in chunks.iter().enumerate() {
        let d = c.core.center().distance_sq(&p);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Assigns each anchor to exactly one chunk by its representative point.
/// Existing members are replaced; members keep anchor order.
pub fn assign_to_partition(anchors: &FeatureSet, mut parts: PartitionSet) -> PartitionSet {
    for c in &mut parts.chunks {
        c.member_ids.clear();
    }
    if parts.chunks.is_empty() {
        return parts;
    }
    let gx = parts
        .chunks
        .iter()
        .map(|c| c.core.xmax)
        .fold(f64::NEG_INFINITY, f64::max);
    let gy = parts
        .chunks
        .iter()
        .map(|c| c.core.ymax)
        .fold(f64::NEG_INFINITY, f64::max);
    for f in anchors.features() {
        let i = locate_with_max(&parts.chunks, f.geometry.representative_point(), gx, gy);
        parts.chunks[i].member_ids.push(f.id.clone());
    }
    parts
}
