use crate::dataio::FeatureSet;
use crate::error::{Error, Result};
use crate::geom::{BBox, Point};

use super::{Chunk, PartitionMode, PartitionSet};

const MAX_SWEEPS: usize = 50;

/// Total within-group sum of squared distances to the group means, summed
/// from scratch.
pub fn within_group_ssq(points: &[Point], labels: &[usize], k: usize) -> f64 {
    let mut sx = vec![0.0; k];
    let mut sy = vec![0.0; k];
    let mut n = vec![0usize; k];
    for (p, &g) in points.iter().zip(labels) {
        sx[g] += p.x;
        sy[g] += p.y;
        n[g] += 1;
    }
    points
        .iter()
        .zip(labels)
        .map(|(p, &g)| {
            let (mx, my) = (sx[g] / n[g] as f64, sy[g] / n[g] as f64);
            (p.x - mx).powi(2) + (p.y - my).powi(2)
        })
        .sum()
}

/// Diagnostics from the swap phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedTrace {
    /// Objective after the initial assignment.
    pub initial_ssq: f64,
    /// Objective after each completed sweep.
    pub ssq_per_sweep: Vec<f64>,
}

fn seed_centers(points: &[Point], k: usize) -> Vec<usize> {
    let n = points.len() as f64;
    let centroid = Point::new(
        points.iter().map(|p| p.x).sum::<f64>() / n,
        points.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let first = argmin(points.iter().map(|p| p.distance_sq(&centroid)));
    let mut centers = vec![first];
    let mut is_center = vec![false; points.len()];
    is_center[first] = true;
    let mut min_d: Vec<f64> = points.iter().map(|p| p.distance_sq(&points[first])).collect();
    while centers.len() < k {
        let mut next = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for (i, &d) in min_d.iter().enumerate() {
            if !is_center[i] && d > best {
                best = d;
                next = i;
            }
        }
        centers.push(next);
        is_center[next] = true;
        for (i, p) in points.iter().enumerate() {
            min_d[i] = min_d[i].min(p.distance_sq(&points[next]));
        }
    }
    centers
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (i, v) in values.enumerate() {
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Capacity-constrained greedy assignment: points in order of distance to
/// their nearest center each take the closest center that still has room.
/// At most `n mod k` groups may grow to the ceiling size.
fn greedy_assign(points: &[Point], centers: &[usize]) -> Vec<usize> {
    let (n, k) = (points.len(), centers.len());
    let floor = n / k;
    let mut ceil_slots = n % k;
    let center_pts: Vec<Point> = centers.iter().map(|&c| points[c]).collect();
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|p| center_pts.iter().map(|c| p.distance_sq(c)).collect())
        .collect();
    let nearest: Vec<f64> = dist
        .iter()
        .map(|d| d.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(a.cmp(&b)));

    let mut size = vec![0usize; k];
    let mut labels = vec![usize::MAX; n];
    let mut prefs: Vec<usize> = Vec::with_capacity(k);
    for i in order {
        prefs.clear();
        prefs.extend(0..k);
        prefs.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
        let g = prefs
            .iter()
            .copied()
            .find(|&g| size[g] < floor || (size[g] == floor && ceil_slots > 0))
            .expect("capacities sum to n");
        if size[g] == floor {
            ceil_slots -= 1;
        }
        size[g] += 1;
        labels[i] = g;
    }
    labels
}

/// Splits points into `k` groups whose sizes differ by at most one, then
/// improves compactness with pairwise swaps (each sweep is `O(n²)`).
pub fn balanced_labels(points: &[Point], k: usize) -> Result<(Vec<usize>, BalancedTrace)> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "n_groups must be in 1..={}, got {k}",
            points.len()
        )));
    }
    let centers = seed_centers(points, k);
    let mut labels = greedy_assign(points, &centers);

    let mut sx = vec![0.0; k];
    let mut sy = vec![0.0; k];
    let mut size = vec![0usize; k];
    for (p, &g) in points.iter().zip(&labels) {
        sx[g] += p.x;
        sy[g] += p.y;
        size[g] += 1;
    }
    let initial_ssq = within_group_ssq(points, &labels, k);
    let tol = 1e-12 * initial_ssq;
    let mut ssq_per_sweep = Vec::new();
    for _ in 0..MAX_SWEEPS {
        let mut improved = false;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let (a, b) = (labels[i], labels[j]);
                if a == b {
                    continue;
                }
                let dx = points[j].x - points[i].x;
                let dy = points[j].y - points[i].y;
                let d2 = dx * dx + dy * dy;
                let delta = -(2.0 * (sx[a] * dx + sy[a] * dy) + d2) / size[a] as f64
                    - (-2.0 * (sx[b] * dx + sy[b] * dy) + d2) / size[b] as f64;
                if delta < -tol {
                    labels.swap(i, j);
                    sx[a] += dx;
                    sy[a] += dy;
                    sx[b] -= dx;
                    sy[b] -= dy;
                    improved = true;
                }
            }
        }
        ssq_per_sweep.push(within_group_ssq(points, &labels, k));
        if !improved {
            break;
        }
    }
    Ok((
        labels,
        BalancedTrace {
            initial_ssq,
            ssq_per_sweep,
        },
    ))
}

/// Equal-size, spatially compact point groups; one chunk per group with the
/// group's bounding box as core.
pub fn make_balanced_groups(points: &FeatureSet, n_groups: usize, padding: f64) -> Result<PartitionSet> {
    let pts = points.points()?;
    let (labels, _) = balanced_labels(&pts, n_groups)?;
    let mut chunks: Vec<Chunk> = Vec::with_capacity(n_groups);
    for g in 0..n_groups {
        let idx: Vec<usize> = (0..pts.len()).filter(|&i| labels[i] == g).collect();
        let core = BBox::from_points(idx.iter().map(|&i| &pts[i])).expect("groups are non-empty");
        chunks.push(Chunk {
            chunk_id: g,
            core,
            padded: core.expand(padding),
            member_ids: idx.iter().map(|&i| points.get(i).id.clone()).collect(),
        });
    }
    Ok(PartitionSet {
        mode: PartitionMode::Balanced,
        padding,
        chunks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::new(x, 0.0)).collect()
    }

    /// Best balanced 2-split by exhaustive enumeration.
    fn best_split(points: &[Point]) -> (f64, Vec<usize>) {
        let n = points.len();
        let mut best = (f64::INFINITY, Vec::new());
        for mask in 0u32..(1 << n) {
            let ones = mask.count_ones() as usize;
            if ones != n / 2 && ones != n.div_ceil(2) {
                continue;
            }
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let ssq = within_group_ssq(points, &labels, 2);
            if ssq < best.0 {
                best = (ssq, labels);
            }
        }
        best
    }

    #[test]
    fn collinear_pairs() {
        let pts = line(&[0., 1., 10., 11.]);
        let (labels, _) = balanced_labels(&pts, 2).unwrap();
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[3]);
        assert_ne!(labels[0], labels[2]);
        let (oracle, _) = best_split(&pts);
        assert_eq!(within_group_ssq(&pts, &labels, 2), oracle);
    }

    #[test]
    fn trivial_group_counts() {
        let pts = line(&[3., 1., 4., 1.5, 9.]);
        let (one, _) = balanced_labels(&pts, 1).unwrap();
        assert!(one.iter().all(|&g| g == 0));
        let (all, _) = balanced_labels(&pts, 5).unwrap();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
        assert!(matches!(balanced_labels(&pts, 6), Err(Error::InvalidParameter(_))));
        assert!(matches!(balanced_labels(&pts, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn sizes_for_23_points_in_5_groups() {
        let pts: Vec<Point> = (0..23)
            .map(|i| Point::new((i * 7 % 23) as f64, (i * 3 % 5) as f64))
            .collect();
        let (labels, _) = balanced_labels(&pts, 5).unwrap();
        let mut sizes = vec![0; 5];
        for g in labels {
            sizes[g] += 1;
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
    }

    #[test]
    fn duplicate_points_still_balance() {
        let pts = vec![Point::new(1.0, 1.0); 7];
        let (labels, _) = balanced_labels(&pts, 3).unwrap();
        let mut sizes = vec![0; 3];
        for g in labels {
            sizes[g] += 1;
        }
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
    }
}
