use crate::dataio::FeatureSet;
use crate::error::{Error, Result};

use super::grid::{assign_to_partition, make_regular_grid};
use super::{grid_extent, Chunk, PartitionMode, PartitionSet};

/// Rook adjacency between the cells of an `nx × ny` grid. Edge weight is the
/// combined point count of the two cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAdjacency {
    pub n_nodes: usize,
    /// `(u, v, weight)` with `u < v`, in `(u, v)` order.
    pub edges: Vec<(usize, usize, usize)>,
}

impl GridAdjacency {
    pub fn new(counts: &[usize], nx: usize, ny: usize) -> Self {
        assert_eq!(counts.len(), nx * ny);
        let mut edges = Vec::new();
        for u in 0..nx * ny {
            let (i, j) = (u % nx, u / nx);
            if i + 1 < nx {
                edges.push((u, u + 1, counts[u] + counts[u + 1]));
            }
            if j + 1 < ny {
                edges.push((u, u + nx, counts[u] + counts[u + nx]));
            }
        }
        edges.sort_by_key(|&(u, v, _)| (u, v));
        GridAdjacency {
            n_nodes: nx * ny,
            edges,
        }
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Links the larger root under the smaller one so roots stay the
    /// minimum index of their set.
    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (keep, drop) = (ra.min(rb), ra.max(rb));
        self.parent[drop] = keep;
        keep
    }
}

/// Kruskal's algorithm with ties broken by `(u, v)`. Edges come back in
/// ascending `(weight, u, v)` order.
pub fn minimum_spanning_tree(adj: &GridAdjacency) -> Vec<(usize, usize, usize)> {
    let mut edges = adj.edges.clone();
    edges.sort_by_key(|&(u, v, w)| (w, u, v));
    let mut dsu = DisjointSet::new(adj.n_nodes);
    let mut tree = Vec::with_capacity(adj.n_nodes.saturating_sub(1));
    for (u, v, w) in edges {
        if dsu.find(u) != dsu.find(v) {
            dsu.union(u, v);
            tree.push((u, v, w));
        }
    }
    tree
}

/// Merges groups along MST edges (ascending weight) whenever both groups
/// hold fewer than `min_features` points, repeating full passes until none
/// merges. Returns a dense group label per cell, numbered by each group's
/// smallest cell index.
pub fn merge_sparse_cells(counts: &[usize], nx: usize, ny: usize, min_features: usize) -> Vec<usize> {
    let mst = minimum_spanning_tree(&GridAdjacency::new(counts, nx, ny));
    let mut dsu = DisjointSet::new(counts.len());
    let mut group_count = counts.to_vec();
    loop {
        let mut merged = false;
        for &(u, v, _) in &mst {
            let (ru, rv) = (dsu.find(u), dsu.find(v));
            if ru != rv && group_count[ru] < min_features && group_count[rv] < min_features {
                let total = group_count[ru] + group_count[rv];
                let root = dsu.union(ru, rv);
                group_count[root] = total;
                merged = true;
            }
        }
        if !merged {
            break;
        }
    }
    let mut label_of_root = vec![usize::MAX; counts.len()];
    let mut next = 0;
    (0..counts.len())
        .map(|cell| {
            let root = dsu.find(cell);
            if label_of_root[root] == usize::MAX {
                label_of_root[root] = next;
                next += 1;
            }
            label_of_root[root]
        })
        .collect()
}

/// Regular grid over the point bounds with sparse neighbouring cells merged.
/// A merged chunk's core is the bounding box of its cells; members are the
/// points of those cells in anchor order.
pub fn make_merged_grid(
    points: &FeatureSet,
    nx: usize,
    ny: usize,
    min_features: usize,
    padding: f64,
) -> Result<PartitionSet> {
    if min_features < 1 {
        return Err(Error::InvalidParameter("min_features must be >= 1".into()));
    }
    if nx * ny < 2 {
        return Err(Error::InvalidParameter(format!(
            "merged grid needs at least 2 cells, got {nx}x{ny}"
        )));
    }
    points.points()?;
    let grid = assign_to_partition(points, make_regular_grid(&grid_extent(points)?, nx, ny, padding)?);
    let counts = grid.member_counts();
    let labels = merge_sparse_cells(&counts, nx, ny, min_features);
    let n_groups = labels.iter().max().map_or(0, |m| m + 1);

    let mut chunks: Vec<Option<Chunk>> = vec![None; n_groups];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (cell, &label) in grid.chunks.iter().zip(&labels) {
        match &mut chunks[label] {
            Some(c) => c.core = c.core.union(&cell.core),
            slot => {
                *slot = Some(Chunk {
                    chunk_id: label,
                    core: cell.core,
                    padded: cell.core,
                    member_ids: Vec::new(),
                })
            }
        }
        members[label].extend(
            cell.member_ids
                .iter()
                .map(|id| points.position(id).expect("assigned from points")),
        );
    }
    let chunks = chunks
        .into_iter()
        .zip(members)
        .map(|(c, mut idx)| {
            let mut c = c.expect("every label has a cell");
            idx.sort_unstable();
            c.member_ids = idx.into_iter().map(|i| points.get(i).id.clone()).collect();
            c.padded = c.core.expand(padding);
            c
        })
        .collect();
    Ok(PartitionSet {
        mode: PartitionMode::GridAdvanced,
        padding,
        chunks,
    })
}
