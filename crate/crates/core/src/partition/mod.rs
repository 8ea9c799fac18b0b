//! Spatial partitioning of the anchor dataset into chunks.
//!
//! Every mode produces a [`PartitionSet`] whose chunks own disjoint subsets
//! of the anchor features (`member_ids`). The padded box of a chunk is the
//! region from which context data is drawn during execution.

mod balanced;
mod grid;
mod hierarchy;
mod merge;

use std::fmt;
use std::str::FromStr;

use crate::dataio::FeatureSet;
use crate::error::{Error, Result};
use crate::geom::BBox;

pub use balanced::{balanced_labels, make_balanced_groups, within_group_ssq, BalancedTrace};
pub use grid::{assign_to_partition, make_quantile_grid, make_regular_grid, quantile};
pub use hierarchy::{group_by_attribute, group_by_regions, Group, UNASSIGNED};
pub use merge::{make_merged_grid, merge_sparse_cells, minimum_spanning_tree, GridAdjacency};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    Grid,
    GridQuantile,
    GridAdvanced,
    Balanced,
}

impl PartitionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PartitionMode::Grid => "grid",
            PartitionMode::GridQuantile => "grid_quantile",
            PartitionMode::GridAdvanced => "grid_advanced",
            PartitionMode::Balanced => "balanced",
        }
    }
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionMode {
    type Err = Error;

    /// Accepts the canonical names plus the short CLI aliases.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "grid" => PartitionMode::Grid,
            "grid_quantile" | "quantile" => PartitionMode::GridQuantile,
            "grid_advanced" | "advanced" => PartitionMode::GridAdvanced,
            "balanced" => PartitionMode::Balanced,
            other => return Err(Error::InvalidParameter(format!("unknown partition mode {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub chunk_id: usize,
    pub core: BBox,
    pub padded: BBox,
    pub member_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub mode: PartitionMode,
    pub padding: f64,
    pub chunks: Vec<Chunk>,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn member_counts(&self) -> Vec<usize> {
        self.chunks.iter().map(|c| c.member_ids.len()).collect()
    }

    /// Checks that chunk ids are dense and ordered, padded boxes contain
    /// their cores, and member ids are not shared between chunks.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, c) in self.chunks.iter().enumerate() {
            if c.chunk_id != i {
                return Err(Error::InvalidInput(format!(
                    "chunks[{i}].chunk_id is {}, expected {i}",
                    c.chunk_id
                )));
            }
            if !c.padded.contains_bbox(&c.core) {
                return Err(Error::InvalidInput(format!(
                    "chunks[{i}].padded does not contain the core box"
                )));
            }
            for (j, id) in c.member_ids.iter().enumerate() {
                if !seen.insert(id.as_str()) {
                    return Err(Error::InvalidInput(format!(
                        "chunks[{i}].member_ids[{j}]: id {id:?} assigned to more than one chunk"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that the members cover `anchors` exactly.
    pub fn check_covers(&self, anchors: &FeatureSet) -> Result<()> {
        let mut hits = vec![false; anchors.len()];
        for c in &self.chunks {
            for id in &c.member_ids {
                let pos = anchors.position(id).ok_or_else(|| {
                    Error::InvalidInput(format!("chunk {} references unknown anchor id {id:?}", c.chunk_id))
                })?;
                if std::mem::replace(&mut hits[pos], true) {
                    return Err(Error::InvalidInput(format!("anchor id {id:?} assigned twice")));
                }
            }
        }
        if let Some(missing) = hits.iter().position(|h| !h) {
            return Err(Error::InvalidInput(format!(
                "anchor id {:?} is not assigned to any chunk",
                anchors.get(missing).id
            )));
        }
        Ok(())
    }
}

/// Parameters for [`build_partitions`]; only the fields the mode needs are
/// read.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub mode: PartitionMode,
    pub nx: usize,
    pub ny: usize,
    pub nq: usize,
    pub n_groups: usize,
    pub min_features: usize,
    pub padding: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            mode: PartitionMode::Grid,
            nx: 1,
            ny: 1,
            nq: 1,
            n_groups: 1,
            min_features: 1,
            padding: 0.0,
        }
    }
}

impl GridSpec {
    pub fn grid(nx: usize, ny: usize, padding: f64) -> Self {
        GridSpec {
            nx,
            ny,
            padding,
            ..Default::default()
        }
    }
}

/// Extent used for grid modes: the data bounds, widened to unit size along
/// any axis where all anchors share one coordinate.
pub fn grid_extent(anchors: &FeatureSet) -> Result<BBox> {
    let mut b = anchors
        .bbox()
        .ok_or_else(|| Error::InvalidInput("cannot partition an empty dataset".into()))?;
    if b.width() == 0.0 {
        b.xmin -= 0.5;
        b.xmax += 0.5;
    }
    if b.height() == 0.0 {
        b.ymin -= 0.5;
        b.ymax += 0.5;
    }
    Ok(b)
}

/// Builds a partition for `anchors` and assigns every anchor to a chunk.
pub fn build_partitions(anchors: &FeatureSet, spec: &GridSpec) -> Result<PartitionSet> {
    if !(spec.padding >= 0.0 && spec.padding.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "padding must be finite and >= 0, got {}",
            spec.padding
        )));
    }
    match spec.mode {
        PartitionMode::Grid => {
            let grid = make_regular_grid(&grid_extent(anchors)?, spec.nx, spec.ny, spec.padding)?;
            Ok(assign_to_partition(anchors, grid))
        }
        PartitionMode::GridQuantile => make_quantile_grid(anchors, spec.nq, spec.padding),
        PartitionMode::GridAdvanced => make_merged_grid(anchors, spec.nx, spec.ny, spec.min_features, spec.padding),
        PartitionMode::Balanced => make_balanced_groups(anchors, spec.n_groups, spec.padding),
    }
}
