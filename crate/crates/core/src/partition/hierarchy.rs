use std::collections::BTreeMap;

use crate::dataio::{AttrValue, FeatureSet};
use crate::error::{Error, Result};
use crate::geom::{point_in_polygon, Geometry, GeometryKind};

/// Key of the group collecting anchors that fall in no region.
pub const UNASSIGNED: &str = "UNASSIGNED";

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub key: String,
    pub member_ids: Vec<String>,
}

/// One group per distinct value of `column`, ordered by key.
pub fn group_by_attribute(anchors: &FeatureSet, column: &str) -> Result<Vec<Group>> {
    let at = anchors
        .column_index(column)
        .ok_or_else(|| Error::InvalidInput(format!("hierarchy column {column:?} not found")))?;
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for f in anchors.features() {
        let value = &f.attributes[at];
        if let AttrValue::Null = value {
            return Err(Error::InvalidInput(format!(
                "feature {:?} has no value for {column:?}",
                f.id
            )));
        }
        groups.entry(value.to_string()).or_default().push(f.id.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(key, member_ids)| Group { key, member_ids })
        .collect())
}

/// Assigns each anchor to the first region (in region order) containing its
/// representative point. Regions are keyed by `key_column`, or by their
/// feature id when `None`. Groups are ordered by key, with [`UNASSIGNED`]
/// last.
pub fn group_by_regions(anchors: &FeatureSet, regions: &FeatureSet, key_column: Option<&str>) -> Result<Vec<Group>> {
    if regions.kind().is_some_and(|k| k != GeometryKind::Polygon) {
        return Err(Error::InvalidInput("regions must be polygons".into()));
    }
    let key_at = key_column
        .map(|c| {
            regions
                .column_index(c)
                .ok_or_else(|| Error::InvalidInput(format!("region key column {c:?} not found")))
        })
        .transpose()?;
    let polys: Vec<_> = regions
        .features()
        .iter()
        .map(|r| {
            let Geometry::Polygon(p) = &r.geometry else {
                unreachable!()
            };
            let key = match key_at {
                Some(at) => r.attributes[at].to_string(),
                None => r.id.clone(),
            };
            (key, p.bbox(), p)
        })
        .collect();

    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut unassigned = Vec::new();
    for f in anchors.features() {
        let p = f.geometry.representative_point();
        match polys
            .iter()
            .find(|(_, bb, poly)| bb.contains_point(p) && point_in_polygon(p, poly))
        {
            Some((key, _, _)) => groups.entry(key.clone()).or_default().push(f.id.clone()),
            None => unassigned.push(f.id.clone()),
        }
    }
    let mut out: Vec<Group> = groups
        .into_iter()
        .map(|(key, member_ids)| Group { key, member_ids })
        .collect();
    if !unassigned.is_empty() {
        out.push(Group {
            key: UNASSIGNED.to_string(),
            member_ids: unassigned,
        });
    }
    Ok(out)
}
