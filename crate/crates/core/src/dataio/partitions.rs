use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::partition::{Chunk, PartitionMode, PartitionSet};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDoc {
    mode: String,
    padding: f64,
    chunks: Vec<ChunkDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChunkDoc {
    chunk_id: usize,
    core: [f64; 4],
    padded: [f64; 4],
    member_ids: Vec<String>,
}

fn bbox_array(b: &BBox) -> [f64; 4] {
    [b.xmin, b.ymin, b.xmax, b.ymax]
}

/// Pretty-printed JSON with chunks in chunk_id order.
pub fn partitions_to_string(p: &PartitionSet) -> String {
    let mut chunks: Vec<&Chunk> = p.chunks.iter().collect();
    chunks.sort_by_key(|c| c.chunk_id);
    let doc = PartitionDoc {
        mode: p.mode.as_str().to_string(),
        padding: p.padding,
        chunks: chunks
            .into_iter()
            .map(|c| ChunkDoc {
                chunk_id: c.chunk_id,
                core: bbox_array(&c.core),
                padded: bbox_array(&c.padded),
                member_ids: c.member_ids.clone(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("partition documents always serialize");
    s.push('\n');
    s
}

pub fn save_partitions(p: &PartitionSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, partitions_to_string(p)).map_err(|e| Error::io(path, e))
}

pub fn load_partitions(path: impl AsRef<Path>) -> Result<PartitionSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_partitions(&text).map_err(|e| match e {
        Error::Load { line, message, .. } => Error::load(path, line, message),
        other => other,
    })
}

/// Parses and validates a partition document. Errors name the offending
/// JSON path.
pub fn parse_partitions(text: &str) -> Result<PartitionSet> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: PartitionDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let line = e.inner().line();
        Error::load("<input>", Some(line), format!("at {}: {}", e.path(), e.inner()))
    })?;
    let fail = |path: String, msg: String| Error::load("<input>", None, format!("at {path}: {msg}"));

    let mode: PartitionMode = doc
        .mode
        .parse()
        .map_err(|e: Error| fail("mode".into(), e.to_string()))?;
    if !(doc.padding >= 0.0 && doc.padding.is_finite()) {
        return Err(fail("padding".into(), "must be finite and >= 0".into()));
    }
    let mut chunks = Vec::with_capacity(doc.chunks.len());
    for (i, c) in doc.chunks.into_iter().enumerate() {
        let to_bbox = |a: [f64; 4], field: &str| {
            BBox::new(a[0], a[1], a[2], a[3]).map_err(|e| fail(format!("chunks[{i}].{field}"), e.to_string()))
        };
        let core = to_bbox(c.core, "core")?;
        let padded = to_bbox(c.padded, "padded")?;
        if !padded.contains_bbox(&core) {
            return Err(fail(
                format!("chunks[{i}].padded"),
                "padded box must contain the core box".into(),
            ));
        }
        chunks.push(Chunk {
            chunk_id: c.chunk_id,
            core,
            padded,
            member_ids: c.member_ids,
        });
    }
    let set = PartitionSet {
        mode,
        padding: doc.padding,
        chunks,
    };
    set.validate()
        .map_err(|e| Error::load("<input>", None, e.to_string()))?;
    Ok(set)
}
