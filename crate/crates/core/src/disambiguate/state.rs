use std::path::Path;

use serde::{Deserialize, Serialize};

use super::blocks::block_id;
use super::{check_partition, Block, BlockSet, BlockStatus, DisambiguateError};
use crate::layer::{canonical_json_pretty, write_atomic, LayerError};

pub const BLOCKS_SCHEMA: &str = "observatory-blocks/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    schema: String,
    blocks: Vec<Block>,
    #[serde(default)]
    retired: Vec<Block>,
}

impl BlockSet {
    /// Canonical state document.
    pub fn to_state_string(&self) -> String {
        canonical_json_pretty(&StateDoc {
            schema: BLOCKS_SCHEMA.into(),
            blocks: self.blocks.values().cloned().collect(),
            retired: self.retired.values().cloned().collect(),
        })
    }

    pub fn from_state_str(text: &str) -> Result<BlockSet, DisambiguateError> {
        let corrupt = DisambiguateError::CorruptState;
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(BLOCKS_SCHEMA) => {}
            other => return Err(corrupt(format!("expected schema `{BLOCKS_SCHEMA}`, found {other:?}"))),
        }
        let doc: StateDoc = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
        let mut set = BlockSet::default();
        for (target, blocks) in [(&mut set.blocks, doc.blocks), (&mut set.retired, doc.retired)] {
            for block in blocks {
                validate(&block).map_err(|e| corrupt(format!("block {}: {e}", block.block_id)))?;
                if target.insert(block.block_id.clone(), block).is_some() {
                    return Err(corrupt("duplicate block id".into()));
                }
            }
        }
        Ok(set)
    }
}

fn validate(block: &Block) -> Result<(), String> {
    if block.members.is_empty() {
        return Err("no members".into());
    }
    if block.members.windows(2).any(|w| w[0] >= w[1]) {
        return Err("members not sorted and unique".into());
    }
    let mut refs = block.member_refs();
    refs.sort();
    if block_id(&refs) != block.block_id {
        return Err("id does not match membership".into());
    }
    check_partition(&refs, &block.subclusters).map_err(|e| format!("subclusters: {e}"))?;
    for r in &block.resolutions {
        check_partition(&refs, &r.partition).map_err(|e| format!("resolution: {e}"))?;
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err("confidence out of range".into());
        }
    }
    match block.status {
        BlockStatus::Clean if block.subclusters.len() != 1 || !block.resolutions.is_empty() => {
            Err("clean block with several subclusters or resolutions".into())
        }
        s if s.is_resolved() && block.resolutions.is_empty() => Err(format!("{s} block without resolution")),
        _ => Ok(()),
    }
}

/// Writes the state file atomically.
pub fn persist_state(set: &BlockSet, path: &Path) -> Result<(), DisambiguateError> {
    write_atomic(path, set.to_state_string().as_bytes())?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<BlockSet, DisambiguateError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| LayerError::Io { path: path.display().to_string(), source })?;
    BlockSet::from_state_str(&text)
}
