use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    canonical_partition, check_partition, load_state, persist_state, BlockSet, BlockStatus, Catalog,
    DisambiguateError, Method, Resolution,
};
use crate::layer::{canonical_json_pretty, LayerError};
use crate::normalize::UrlKind;
use crate::Timestamp;

const EXCERPT_CHARS: usize = 200;

/// Contents of a `decision-<block_id>.json` file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decision {
    pub block_id: String,
    pub partition: Vec<Vec<String>>,
    pub decided_by: String,
    #[serde(default)]
    pub rationale: String,
}

impl Decision {
    pub fn file_name(block_id: &str) -> String {
        format!("decision-{block_id}.json")
    }
}

fn excerpt(text: Option<&str>) -> String {
    let text = match text.map(str::trim) {
        Some(t) if !t.is_empty() => t,
        _ => return "(none)".into(),
    };
    let flat: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let out = if flat.chars().count() > EXCERPT_CHARS {
        let mut s: String = flat.chars().take(EXCERPT_CHARS - 1).collect();
        s.push('…');
        s
    } else {
        flat
    };
    cell(&out)
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|")
}

fn json_block(out: &mut String, value: &impl Serialize) {
    out.push_str("```json\n");
    out.push_str(&canonical_json_pretty(value));
    out.push_str("```\n");
}

/// Markdown issue for one block: front matter, member table, candidate
/// partitions and a decision template. Same block, same bytes.
pub fn render_issue(set: &BlockSet, block_id: &str, catalog: &Catalog) -> Result<String, DisambiguateError> {
    let block = set
        .get(block_id)
        .ok_or_else(|| DisambiguateError::UnknownBlock(block_id.to_owned()))?;
    let mut out = String::new();
    let _ = writeln!(out, "---");
    let _ = writeln!(out, "block_id: {}", block.block_id);
    let _ = writeln!(out, "members: {}", block.members.len());
    let _ = writeln!(out, "status: {}", block.status);
    let _ = writeln!(out, "---\n");
    let _ = writeln!(out, "# Identity conflict in block {}\n", block.block_id);
    let _ = writeln!(out, "These records share a name but no repository link. Decide which of them describe the same software.\n");
    let _ = writeln!(out, "| member | name | type | source | links | description |");
    let _ = writeln!(out, "|---|---|---|---|---|---|");
    let mut refs = block.member_refs();
    refs.sort();
    for r in &refs {
        let inst = catalog.get(r)?;
        let links: Vec<String> = inst
            .urls
            .iter()
            .map(|u| match u.kind {
                UrlKind::Webpage => u.normalized.clone(),
                _ => format!("{} ({})", u.normalized, if u.kind == UrlKind::Repository { "repository" } else { "repository-like" }),
            })
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            cell(r),
            cell(&inst.name_raw),
            inst.software_type(),
            inst.source(),
            if links.is_empty() { "(none)".to_owned() } else { cell(&links.join(", ")) },
            excerpt(inst.description.as_deref()),
        );
    }
    let groups = block.groups();
    let _ = writeln!(out, "\n## Current groups\n");
    for (i, g) in groups.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, g.join(", "));
    }
    let _ = writeln!(out, "\n## Candidate partitions\n");
    let _ = writeln!(out, "### merge-all\n");
    json_block(&mut out, &vec![refs.clone()]);
    let _ = writeln!(out, "\n### keep-split\n");
    json_block(&mut out, &groups);
    let _ = writeln!(out, "\n## Decision\n");
    let _ = writeln!(
        out,
        "Save as `{}` with the chosen partition, then run `obs issues apply`.\n",
        Decision::file_name(&block.block_id)
    );
    json_block(
        &mut out,
        &Decision {
            block_id: block.block_id.clone(),
            partition: groups.to_vec(),
            decided_by: String::new(),
            rationale: String::new(),
        },
    );
    Ok(out)
}

/// Records a human decision on a block.
pub fn apply_decision(set: &mut BlockSet, decision: &Decision, now: Timestamp) -> Result<(), DisambiguateError> {
    let block = set
        .blocks
        .get_mut(&decision.block_id)
        .ok_or_else(|| DisambiguateError::UnknownBlock(decision.block_id.clone()))?;
    check_partition(&block.member_refs(), &decision.partition).map_err(|reason| {
        DisambiguateError::PartitionMismatch { block_id: decision.block_id.clone(), reason }
    })?;
    block.resolutions.push(Resolution {
        partition: canonical_partition(decision.partition.clone()),
        method: Method::Human,
        confidence: 1.0,
        rationale: decision.rationale.clone(),
        decided_at: now,
        decided_by: decision.decided_by.clone(),
    });
    block.status = BlockStatus::HumanResolved;
    Ok(())
}

/// Applies one decision file to the state file, persisting before returning.
pub fn apply_decision_file(state: &Path, decision_path: &Path, now: Timestamp) -> Result<String, DisambiguateError> {
    let text = std::fs::read_to_string(decision_path).map_err(|source| {
        DisambiguateError::Layer(LayerError::Io { path: decision_path.display().to_string(), source })
    })?;
    let decision: Decision = serde_json::from_str(&text).map_err(|e| {
        DisambiguateError::Layer(LayerError::Malformed {
            path: decision_path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    })?;
    let mut set = load_state(state)?;
    apply_decision(&mut set, &decision, now)?;
    persist_state(&set, state)?;
    Ok(decision.block_id)
}
