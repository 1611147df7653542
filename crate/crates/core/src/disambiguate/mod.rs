//! Identity resolution: blocking, conflict detection, rescue, proxy
//! judgement, human decisions and merging, over a persistent block state.
//!
//! Blocks are connected components under NAME ∪ LINK edges. Inside a block,
//! subclusters are components under NAMETYPE ∪ LINK. A block with more than
//! one subcluster is a conflict and goes through [`rescue`], then
//! [`resolve_with_proxy`], then human review via [`render_issue`] and
//! [`apply_decision`].

mod blocks;
mod integrate;
mod issue;
mod merge;
mod proxy;
mod rescue;
mod state;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::blocks::{build_blocks, detect_conflicts};
pub use self::integrate::{integrate, merge_all, IntegrateOptions, IntegrateOutcome, IntegrateReport};
pub use self::issue::{apply_decision, apply_decision_file, render_issue, Decision};
pub use self::merge::{assign_tool_ids, merge_group, slug, MergedTool, SourceRef, MERGED_SCHEMA};
pub use self::proxy::{
    resolve_with_proxy, token_jaccard, AgreementProxy, GroupView, JaccardProxy, ProxyFailure, Verdict,
    VerdictKind,
};
pub use self::rescue::rescue;
pub use self::state::{load_state, persist_state, BLOCKS_SCHEMA};

use crate::ingest::SourceKind;
use crate::layer::LayerError;
use crate::normalize::{Instance, InstanceKey};
use crate::Timestamp;

#[derive(Debug, thiserror::Error)]
pub enum DisambiguateError {
    #[error("duplicate instance {0}")]
    DuplicateKey(String),
    #[error("cannot merge an empty group")]
    EmptyGroup,
    #[error("unknown block {0}")]
    UnknownBlock(String),
    #[error("partition does not match block {block_id}: {reason}")]
    PartitionMismatch { block_id: String, reason: String },
    #[error("corrupt block state: {0}")]
    CorruptState(String),
    #[error("agreement proxy failed: {0}")]
    ProxyFailure(String),
    #[error("instance {0} is referenced by a block but missing from the catalog")]
    MissingInstance(String),
    #[error(transparent)]
    Layer(#[from] LayerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    Name,
    #[serde(rename = "NAMETYPE")]
    NameType,
    Link,
}

/// Undirected edge between two members, endpoints stored as member refs with
/// `a < b`. LINK edges name the shared normalized URL in `via`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub kind: EdgeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStatus {
    Clean,
    Conflict,
    Rescued,
    ProxyResolved,
    Escalated,
    HumanResolved,
}

impl BlockStatus {
    /// Statuses whose latest resolution is final.
    pub fn is_resolved(self) -> bool {
        matches!(self, BlockStatus::Rescued | BlockStatus::ProxyResolved | BlockStatus::HumanResolved)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BlockStatus::Clean => "clean",
            BlockStatus::Conflict => "conflict",
            BlockStatus::Rescued => "rescued",
            BlockStatus::ProxyResolved => "proxy_resolved",
            BlockStatus::Escalated => "escalated",
            BlockStatus::HumanResolved => "human_resolved",
        }
    }
}

impl fmt::Display for BlockStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rescue,
    Proxy,
    Human,
}

/// One audited partition decision. Groups hold member refs; both groups and
/// their contents are sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub partition: Vec<Vec<String>>,
    pub method: Method,
    pub confidence: f64,
    pub rationale: String,
    pub decided_at: Timestamp,
    pub decided_by: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub block_id: String,
    pub members: Vec<InstanceKey>,
    pub edges: Vec<Edge>,
    pub subclusters: Vec<Vec<String>>,
    pub status: BlockStatus,
    pub resolutions: Vec<Resolution>,
    /// Blocks of an earlier run whose membership this block absorbed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predecessors: Vec<String>,
}

impl Block {
    pub fn member_refs(&self) -> Vec<String> {
        self.members.iter().map(InstanceKey::member_ref).collect()
    }

    /// Current partition: the latest resolution, or the subclusters.
    pub fn groups(&self) -> &[Vec<String>] {
        match self.resolutions.last() {
            Some(r) => &r.partition,
            None => &self.subclusters,
        }
    }

    pub fn was_conflict(&self) -> bool {
        self.status != BlockStatus::Clean
    }
}

/// Sorts a partition into canonical form.
pub fn canonical_partition(mut groups: Vec<Vec<String>>) -> Vec<Vec<String>> {
    for g in &mut groups {
        g.sort();
        g.dedup();
    }
    groups.retain(|g| !g.is_empty());
    groups.sort();
    groups
}

/// Checks that `partition` covers `members` exactly with disjoint nonempty groups.
pub fn check_partition(members: &[String], partition: &[Vec<String>]) -> Result<(), String> {
    let mut seen = std::collections::BTreeSet::new();
    for g in partition {
        if g.is_empty() {
            return Err("empty group".into());
        }
        for m in g {
            if !seen.insert(m.as_str()) {
                return Err(format!("{m} appears in more than one group"));
            }
        }
    }
    let want: std::collections::BTreeSet<&str> = members.iter().map(String::as_str).collect();
    if let Some(extra) = seen.difference(&want).next() {
        return Err(format!("{extra} is not a member"));
    }
    if let Some(missing) = want.difference(&seen).next() {
        return Err(format!("{missing} is missing"));
    }
    Ok(())
}

/// All blocks of the current run plus blocks retired by incremental runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockSet {
    pub blocks: BTreeMap<String, Block>,
    pub retired: BTreeMap<String, Block>,
}

impl BlockSet {
    pub fn get(&self, id: &str) -> Option<&Block> {
        self.blocks.get(id)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn count(&self, status: BlockStatus) -> usize {
        self.blocks.values().filter(|b| b.status == status).count()
    }

    pub fn resolution_count(&self) -> usize {
        self.blocks
            .values()
            .chain(self.retired.values())
            .map(|b| b.resolutions.len())
            .sum()
    }

    /// |blocks that were conflicts| / |blocks|.
    pub fn conflict_rate(&self) -> Option<f64> {
        if self.blocks.is_empty() {
            return None;
        }
        let conflicts = self.blocks.values().filter(|b| b.was_conflict()).count();
        Some(conflicts as f64 / self.blocks.len() as f64)
    }
}

/// Source precedence for tie-breaks and scalar field selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Priority(pub Vec<SourceKind>);

impl Default for Priority {
    fn default() -> Self {
        Priority(vec![
            SourceKind::Biotools,
            SourceKind::Bioconductor,
            SourceKind::Bioconda,
            SourceKind::Toolshed,
            SourceKind::GalaxyEu,
            SourceKind::Sourceforge,
            SourceKind::Github,
        ])
    }
}

impl Priority {
    /// Position in the order; unlisted sources rank last.
    pub fn rank(&self, source: SourceKind) -> usize {
        self.0.iter().position(|s| *s == source).unwrap_or(self.0.len())
    }

    /// Whether the order is a permutation of `sources`.
    pub fn is_permutation_of(&self, sources: &[SourceKind]) -> bool {
        let mut a = self.0.clone();
        let mut b = sources.to_vec();
        a.sort();
        b.sort();
        a == b
    }
}

/// Instances addressable by member ref.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    by_ref: HashMap<String, Instance>,
}

impl Catalog {
    pub fn new(instances: impl IntoIterator<Item = Instance>) -> Self {
        Catalog {
            by_ref: instances.into_iter().map(|i| (i.key.member_ref(), i)).collect(),
        }
    }

    pub fn get(&self, member_ref: &str) -> Result<&Instance, DisambiguateError> {
        self.by_ref
            .get(member_ref)
            .ok_or_else(|| DisambiguateError::MissingInstance(member_ref.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.by_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_ref.is_empty()
    }
}

/// Member pairs that an earlier resolved block already placed in different
/// groups. Pairs are stored with the smaller ref first.
pub type KnownApart = std::collections::HashSet<(String, String)>;

pub(crate) fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

pub(crate) fn groups_known_apart(a: &[String], b: &[String], apart: &KnownApart) -> bool {
    !apart.is_empty() && a.iter().any(|x| b.iter().any(|y| apart.contains(&ordered_pair(x, y))))
}
