use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    assign_tool_ids, build_blocks, canonical_partition, detect_conflicts, groups_known_apart, merge_group,
    ordered_pair, persist_state, rescue, resolve_with_proxy, AgreementProxy, Block, BlockSet, BlockStatus, Catalog,
    DisambiguateError, KnownApart, MergedTool, Method, Priority, Resolution,
};
use crate::normalize::Instance;
use crate::unionfind::UnionFind;
use crate::Timestamp;

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub priority: Priority,
    /// Extra proxy attempts before a failing block is escalated.
    pub proxy_retries: u32,
    pub now: Timestamp,
    /// Persist the block state here after every resolution step.
    pub state_path: Option<PathBuf>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            priority: Priority::default(),
            proxy_retries: 1,
            now: Timestamp::UNIX_EPOCH,
            state_path: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrateReport {
    pub blocks: usize,
    pub conflicts: usize,
    pub rescued: usize,
    pub proxy_resolved: usize,
    pub human_resolved: usize,
    pub escalated: usize,
    pub remaining: usize,
    /// Blocks copied unchanged from the previous state.
    pub reused: usize,
    /// Blocks seeded from resolutions of changed predecessors.
    pub carried: usize,
    pub merged: usize,
}

#[derive(Debug, Clone)]
pub struct IntegrateOutcome {
    pub blocks: BlockSet,
    pub merged: Vec<MergedTool>,
    pub report: IntegrateReport,
}

fn status_for(method: Method) -> BlockStatus {
    match method {
        Method::Rescue => BlockStatus::Rescued,
        Method::Proxy => BlockStatus::ProxyResolved,
        Method::Human => BlockStatus::HumanResolved,
    }
}

/// Pairs a resolved block placed in different groups.
fn apart_pairs(block: &Block, into: &mut KnownApart) {
    if !block.status.is_resolved() {
        return;
    }
    let groups = block.groups();
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            for x in a {
                for y in b {
                    into.insert(ordered_pair(x, y));
                }
            }
        }
    }
}

/// Seeds a changed block from the resolutions of the blocks it replaces.
fn carry_forward(block: &mut Block, preds: &[&Block], apart: &KnownApart) -> bool {
    let strongest = preds
        .iter()
        .filter_map(|p| p.resolutions.last().map(|r| (p, r)))
        .max_by_key(|(p, r)| (r.method, p.status.is_resolved(), p.block_id.clone()));
    let Some((source, last)) = strongest else {
        return false;
    };
    if block.subclusters.len() < 2 {
        return false;
    }
    let index: BTreeMap<&str, usize> = block
        .subclusters
        .iter()
        .enumerate()
        .flat_map(|(i, g)| g.iter().map(move |m| (m.as_str(), i)))
        .collect();
    let mut uf = UnionFind::new(block.subclusters.len());
    for p in preds {
        if p.resolutions.is_empty() {
            continue;
        }
        for g in p.groups() {
            let here: Vec<usize> = g.iter().filter_map(|m| index.get(m.as_str()).copied()).collect();
            uf.union_all(&here);
        }
    }
    let partition: Vec<Vec<String>> = canonical_partition(
        uf.components()
            .into_iter()
            .map(|c| c.into_iter().flat_map(|i| block.subclusters[i].clone()).collect())
            .collect(),
    );
    let settled = partition.len() == 1
        || partition
            .iter()
            .enumerate()
            .all(|(i, a)| partition[i + 1..].iter().all(|b| groups_known_apart(a, b, apart)));
    block.resolutions.push(Resolution {
        partition,
        method: last.method,
        confidence: last.confidence,
        rationale: format!("carried forward from {}: {}", source.block_id, last.rationale),
        decided_at: last.decided_at,
        decided_by: last.decided_by.clone(),
    });
    block.status = if settled { status_for(last.method) } else { BlockStatus::Conflict };
    true
}

/// Runs build → detect → rescue → proxy → merge. With a previous block
/// state, blocks of identical membership are reused as they are, and changed
/// blocks start from their predecessors' decisions, so no resolved conflict
/// is asked again.
pub fn integrate(
    instances: &[Instance],
    previous: Option<&BlockSet>,
    proxy: &dyn AgreementProxy,
    opts: &IntegrateOptions,
) -> Result<IntegrateOutcome, DisambiguateError> {
    let catalog = Catalog::new(instances.iter().cloned());
    let mut set = build_blocks(instances)?;
    let mut report = IntegrateReport::default();
    let mut apart_by_block: BTreeMap<String, KnownApart> = BTreeMap::new();

    if let Some(prev) = previous {
        set.retired = prev.retired.clone();
        let mut owner: BTreeMap<String, &str> = BTreeMap::new();
        for (id, b) in &prev.blocks {
            for r in b.member_refs() {
                owner.insert(r, id);
            }
        }
        let mut used: BTreeSet<&str> = BTreeSet::new();
        for block in set.blocks.values_mut() {
            if let Some(old) = prev.blocks.get(&block.block_id) {
                // same membership
                if old.status != BlockStatus::Clean || block.subclusters.len() < 2 {
                    block.status = old.status;
                    block.resolutions = old.resolutions.clone();
                }
                block.predecessors = old.predecessors.clone();
                used.insert(&old.block_id);
                report.reused += 1;
                continue;
            }
            let pred_ids: BTreeSet<&str> = block
                .member_refs()
                .iter()
                .filter_map(|r| owner.get(r).copied())
                .collect();
            if pred_ids.is_empty() {
                continue;
            }
            let preds: Vec<&Block> = pred_ids.iter().map(|id| &prev.blocks[*id]).collect();
            let mut apart = KnownApart::new();
            for p in &preds {
                apart_pairs(p, &mut apart);
            }
            block.predecessors = pred_ids.iter().map(|s| s.to_string()).collect();
            if carry_forward(block, &preds, &apart) {
                report.carried += 1;
            }
            apart_by_block.insert(block.block_id.clone(), apart);
        }
        for (id, b) in &prev.blocks {
            if !used.contains(id.as_str()) {
                set.retired.insert(id.clone(), b.clone());
            }
        }
    }

    let persist = |set: &BlockSet| -> Result<(), DisambiguateError> {
        match &opts.state_path {
            Some(p) => persist_state(set, p),
            None => Ok(()),
        }
    };

    detect_conflicts(&mut set);
    persist(&set)?;

    let empty = KnownApart::new();
    for block in set.blocks.values_mut() {
        let apart = apart_by_block.get(&block.block_id).unwrap_or(&empty);
        rescue(block, &catalog, &opts.priority, apart, opts.now)?;
    }
    persist(&set)?;

    for block in set.blocks.values_mut() {
        let apart = apart_by_block.get(&block.block_id).unwrap_or(&empty);
        let mut attempt = 0;
        loop {
            match resolve_with_proxy(block, &catalog, proxy, apart, opts.now) {
                Ok(()) => break,
                Err(DisambiguateError::ProxyFailure(e)) => {
                    tracing::warn!(block = %block.block_id, attempt, error = %e, "proxy failed");
                    if attempt >= opts.proxy_retries {
                        block.status = BlockStatus::Escalated;
                        break;
                    }
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    persist(&set)?;

    let merged = merge_all(&set, &catalog, &opts.priority)?;

    report.blocks = set.len();
    report.conflicts = set.blocks.values().filter(|b| b.subclusters.len() >= 2 || b.was_conflict()).count();
    report.rescued = set.count(BlockStatus::Rescued);
    report.proxy_resolved = set.count(BlockStatus::ProxyResolved);
    report.human_resolved = set.count(BlockStatus::HumanResolved);
    report.escalated = set.count(BlockStatus::Escalated);
    report.remaining = set.count(BlockStatus::Conflict);
    report.merged = merged.len();
    Ok(IntegrateOutcome { blocks: set, merged, report })
}

/// Merged tools from the current partition of every block. Unresolved
/// blocks stay split.
pub fn merge_all(set: &BlockSet, catalog: &Catalog, priority: &Priority) -> Result<Vec<MergedTool>, DisambiguateError> {
    let mut tools = Vec::new();
    for block in set.blocks.values() {
        for group in block.groups() {
            let members = group.iter().map(|r| catalog.get(r)).collect::<Result<Vec<_>, _>>()?;
            tools.push(merge_group(&members, priority)?);
        }
    }
    Ok(assign_tool_ids(tools))
}
