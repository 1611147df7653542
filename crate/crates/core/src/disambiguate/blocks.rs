use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{canonical_partition, Block, BlockSet, BlockStatus, DisambiguateError, Edge, EdgeKind};
use crate::layer::short_hash;
use crate::normalize::Instance;
use crate::unionfind::UnionFind;

/// Stable id from the sorted member refs.
pub(crate) fn block_id(refs: &[String]) -> String {
    let parts: Vec<&str> = refs.iter().map(String::as_str).collect();
    format!("b-{}", short_hash(&parts, 16))
}

/// Groups instances into blocks. Output does not depend on input order.
pub fn build_blocks(instances: &[Instance]) -> Result<BlockSet, DisambiguateError> {
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by(|&a, &b| instances[a].key.cmp(&instances[b].key));
    let sorted: Vec<&Instance> = order.iter().map(|&i| &instances[i]).collect();

    let mut refs = BTreeSet::new();
    for inst in &sorted {
        if !refs.insert(inst.key.member_ref()) {
            return Err(DisambiguateError::DuplicateKey(inst.key.member_ref()));
        }
    }

    let n = sorted.len();
    let mut by_name: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut by_name_type: HashMap<(&str, _), Vec<usize>> = HashMap::new();
    let mut by_link: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in sorted.iter().enumerate() {
        by_name.entry(inst.canonical_name()).or_default().push(i);
        by_name_type
            .entry((inst.canonical_name(), inst.software_type()))
            .or_default()
            .push(i);
        let links: BTreeSet<&str> = inst.link_evidence().collect();
        for link in links {
            by_link.entry(link).or_default().push(i);
        }
    }

    let mut outer = UnionFind::new(n);
    let mut inner = UnionFind::new(n);
    for group in by_name.values() {
        outer.union_all(group);
    }
    for group in by_name_type.values() {
        inner.union_all(group);
    }
    for group in by_link.values() {
        outer.union_all(group);
        inner.union_all(group);
    }

    let mut set = BlockSet::default();
    for component in outer.components() {
        let block = assemble(&sorted, &component, &mut inner, &by_link);
        set.blocks.insert(block.block_id.clone(), block);
    }
    Ok(set)
}

fn assemble(
    sorted: &[&Instance],
    component: &[usize],
    inner: &mut UnionFind,
    by_link: &BTreeMap<&str, Vec<usize>>,
) -> Block {
    let refs: Vec<String> = component.iter().map(|&i| sorted[i].key.member_ref()).collect();
    let mut edges = BTreeSet::new();
    for (x, &i) in component.iter().enumerate() {
        for &j in &component[x + 1..] {
            let (a, b) = (&sorted[i], &sorted[j]);
            if a.canonical_name() != b.canonical_name() {
                continue;
            }
            let (ra, rb) = super::ordered_pair(&a.key.member_ref(), &b.key.member_ref());
            edges.insert(Edge { a: ra.clone(), b: rb.clone(), kind: EdgeKind::Name, via: None });
            if a.software_type() == b.software_type() {
                edges.insert(Edge { a: ra, b: rb, kind: EdgeKind::NameType, via: None });
            }
        }
    }
    let in_block: BTreeSet<usize> = component.iter().copied().collect();
    for (link, holders) in by_link {
        let holders: Vec<usize> = holders.iter().copied().filter(|i| in_block.contains(i)).collect();
        for (x, &i) in holders.iter().enumerate() {
            for &j in &holders[x + 1..] {
                let (a, b) = super::ordered_pair(&sorted[i].key.member_ref(), &sorted[j].key.member_ref());
                edges.insert(Edge { a, b, kind: EdgeKind::Link, via: Some((*link).to_owned()) });
            }
        }
    }

    let mut sub: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for &i in component {
        sub.entry(inner.find(i)).or_default().push(sorted[i].key.member_ref());
    }
    let mut sorted_refs = refs.clone();
    sorted_refs.sort();
    Block {
        block_id: block_id(&sorted_refs),
        members: component.iter().map(|&i| sorted[i].key.clone()).collect(),
        edges: edges.into_iter().collect(),
        subclusters: canonical_partition(sub.into_values().collect()),
        status: BlockStatus::Clean,
        resolutions: Vec::new(),
        predecessors: Vec::new(),
    }
}

/// Marks untouched blocks with two or more subclusters as conflicts and
/// returns the ids of all blocks with two or more subclusters.
pub fn detect_conflicts(set: &mut BlockSet) -> Vec<String> {
    let mut ids = Vec::new();
    for (id, block) in set.blocks.iter_mut() {
        if block.subclusters.len() >= 2 {
            if block.status == BlockStatus::Clean {
                block.status = BlockStatus::Conflict;
            }
            ids.push(id.clone());
        }
    }
    ids
}
