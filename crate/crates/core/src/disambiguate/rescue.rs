use std::collections::BTreeSet;

use super::{
    canonical_partition, groups_known_apart, Block, BlockStatus, Catalog, DisambiguateError, KnownApart, Method,
    Priority, Resolution,
};
use crate::normalize::Instance;
use crate::Timestamp;

fn shared_url(a: &Instance, b: &Instance) -> Option<String> {
    let urls: BTreeSet<&str> = a.urls.iter().map(|u| u.normalized.as_str()).collect();
    b.urls
        .iter()
        .map(|u| u.normalized.as_str())
        .filter(|u| urls.contains(u))
        .min()
        .map(str::to_owned)
}

/// Why `candidate` may join the group containing `accepted`, if it may.
fn promotion_reason(candidate: &Instance, accepted: &Instance) -> Option<String> {
    if candidate.canonical_name() != accepted.canonical_name() {
        return None;
    }
    if candidate.source() == accepted.source() {
        return Some(format!("shares name and source {} with {}", candidate.source(), accepted.key));
    }
    shared_url(candidate, accepted).map(|u| format!("shares name and {u} with {}", accepted.key))
}

/// Promotes subclusters into the accepted group. The seed is the largest
/// group, ties going to the best source priority and then the smallest
/// member ref. A group is promoted when one of its members shares the
/// canonical name with an accepted member and either the same source or any
/// normalized URL. Repeats until nothing changes.
///
/// Appends a rescue resolution when anything was promoted; the block becomes
/// `rescued` if a single group remains. Blocks that are not in conflict are
/// returned untouched.
pub fn rescue(
    block: &mut Block,
    catalog: &Catalog,
    priority: &Priority,
    apart: &KnownApart,
    now: Timestamp,
) -> Result<(), DisambiguateError> {
    if block.status != BlockStatus::Conflict {
        return Ok(());
    }
    let groups: Vec<Vec<String>> = block.groups().to_vec();
    if groups.len() < 2 {
        return Ok(());
    }
    let best_rank = |g: &Vec<String>| -> Result<usize, DisambiguateError> {
        g.iter()
            .map(|r| catalog.get(r).map(|i| priority.rank(i.source())))
            .try_fold(usize::MAX, |acc, r| r.map(|r| acc.min(r)))
    };
    let mut seed = 0;
    for i in 1..groups.len() {
        let (gi, gs) = (&groups[i], &groups[seed]);
        let key_i = (std::cmp::Reverse(gi.len()), best_rank(gi)?, &gi[0]);
        let key_s = (std::cmp::Reverse(gs.len()), best_rank(gs)?, &gs[0]);
        if key_i < key_s {
            seed = i;
        }
    }

    let mut accepted = groups[seed].clone();
    let mut pending: Vec<Vec<String>> = groups
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != seed)
        .map(|(_, g)| g.clone())
        .collect();
    let mut reasons = Vec::new();
    loop {
        let mut promoted = None;
        'groups: for (gi, group) in pending.iter().enumerate() {
            if groups_known_apart(group, &accepted, apart) {
                continue;
            }
            for m in group {
                let cand = catalog.get(m)?;
                for a in &accepted {
                    if let Some(why) = promotion_reason(cand, catalog.get(a)?) {
                        reasons.push(format!("{m} {why}"));
                        promoted = Some(gi);
                        break 'groups;
                    }
                }
            }
        }
        match promoted {
            Some(gi) => {
                let g = pending.remove(gi);
                accepted.extend(g);
            }
            None => break,
        }
    }
    if reasons.is_empty() {
        return Ok(());
    }
    let remaining = pending.len();
    pending.push(accepted);
    block.resolutions.push(Resolution {
        partition: canonical_partition(pending),
        method: Method::Rescue,
        confidence: 1.0,
        rationale: format!("promoted: {}", reasons.join("; ")),
        decided_at: now,
        decided_by: "rescue".into(),
    });
    if remaining == 0 {
        block.status = BlockStatus::Rescued;
    }
    Ok(())
}
