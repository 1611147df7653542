use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    canonical_partition, groups_known_apart, Block, BlockStatus, Catalog, DisambiguateError, KnownApart, Method,
    Resolution,
};
use crate::normalize::Instance;
use crate::unionfind::UnionFind;
use crate::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Same,
    Different,
    Unsure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ProxyFailure(pub String);

/// The members of one group, as shown to a proxy.
pub struct GroupView<'a> {
    pub refs: &'a [String],
    pub members: Vec<&'a Instance>,
}

impl GroupView<'_> {
    /// Descriptions of all members, in member order.
    pub fn text(&self) -> String {
        let mut parts: Vec<&str> = self.members.iter().filter_map(|m| m.description.as_deref()).collect();
        parts.dedup();
        parts.join("\n")
    }
}

/// Judges whether two groups of a block denote the same software.
pub trait AgreementProxy: Send + Sync {
    fn judge(&self, a: &GroupView<'_>, b: &GroupView<'_>) -> Result<Verdict, ProxyFailure>;

    /// Name recorded as `decided_by`.
    fn name(&self) -> String;
}

/// Lowercased alphanumeric tokens.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Jaccard index of the token sets; `None` when both are empty.
pub fn token_jaccard(a: &str, b: &str) -> Option<f64> {
    let (ta, tb) = (tokens(a), tokens(b));
    let union = ta.union(&tb).count();
    if union == 0 {
        return None;
    }
    Some(ta.intersection(&tb).count() as f64 / union as f64)
}

/// Deterministic baseline: token Jaccard over member descriptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JaccardProxy {
    pub tau_same: f64,
    pub tau_diff: f64,
}

impl Default for JaccardProxy {
    fn default() -> Self {
        JaccardProxy { tau_same: 0.5, tau_diff: 0.15 }
    }
}

impl JaccardProxy {
    pub fn classify(&self, similarity: Option<f64>) -> Verdict {
        match similarity {
            None => Verdict { kind: VerdictKind::Unsure, confidence: 0.0 },
            Some(s) if s >= self.tau_same => Verdict { kind: VerdictKind::Same, confidence: s },
            Some(s) if s <= self.tau_diff => Verdict { kind: VerdictKind::Different, confidence: 1.0 - s },
            Some(s) => Verdict { kind: VerdictKind::Unsure, confidence: s },
        }
    }
}

impl AgreementProxy for JaccardProxy {
    fn judge(&self, a: &GroupView<'_>, b: &GroupView<'_>) -> Result<Verdict, ProxyFailure> {
        Ok(self.classify(token_jaccard(&a.text(), &b.text())))
    }

    fn name(&self) -> String {
        format!("jaccard(tau_same={}, tau_diff={})", self.tau_same, self.tau_diff)
    }
}

/// Asks the proxy about every pair of current groups. Without unsure
/// verdicts the partition is the transitive closure of `same`, appended as a
/// proxy resolution; any unsure verdict escalates the block. Pairs already
/// known to be apart are not asked again. Blocks that are not in conflict are
/// returned untouched.
pub fn resolve_with_proxy(
    block: &mut Block,
    catalog: &Catalog,
    proxy: &dyn AgreementProxy,
    apart: &KnownApart,
    now: Timestamp,
) -> Result<(), DisambiguateError> {
    if block.status != BlockStatus::Conflict {
        return Ok(());
    }
    let groups = block.groups().to_vec();
    let views = groups
        .iter()
        .map(|g| {
            Ok(GroupView {
                refs: g,
                members: g.iter().map(|r| catalog.get(r)).collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<Vec<_>, DisambiguateError>>()?;

    let mut uf = UnionFind::new(groups.len());
    let mut notes = Vec::new();
    let mut confidence: f64 = 1.0;
    let mut unsure = false;
    for i in 0..views.len() {
        for j in i + 1..views.len() {
            if groups_known_apart(&groups[i], &groups[j], apart) {
                continue;
            }
            let v = proxy
                .judge(&views[i], &views[j])
                .map_err(|e| DisambiguateError::ProxyFailure(e.0))?;
            notes.push(format!(
                "{} vs {}: {:?} ({:.3})",
                groups[i][0], groups[j][0], v.kind, v.confidence
            ));
            match v.kind {
                VerdictKind::Same => {
                    uf.union(i, j);
                }
                VerdictKind::Different => {}
                VerdictKind::Unsure => unsure = true,
            }
            confidence = confidence.min(v.confidence);
        }
    }
    if unsure {
        block.status = BlockStatus::Escalated;
        return Ok(());
    }
    let partition = uf
        .components()
        .into_iter()
        .map(|c| c.into_iter().flat_map(|i| groups[i].clone()).collect())
        .collect();
    block.resolutions.push(Resolution {
        partition: canonical_partition(partition),
        method: Method::Proxy,
        confidence,
        rationale: notes.join("; "),
        decided_at: now,
        decided_by: proxy.name(),
    });
    block.status = BlockStatus::ProxyResolved;
    Ok(())
}
