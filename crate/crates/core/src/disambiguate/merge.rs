use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::{DisambiguateError, Priority};
use crate::ingest::{DocLink, PublicationId, SourceKind};
use crate::layer::short_hash;
use crate::normalize::{Agent, Instance, InstanceKey, LicenseRef, SoftwareType, TermRef, UrlRef};

pub const MERGED_SCHEMA: &str = "observatory-merged/1";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceRef {
    pub source: SourceKind,
    pub source_id: String,
}

/// Deduplicated entry built from one resolved group of instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedTool {
    pub tool_id: String,
    pub name: String,
    pub canonical_name: String,
    pub software_type: SoftwareType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub urls: Vec<UrlRef>,
    #[serde(default)]
    pub licenses: Vec<LicenseRef>,
    #[serde(default)]
    pub input_formats: Vec<TermRef>,
    #[serde(default)]
    pub output_formats: Vec<TermRef>,
    #[serde(default)]
    pub agents: Vec<Agent>,
    #[serde(default)]
    pub publications: Vec<PublicationId>,
    #[serde(default)]
    pub documentation: Vec<DocLink>,
    #[serde(default)]
    pub downloads: Vec<String>,
    #[serde(default)]
    pub versions: Vec<String>,
    #[serde(default)]
    pub dependencies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests_declared: Option<bool>,
    #[serde(default)]
    pub collections: Vec<String>,
    #[serde(default)]
    pub sources: Vec<SourceRef>,
    #[serde(default)]
    pub members: Vec<InstanceKey>,
    /// Field name to the sources that contributed a value.
    #[serde(default)]
    pub field_provenance: BTreeMap<String, BTreeSet<SourceKind>>,
}

impl MergedTool {
    pub fn source_kinds(&self) -> BTreeSet<SourceKind> {
        self.sources.iter().map(|s| s.source).collect()
    }

    pub fn repository_urls(&self) -> impl Iterator<Item = &UrlRef> {
        self.urls.iter().filter(|u| u.kind == crate::normalize::UrlKind::Repository)
    }
}

/// Lowercase, git-ref safe form of a name.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_alphanumeric() || c == '_' {
            out.push(c);
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let trimmed = out.trim_matches('-');
    if trimmed.is_empty() {
        "tool".into()
    } else {
        trimmed.to_owned()
    }
}

fn union_by<T: Clone, K: Eq + Hash>(
    members: &[&Instance],
    field: &str,
    prov: &mut BTreeMap<String, BTreeSet<SourceKind>>,
    get: impl Fn(&Instance) -> &[T],
    key: impl Fn(&T) -> K,
) -> Vec<T> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for m in members {
        let items = get(m);
        if !items.is_empty() {
            prov.entry(field.to_owned()).or_default().insert(m.source());
        }
        for item in items {
            if seen.insert(key(item)) {
                out.push(item.clone());
            }
        }
    }
    out
}

/// Merges one group. Members are ordered by source priority, then key, so
/// the result does not depend on input order. List fields are deduplicated
/// unions; scalar fields come from the first member that has a value.
/// `tool_id` is provisional; see [`assign_tool_ids`].
pub fn merge_group(members: &[&Instance], priority: &Priority) -> Result<MergedTool, DisambiguateError> {
    if members.is_empty() {
        return Err(DisambiguateError::EmptyGroup);
    }
    let mut ordered = members.to_vec();
    ordered.sort_by(|a, b| {
        priority
            .rank(a.source())
            .cmp(&priority.rank(b.source()))
            .then_with(|| a.key.cmp(&b.key))
    });
    let rep = ordered[0];
    let mut prov: BTreeMap<String, BTreeSet<SourceKind>> = BTreeMap::new();
    for field in ["name", "canonical_name", "software_type"] {
        prov.entry(field.into()).or_default().insert(rep.source());
    }

    let description = ordered.iter().find_map(|m| {
        m.description
            .as_ref()
            .filter(|d| !d.trim().is_empty())
            .map(|d| (m.source(), d.clone()))
    });
    if let Some((s, _)) = &description {
        prov.entry("description".into()).or_default().insert(*s);
    }
    let tests_declared = ordered.iter().find_map(|m| m.tests_declared.map(|t| (m.source(), t)));
    if let Some((s, _)) = tests_declared {
        prov.entry("tests_declared".into()).or_default().insert(s);
    }

    let urls = union_by(&ordered, "urls", &mut prov, |m| &m.urls, |u| u.normalized.clone());
    let licenses = union_by(&ordered, "licenses", &mut prov, |m| &m.licenses, |l| {
        l.spdx_id.clone().unwrap_or_else(|| crate::normalize::fold_license(&l.raw))
    });
    let term_key = |t: &TermRef| t.edam_id.clone().unwrap_or_else(|| t.raw.trim().to_lowercase());
    let input_formats = union_by(&ordered, "input_formats", &mut prov, |m| &m.input_formats, term_key);
    let output_formats = union_by(&ordered, "output_formats", &mut prov, |m| &m.output_formats, term_key);
    let agents = union_by(&ordered, "agents", &mut prov, |m| &m.agents, |a| a.name.to_lowercase());
    let publications = union_by(&ordered, "publications", &mut prov, |m| &m.publications, |p| {
        (p.kind, p.value.to_lowercase())
    });
    let documentation = union_by(&ordered, "documentation", &mut prov, |m| &m.documentation, |d| d.url.clone());
    let downloads = union_by(&ordered, "downloads", &mut prov, |m| &m.downloads, |s| s.clone());
    let versions = union_by(&ordered, "versions", &mut prov, |m| &m.versions, |s| s.clone());
    let dependencies = union_by(&ordered, "dependencies", &mut prov, |m| &m.dependencies, |s| s.to_lowercase());
    let collections = union_by(&ordered, "collections", &mut prov, |m| &m.collections, |s| s.clone());

    let mut sources: Vec<SourceRef> = ordered
        .iter()
        .map(|m| SourceRef { source: m.source(), source_id: m.key.source_id.clone() })
        .collect();
    sources.sort();
    let mut keys: Vec<InstanceKey> = ordered.iter().map(|m| m.key.clone()).collect();
    keys.sort();

    Ok(MergedTool {
        tool_id: format!("{}.{}", slug(rep.canonical_name()), rep.software_type()),
        name: rep.name_raw.trim().to_owned(),
        canonical_name: rep.canonical_name().to_owned(),
        software_type: rep.software_type(),
        description: description.map(|(_, d)| d),
        urls,
        licenses,
        input_formats,
        output_formats,
        agents,
        publications,
        documentation,
        downloads,
        versions,
        dependencies,
        tests_declared: tests_declared.map(|(_, t)| t),
        collections,
        sources,
        members: keys,
        field_provenance: prov,
    })
}

/// Makes tool ids unique. Tools sharing a provisional id get a suffix
/// derived from their member refs. Returns tools sorted by id.
pub fn assign_tool_ids(mut tools: Vec<MergedTool>) -> Vec<MergedTool> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in &tools {
        *counts.entry(t.tool_id.clone()).or_default() += 1;
    }
    for t in &mut tools {
        if counts[&t.tool_id] > 1 {
            let refs: Vec<String> = t.members.iter().map(InstanceKey::member_ref).collect();
            let parts: Vec<&str> = refs.iter().map(String::as_str).collect();
            t.tool_id = format!("{}-{}", t.tool_id, short_hash(&parts, 8));
        }
    }
    tools.sort_by(|a, b| a.tool_id.cmp(&b.tool_id));
    tools
}
