//! Collection statistics: completeness, source overlap, licensing, score
//! means and chart data, persisted as timestamped snapshots.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::disambiguate::MergedTool;
use crate::enrich::PublicationMeta;
use crate::layer::{canonical_json_pretty, write_atomic, LayerError};
use crate::normalize::{LicenseFamily, UrlKind};
use crate::score::{FairProfile, Principle};
use crate::Timestamp;

pub const STATS_SCHEMA: &str = "observatory-stats/1";
pub const ALL: &str = "all";
pub const CHART_IDS: [&str; 8] =
    ["completeness", "scoreboard", "licenses", "sources", "types", "versioning", "repositories", "citations"];

/// Fields reported by default.
pub const DEFAULT_FIELDS: [&str; 13] = [
    "description",
    "webpage",
    "repository",
    "license",
    "authors",
    "publication",
    "documentation",
    "download",
    "version",
    "input_formats",
    "output_formats",
    "dependencies",
    "testing",
];

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("collection is empty")]
    EmptyCollection,
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("profiles mix weights versions: {0:?}")]
    MixedWeightsVersion(Vec<String>),
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("stats document {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error(transparent)]
    Layer(#[from] LayerError),
}

fn has_field(tool: &MergedTool, field: &str) -> Result<bool, StatsError> {
    Ok(match field {
        "description" => tool.description.as_deref().is_some_and(|d| !d.trim().is_empty()),
        "webpage" => tool.urls.iter().any(|u| u.kind == UrlKind::Webpage),
        "repository" => tool.repository_urls().next().is_some(),
        "license" => !tool.licenses.is_empty(),
        "authors" => !tool.agents.is_empty(),
        "publication" => !tool.publications.is_empty(),
        "documentation" => !tool.documentation.is_empty(),
        "download" => !tool.downloads.is_empty(),
        "version" => !tool.versions.is_empty(),
        "input_formats" => !tool.input_formats.is_empty(),
        "output_formats" => !tool.output_formats.is_empty(),
        "dependencies" => !tool.dependencies.is_empty(),
        "testing" => tool.tests_declared == Some(true),
        other => return Err(StatsError::UnknownField(other.to_owned())),
    })
}

/// Fraction of tools with a nonempty value, per field.
pub fn completeness(tools: &[MergedTool], fields: &[&str]) -> Result<BTreeMap<String, f64>, StatsError> {
    if tools.is_empty() {
        return Err(StatsError::EmptyCollection);
    }
    let mut out = BTreeMap::new();
    for f in fields {
        let mut n = 0usize;
        for t in tools {
            if has_field(t, f)? {
                n += 1;
            }
        }
        out.insert((*f).to_owned(), n as f64 / tools.len() as f64);
    }
    Ok(out)
}

fn source_key(tool: &MergedTool) -> String {
    let kinds: Vec<&str> = tool.source_kinds().into_iter().map(|s| s.as_str()).collect();
    kinds.join("+")
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceBreakdown {
    /// Exact source combination (`a+b`, in source order) to tool count.
    pub by_combination: BTreeMap<String, usize>,
    /// Tools each source contributed to.
    pub totals: BTreeMap<String, usize>,
}

pub fn source_breakdown(tools: &[MergedTool]) -> SourceBreakdown {
    let mut out = SourceBreakdown::default();
    for t in tools {
        *out.by_combination.entry(source_key(t)).or_default() += 1;
        for s in t.source_kinds() {
            *out.totals.entry(s.as_str().to_owned()).or_default() += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseDistribution {
    /// GPL, Apache, MIT, Artistic, other, none.
    pub by_group: BTreeMap<String, usize>,
    /// copyleft, permissive, other, unknown, none.
    pub by_family: BTreeMap<String, usize>,
    /// Tools per SPDX id, counting every license of a tool.
    pub by_spdx: BTreeMap<String, usize>,
}

/// Top-level group of an SPDX id.
pub fn license_group(spdx: &str) -> &'static str {
    if spdx.starts_with("GPL") {
        "GPL"
    } else if spdx.starts_with("Apache") {
        "Apache"
    } else if spdx == "MIT" {
        "MIT"
    } else if spdx.starts_with("Artistic") {
        "Artistic"
    } else {
        "other"
    }
}

/// Each tool counts once in the group and family tallies, by its first
/// SPDX-mapped license, else its first license, else `none`.
pub fn license_distribution(tools: &[MergedTool]) -> LicenseDistribution {
    let mut out = LicenseDistribution::default();
    for t in tools {
        let chosen = t.licenses.iter().find(|l| l.spdx_id.is_some()).or(t.licenses.first());
        let (group, family) = match chosen {
            None => ("none", "none"),
            Some(l) => match &l.spdx_id {
                Some(id) => (license_group(id), l.family.as_str()),
                None => ("other", LicenseFamily::Unknown.as_str()),
            },
        };
        *out.by_group.entry(group.to_owned()).or_default() += 1;
        *out.by_family.entry(family.to_owned()).or_default() += 1;
        let ids: BTreeSet<&str> = t.licenses.iter().filter_map(|l| l.spdx_id.as_deref()).collect();
        for id in ids {
            *out.by_spdx.entry(id.to_owned()).or_default() += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scoreboard {
    pub indicators: BTreeMap<String, f64>,
    pub principles: BTreeMap<Principle, f64>,
    pub overall: Option<f64>,
    pub weights_version: Option<String>,
    pub n_profiles: usize,
}

/// Mean of every indicator and principle over the profiles.
pub fn scoreboard(profiles: &[&FairProfile]) -> Result<Scoreboard, StatsError> {
    let versions: BTreeSet<&str> = profiles.iter().map(|p| p.weights_version.as_str()).collect();
    if versions.len() > 1 {
        return Err(StatsError::MixedWeightsVersion(versions.into_iter().map(str::to_owned).collect()));
    }
    let mut board = Scoreboard { n_profiles: profiles.len(), ..Default::default() };
    if profiles.is_empty() {
        return Ok(board);
    }
    let n = profiles.len() as f64;
    let mut ind: BTreeMap<String, f64> = BTreeMap::new();
    let mut pri: BTreeMap<Principle, f64> = BTreeMap::new();
    let mut overall = 0.0;
    for p in profiles {
        for s in &p.indicators {
            *ind.entry(s.id.clone()).or_default() += s.value;
        }
        for (k, v) in &p.principles {
            *pri.entry(*k).or_default() += v;
        }
        overall += p.overall;
    }
    board.indicators = ind.into_iter().map(|(k, v)| (k, v / n)).collect();
    board.principles = pri.into_iter().map(|(k, v)| (k, v / n)).collect();
    board.overall = Some(overall / n);
    board.weights_version = versions.into_iter().next().map(str::to_owned);
    Ok(board)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Versioning {
    pub with_version: usize,
    pub with_repository: usize,
    pub with_both: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub schema: String,
    pub collection: String,
    pub n_tools: usize,
    pub field_completeness: BTreeMap<String, f64>,
    pub source_breakdown: SourceBreakdown,
    pub license_distribution: LicenseDistribution,
    pub scoreboard: Scoreboard,
    pub type_breakdown: BTreeMap<String, usize>,
    pub versioning: Versioning,
    /// Code host class to number of tools linking a repository there.
    pub repository_usage: BTreeMap<String, usize>,
    /// Venue to summed citation counts of the tools' publications.
    pub citations_by_venue: BTreeMap<String, u64>,
    pub snapshot_at: Timestamp,
}

/// Tools carrying the tag; `all` selects every tool.
pub fn filter_collection<'a>(tools: &'a [MergedTool], collection: &str) -> Vec<&'a MergedTool> {
    tools
        .iter()
        .filter(|t| collection == ALL || t.collections.iter().any(|c| c == collection))
        .collect()
}

/// Statistics over `tools`, which should already be the collection's members.
pub fn collection_stats(
    collection: &str,
    tools: &[MergedTool],
    profiles: &[&FairProfile],
    publications: &HashMap<String, Vec<PublicationMeta>>,
    snapshot_at: Timestamp,
) -> Result<CollectionStats, StatsError> {
    let field_completeness = if tools.is_empty() {
        DEFAULT_FIELDS.iter().map(|f| ((*f).to_owned(), 0.0)).collect()
    } else {
        completeness(tools, &DEFAULT_FIELDS)?
    };
    let mut type_breakdown = BTreeMap::new();
    let mut versioning = Versioning::default();
    let mut repository_usage = BTreeMap::new();
    let mut citations_by_venue: BTreeMap<String, u64> = BTreeMap::new();
    for t in tools {
        *type_breakdown.entry(t.software_type.as_str().to_owned()).or_default() += 1;
        let (v, r) = (!t.versions.is_empty(), t.repository_urls().next().is_some());
        versioning.with_version += v as usize;
        versioning.with_repository += r as usize;
        versioning.with_both += (v && r) as usize;
        let hosts: BTreeSet<&str> = t.repository_urls().filter_map(|u| u.host_class.as_deref()).collect();
        for h in hosts {
            *repository_usage.entry(h.to_owned()).or_default() += 1;
        }
        // one count per publication, taking the highest count any provider reported
        let mut per_pub: BTreeMap<String, (String, u64)> = BTreeMap::new();
        for m in publications.get(&t.tool_id).into_iter().flatten() {
            if let (Some(venue), Some(c)) = (&m.venue, m.citation_count) {
                let e = per_pub.entry(m.id.to_string()).or_insert((venue.clone(), c));
                if c > e.1 {
                    *e = (venue.clone(), c);
                }
            }
        }
        for (venue, c) in per_pub.into_values() {
            *citations_by_venue.entry(venue).or_default() += c;
        }
    }
    let ids: BTreeSet<&str> = tools.iter().map(|t| t.tool_id.as_str()).collect();
    let own: Vec<&FairProfile> = profiles.iter().copied().filter(|p| ids.contains(p.tool_id.as_str())).collect();
    Ok(CollectionStats {
        schema: STATS_SCHEMA.into(),
        collection: collection.to_owned(),
        n_tools: tools.len(),
        field_completeness,
        source_breakdown: source_breakdown(tools),
        license_distribution: license_distribution(tools),
        scoreboard: scoreboard(&own)?,
        type_breakdown,
        versioning,
        repository_usage,
        citations_by_venue,
        snapshot_at,
    })
}

/// `all` plus every collection tag, sorted.
pub fn collection_names(tools: &[MergedTool]) -> Vec<String> {
    let mut names: BTreeSet<String> = tools.iter().flat_map(|t| t.collections.iter().cloned()).collect();
    names.insert(ALL.to_owned());
    let mut v: Vec<String> = names.into_iter().collect();
    v.sort_by_key(|n| (n != ALL, n.clone()));
    v
}

/// Stats for `all` and every tag.
pub fn compute_all(
    tools: &[MergedTool],
    profiles: &[FairProfile],
    publications: &HashMap<String, Vec<PublicationMeta>>,
    snapshot_at: Timestamp,
) -> Result<Vec<CollectionStats>, StatsError> {
    use rayon::prelude::*;
    let refs: Vec<&FairProfile> = profiles.iter().collect();
    collection_names(tools)
        .par_iter()
        .map(|name| {
            let members: Vec<MergedTool> = filter_collection(tools, name).into_iter().cloned().collect();
            collection_stats(name, &members, &refs, publications, snapshot_at)
        })
        .collect()
}

/// Directory-safe form of a collection name.
pub fn collection_dir(collection: &str) -> String {
    collection
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

pub fn snapshot_name(at: Timestamp) -> String {
    format!("{}.json", at.format("%Y%m%dT%H%M%SZ"))
}

/// `stats/<collection>/<snapshot>.json` under `root`.
pub fn snapshot_path(root: &Path, collection: &str, at: Timestamp) -> PathBuf {
    root.join("stats").join(collection_dir(collection)).join(snapshot_name(at))
}

pub fn write_snapshot(root: &Path, stats: &CollectionStats) -> Result<PathBuf, StatsError> {
    let path = snapshot_path(root, &stats.collection, stats.snapshot_at);
    write_atomic(&path, canonical_json_pretty(stats).as_bytes())?;
    Ok(path)
}

pub fn read_snapshot(path: &Path) -> Result<CollectionStats, StatsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| LayerError::Io { path: path.display().to_string(), source })?;
    let corrupt = |message: String| StatsError::Corrupt { path: path.display().to_string(), message };
    let stats: CollectionStats = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if stats.schema != STATS_SCHEMA {
        return Err(corrupt(format!("schema `{}`", stats.schema)));
    }
    Ok(stats)
}

/// Snapshots of one collection, oldest first.
pub fn list_snapshots(root: &Path, collection: &str) -> Vec<PathBuf> {
    let dir = root.join("stats").join(collection_dir(collection));
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

/// Chart payload, taken verbatim from the stats document.
pub fn chart(stats: &CollectionStats, chart_id: &str) -> Result<Value, StatsError> {
    let data = match chart_id {
        "completeness" => json!(stats.field_completeness),
        "scoreboard" => json!(stats.scoreboard),
        "licenses" => json!(stats.license_distribution),
        "sources" => json!(stats.source_breakdown),
        "types" => json!(stats.type_breakdown),
        "versioning" => json!(stats.versioning),
        "repositories" => json!(stats.repository_usage),
        "citations" => json!(stats.citations_by_venue),
        other => return Err(StatsError::UnknownChart(other.to_owned())),
    };
    Ok(json!({
        "collection": stats.collection,
        "chart_id": chart_id,
        "snapshot_at": stats.snapshot_at,
        "n_tools": stats.n_tools,
        "data": data,
    }))
}
