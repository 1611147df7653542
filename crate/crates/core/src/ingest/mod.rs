//! Parsing of per-source registry dumps into [`RawRecord`]s.
//!
//! Each source has its own fixture schema (see `docs/sources.md`); all of
//! them are a top-level JSON array of entries. Malformed entries are
//! reported, never fatal.

mod repo;
mod sources;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::repo::{extract_repo_candidates, ingest_repo_document, readme_first_paragraph, RepoDocument};

use crate::Timestamp;

pub const RAW_SCHEMA: &str = "observatory-raw/1";
pub const REJECT_SCHEMA: &str = "observatory-rejects/1";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("unreadable document: {0}")]
    UnreadableDocument(String),
    #[error("unknown source `{0}`")]
    UnknownSource(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Biotools,
    Bioconda,
    Bioconductor,
    Toolshed,
    Sourceforge,
    GalaxyEu,
    Github,
}

impl SourceKind {
    pub const ALL: [SourceKind; 7] = [
        SourceKind::Biotools,
        SourceKind::Bioconda,
        SourceKind::Bioconductor,
        SourceKind::Toolshed,
        SourceKind::Sourceforge,
        SourceKind::GalaxyEu,
        SourceKind::Github,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Biotools => "biotools",
            SourceKind::Bioconda => "bioconda",
            SourceKind::Bioconductor => "bioconductor",
            SourceKind::Toolshed => "toolshed",
            SourceKind::Sourceforge => "sourceforge",
            SourceKind::GalaxyEu => "galaxy_eu",
            SourceKind::Github => "github",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| IngestError::UnknownSource(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PubKind {
    Doi,
    Pmid,
    Pmcid,
}

impl PubKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PubKind::Doi => "doi",
            PubKind::Pmid => "pmid",
            PubKind::Pmcid => "pmcid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PublicationId {
    pub kind: PubKind,
    pub value: String,
}

impl fmt::Display for PublicationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocLink {
    pub label: String,
    pub url: String,
}

/// One software entry as harvested from a single source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub source: SourceKind,
    pub source_id: String,
    pub name_raw: String,
    pub type_raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub webpages: Vec<String>,
    #[serde(default)]
    pub repositories: Vec<String>,
    #[serde(default)]
    pub licenses_raw: Vec<String>,
    #[serde(default)]
    pub input_formats_raw: Vec<String>,
    #[serde(default)]
    pub output_formats_raw: Vec<String>,
    #[serde(default)]
    pub authors_raw: Vec<String>,
    #[serde(default)]
    pub publication_ids: Vec<PublicationId>,
    #[serde(default)]
    pub documentation: Vec<DocLink>,
    #[serde(default)]
    pub download_links: Vec<String>,
    #[serde(default)]
    pub version_strings: Vec<String>,
    #[serde(default)]
    pub dependencies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests_declared: Option<bool>,
    #[serde(default)]
    pub collections: Vec<String>,
    pub retrieved_at: Timestamp,
}

impl RawRecord {
    /// A record carrying only identity fields.
    pub fn minimal(source: SourceKind, source_id: &str, name: &str, type_raw: &str) -> RawRecord {
        RawRecord {
            source,
            source_id: source_id.to_owned(),
            name_raw: name.to_owned(),
            type_raw: type_raw.to_owned(),
            description: None,
            webpages: vec![],
            repositories: vec![],
            licenses_raw: vec![],
            input_formats_raw: vec![],
            output_formats_raw: vec![],
            authors_raw: vec![],
            publication_ids: vec![],
            documentation: vec![],
            download_links: vec![],
            version_strings: vec![],
            dependencies: vec![],
            tests_declared: None,
            collections: vec![],
            retrieved_at: chrono::DateTime::UNIX_EPOCH,
        }
    }
}

/// Why one dump entry was not turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectReport {
    pub source: SourceKind,
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDump {
    pub records: Vec<RawRecord>,
    pub rejects: Vec<RejectReport>,
}

pub(crate) fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&chrono::Utc))
        .map_err(|e| format!("invalid retrieved_at `{s}`: {e}"))
}

/// Parses one source dump. `retrieved_at` stamps entries that carry no
/// timestamp of their own.
pub fn parse_dump(
    source: SourceKind,
    document: &[u8],
    retrieved_at: Timestamp,
) -> Result<ParsedDump, IngestError> {
    let entries: Vec<serde_json::Value> = serde_json::from_slice(document)
        .map_err(|e| IngestError::UnreadableDocument(e.to_string()))?;
    let mut out = ParsedDump::default();
    let mut ids = HashSet::new();
    for (index, entry) in entries.into_iter().enumerate() {
        let result = sources::parse_entry(source, entry, retrieved_at).and_then(|r| {
            if r.name_raw.trim().is_empty() {
                Err("missing name".to_owned())
            } else if r.source_id.trim().is_empty() {
                Err("missing identifier".to_owned())
            } else if !ids.insert(r.source_id.clone()) {
                Err(format!("duplicate source_id `{}`", r.source_id))
            } else {
                Ok(r)
            }
        });
        match result {
            Ok(r) => out.records.push(r),
            Err(reason) => out.rejects.push(RejectReport { source, index, reason }),
        }
    }
    Ok(out)
}
