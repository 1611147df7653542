//! Harmonization of raw registry records into [`Instance`]s.

mod agent;
mod license;
mod name;
mod terms;
mod url;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use self::agent::{classify_agent, Agent, AgentKind};
pub use self::license::{fold_license, map_license, LicenseFamily, LicenseRef, LicenseTable};
pub use self::name::normalize_name;
pub use self::terms::{map_format, TermRef, TermTable};
pub use self::url::{normalize_url, CodeHost, HostClass, HostRules, RootRule, UrlKind, UrlRef};

use crate::ingest::{DocLink, PubKind, PublicationId, RawRecord, SourceKind};
use crate::Timestamp;

pub const NORMALIZED_SCHEMA: &str = "observatory-normalized/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error("name is empty after trimming")]
    EmptyName,
    #[error("agent is empty after trimming")]
    EmptyAgent,
    #[error("unparseable url `{0}`")]
    UnparseableUrl(String),
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{table} line {line}: {message}")]
    Row {
        table: &'static str,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("normalization rules: {0}")]
    Rules(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftwareType {
    Cmd,
    Lib,
    Web,
    Rest,
    Sparql,
    Soap,
    Workbench,
    Suite,
    Workflow,
    Plugin,
    Script,
    Db,
    Undefined,
}

impl SoftwareType {
    pub const ALL: [SoftwareType; 13] = [
        SoftwareType::Cmd,
        SoftwareType::Lib,
        SoftwareType::Web,
        SoftwareType::Rest,
        SoftwareType::Sparql,
        SoftwareType::Soap,
        SoftwareType::Workbench,
        SoftwareType::Suite,
        SoftwareType::Workflow,
        SoftwareType::Plugin,
        SoftwareType::Script,
        SoftwareType::Db,
        SoftwareType::Undefined,
    ];

    /// Network-reachable service types, subject to availability checks.
    pub fn is_deployable(self) -> bool {
        matches!(
            self,
            SoftwareType::Web
                | SoftwareType::Rest
                | SoftwareType::Sparql
                | SoftwareType::Soap
                | SoftwareType::Workbench
                | SoftwareType::Suite
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SoftwareType::Cmd => "cmd",
            SoftwareType::Lib => "lib",
            SoftwareType::Web => "web",
            SoftwareType::Rest => "rest",
            SoftwareType::Sparql => "sparql",
            SoftwareType::Soap => "soap",
            SoftwareType::Workbench => "workbench",
            SoftwareType::Suite => "suite",
            SoftwareType::Workflow => "workflow",
            SoftwareType::Plugin => "plugin",
            SoftwareType::Script => "script",
            SoftwareType::Db => "db",
            SoftwareType::Undefined => "undefined",
        }
    }

    /// Maps registry vocabulary onto the closed type set. Anything
    /// unrecognized becomes `Undefined`.
    pub fn from_raw(raw: &str) -> SoftwareType {
        let s = raw.trim().to_lowercase();
        match s.as_str() {
            "cmd" | "command-line tool" | "command line tool" | "command-line" | "cli" => SoftwareType::Cmd,
            "lib" | "library" => SoftwareType::Lib,
            "web" | "web application" | "webapp" | "bioinformatics portal" => SoftwareType::Web,
            "rest" | "web api" | "rest api" => SoftwareType::Rest,
            "sparql" | "sparql endpoint" => SoftwareType::Sparql,
            "soap" | "web service" => SoftwareType::Soap,
            "workbench" => SoftwareType::Workbench,
            "suite" => SoftwareType::Suite,
            "workflow" => SoftwareType::Workflow,
            "plugin" | "plug-in" => SoftwareType::Plugin,
            "script" => SoftwareType::Script,
            "db" | "database" | "database portal" => SoftwareType::Db,
            _ => SoftwareType::Undefined,
        }
    }
}

impl fmt::Display for SoftwareType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SoftwareType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SoftwareType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown software type `{s}`"))
    }
}

/// Identity of one normalized record. Ordering follows field order, which
/// keeps block membership listings grouped by name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceKey {
    pub canonical_name: String,
    pub software_type: SoftwareType,
    pub source: SourceKind,
    pub source_id: String,
}

impl InstanceKey {
    /// `source:source_id`, unique within a normalized store. Decision files
    /// refer to members by this string.
    pub fn member_ref(&self) -> String {
        format!("{}:{}", self.source, self.source_id)
    }
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.source_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub key: InstanceKey,
    pub name_raw: String,
    pub type_raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub urls: Vec<UrlRef>,
    pub licenses: Vec<LicenseRef>,
    pub input_formats: Vec<TermRef>,
    pub output_formats: Vec<TermRef>,
    pub agents: Vec<Agent>,
    pub publications: Vec<PublicationId>,
    pub documentation: Vec<DocLink>,
    pub downloads: Vec<String>,
    pub versions: Vec<String>,
    pub dependencies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests_declared: Option<bool>,
    pub collections: Vec<String>,
    pub retrieved_at: Timestamp,
}

impl Instance {
    pub fn canonical_name(&self) -> &str {
        &self.key.canonical_name
    }

    pub fn software_type(&self) -> SoftwareType {
        self.key.software_type
    }

    pub fn source(&self) -> SourceKind {
        self.key.source
    }

    /// Normalized repository and repository-like links.
    pub fn link_evidence(&self) -> impl Iterator<Item = &str> {
        self.urls
            .iter()
            .filter(|u| u.kind.is_link_evidence())
            .map(|u| u.normalized.as_str())
    }

    /// Re-wraps the instance as a raw record, for re-normalization.
    pub fn to_raw(&self) -> RawRecord {
        // URL kind depends only on the host, so every link can go back as a webpage.
        RawRecord {
            source: self.key.source,
            source_id: self.key.source_id.clone(),
            name_raw: self.name_raw.clone(),
            type_raw: self.type_raw.clone(),
            description: self.description.clone(),
            webpages: self.urls.iter().map(|u| u.raw.clone()).collect(),
            repositories: Vec::new(),
            licenses_raw: self.licenses.iter().map(|l| l.raw.clone()).collect(),
            input_formats_raw: self.input_formats.iter().map(|t| t.raw.clone()).collect(),
            output_formats_raw: self.output_formats.iter().map(|t| t.raw.clone()).collect(),
            authors_raw: self
                .agents
                .iter()
                .map(|a| match &a.email {
                    Some(e) if e != &a.name => format!("{} <{e}>", a.name),
                    _ => a.name.clone(),
                })
                .collect(),
            publication_ids: self.publications.clone(),
            documentation: self.documentation.clone(),
            download_links: self.downloads.clone(),
            version_strings: self.versions.clone(),
            dependencies: self.dependencies.clone(),
            tests_declared: self.tests_declared,
            collections: self.collections.clone(),
            retrieved_at: self.retrieved_at,
        }
    }
}

/// Configuration-backed rules: code hosts and organization keywords.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizeRules {
    pub org_keywords: Vec<String>,
    #[serde(rename = "code_host")]
    pub code_hosts: Vec<CodeHost>,
}

impl NormalizeRules {
    pub fn parse(text: &str) -> Result<Self, TableError> {
        toml::from_str(text).map_err(|e| TableError::Rules(e.to_string()))
    }
}

/// Every lookup table normalization needs, loaded once and shared read-only.
#[derive(Debug, Clone)]
pub struct Tables {
    pub licenses: LicenseTable,
    pub terms: TermTable,
    pub hosts: HostRules,
    pub org_keywords: Vec<String>,
}

const BUNDLED_FAMILIES: &str = include_str!("../../data/spdx_families.tsv");
const BUNDLED_SYNONYMS: &str = include_str!("../../data/spdx_synonyms.tsv");
const BUNDLED_EDAM: &str = include_str!("../../data/edam_labels.tsv");
const BUNDLED_RULES: &str = include_str!("../../data/normalize.toml");

fn read(path: &Path) -> Result<String, TableError> {
    std::fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl Tables {
    /// Tables shipped with the crate.
    pub fn bundled() -> &'static Tables {
        static BUNDLED: OnceLock<Tables> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            Tables::from_texts(BUNDLED_FAMILIES, BUNDLED_SYNONYMS, BUNDLED_EDAM, BUNDLED_RULES)
                .expect("bundled tables are valid")
        })
    }

    pub fn from_texts(
        families: &str,
        synonyms: &str,
        edam: &str,
        rules: &str,
    ) -> Result<Tables, TableError> {
        let rules = NormalizeRules::parse(rules)?;
        Ok(Tables {
            licenses: LicenseTable::parse(families, synonyms)?,
            terms: TermTable::parse(edam)?,
            hosts: HostRules { hosts: rules.code_hosts },
            org_keywords: rules.org_keywords,
        })
    }

    /// Loads tables from files; any path left `None` falls back to the bundled copy.
    pub fn load(
        families: Option<&Path>,
        synonyms: Option<&Path>,
        edam: Option<&Path>,
        rules: Option<&Path>,
    ) -> Result<Tables, TableError> {
        let text = |p: Option<&Path>, default: &str| -> Result<String, TableError> {
            p.map(read).unwrap_or_else(|| Ok(default.to_owned()))
        };
        Tables::from_texts(
            &text(families, BUNDLED_FAMILIES)?,
            &text(synonyms, BUNDLED_SYNONYMS)?,
            &text(edam, BUNDLED_EDAM)?,
            &text(rules, BUNDLED_RULES)?,
        )
    }
}

/// A field value dropped while cleansing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectNote {
    pub field: String,
    pub value: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cleansed {
    pub instance: Instance,
    pub notes: Vec<RejectNote>,
}

fn clean_strings(values: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    values
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty() && seen.insert(s.to_string()))
        .map(str::to_owned)
        .collect()
}

fn clean_publication(p: &PublicationId) -> Option<PublicationId> {
    let v = p.value.trim();
    let value = match p.kind {
        PubKind::Doi => {
            let lower = v.to_lowercase();
            let stripped = ["https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/", "doi:"]
                .iter()
                .find_map(|pre| lower.strip_prefix(pre).map(str::to_owned))
                .unwrap_or(lower);
            stripped.trim().to_owned()
        }
        PubKind::Pmid => v.to_owned(),
        PubKind::Pmcid => {
            let up = v.to_uppercase();
            if up.starts_with("PMC") { up } else { format!("PMC{up}") }
        }
    };
    (!value.is_empty() && value != "PMC").then_some(PublicationId { kind: p.kind, value })
}

/// Applies every normalization to one record. Unparseable URLs are dropped
/// and reported as notes; an empty name is an error.
pub fn cleanse(record: &RawRecord, tables: &Tables) -> Result<Cleansed, NormalizeError> {
    let canonical_name = normalize_name(&record.name_raw)?;
    let software_type = SoftwareType::from_raw(&record.type_raw);
    let mut notes = Vec::new();

    let mut urls: Vec<UrlRef> = Vec::new();
    for (field, raw) in record
        .webpages
        .iter()
        .map(|u| ("webpages", u))
        .chain(record.repositories.iter().map(|u| ("repositories", u)))
    {
        if raw.trim().is_empty() {
            continue;
        }
        match normalize_url(raw, &tables.hosts) {
            Ok(u) => {
                if !urls.iter().any(|x| x.normalized == u.normalized) {
                    urls.push(u);
                }
            }
            Err(e) => notes.push(RejectNote {
                field: field.into(),
                value: raw.clone(),
                reason: e.to_string(),
            }),
        }
    }

    let mut licenses: Vec<LicenseRef> = Vec::new();
    for raw in record.licenses_raw.iter().filter(|l| !l.trim().is_empty()) {
        let l = map_license(raw.trim(), &tables.licenses);
        let dup = licenses.iter().any(|x| match (&x.spdx_id, &l.spdx_id) {
            (Some(a), Some(b)) => a == b,
            _ => fold_license(&x.raw) == fold_license(&l.raw),
        });
        if !dup {
            licenses.push(l);
        }
    }

    let terms = |raws: &[String]| -> Vec<TermRef> {
        let mut out: Vec<TermRef> = Vec::new();
        for raw in raws.iter().filter(|r| !r.trim().is_empty()) {
            let t = map_format(raw.trim(), &tables.terms);
            let dup = out.iter().any(|x| match (&x.edam_id, &t.edam_id) {
                (Some(a), Some(b)) => a == b,
                _ => x.raw.to_lowercase() == t.raw.to_lowercase(),
            });
            if !dup {
                out.push(t);
            }
        }
        out
    };

    let mut agents: Vec<Agent> = Vec::new();
    for raw in &record.authors_raw {
        match classify_agent(raw, &tables.org_keywords) {
            Ok(a) => {
                if !agents.iter().any(|x| x.name.to_lowercase() == a.name.to_lowercase()) {
                    agents.push(a);
                }
            }
            Err(_) => continue,
        }
    }

    let mut publications: Vec<PublicationId> = Vec::new();
    for p in record.publication_ids.iter().filter_map(clean_publication) {
        if !publications.contains(&p) {
            publications.push(p);
        }
    }

    let mut documentation: Vec<DocLink> = Vec::new();
    let mut doc_keys = HashSet::new();
    for d in &record.documentation {
        let url = d.url.trim();
        if url.is_empty() {
            continue;
        }
        match normalize_url(url, &tables.hosts) {
            Ok(u) => {
                if doc_keys.insert(u.normalized) {
                    documentation.push(DocLink { label: d.label.trim().to_owned(), url: url.to_owned() });
                }
            }
            Err(e) => notes.push(RejectNote {
                field: "documentation".into(),
                value: d.url.clone(),
                reason: e.to_string(),
            }),
        }
    }

    let mut downloads = Vec::new();
    let mut dl_keys = HashSet::new();
    for raw in record.download_links.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match normalize_url(raw, &tables.hosts) {
            Ok(u) => {
                if dl_keys.insert(u.normalized) {
                    downloads.push(raw.to_owned());
                }
            }
            Err(e) => notes.push(RejectNote {
                field: "download_links".into(),
                value: raw.to_owned(),
                reason: e.to_string(),
            }),
        }
    }

    let instance = Instance {
        key: InstanceKey {
            canonical_name,
            software_type,
            source: record.source,
            source_id: record.source_id.clone(),
        },
        name_raw: record.name_raw.clone(),
        type_raw: record.type_raw.clone(),
        description: record
            .description
            .as_deref()
            .map(str::trim)
            .filter(|d| !d.is_empty())
            .map(str::to_owned),
        urls,
        licenses,
        input_formats: terms(&record.input_formats_raw),
        output_formats: terms(&record.output_formats_raw),
        agents,
        publications,
        documentation,
        downloads,
        versions: clean_strings(&record.version_strings),
        dependencies: clean_strings(&record.dependencies),
        tests_declared: record.tests_declared,
        collections: clean_strings(&record.collections),
        retrieved_at: record.retrieved_at,
    };
    Ok(Cleansed { instance, notes })
}
