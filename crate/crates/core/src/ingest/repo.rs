//! Secondary mining of linked code repositories.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{parse_timestamp, IngestError, RawRecord, SourceKind};
use crate::normalize::{normalize_url, HostRules, UrlKind};
use crate::Timestamp;

/// Repository-mining fixture: what a code host reports about one repository.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default)]
    pub license: Option<String>,
    #[serde(default)]
    pub readme: Option<String>,
    #[serde(default)]
    pub contributors: Vec<String>,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_at: Option<String>,
}

/// URLs of a record (webpages, repositories, documentation) that live on a
/// recognized code host, deduplicated by normalized form. Unparseable URLs
/// are skipped.
pub fn extract_repo_candidates(record: &RawRecord, hosts: &HostRules) -> Vec<String> {
    let mut seen = HashSet::new();
    record
        .webpages
        .iter()
        .chain(&record.repositories)
        .chain(record.documentation.iter().map(|d| &d.url))
        .filter_map(|raw| {
            let u = normalize_url(raw, hosts).ok()?;
            (u.host_class.is_some() && seen.insert(u.normalized)).then(|| raw.clone())
        })
        .collect()
}

/// First prose paragraph of a README: headings, badges and HTML lines skipped.
pub fn readme_first_paragraph(readme: &str) -> Option<String> {
    let mut para: Vec<&str> = Vec::new();
    for line in readme.lines() {
        let l = line.trim();
        let decoration = l.starts_with('#')
            || l.starts_with("![")
            || l.starts_with("[![")
            || l.starts_with('<')
            || l.starts_with("===")
            || l.starts_with("---");
        if l.is_empty() || decoration {
            if !para.is_empty() {
                break;
            }
            continue;
        }
        para.push(l);
    }
    let text = para.join(" ");
    (!text.is_empty()).then_some(text)
}

pub(super) fn record_from_repo(
    repo_url: &str,
    doc: RepoDocument,
    hosts: &HostRules,
    default_ts: Timestamp,
) -> Result<RawRecord, String> {
    let url = normalize_url(repo_url, hosts).map_err(|e| e.to_string())?;
    if url.kind != UrlKind::Repository {
        return Err(format!("`{repo_url}` is not a repository url"));
    }
    let name = doc
        .name
        .clone()
        .filter(|n| !n.trim().is_empty())
        .or_else(|| {
            // original casing of the last path segment
            let tail = repo_url.trim_end_matches('/').trim_end_matches(".git");
            tail.rsplit('/').next().map(str::to_owned)
        })
        .ok_or("missing name")?;
    let mut r = RawRecord::minimal(SourceKind::Github, &url.normalized, &name, doc.kind.as_deref().unwrap_or(""));
    r.retrieved_at = match doc.retrieved_at {
        Some(s) => parse_timestamp(&s)?,
        None => default_ts,
    };
    r.repositories.push(repo_url.to_owned());
    r.licenses_raw.extend(doc.license.filter(|l| !l.trim().is_empty()));
    r.description = doc.readme.as_deref().and_then(readme_first_paragraph);
    let mut seen = HashSet::new();
    r.authors_raw = doc
        .contributors
        .into_iter()
        .filter(|c| !c.trim().is_empty() && seen.insert(c.trim().to_lowercase()))
        .collect();
    r.collections = doc.topics;
    Ok(r)
}

/// Builds a `github` record from a mined repository document.
pub fn ingest_repo_document(
    repo_url: &str,
    repo_document: &[u8],
    hosts: &HostRules,
    retrieved_at: Timestamp,
) -> Result<RawRecord, IngestError> {
    let doc: RepoDocument = serde_json::from_slice(repo_document)
        .map_err(|e| IngestError::UnreadableDocument(e.to_string()))?;
    record_from_repo(repo_url, doc, hosts, retrieved_at).map_err(IngestError::UnreadableDocument)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::Tables;

    fn hosts() -> &'static HostRules {
        &Tables::bundled().hosts
    }

    fn ts() -> Timestamp {
        "2025-01-01T00:00:00Z".parse().unwrap()
    }

    #[test]
    fn candidates_are_code_host_urls_only() {
        let mut r = RawRecord::minimal(SourceKind::Biotools, "x", "x", "cmd");
        r.webpages = vec!["https://github.com/a/b".into(), "http://x.org".into()];
        assert_eq!(extract_repo_candidates(&r, hosts()), vec!["https://github.com/a/b"]);
    }

    #[test]
    fn candidates_deduplicated() {
        let mut r = RawRecord::minimal(SourceKind::Biotools, "x", "x", "cmd");
        r.webpages = vec!["https://github.com/a/b".into()];
        r.repositories = vec!["https://github.com/A/B.git".into(), "ht!tp::bad".into()];
        assert_eq!(extract_repo_candidates(&r, hosts()).len(), 1);
        let empty = RawRecord::minimal(SourceKind::Biotools, "x", "x", "cmd");
        assert!(extract_repo_candidates(&empty, hosts()).is_empty());
    }

    #[test]
    fn repo_document_to_record() {
        let doc = br##"{"license":"MIT","contributors":["Jane Doe","jane doe","Bob"],"readme":"# ToolY\n\n[![ci](x)](y)\n\nToolY aligns reads\nquickly.\n\nMore text."}"##;
        let r = ingest_repo_document("https://github.com/j/tooly", doc, hosts(), ts()).unwrap();
        assert_eq!(r.source, SourceKind::Github);
        assert_eq!(r.source_id, "github.com/j/tooly");
        assert_eq!(r.licenses_raw, vec!["MIT"]);
        assert_eq!(r.authors_raw, vec!["Jane Doe", "Bob"]);
        assert_eq!(r.description.as_deref(), Some("ToolY aligns reads quickly."));
        assert_eq!(r.name_raw, "tooly");
    }

    #[test]
    fn empty_readme_means_no_description() {
        let doc = br#"{"license":null,"readme":"","contributors":[]}"#;
        let r = ingest_repo_document("https://github.com/j/tooly", doc, hosts(), ts()).unwrap();
        assert_eq!(r.description, None);
        assert!(r.licenses_raw.is_empty());
    }

    #[test]
    fn unreadable_or_not_a_repo() {
        assert!(ingest_repo_document("https://github.com/j/tooly", b"nope", hosts(), ts()).is_err());
        assert!(ingest_repo_document("https://x.org/j/tooly", b"{}", hosts(), ts()).is_err());
    }
}
