use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{split_person_name, ExportError};
use crate::disambiguate::MergedTool;
use crate::ingest::PubKind;
use crate::normalize::{AgentKind, Tables, UrlKind};

pub const CFF_VERSION: &str = "1.2.0";
const MESSAGE: &str = "If you use this software, please cite it using the metadata from this file.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CffAuthor {
    Person {
        #[serde(rename = "given-names", default, skip_serializing_if = "Option::is_none")]
        given_names: Option<String>,
        #[serde(rename = "family-names")]
        family_names: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        email: Option<String>,
    },
    Entity {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        email: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CffIdentifier {
    #[serde(rename = "type")]
    pub kind: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// The subset of CFF 1.2.0 the observatory emits, in emission order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CffDocument {
    #[serde(rename = "cff-version")]
    pub cff_version: String,
    pub message: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub title: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_: Option<String>,
    pub authors: Vec<CffAuthor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    #[serde(rename = "repository-code", default, skip_serializing_if = "Option::is_none")]
    pub repository_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub identifiers: Vec<CffIdentifier>,
}

pub fn to_cff(tool: &MergedTool) -> Result<CffDocument, ExportError> {
    if tool.name.trim().is_empty() {
        return Err(ExportError::MissingName);
    }
    if tool.agents.is_empty() {
        return Err(ExportError::MissingAuthors);
    }
    let authors = tool
        .agents
        .iter()
        .map(|a| match a.kind {
            AgentKind::Person => {
                let (given, family) = split_person_name(&a.name);
                CffAuthor::Person { given_names: given, family_names: family, email: a.email.clone() }
            }
            AgentKind::Organization => CffAuthor::Entity { name: a.name.clone(), email: a.email.clone() },
        })
        .collect();
    let identifiers = tool
        .publications
        .iter()
        .map(|p| match p.kind {
            PubKind::Doi => CffIdentifier { kind: "doi".into(), value: p.value.clone(), description: None },
            k => CffIdentifier {
                kind: "other".into(),
                value: p.value.clone(),
                description: Some(k.as_str().to_owned()),
            },
        })
        .collect();
    Ok(CffDocument {
        cff_version: CFF_VERSION.into(),
        message: MESSAGE.into(),
        kind: Some("software".into()),
        title: tool.name.trim().to_owned(),
        abstract_: tool.description.clone(),
        authors,
        version: tool.versions.first().cloned(),
        license: tool.licenses.iter().find_map(|l| l.spdx_id.clone()),
        repository_code: tool.repository_urls().next().map(|u| u.absolute()),
        url: tool.urls.iter().find(|u| u.kind == UrlKind::Webpage).map(|u| u.absolute()),
        keywords: tool.collections.clone(),
        identifiers,
    })
}

fn q(s: &str) -> String {
    // JSON string syntax is valid YAML double-quoted scalar syntax.
    serde_json::to_string(s).expect("strings serialize")
}

impl CffDocument {
    /// YAML text: fixed key order, 2-space indentation, every string quoted,
    /// trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let kv = |out: &mut String, indent: &str, k: &str, v: &str| {
            let _ = writeln!(out, "{indent}{k}: {}", q(v));
        };
        kv(&mut out, "", "cff-version", &self.cff_version);
        kv(&mut out, "", "message", &self.message);
        if let Some(t) = &self.kind {
            kv(&mut out, "", "type", t);
        }
        kv(&mut out, "", "title", &self.title);
        if let Some(a) = &self.abstract_ {
            kv(&mut out, "", "abstract", a);
        }
        out.push_str("authors:\n");
        for a in &self.authors {
            let mut first = true;
            let mut field = |out: &mut String, k: &str, v: &str| {
                let lead = if first { "  - " } else { "    " };
                first = false;
                kv(out, lead, k, v);
            };
            match a {
                CffAuthor::Person { given_names, family_names, email } => {
                    field(&mut out, "family-names", family_names);
                    if let Some(g) = given_names {
                        field(&mut out, "given-names", g);
                    }
                    if let Some(e) = email {
                        field(&mut out, "email", e);
                    }
                }
                CffAuthor::Entity { name, email } => {
                    field(&mut out, "name", name);
                    if let Some(e) = email {
                        field(&mut out, "email", e);
                    }
                }
            }
        }
        for (k, v) in [
            ("version", &self.version),
            ("license", &self.license),
            ("repository-code", &self.repository_code),
            ("url", &self.url),
        ] {
            if let Some(v) = v {
                kv(&mut out, "", k, v);
            }
        }
        if !self.keywords.is_empty() {
            out.push_str("keywords:\n");
            for k in &self.keywords {
                let _ = writeln!(out, "  - {}", q(k));
            }
        }
        if !self.identifiers.is_empty() {
            out.push_str("identifiers:\n");
            for i in &self.identifiers {
                kv(&mut out, "  - ", "type", &i.kind);
                kv(&mut out, "    ", "value", &i.value);
                if let Some(d) = &i.description {
                    kv(&mut out, "    ", "description", d);
                }
            }
        }
        out
    }
}

pub fn parse_cff(text: &str) -> Result<CffDocument, ExportError> {
    serde_yaml::from_str(text).map_err(|e| ExportError::Invalid(e.to_string()))
}

const TOP_LEVEL_KEYS: &[&str] = &[
    "abstract", "authors", "cff-version", "commit", "contact", "date-released", "doi", "identifiers",
    "keywords", "license", "license-url", "message", "preferred-citation", "references", "repository",
    "repository-artifact", "repository-code", "title", "type", "url", "version",
];

const PERSON_KEYS: &[&str] = &[
    "address", "affiliation", "alias", "city", "country", "email", "family-names", "fax", "given-names",
    "name-particle", "name-suffix", "orcid", "post-code", "region", "tel", "website",
];

const ENTITY_KEYS: &[&str] = &[
    "address", "alias", "city", "country", "date-end", "date-start", "email", "fax", "location", "name",
    "orcid", "post-code", "region", "tel", "website",
];

/// Checks a document against the CFF 1.2.0 required keys and the shapes of
/// the keys used here. Returns every problem found.
pub fn validate_cff(text: &str) -> Result<(), Vec<String>> {
    let doc: serde_yaml::Value = match serde_yaml::from_str(text) {
        Ok(v) => v,
        Err(e) => return Err(vec![format!("not YAML: {e}")]),
    };
    let Some(map) = doc.as_mapping() else {
        return Err(vec!["top level is not a mapping".into()]);
    };
    let mut problems = Vec::new();
    let get = |k: &str| map.get(serde_yaml::Value::String(k.into()));
    for k in map.keys() {
        match k.as_str() {
            Some(k) if TOP_LEVEL_KEYS.contains(&k) => {}
            other => problems.push(format!("unknown key {other:?}")),
        }
    }
    match get("cff-version").and_then(|v| v.as_str()) {
        Some(CFF_VERSION) => {}
        other => problems.push(format!("cff-version must be \"{CFF_VERSION}\", found {other:?}")),
    }
    for k in ["message", "title"] {
        if !get(k).and_then(|v| v.as_str()).is_some_and(|s| !s.trim().is_empty()) {
            problems.push(format!("{k} must be a nonempty string"));
        }
    }
    match get("authors").and_then(|v| v.as_sequence()) {
        Some(authors) if !authors.is_empty() => {
            for (i, a) in authors.iter().enumerate() {
                let Some(a) = a.as_mapping() else {
                    problems.push(format!("authors[{i}] is not a mapping"));
                    continue;
                };
                let keys: Vec<&str> = a.keys().filter_map(|k| k.as_str()).collect();
                let allowed = if keys.contains(&"name") { ENTITY_KEYS } else { PERSON_KEYS };
                if keys.is_empty() {
                    problems.push(format!("authors[{i}] is empty"));
                }
                for k in keys {
                    if !allowed.contains(&k) {
                        problems.push(format!("authors[{i}] has unknown key {k}"));
                    }
                }
            }
        }
        _ => problems.push("authors must be a nonempty list".into()),
    }
    if let Some(t) = get("type") {
        if !matches!(t.as_str(), Some("software" | "dataset")) {
            problems.push("type must be software or dataset".into());
        }
    }
    if let Some(l) = get("license") {
        let table = &Tables::bundled().licenses;
        let ids: Vec<&serde_yaml::Value> = match l.as_sequence() {
            Some(seq) => seq.iter().collect(),
            None => vec![l],
        };
        for id in ids {
            if !id.as_str().is_some_and(|s| table.is_spdx_id(s)) {
                problems.push(format!("license {id:?} is not an SPDX identifier"));
            }
        }
    }
    for k in ["repository-code", "url", "repository", "repository-artifact", "license-url"] {
        if let Some(v) = get(k) {
            if !v.as_str().is_some_and(|s| s.starts_with("http://") || s.starts_with("https://")) {
                problems.push(format!("{k} must be an http(s) URL"));
            }
        }
    }
    if let Some(ids) = get("identifiers") {
        for (i, id) in ids.as_sequence().into_iter().flatten().enumerate() {
            let kind = id.get("type").and_then(|v| v.as_str());
            if !matches!(kind, Some("doi" | "url" | "swh" | "other")) {
                problems.push(format!("identifiers[{i}].type is invalid"));
            }
            if id.get("value").and_then(|v| v.as_str()).is_none() {
                problems.push(format!("identifiers[{i}].value missing"));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}
