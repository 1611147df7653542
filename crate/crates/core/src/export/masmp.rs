use serde_json::{json, Map, Value};

use super::ExportError;
use crate::disambiguate::MergedTool;
use crate::ingest::{PubKind, SourceKind};
use crate::normalize::{AgentKind, UrlKind};

pub const SCHEMA_ORG: &str = "https://schema.org";

/// Properties emitted besides JSON-LD keywords; all are schema.org terms.
const TERMS: &[&str] = &[
    "additionalType", "author", "citation", "codeRepository", "description", "downloadUrl", "email",
    "identifier", "keywords", "license", "name", "programmingLanguage", "softwareRequirements",
    "softwareVersion", "url",
];

fn citation_url(kind: PubKind, value: &str) -> String {
    match kind {
        PubKind::Doi => format!("https://doi.org/{value}"),
        PubKind::Pmid => format!("https://pubmed.ncbi.nlm.nih.gov/{value}"),
        PubKind::Pmcid => format!("https://www.ncbi.nlm.nih.gov/pmc/articles/{value}"),
    }
}

/// schema.org / CodeMeta-aligned JSON-LD description of a tool.
pub fn to_masmp(tool: &MergedTool) -> Result<Value, ExportError> {
    if tool.name.trim().is_empty() {
        return Err(ExportError::MissingName);
    }
    let mut doc = Map::new();
    doc.insert("@context".into(), json!(SCHEMA_ORG));
    let ty = if tool.software_type.is_deployable() { "SoftwareApplication" } else { "SoftwareSourceCode" };
    doc.insert("@type".into(), json!(ty));
    doc.insert("identifier".into(), json!(tool.tool_id));
    doc.insert("name".into(), json!(tool.name.trim()));
    doc.insert("additionalType".into(), json!(tool.software_type.as_str()));
    if let Some(d) = &tool.description {
        doc.insert("description".into(), json!(d));
    }
    if let Some(u) = tool.urls.iter().find(|u| u.kind == UrlKind::Webpage) {
        doc.insert("url".into(), json!(u.absolute()));
    }
    if let Some(u) = tool.repository_urls().next() {
        doc.insert("codeRepository".into(), json!(u.absolute()));
    }
    let licenses: Vec<Value> = tool
        .licenses
        .iter()
        .map(|l| match &l.spdx_id {
            Some(id) => json!(format!("https://spdx.org/licenses/{id}")),
            None => json!(l.raw),
        })
        .collect();
    match licenses.len() {
        0 => {}
        1 => {
            doc.insert("license".into(), licenses[0].clone());
        }
        _ => {
            doc.insert("license".into(), Value::Array(licenses));
        }
    }
    if !tool.agents.is_empty() {
        let authors: Vec<Value> = tool
            .agents
            .iter()
            .map(|a| {
                let mut m = Map::new();
                let ty = match a.kind {
                    AgentKind::Person => "Person",
                    AgentKind::Organization => "Organization",
                };
                m.insert("@type".into(), json!(ty));
                m.insert("name".into(), json!(a.name));
                if let Some(e) = &a.email {
                    m.insert("email".into(), json!(e));
                }
                Value::Object(m)
            })
            .collect();
        doc.insert("author".into(), Value::Array(authors));
    }
    if let Some(v) = tool.versions.first() {
        doc.insert("softwareVersion".into(), json!(v));
    }
    if tool.source_kinds().contains(&SourceKind::Bioconductor) {
        doc.insert("programmingLanguage".into(), json!("R"));
    }
    if !tool.publications.is_empty() {
        let cites: Vec<Value> = tool.publications.iter().map(|p| json!(citation_url(p.kind, &p.value))).collect();
        doc.insert("citation".into(), Value::Array(cites));
    }
    if let Some(d) = tool.downloads.first() {
        doc.insert("downloadUrl".into(), json!(d));
    }
    if !tool.dependencies.is_empty() {
        doc.insert("softwareRequirements".into(), json!(tool.dependencies));
    }
    if !tool.collections.is_empty() {
        doc.insert("keywords".into(), json!(tool.collections));
    }
    Ok(Value::Object(doc))
}

fn context_has_schema_org(ctx: &Value) -> bool {
    match ctx {
        Value::String(s) => s.trim_end_matches('/') == SCHEMA_ORG,
        Value::Array(items) => items.iter().any(context_has_schema_org),
        _ => false,
    }
}

/// Expands every property to its absolute IRI under the schema.org
/// vocabulary, failing on anything that is not a known term or keyword.
fn expand(node: &Value, path: &str, problems: &mut Vec<String>) -> Value {
    match node {
        Value::Object(m) => {
            let mut out = Map::new();
            for (k, v) in m {
                let here = format!("{path}/{k}");
                if k == "@context" {
                    continue;
                }
                if k.starts_with('@') {
                    if !matches!(k.as_str(), "@type" | "@id") {
                        problems.push(format!("{here}: unsupported keyword"));
                    }
                    if k == "@type" && !v.is_string() {
                        problems.push(format!("{here}: @type must be a string"));
                    }
                    out.insert(k.clone(), v.clone());
                } else if TERMS.contains(&k.as_str()) {
                    out.insert(format!("{SCHEMA_ORG}/{k}"), expand(v, &here, problems));
                } else {
                    problems.push(format!("{here}: not a schema.org term used by this profile"));
                }
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(
            items
                .iter()
                .enumerate()
                .map(|(i, v)| expand(v, &format!("{path}[{i}]"), problems))
                .collect(),
        ),
        other => other.clone(),
    }
}

fn compact(node: &Value) -> Value {
    match node {
        Value::Object(m) => Value::Object(
            m.iter()
                .map(|(k, v)| {
                    let short = k.strip_prefix(&format!("{SCHEMA_ORG}/")).unwrap_or(k).to_owned();
                    (short, compact(v))
                })
                .collect(),
        ),
        Value::Array(items) => Value::Array(items.iter().map(compact).collect()),
        other => other.clone(),
    }
}

/// Structural JSON-LD check: parses, carries the schema.org context, has a
/// node type, and survives expansion and compaction without loss. License
/// IRIs must point at the SPDX list.
pub fn validate_masmp(text: &str) -> Result<(), Vec<String>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| vec![format!("not JSON: {e}")])?;
    let Some(obj) = doc.as_object() else {
        return Err(vec!["top level is not an object".into()]);
    };
    let mut problems = Vec::new();
    if !obj.get("@context").is_some_and(context_has_schema_org) {
        problems.push("@context must include https://schema.org".into());
    }
    match obj.get("@type").and_then(Value::as_str) {
        Some("SoftwareApplication" | "SoftwareSourceCode") => {}
        other => problems.push(format!("unexpected @type {other:?}")),
    }
    if !obj.get("name").and_then(Value::as_str).is_some_and(|s| !s.is_empty()) {
        problems.push("name is required".into());
    }
    let licenses: Vec<&Value> = match obj.get("license") {
        Some(Value::Array(a)) => a.iter().collect(),
        Some(v) => vec![v],
        None => vec![],
    };
    for l in licenses {
        if let Some(s) = l.as_str() {
            if s.starts_with("http") && !s.starts_with("https://spdx.org/licenses/") {
                problems.push(format!("license IRI {s} is not an SPDX license URL"));
            }
        }
    }
    let expanded = expand(&doc, "", &mut problems);
    let mut round = compact(&expanded);
    if let (Some(ctx), Value::Object(m)) = (obj.get("@context"), &mut round) {
        m.insert("@context".into(), ctx.clone());
    }
    if round != doc {
        problems.push("expansion/compaction round trip changed the document".into());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}
