//! Evaluator drafts: user-editable metadata that is scored and exported
//! without entering the merged collection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::disambiguate::{merge_group, MergedTool, Priority};
use crate::export::{parse_cff, CffAuthor};
use crate::ingest::{DocLink, PubKind, PublicationId, RawRecord, SourceKind};
use crate::normalize::{cleanse, Tables, UrlKind};
use crate::score::{fair_profile, Assertions, FairProfile, ScoreError, ScoringConfig, ScoringInput};
use crate::Timestamp;

/// Draft tool metadata in raw, editable form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftMetadata {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "type", default)]
    pub software_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub webpages: Vec<String>,
    #[serde(default)]
    pub repositories: Vec<String>,
    #[serde(default)]
    pub licenses: Vec<String>,
    #[serde(default)]
    pub input_formats: Vec<String>,
    #[serde(default)]
    pub output_formats: Vec<String>,
    #[serde(default)]
    pub authors: Vec<String>,
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
    #[serde(default)]
    pub collections: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests_present: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registration_required: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependencies_declared: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DraftError {
    #[error("draft failed validation")]
    Validation(Vec<FieldError>),
    #[error("unreadable document: {0}")]
    UnreadableDocument(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Score of a draft plus what would raise each indicator below 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub profile: FairProfile,
    pub guidance: BTreeMap<String, Vec<String>>,
    pub weights: BTreeMap<String, f64>,
}

impl DraftMetadata {
    pub fn named(name: &str, software_type: &str) -> DraftMetadata {
        DraftMetadata { name: name.into(), software_type: software_type.into(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push(FieldError { field: "name".into(), message: "name must not be empty".into() });
        }
        if self.software_type.trim().is_empty() {
            errs.push(FieldError { field: "type".into(), message: "type must not be empty".into() });
        }
        for (i, u) in self.webpages.iter().chain(&self.repositories).enumerate() {
            if u.trim().is_empty() {
                errs.push(FieldError { field: format!("urls[{i}]"), message: "empty URL".into() });
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn assertions(&self) -> Assertions {
        Assertions {
            tests_present: self.tests_present,
            registration_required: self.registration_required,
            dependencies_declared: self.dependencies_declared,
        }
    }

    fn to_record(&self) -> RawRecord {
        let mut r = RawRecord::minimal(SourceKind::Github, "draft", self.name.trim(), self.software_type.trim());
        r.description = self.description.clone().filter(|d| !d.trim().is_empty());
        r.webpages = self.webpages.clone();
        r.repositories = self.repositories.clone();
        r.licenses_raw = self.licenses.clone();
        r.input_formats_raw = self.input_formats.clone();
        r.output_formats_raw = self.output_formats.clone();
        r.authors_raw = self.authors.clone();
        r.publication_ids = self.publications.clone();
        r.documentation = self.documentation.clone();
        r.download_links = self.downloads.clone();
        r.version_strings = self.versions.clone();
        r.dependencies = self.dependencies.clone();
        r.tests_declared = self.tests_present;
        r.collections = self.collections.clone();
        r
    }

    /// Normalizes the draft into a merged-tool shape with no source members.
    pub fn to_tool(&self, tables: &Tables) -> Result<MergedTool, DraftError> {
        self.validate().map_err(DraftError::Validation)?;
        let cleansed = cleanse(&self.to_record(), tables).map_err(|e| {
            DraftError::Validation(vec![FieldError { field: "name".into(), message: e.to_string() }])
        })?;
        let mut tool = merge_group(&[&cleansed.instance], &Priority::default())
            .map_err(|e| DraftError::UnreadableDocument(e.to_string()))?;
        tool.sources.clear();
        tool.members.clear();
        tool.field_provenance.clear();
        Ok(tool)
    }

    /// Prefill from a merged record.
    pub fn from_tool(tool: &MergedTool) -> DraftMetadata {
        let (repos, pages): (Vec<_>, Vec<_>) = tool.urls.iter().partition(|u| u.kind != UrlKind::Webpage);
        DraftMetadata {
            name: tool.name.clone(),
            software_type: tool.software_type.as_str().into(),
            description: tool.description.clone(),
            webpages: pages.into_iter().map(|u| u.raw.clone()).collect(),
            repositories: repos.into_iter().map(|u| u.raw.clone()).collect(),
            licenses: tool.licenses.iter().map(|l| l.spdx_id.clone().unwrap_or_else(|| l.raw.clone())).collect(),
            input_formats: tool.input_formats.iter().map(|t| t.raw.clone()).collect(),
            output_formats: tool.output_formats.iter().map(|t| t.raw.clone()).collect(),
            authors: tool
                .agents
                .iter()
                .map(|a| match &a.email {
                    Some(e) => format!("{} <{e}>", a.name),
                    None => a.name.clone(),
                })
                .collect(),
            publications: tool.publications.clone(),
            documentation: tool.documentation.clone(),
            downloads: tool.downloads.clone(),
            versions: tool.versions.clone(),
            dependencies: tool.dependencies.clone(),
            collections: tool.collections.clone(),
            tests_present: tool.tests_declared,
            registration_required: None,
            dependencies_declared: None,
        }
    }

    /// Prefill from a harvested record, such as a mined repository.
    pub fn from_record(r: &RawRecord) -> DraftMetadata {
        DraftMetadata {
            name: r.name_raw.clone(),
            software_type: r.type_raw.clone(),
            description: r.description.clone(),
            webpages: r.webpages.clone(),
            repositories: r.repositories.clone(),
            licenses: r.licenses_raw.clone(),
            input_formats: r.input_formats_raw.clone(),
            output_formats: r.output_formats_raw.clone(),
            authors: r.authors_raw.clone(),
            publications: r.publication_ids.clone(),
            documentation: r.documentation.clone(),
            downloads: r.download_links.clone(),
            versions: r.version_strings.clone(),
            dependencies: r.dependencies.clone(),
            collections: r.collections.clone(),
            tests_present: r.tests_declared,
            registration_required: None,
            dependencies_declared: None,
        }
    }

    /// Parses an uploaded CFF, maSMP JSON-LD, raw record or draft document.
    pub fn from_upload(text: &str) -> Result<DraftMetadata, DraftError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let v: Value =
                serde_json::from_str(text).map_err(|e| DraftError::UnreadableDocument(e.to_string()))?;
            if v.get("@context").is_some() {
                return Ok(from_masmp(&v));
            }
            if v.get("name_raw").is_some() {
                let r: RawRecord =
                    serde_json::from_value(v).map_err(|e| DraftError::UnreadableDocument(e.to_string()))?;
                return Ok(DraftMetadata::from_record(&r));
            }
            return serde_json::from_value(v).map_err(|e| DraftError::UnreadableDocument(e.to_string()));
        }
        let cff = parse_cff(text).map_err(|e| DraftError::UnreadableDocument(e.to_string()))?;
        let mut d = DraftMetadata::named(&cff.title, cff.kind.as_deref().unwrap_or("cmd"));
        d.description = cff.abstract_;
        d.licenses = cff.license.into_iter().collect();
        d.repositories = cff.repository_code.into_iter().collect();
        d.webpages = cff.url.into_iter().collect();
        d.versions = cff.version.into_iter().collect();
        d.collections = cff.keywords;
        d.authors = cff
            .authors
            .into_iter()
            .map(|a| match a {
                CffAuthor::Person { given_names, family_names, email } => {
                    let n = match given_names {
                        Some(g) => format!("{g} {family_names}"),
                        None => family_names,
                    };
                    with_email(n, email)
                }
                CffAuthor::Entity { name, email } => with_email(name, email),
            })
            .collect();
        for id in cff.identifiers {
            if id.kind == "doi" {
                d.publications.push(PublicationId { kind: PubKind::Doi, value: id.value });
            }
        }
        Ok(d)
    }
}

fn with_email(name: String, email: Option<String>) -> String {
    match email {
        Some(e) => format!("{name} <{e}>"),
        None => name,
    }
}

fn strings(v: Option<&Value>) -> Vec<String> {
    match v {
        Some(Value::String(s)) => vec![s.clone()],
        Some(Value::Array(items)) => items.iter().filter_map(|i| i.as_str().map(str::to_owned)).collect(),
        _ => Vec::new(),
    }
}

fn from_masmp(v: &Value) -> DraftMetadata {
    let s = |k: &str| v.get(k).and_then(Value::as_str).map(str::to_owned);
    let mut d = DraftMetadata::named(
        &s("name").unwrap_or_default(),
        &s("additionalType").unwrap_or_else(|| "cmd".into()),
    );
    d.description = s("description");
    d.webpages = strings(v.get("url"));
    d.repositories = strings(v.get("codeRepository"));
    d.licenses = strings(v.get("license"))
        .into_iter()
        .map(|l| l.strip_prefix("https://spdx.org/licenses/").map(str::to_owned).unwrap_or(l))
        .collect();
    d.versions = strings(v.get("softwareVersion"));
    d.downloads = strings(v.get("downloadUrl"));
    d.dependencies = strings(v.get("softwareRequirements"));
    d.collections = strings(v.get("keywords"));
    if let Some(Value::Array(authors)) = v.get("author") {
        d.authors = authors
            .iter()
            .filter_map(|a| {
                let name = a.get("name")?.as_str()?.to_owned();
                Some(with_email(name, a.get("email").and_then(Value::as_str).map(str::to_owned)))
            })
            .collect();
    }
    for c in strings(v.get("citation")) {
        if let Some(doi) = c.strip_prefix("https://doi.org/") {
            d.publications.push(PublicationId { kind: PubKind::Doi, value: doi.into() });
        }
    }
    d
}

/// Stateless scoring of a draft.
pub fn evaluate_draft(
    draft: &DraftMetadata,
    tables: &Tables,
    config: &ScoringConfig,
    at: Timestamp,
) -> Result<Evaluation, DraftError> {
    let tool = draft.to_tool(tables)?;
    let input = ScoringInput { tool: &tool, availability: &[], identity_count: 1, assertions: draft.assertions() };
    let profile = fair_profile(&input, config, at)?;
    let guidance = profile
        .indicators
        .iter()
        .filter(|i| !i.guidance.is_empty())
        .map(|i| (i.id.clone(), i.guidance.clone()))
        .collect();
    let weights = config.indicators.iter().map(|s| (s.id.clone(), s.weight)).collect();
    Ok(Evaluation { profile, guidance, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::Principle;

    fn at() -> Timestamp {
        "2026-01-01T00:00:00Z".parse().unwrap()
    }

    #[test]
    fn license_guidance_and_monotone_r() {
        let t = Tables::bundled();
        let c = ScoringConfig::bundled();
        let mut d = DraftMetadata::named("tooly", "cmd");
        let before = evaluate_draft(&d, t, &c, at()).unwrap();
        assert_eq!(before.profile.indicator("R2").unwrap().value, 0.0);
        assert_eq!(before.guidance["R2"], vec!["add a license (SPDX identifier preferred)".to_string()]);
        d.licenses.push("MIT".into());
        let after = evaluate_draft(&d, t, &c, at()).unwrap();
        assert_eq!(after.profile.indicator("R2").unwrap().value, 1.0);
        assert!(after.profile.principle(Principle::R) > before.profile.principle(Principle::R));
        assert!(!after.guidance.contains_key("R2"));
    }

    #[test]
    fn missing_name_is_a_field_error() {
        let d = DraftMetadata::named("  ", "cmd");
        match evaluate_draft(&d, Tables::bundled(), &ScoringConfig::bundled(), at()) {
            Err(DraftError::Validation(errs)) => assert_eq!(errs[0].field, "name"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<DraftMetadata, _> = serde_json::from_str(r#"{"name":"x","type":"cmd","colour":"red"}"#);
        assert!(r.is_err());
    }

    #[test]
    fn evaluation_is_repeatable() {
        let d = DraftMetadata::named("tooly", "lib");
        let a = evaluate_draft(&d, Tables::bundled(), &ScoringConfig::bundled(), at()).unwrap();
        let b = evaluate_draft(&d, Tables::bundled(), &ScoringConfig::bundled(), at()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn cff_upload_round_trips_core_fields() {
        let mut d = DraftMetadata::named("Tooly", "cmd");
        d.authors = vec!["Jane Doe".into()];
        d.licenses = vec!["MIT".into()];
        d.repositories = vec!["https://github.com/j/tooly".into()];
        let tool = d.to_tool(Tables::bundled()).unwrap();
        let text = crate::export::export_document(&tool, crate::export::ExportFormat::Cff).unwrap();
        let back = DraftMetadata::from_upload(&text).unwrap();
        assert_eq!(back.name, "Tooly");
        assert_eq!(back.licenses, vec!["MIT".to_string()]);
        assert_eq!(back.authors, vec!["Jane Doe".to_string()]);
        assert_eq!(back.repositories, vec!["https://github.com/j/tooly".to_string()]);
    }
}
