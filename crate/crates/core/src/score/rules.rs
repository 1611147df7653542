//! The rule table. Each rule returns a value in [0,1], evidence naming the
//! fields that produced it, and guidance naming what would raise it.

use serde::{Deserialize, Serialize};

use super::ScoringInput;
use crate::ingest::SourceKind;
use crate::normalize::{SoftwareType, UrlKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    UniqueIdentity,
    StructuredMetadata,
    Discoverability,
    WorkingVersion,
    EInfrastructure,
    StandardFormats,
    Integration,
    Dependencies,
    UsageDocumentation,
    License,
    Credit,
    Versioning,
}

#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub value: f64,
    pub evidence: Vec<String>,
    pub guidance: Vec<String>,
}

impl Outcome {
    fn clause(&mut self, weight: f64, met: bool, evidence: impl Into<String>, guidance: impl Into<String>) {
        if met {
            self.value += weight;
            self.evidence.push(evidence.into());
        } else {
            self.guidance.push(guidance.into());
        }
    }
}

const REGISTRIES: [SourceKind; 6] = [
    SourceKind::Biotools,
    SourceKind::Bioconda,
    SourceKind::Bioconductor,
    SourceKind::Toolshed,
    SourceKind::GalaxyEu,
    SourceKind::Sourceforge,
];

fn on_e_infrastructure(input: &ScoringInput<'_>) -> bool {
    let kinds = input.tool.source_kinds();
    kinds.contains(&SourceKind::Toolshed) || kinds.contains(&SourceKind::GalaxyEu)
}

fn mapped_formats(terms: &[crate::normalize::TermRef]) -> usize {
    terms
        .iter()
        .filter(|t| t.edam_id.as_deref().is_some_and(|id| id.starts_with("format_")))
        .count()
}

pub(crate) fn evaluate(rule: RuleId, input: &ScoringInput<'_>) -> Outcome {
    let t = input.tool;
    let mut o = Outcome::default();
    match rule {
        RuleId::UniqueIdentity => {
            if input.identity_count <= 1 {
                o.value = 1.0;
                o.evidence.push(format!("name `{}` with type {} is unique", t.canonical_name, t.software_type));
            } else {
                o.value = 0.5;
                o.evidence.push(format!(
                    "name `{}` with type {} is shared by {} entries",
                    t.canonical_name, t.software_type, input.identity_count
                ));
                o.guidance.push("use a name that distinguishes this tool from others of the same type".into());
            }
        }
        RuleId::StructuredMetadata => {
            let has_desc = t.description.as_deref().is_some_and(|d| !d.trim().is_empty());
            o.clause(0.25, has_desc, "description", "add a description");
            let edam = t
                .input_formats
                .iter()
                .chain(&t.output_formats)
                .filter(|f| f.edam_id.is_some())
                .count();
            o.clause(
                0.25,
                edam > 0,
                format!("{edam} EDAM-mapped term(s)"),
                "describe inputs or outputs with EDAM terms",
            );
            o.clause(
                0.25,
                t.software_type != SoftwareType::Undefined,
                format!("software type {}", t.software_type),
                "state the software type",
            );
            let pages = t.urls.iter().filter(|u| u.kind == UrlKind::Webpage).count();
            o.clause(0.25, pages > 0, format!("{pages} webpage(s)"), "add a homepage URL");
        }
        RuleId::Discoverability => {
            o.clause(
                0.5,
                !t.publications.is_empty(),
                format!("{} linked publication(s)", t.publications.len()),
                "link a publication (DOI, PMID or PMCID)",
            );
            let registries: Vec<&str> = t
                .source_kinds()
                .into_iter()
                .filter(|s| REGISTRIES.contains(s))
                .map(|s| s.as_str())
                .collect();
            o.clause(
                0.5,
                !registries.is_empty(),
                format!("registered in {}", registries.join(", ")),
                "register the tool in a software registry such as bio.tools",
            );
        }
        RuleId::WorkingVersion => {
            if t.software_type.is_deployable() {
                let latest = input.availability.iter().map(|a| a.checked_at).max();
                let batch: Vec<_> = input
                    .availability
                    .iter()
                    .filter(|a| Some(a.checked_at) == latest)
                    .collect();
                match batch.iter().find(|a| a.ok) {
                    Some(a) => {
                        o.value = 1.0;
                        o.evidence.push(format!("service at {} responded", a.url.normalized));
                    }
                    None if batch.is_empty() => o.guidance.push("no availability check on record".into()),
                    None => o.guidance.push("the service did not respond at its last check; fix or update its URL".into()),
                }
            } else {
                o.clause(
                    0.5,
                    !t.downloads.is_empty(),
                    format!("{} download link(s)", t.downloads.len()),
                    "add a download link",
                );
                let install = t
                    .documentation
                    .iter()
                    .find(|d| d.label.to_lowercase().contains("install"));
                o.clause(
                    0.5,
                    install.is_some(),
                    format!("installation instructions at {}", install.map(|d| d.url.as_str()).unwrap_or_default()),
                    "add installation instructions",
                );
            }
        }
        RuleId::EInfrastructure => {
            o.clause(
                1.0,
                on_e_infrastructure(input),
                "available in a Galaxy instance",
                "make the tool available in an e-infrastructure such as Galaxy",
            );
        }
        RuleId::StandardFormats => {
            let (i, out) = (mapped_formats(&t.input_formats), mapped_formats(&t.output_formats));
            o.clause(0.5, i > 0, format!("{i} EDAM input format(s)"), "declare input formats using EDAM");
            o.clause(0.5, out > 0, format!("{out} EDAM output format(s)"), "declare output formats using EDAM");
        }
        RuleId::Integration => {
            let api = matches!(
                t.software_type,
                SoftwareType::Lib | SoftwareType::Rest | SoftwareType::Sparql | SoftwareType::Soap
            );
            if api {
                o.value = 1.0;
                o.evidence.push(format!("software type {} offers a programmatic interface", t.software_type));
            } else if on_e_infrastructure(input) {
                o.value = 1.0;
                o.evidence.push("integrated in a workflow platform".into());
            } else {
                o.guidance.push("offer a library or API, or publish the tool to a workflow platform".into());
            }
        }
        RuleId::Dependencies => {
            if !t.dependencies.is_empty() {
                o.value = 1.0;
                o.evidence.push(format!("{} dependencies", t.dependencies.len()));
            } else if input.assertions.dependencies_declared == Some(true) {
                o.value = 1.0;
                o.evidence.push("dependencies declared (asserted)".into());
            } else {
                o.guidance.push("declare dependencies".into());
            }
        }
        RuleId::UsageDocumentation => {
            o.clause(
                1.0,
                !t.documentation.is_empty(),
                format!("{} documentation link(s)", t.documentation.len()),
                "add usage documentation",
            );
        }
        RuleId::License => {
            if let Some(id) = t.licenses.iter().find_map(|l| l.spdx_id.as_deref()) {
                o.value = 1.0;
                o.evidence.push(format!("license {id}"));
            } else if let Some(l) = t.licenses.first() {
                o.value = 0.5;
                o.evidence.push(format!("license `{}` (not an SPDX identifier)", l.raw));
                o.guidance.push("use an SPDX identifier for the license".into());
            } else {
                o.guidance.push("add a license (SPDX identifier preferred)".into());
            }
        }
        RuleId::Credit => {
            o.clause(
                1.0,
                !t.agents.is_empty(),
                format!("{} author(s)", t.agents.len()),
                "list the authors",
            );
        }
        RuleId::Versioning => {
            let repo = t.repository_urls().next();
            o.clause(
                0.5,
                repo.is_some(),
                format!("repository {}", repo.map(|u| u.normalized.as_str()).unwrap_or_default()),
                "link a version-controlled source repository",
            );
            o.clause(
                0.5,
                !t.versions.is_empty(),
                format!("version {}", t.versions.first().map(String::as_str).unwrap_or_default()),
                "state a version",
            );
        }
    }
    o
}
