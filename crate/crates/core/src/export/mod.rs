//! Citation File Format, maSMP JSON-LD and pull-request payloads for merged
//! tools and Evaluator drafts.

mod cff;
mod masmp;
mod pr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::cff::{parse_cff, to_cff, validate_cff, CffAuthor, CffDocument, CffIdentifier, CFF_VERSION};
pub use self::masmp::{to_masmp, validate_masmp, SCHEMA_ORG};
pub use self::pr::{pr_payload, submit_change, write_dry_run, ChangeFile, ChangeRequest, Submission, BRANCH_PREFIX};

use crate::disambiguate::MergedTool;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("tool has no name")]
    MissingName,
    #[error("tool has no authors; CFF requires at least one")]
    MissingAuthors,
    #[error("tool has no repository URL{}", .0.as_deref().map(|r| format!(" matching {r}")).unwrap_or_default())]
    NoRepository(Option<String>),
    #[error("unknown export format `{0}`")]
    UnknownFormat(String),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("submission failed: {0}")]
    Transport(#[from] crate::enrich::TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Cff,
    Masmp,
}

impl ExportFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ExportFormat::Cff => "cff",
            ExportFormat::Masmp => "masmp",
        }
    }

    /// File written at the repository root.
    pub fn file_name(self) -> &'static str {
        match self {
            ExportFormat::Cff => "CITATION.cff",
            ExportFormat::Masmp => "masmp.jsonld",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            ExportFormat::Cff => "application/x-yaml; charset=utf-8",
            ExportFormat::Masmp => "application/ld+json",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExportFormat {
    type Err = ExportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cff" => Ok(ExportFormat::Cff),
            "masmp" => Ok(ExportFormat::Masmp),
            other => Err(ExportError::UnknownFormat(other.to_owned())),
        }
    }
}

/// The exact bytes of an export. The CLI and the HTTP API both call this.
pub fn export_document(tool: &MergedTool, format: ExportFormat) -> Result<String, ExportError> {
    match format {
        ExportFormat::Cff => Ok(to_cff(tool)?.render()),
        ExportFormat::Masmp => Ok(crate::layer::canonical_json_pretty(&to_masmp(tool)?)),
    }
}

/// `Jane Doe` → (`Jane`, `Doe`); `Doe, Jane` → (`Jane`, `Doe`); one word is a family name.
pub(crate) fn split_person_name(name: &str) -> (Option<String>, String) {
    let name = name.trim();
    if let Some((family, given)) = name.split_once(',') {
        let given = given.trim();
        return ((!given.is_empty()).then(|| given.to_owned()), family.trim().to_owned());
    }
    match name.rsplit_once(char::is_whitespace) {
        Some((given, family)) => (Some(given.trim().to_owned()), family.to_owned()),
        None => (None, name.to_owned()),
    }
}
