use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{export_document, ExportError, ExportFormat};
use crate::disambiguate::MergedTool;
use crate::enrich::Transport;
use crate::layer::{canonical_json_pretty, write_atomic};
use crate::normalize::{normalize_url, Tables};

pub const BRANCH_PREFIX: &str = "observatory/metadata-update-";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeFile {
    pub path: String,
    pub content: String,
}

/// A pull request against a tool's repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRequest {
    /// Normalized repository path, e.g. `github.com/owner/repo`.
    pub repo: String,
    pub branch: String,
    pub files: Vec<ChangeFile>,
    pub title: String,
    pub body: String,
    pub dry_run: bool,
}

impl ChangeRequest {
    pub fn tool_id(&self) -> &str {
        self.branch.strip_prefix(BRANCH_PREFIX).unwrap_or(&self.branch)
    }
}

/// Builds the pull request adding the export file at the repository root.
/// `repo` selects one of the tool's repositories by normalized path; `None`
/// takes the first.
pub fn pr_payload(
    tool: &MergedTool,
    format: ExportFormat,
    repo: Option<&str>,
    dry_run: bool,
) -> Result<ChangeRequest, ExportError> {
    let wanted = repo.map(|r| {
        normalize_url(r, &Tables::bundled().hosts)
            .map(|u| u.normalized)
            .unwrap_or_else(|_| r.to_owned())
    });
    let target = tool
        .repository_urls()
        .find(|u| wanted.as_ref().is_none_or(|w| &u.normalized == w))
        .ok_or_else(|| ExportError::NoRepository(repo.map(str::to_owned)))?;
    let content = export_document(tool, format)?;
    let file = format.file_name();
    let sources: Vec<String> = tool.sources.iter().map(|s| format!("- {}: {}", s.source, s.source_id)).collect();
    Ok(ChangeRequest {
        repo: target.normalized.clone(),
        branch: format!("{BRANCH_PREFIX}{}", tool.tool_id),
        files: vec![ChangeFile { path: file.into(), content }],
        title: format!("Add {file} ({} metadata) for {}", format, tool.name),
        body: format!(
            "This adds `{file}` with {format} metadata for {} (`{}`), assembled by the software observatory from these registry records:\n\n{}\n",
            tool.name,
            tool.tool_id,
            sources.join("\n")
        ),
        dry_run,
    })
}

/// Writes `<out>/pr/<tool_id>/` with the payload files and `request.meta`.
pub fn write_dry_run(request: &ChangeRequest, out: &Path) -> Result<PathBuf, ExportError> {
    let dir = out.join("pr").join(request.tool_id());
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |e: crate::layer::LayerError| match e {
            crate::layer::LayerError::Io { source, .. } => ExportError::Io { path, source },
            other => ExportError::Invalid(other.to_string()),
        }
    };
    for f in &request.files {
        let p = dir.join(&f.path);
        write_atomic(&p, f.content.as_bytes()).map_err(io(&p))?;
    }
    let meta = serde_json::json!({
        "repo": request.repo,
        "branch": request.branch,
        "title": request.title,
        "body": request.body,
        "dry_run": request.dry_run,
        "files": request.files.iter().map(|f| &f.path).collect::<Vec<_>>(),
    });
    let p = dir.join("request.meta");
    write_atomic(&p, canonical_json_pretty(&meta).as_bytes()).map_err(io(&p))?;
    Ok(dir)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Submission {
    DryRun,
    Submitted { location: String },
}

/// Sends a request through the transport. Dry runs never touch it.
pub fn submit_change(request: &ChangeRequest, transport: &dyn Transport) -> Result<Submission, ExportError> {
    if request.dry_run {
        return Ok(Submission::DryRun);
    }
    Ok(Submission::Submitted { location: transport.submit_change(request)? })
}
