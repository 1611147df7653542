//! URL canonicalization.
//!
//! A normalized URL is scheme-less: lowercase host without `www.`, followed by
//! the path with trailing `/` and `.git` removed. URLs on recognized code
//! hosts are truncated to the repository root and lowercased.

use serde::{Deserialize, Serialize};
use url::Url;

use super::NormalizeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlKind {
    Repository,
    RepositoryLike,
    Webpage,
}

impl UrlKind {
    /// Repository and repository-like links count as structural identity evidence.
    pub fn is_link_evidence(self) -> bool {
        matches!(self, UrlKind::Repository | UrlKind::RepositoryLike)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UrlRef {
    pub raw: String,
    pub normalized: String,
    pub kind: UrlKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host_class: Option<String>,
}

impl UrlRef {
    /// A browsable absolute URL: the raw form when it already is one.
    pub fn absolute(&self) -> String {
        let lower = self.raw.to_ascii_lowercase();
        if lower.starts_with("http://") || lower.starts_with("https://") {
            self.raw.clone()
        } else {
            format!("https://{}", self.normalized)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostClass {
    Repository,
    RepositoryLike,
}

/// How a code host's path is cut down to the repository root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RootRule {
    /// Keep the first `count` path segments (`owner/repo`).
    Segments { count: usize },
    /// Path must start with `prefix`; keep it plus the next `count` segments.
    Prefixed { prefix: String, count: usize },
    /// Bioconductor landing pages, both `/packages/<pkg>` and
    /// `/packages/<release>/bioc/html/<pkg>.html`, collapse to `packages/<pkg>`.
    BioconductorPackage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeHost {
    pub host: String,
    pub class: HostClass,
    pub root: RootRule,
}

impl CodeHost {
    fn repo_root(&self, segments: &[String]) -> Option<Vec<String>> {
        match &self.root {
            RootRule::Segments { count } => {
                (segments.len() >= *count && *count > 0).then(|| segments[..*count].to_vec())
            }
            RootRule::Prefixed { prefix, count } => {
                let n = count + 1;
                (segments.len() >= n && segments[0] == prefix.to_lowercase())
                    .then(|| segments[..n].to_vec())
            }
            RootRule::BioconductorPackage => {
                if segments.first().map(String::as_str) != Some("packages") {
                    return None;
                }
                let last = segments.last()?;
                let pkg = if let Some(stem) = last.strip_suffix(".html") {
                    stem.to_owned()
                } else if segments.len() == 2 {
                    last.clone()
                } else {
                    return None;
                };
                (!pkg.is_empty()).then(|| vec!["packages".to_owned(), pkg])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostRules {
    pub hosts: Vec<CodeHost>,
}

impl HostRules {
    fn lookup(&self, host: &str) -> Option<&CodeHost> {
        self.hosts.iter().find(|h| h.host.eq_ignore_ascii_case(host))
    }

    pub fn is_code_host(&self, host: &str) -> bool {
        self.lookup(host).is_some()
    }
}

fn strip_tail(mut path: &str) -> &str {
    loop {
        let before = path.len();
        path = path.trim_end_matches('/');
        if path.len() >= 4 && path[path.len() - 4..].eq_ignore_ascii_case(".git") {
            path = &path[..path.len() - 4];
        }
        if path.len() == before {
            return path;
        }
    }
}

fn prepare(raw: &str) -> Option<String> {
    let s = raw.trim();
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return None;
    }
    let s = if s.len() >= 4 && s[..4].eq_ignore_ascii_case("git+") { &s[4..] } else { s };
    if s.contains("://") {
        return Some(s.to_owned());
    }
    // scp-style `git@host:owner/repo.git`
    if let Some(rest) = s.strip_prefix("git@") {
        if let Some((host, path)) = rest.split_once(':') {
            return Some(format!("http://{host}/{path}"));
        }
    }
    Some(format!("http://{s}"))
}

pub fn normalize_url(raw: &str, rules: &HostRules) -> Result<UrlRef, NormalizeError> {
    let unparseable = || NormalizeError::UnparseableUrl(raw.to_owned());
    let prepared = prepare(raw).ok_or_else(unparseable)?;
    let url = Url::parse(&prepared).map_err(|_| unparseable())?;
    let host = url.host_str().filter(|h| !h.is_empty()).ok_or_else(unparseable)?;
    let host = host.to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host).to_owned();
    if host.is_empty() {
        return Err(unparseable());
    }
    let authority = match url.port() {
        Some(p) => format!("{host}:{p}"),
        None => host.clone(),
    };

    let (path, kind, host_class) = match rules.lookup(&host) {
        Some(code_host) => {
            let segments: Vec<String> = url
                .path()
                .split('/')
                .filter(|s| !s.is_empty())
                .map(|s| s.to_lowercase())
                .collect();
            match code_host.repo_root(&segments) {
                Some(root) => {
                    let joined = format!("/{}", root.join("/"));
                    let kind = match code_host.class {
                        HostClass::Repository => UrlKind::Repository,
                        HostClass::RepositoryLike => UrlKind::RepositoryLike,
                    };
                    (strip_tail(&joined).to_owned(), kind, Some(code_host.host.clone()))
                }
                None => {
                    let joined = format!("/{}", segments.join("/"));
                    (strip_tail(&joined).to_owned(), UrlKind::Webpage, Some(code_host.host.clone()))
                }
            }
        }
        None => (strip_tail(url.path()).to_owned(), UrlKind::Webpage, None),
    };

    Ok(UrlRef {
        raw: raw.to_owned(),
        normalized: format!("{authority}{path}"),
        kind,
        host_class,
    })
}
