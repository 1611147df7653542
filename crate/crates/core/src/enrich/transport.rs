//! Outbound access. Everything that leaves the process goes through
//! [`Transport`]; tests and reproducible runs use [`StubTransport`].

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{FailureKind, Provider};
use crate::export::ChangeRequest;
use crate::ingest::PublicationId;
use crate::normalize::{normalize_url, Tables};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("not found")]
    NotFound,
    #[error("rate limited")]
    RateLimited,
    #[error("transport failure: {0}")]
    Failure(String),
    #[error("transport disabled")]
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeOutcome {
    Status { code: u16, latency_ms: Option<u64> },
    Failed(FailureKind),
}

pub trait Transport: Send + Sync {
    /// HEAD/GET check of a single URL.
    fn probe(&self, url: &str, timeout: Duration) -> ProbeOutcome;

    /// Provider response document for one publication id.
    fn fetch_publication(&self, provider: Provider, id: &PublicationId) -> Result<Vec<u8>, TransportError>;

    /// Repository-mining document (see [`crate::ingest::RepoDocument`]) for a
    /// normalized repository path such as `github.com/owner/repo`.
    fn fetch_repository(&self, repo: &str) -> Result<Vec<u8>, TransportError>;

    /// Opens a pull request; returns its location.
    fn submit_change(&self, request: &ChangeRequest) -> Result<String, TransportError>;

    /// Whether this transport can reach anything at all.
    fn enabled(&self) -> bool {
        true
    }
}

/// Transport for runs with outbound access switched off.
#[derive(Debug, Default, Clone, Copy)]
pub struct DisabledTransport;

impl Transport for DisabledTransport {
    fn probe(&self, _url: &str, _timeout: Duration) -> ProbeOutcome {
        ProbeOutcome::Failed(FailureKind::Dns)
    }

    fn fetch_publication(&self, _: Provider, _: &PublicationId) -> Result<Vec<u8>, TransportError> {
        Err(TransportError::Disabled)
    }

    fn fetch_repository(&self, _: &str) -> Result<Vec<u8>, TransportError> {
        Err(TransportError::Disabled)
    }

    fn submit_change(&self, _: &ChangeRequest) -> Result<String, TransportError> {
        Err(TransportError::Disabled)
    }

    fn enabled(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StubUrl {
    Status(u16),
    Failure(FailureKind),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StubPublication {
    pub provider: Provider,
    pub id: PublicationId,
    #[serde(default = "ok_status")]
    pub status: u16,
    /// Number of initial calls answered with 429 before the real status.
    #[serde(default)]
    pub rate_limited_first: usize,
    #[serde(default)]
    pub body: serde_json::Value,
}

fn ok_status() -> u16 {
    200
}

/// Stub transport fixture file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StubFixture {
    #[serde(default)]
    pub urls: BTreeMap<String, StubUrl>,
    #[serde(default)]
    pub publications: Vec<StubPublication>,
    #[serde(default)]
    pub repositories: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Default)]
pub struct CallCounts {
    pub probes: AtomicUsize,
    pub publications: AtomicUsize,
    pub repositories: AtomicUsize,
    pub submissions: AtomicUsize,
}

impl CallCounts {
    pub fn total(&self) -> usize {
        self.probes.load(Ordering::SeqCst)
            + self.publications.load(Ordering::SeqCst)
            + self.repositories.load(Ordering::SeqCst)
            + self.submissions.load(Ordering::SeqCst)
    }
}

/// Answers from a fixture. URLs are matched by normalized form; anything not
/// in the fixture fails like an unresolvable host.
pub struct StubTransport {
    urls: HashMap<String, StubUrl>,
    publications: Vec<(StubPublication, AtomicUsize)>,
    repositories: HashMap<String, Vec<u8>>,
    latency_ms: Option<u64>,
    pub calls: CallCounts,
    submitted: Mutex<Vec<ChangeRequest>>,
}

fn url_key(raw: &str) -> String {
    normalize_url(raw, &Tables::bundled().hosts)
        .map(|u| u.normalized)
        .unwrap_or_else(|_| raw.to_owned())
}

impl StubTransport {
    pub fn new(fixture: StubFixture) -> Self {
        StubTransport {
            urls: fixture.urls.into_iter().map(|(k, v)| (url_key(&k), v)).collect(),
            publications: fixture
                .publications
                .into_iter()
                .map(|p| (p, AtomicUsize::new(0)))
                .collect(),
            repositories: fixture
                .repositories
                .into_iter()
                .map(|(k, v)| (url_key(&k), serde_json::to_vec(&v).unwrap_or_default()))
                .collect(),
            latency_ms: fixture.latency_ms,
            calls: CallCounts::default(),
            submitted: Mutex::new(Vec::new()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(StubTransport::new(serde_json::from_str(text)?))
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        StubTransport::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn submitted(&self) -> Vec<ChangeRequest> {
        self.submitted.lock().unwrap().clone()
    }
}

impl Transport for StubTransport {
    fn probe(&self, url: &str, _timeout: Duration) -> ProbeOutcome {
        self.calls.probes.fetch_add(1, Ordering::SeqCst);
        match self.urls.get(&url_key(url)) {
            Some(StubUrl::Status(code)) => ProbeOutcome::Status { code: *code, latency_ms: self.latency_ms },
            Some(StubUrl::Failure(kind)) => ProbeOutcome::Failed(*kind),
            None => ProbeOutcome::Failed(FailureKind::Dns),
        }
    }

    fn fetch_publication(&self, provider: Provider, id: &PublicationId) -> Result<Vec<u8>, TransportError> {
        self.calls.publications.fetch_add(1, Ordering::SeqCst);
        let (entry, seen) = self
            .publications
            .iter()
            .find(|(p, _)| p.provider == provider && p.id == *id)
            .ok_or(TransportError::NotFound)?;
        if seen.fetch_add(1, Ordering::SeqCst) < entry.rate_limited_first {
            return Err(TransportError::RateLimited);
        }
        match entry.status {
            200..=299 => Ok(serde_json::to_vec(&entry.body).unwrap_or_default()),
            404 => Err(TransportError::NotFound),
            429 => Err(TransportError::RateLimited),
            s => Err(TransportError::Failure(format!("status {s}"))),
        }
    }

    fn fetch_repository(&self, repo: &str) -> Result<Vec<u8>, TransportError> {
        self.calls.repositories.fetch_add(1, Ordering::SeqCst);
        self.repositories.get(&url_key(repo)).cloned().ok_or(TransportError::NotFound)
    }

    fn submit_change(&self, request: &ChangeRequest) -> Result<String, TransportError> {
        self.calls.submissions.fetch_add(1, Ordering::SeqCst);
        self.submitted.lock().unwrap().push(request.clone());
        Ok(format!("stub://{}/pull/{}", request.repo, request.branch))
    }
}

/// Per-host limit on requests in flight.
#[derive(Debug)]
pub struct HostBudget {
    per_host: usize,
    in_flight: Mutex<HashMap<String, usize>>,
    freed: Condvar,
    peak: AtomicUsize,
}

pub struct Permit<'a> {
    budget: &'a HostBudget,
    host: String,
}

impl HostBudget {
    pub fn new(per_host: usize) -> Self {
        HostBudget {
            per_host: per_host.max(1),
            in_flight: Mutex::new(HashMap::new()),
            freed: Condvar::new(),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn acquire(&self, host: &str) -> Permit<'_> {
        let mut map = self.in_flight.lock().unwrap();
        loop {
            let n = map.entry(host.to_owned()).or_insert(0);
            if *n < self.per_host {
                *n += 1;
                self.peak.fetch_max(*n, Ordering::SeqCst);
                break;
            }
            map = self.freed.wait(map).unwrap();
        }
        Permit { budget: self, host: host.to_owned() }
    }

    /// Highest number of concurrent requests seen against any single host.
    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut map = self.budget.in_flight.lock().unwrap();
        if let Some(n) = map.get_mut(&self.host) {
            *n -= 1;
        }
        self.budget.freed.notify_all();
    }
}

pub type SharedTransport = Arc<dyn Transport>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PubKind;

    #[test]
    fn stub_urls_match_by_normalized_form() {
        let t = StubTransport::from_json(r#"{"urls":{"http://svc.test/":200,"https://down.test":"timeout"}}"#).unwrap();
        assert_eq!(
            t.probe("https://www.svc.test", Duration::from_secs(1)),
            ProbeOutcome::Status { code: 200, latency_ms: None }
        );
        assert_eq!(t.probe("http://down.test/", Duration::from_secs(1)), ProbeOutcome::Failed(FailureKind::Timeout));
        assert_eq!(t.probe("http://nowhere.test", Duration::from_secs(1)), ProbeOutcome::Failed(FailureKind::Dns));
        assert_eq!(t.calls.probes.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn stub_rate_limits_then_answers() {
        let t = StubTransport::from_json(
            r#"{"publications":[{"provider":"semanticscholar","id":{"kind":"doi","value":"10.1/x"},"rate_limited_first":2,"body":{"citationCount":1}}]}"#,
        )
        .unwrap();
        let id = PublicationId { kind: PubKind::Doi, value: "10.1/x".into() };
        assert_eq!(t.fetch_publication(Provider::SemanticScholar, &id), Err(TransportError::RateLimited));
        assert_eq!(t.fetch_publication(Provider::SemanticScholar, &id), Err(TransportError::RateLimited));
        assert!(t.fetch_publication(Provider::SemanticScholar, &id).is_ok());
        assert_eq!(t.fetch_publication(Provider::EuropePmc, &id), Err(TransportError::NotFound));
    }

    #[test]
    fn budget_caps_concurrency_per_host() {
        let budget = Arc::new(HostBudget::new(2));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let b = budget.clone();
                s.spawn(move || {
                    let _p = b.acquire("a.test");
                    std::thread::sleep(Duration::from_millis(5));
                });
            }
        });
        assert!(budget.peak() <= 2);
        assert!(budget.peak() >= 1);
    }
}
