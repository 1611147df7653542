//! Publication metadata and service availability, kept in an auxiliary
//! store apart from the normalized records.

mod transport;
#[cfg(feature = "live")]
mod live;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use self::transport::{
    CallCounts, DisabledTransport, HostBudget, Permit, ProbeOutcome, SharedTransport, StubFixture,
    StubPublication, StubTransport, StubUrl, Transport, TransportError,
};
#[cfg(feature = "live")]
pub use self::live::LiveTransport;

use crate::ingest::PublicationId;
use crate::normalize::{Instance, InstanceKey, UrlRef};
use crate::Timestamp;

pub const ENRICH_SCHEMA: &str = "observatory-enrich/1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnrichError {
    #[error("publication {0} not found")]
    NotFound(String),
    #[error("rate limited while fetching {0}")]
    RateLimited(String),
    #[error("transport failure: {0}")]
    TransportFailure(String),
    #[error("{0} does not belong to this instance")]
    MismatchedIdentity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    #[serde(rename = "europepmc")]
    EuropePmc,
    #[serde(rename = "semanticscholar")]
    SemanticScholar,
}

impl Provider {
    pub fn host(self) -> &'static str {
        match self {
            Provider::EuropePmc => "www.ebi.ac.uk",
            Provider::SemanticScholar => "api.semanticscholar.org",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Timeout,
    Dns,
    HttpError,
    Tls,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationMeta {
    pub id: PublicationId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citations_per_year: Option<BTreeMap<i32, u64>>,
    pub fetched_at: Timestamp,
    pub provider: Provider,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilityResult {
    pub url: UrlRef,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    pub checked_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_kind: Option<FailureKind>,
}

impl AvailabilityResult {
    pub fn from_probe(url: UrlRef, outcome: ProbeOutcome, checked_at: Timestamp) -> Self {
        match outcome {
            ProbeOutcome::Status { code, latency_ms } => {
                let ok = (200..=399).contains(&code);
                AvailabilityResult {
                    url,
                    ok,
                    http_status: Some(code),
                    latency_ms,
                    checked_at,
                    failure_kind: (!ok).then_some(FailureKind::HttpError),
                }
            }
            ProbeOutcome::Failed(kind) => AvailabilityResult {
                url,
                ok: false,
                http_status: None,
                latency_ms: None,
                checked_at,
                failure_kind: Some(kind),
            },
        }
    }
}

/// Auxiliary enrichment for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enrichment {
    pub key: InstanceKey,
    pub publications: Vec<PublicationMeta>,
    pub availability: Vec<AvailabilityResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enriched {
    pub instance: Instance,
    pub enrichment: Enrichment,
}

/// Fraction of checks that failed; `None` when nothing was checked.
pub fn unavailable_fraction(results: &[AvailabilityResult]) -> Option<f64> {
    if results.is_empty() {
        return None;
    }
    let failed = results.iter().filter(|r| !r.ok).count();
    Some(failed as f64 / results.len() as f64)
}

/// Pairs an instance with enrichment gathered for it. The instance itself is
/// not modified.
pub fn attach_enrichment(
    instance: Instance,
    pubs: Vec<PublicationMeta>,
    avail: Vec<AvailabilityResult>,
) -> Result<Enriched, EnrichError> {
    if let Some(p) = pubs.iter().find(|p| !instance.publications.contains(&p.id)) {
        return Err(EnrichError::MismatchedIdentity(p.id.to_string()));
    }
    if let Some(a) = avail
        .iter()
        .find(|a| !instance.urls.iter().any(|u| u.normalized == a.url.normalized))
    {
        return Err(EnrichError::MismatchedIdentity(a.url.normalized.clone()));
    }
    Ok(Enriched {
        enrichment: Enrichment {
            key: instance.key.clone(),
            publications: pubs,
            availability: avail,
        },
        instance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichSettings {
    pub timeout_secs: u64,
    pub per_host: usize,
    pub retries: u32,
    pub backoff_ms: u64,
    pub providers: Vec<Provider>,
}

impl Default for EnrichSettings {
    fn default() -> Self {
        EnrichSettings {
            timeout_secs: 10,
            per_host: 4,
            retries: 3,
            backoff_ms: 500,
            providers: vec![Provider::EuropePmc, Provider::SemanticScholar],
        }
    }
}

/// Enrichment client: a transport plus cache, retry policy and host budget.
pub struct Enricher {
    transport: SharedTransport,
    settings: EnrichSettings,
    budget: HostBudget,
    cache: Mutex<HashMap<(Provider, PublicationId), PublicationMeta>>,
    now: Timestamp,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ScholarPaper {
    title: Option<String>,
    year: Option<i32>,
    venue: Option<String>,
    citation_count: Option<u64>,
    citations_per_year: Option<BTreeMap<String, u64>>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct EpmcResult {
    title: Option<String>,
    pub_year: Option<String>,
    journal_title: Option<String>,
    cited_by_count: Option<u64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct EpmcList {
    result: Vec<EpmcResult>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct EpmcSearch {
    result_list: EpmcList,
}

fn parse_publication(
    provider: Provider,
    id: &PublicationId,
    body: &[u8],
    fetched_at: Timestamp,
) -> Result<PublicationMeta, EnrichError> {
    let bad = |e: serde_json::Error| EnrichError::TransportFailure(format!("{provider:?} payload for {id}: {e}"));
    let meta = match provider {
        Provider::SemanticScholar => {
            let p: ScholarPaper = serde_json::from_slice(body).map_err(bad)?;
            let per_year = match p.citations_per_year {
                Some(m) => Some(
                    m.into_iter()
                        .map(|(y, c)| {
                            y.parse::<i32>()
                                .map(|y| (y, c))
                                .map_err(|_| EnrichError::TransportFailure(format!("bad year `{y}` for {id}")))
                        })
                        .collect::<Result<BTreeMap<_, _>, _>>()?,
                ),
                None => None,
            };
            PublicationMeta {
                id: id.clone(),
                title: p.title,
                year: p.year,
                venue: p.venue.filter(|v| !v.is_empty()),
                citation_count: p.citation_count,
                citations_per_year: per_year,
                fetched_at,
                provider,
            }
        }
        Provider::EuropePmc => {
            let r = match serde_json::from_slice::<EpmcSearch>(body) {
                Ok(s) => s
                    .result_list
                    .result
                    .into_iter()
                    .next()
                    .ok_or_else(|| EnrichError::NotFound(id.to_string()))?,
                Err(_) => serde_json::from_slice::<EpmcResult>(body).map_err(bad)?,
            };
            PublicationMeta {
                id: id.clone(),
                title: r.title,
                year: r.pub_year.and_then(|y| y.trim().parse().ok()),
                venue: r.journal_title,
                citation_count: r.cited_by_count,
                citations_per_year: None,
                fetched_at,
                provider,
            }
        }
    };
    if let (Some(total), Some(per_year)) = (meta.citation_count, &meta.citations_per_year) {
        if per_year.values().sum::<u64>() > total {
            return Err(EnrichError::TransportFailure(format!(
                "per-year citations for {id} exceed the total"
            )));
        }
    }
    Ok(meta)
}

impl Enricher {
    pub fn new(transport: SharedTransport, settings: EnrichSettings, now: Timestamp) -> Self {
        Enricher {
            budget: HostBudget::new(settings.per_host),
            transport,
            settings,
            cache: Mutex::new(HashMap::new()),
            now,
        }
    }

    pub fn transport(&self) -> &SharedTransport {
        &self.transport
    }

    pub fn budget(&self) -> &HostBudget {
        &self.budget
    }

    /// Publication metadata, served from cache when this (provider, id) was
    /// fetched before. Rate limiting is retried with exponential backoff.
    pub fn fetch_publication(&self, id: &PublicationId, provider: Provider) -> Result<PublicationMeta, EnrichError> {
        let cache_key = (provider, id.clone());
        if let Some(hit) = self.cache.lock().unwrap().get(&cache_key) {
            return Ok(hit.clone());
        }
        let mut attempt = 0u32;
        let body = loop {
            let result = {
                let _permit = self.budget.acquire(provider.host());
                self.transport.fetch_publication(provider, id)
            };
            match result {
                Ok(body) => break body,
                Err(TransportError::RateLimited) if attempt < self.settings.retries => {
                    std::thread::sleep(Duration::from_millis(self.settings.backoff_ms << attempt));
                    attempt += 1;
                }
                Err(TransportError::RateLimited) => return Err(EnrichError::RateLimited(id.to_string())),
                Err(TransportError::NotFound) => return Err(EnrichError::NotFound(id.to_string())),
                Err(e) => return Err(EnrichError::TransportFailure(e.to_string())),
            }
        };
        let meta = parse_publication(provider, id, &body, self.now)?;
        // first write wins; cached entries never change
        let mut cache = self.cache.lock().unwrap();
        Ok(cache.entry(cache_key).or_insert(meta).clone())
    }

    /// Availability checks for a deployable instance, one per distinct URL.
    /// Non-deployable instances are not checked.
    pub fn check_service(&self, instance: &Instance) -> Vec<AvailabilityResult> {
        if !instance.software_type().is_deployable() {
            return Vec::new();
        }
        let timeout = Duration::from_secs(self.settings.timeout_secs);
        let mut seen = std::collections::HashSet::new();
        instance
            .urls
            .iter()
            .filter(|u| seen.insert(u.normalized.clone()))
            .map(|u| {
                let host = u.normalized.split('/').next().unwrap_or_default().to_owned();
                let outcome = {
                    let _permit = self.budget.acquire(&host);
                    self.transport.probe(&u.absolute(), timeout)
                };
                AvailabilityResult::from_probe(u.clone(), outcome, self.now)
            })
            .collect()
    }

    /// Gathers publications (from every configured provider; misses are
    /// skipped) and availability for one instance.
    pub fn enrich(&self, instance: &Instance) -> Enrichment {
        let mut publications = Vec::new();
        for id in &instance.publications {
            for &provider in &self.settings.providers {
                match self.fetch_publication(id, provider) {
                    Ok(meta) => publications.push(meta),
                    Err(e) => tracing::debug!(%id, ?provider, error = %e, "publication lookup failed"),
                }
            }
        }
        Enrichment {
            key: instance.key.clone(),
            publications,
            availability: self.check_service(instance),
        }
    }
}
