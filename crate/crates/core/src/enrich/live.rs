//! Network transport over HTTP, built with the `live` feature.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{EnrichSettings, FailureKind, ProbeOutcome, Provider, Transport, TransportError};
use crate::export::ChangeRequest;
use crate::ingest::{PubKind, PublicationId};

pub struct LiveTransport {
    agent: ureq::Agent,
}

impl LiveTransport {
    pub fn new(settings: &EnrichSettings) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs)))
            .http_status_as_error(false)
            .user_agent("observatory/0.1")
            .build();
        LiveTransport { agent: config.into() }
    }

    fn get(&self, url: &str, accept: &str) -> Result<Vec<u8>, TransportError> {
        let mut resp = self
            .agent
            .get(url)
            .header("Accept", accept)
            .call()
            .map_err(|e| TransportError::Failure(e.to_string()))?;
        match resp.status().as_u16() {
            200..=299 => resp
                .body_mut()
                .with_config()
                .limit(16 * 1024 * 1024)
                .read_to_vec()
                .map_err(|e| TransportError::Failure(e.to_string())),
            404 => Err(TransportError::NotFound),
            429 => Err(TransportError::RateLimited),
            s => Err(TransportError::Failure(format!("status {s} from {url}"))),
        }
    }

    fn get_json(&self, url: &str) -> Result<Value, TransportError> {
        let body = self.get(url, "application/json")?;
        serde_json::from_slice(&body).map_err(|e| TransportError::Failure(e.to_string()))
    }
}

fn failure_kind(e: &ureq::Error) -> FailureKind {
    match e {
        ureq::Error::Timeout(_) => FailureKind::Timeout,
        ureq::Error::HostNotFound => FailureKind::Dns,
        ureq::Error::Tls(_) | ureq::Error::TlsRequired => FailureKind::Tls,
        other if other.to_string().to_lowercase().contains("tls") => FailureKind::Tls,
        _ => FailureKind::HttpError,
    }
}

impl Transport for LiveTransport {
    fn probe(&self, url: &str, _timeout: Duration) -> ProbeOutcome {
        let start = Instant::now();
        match self.agent.get(url).call() {
            Ok(resp) => ProbeOutcome::Status {
                code: resp.status().as_u16(),
                latency_ms: Some(start.elapsed().as_millis() as u64),
            },
            Err(e) => ProbeOutcome::Failed(failure_kind(&e)),
        }
    }

    fn fetch_publication(&self, provider: Provider, id: &PublicationId) -> Result<Vec<u8>, TransportError> {
        let url = match provider {
            Provider::EuropePmc => {
                let query = match id.kind {
                    PubKind::Doi => format!("DOI:\"{}\"", id.value),
                    PubKind::Pmid => format!("EXT_ID:{} AND SRC:MED", id.value),
                    PubKind::Pmcid => format!("PMCID:{}", id.value),
                };
                let mut u = url::Url::parse("https://www.ebi.ac.uk/europepmc/webservices/rest/search").expect("static url");
                u.query_pairs_mut().append_pair("query", &query).append_pair("format", "json");
                u.to_string()
            }
            Provider::SemanticScholar => {
                let prefix = match id.kind {
                    PubKind::Doi => "DOI",
                    PubKind::Pmid => "PMID",
                    PubKind::Pmcid => "PMCID",
                };
                format!(
                    "https://api.semanticscholar.org/graph/v1/paper/{prefix}:{}?fields=title,year,venue,citationCount",
                    id.value
                )
            }
        };
        if provider == Provider::EuropePmc {
            let v = self.get_json(&url)?;
            if v.pointer("/resultList/result/0").is_none() {
                return Err(TransportError::NotFound);
            }
            return serde_json::to_vec(&v).map_err(|e| TransportError::Failure(e.to_string()));
        }
        self.get(&url, "application/json")
    }

    fn fetch_repository(&self, repo: &str) -> Result<Vec<u8>, TransportError> {
        let path = repo.strip_prefix("github.com/").ok_or(TransportError::NotFound)?;
        let api = format!("https://api.github.com/repos/{path}");
        let meta = self.get_json(&api)?;
        let contributors: Vec<Value> = self
            .get_json(&format!("{api}/contributors?per_page=100"))
            .ok()
            .and_then(|v| v.as_array().cloned())
            .unwrap_or_default()
            .into_iter()
            .filter_map(|c| c.get("login").cloned())
            .collect();
        let readme = self
            .get(&format!("{api}/readme"), "application/vnd.github.raw")
            .ok()
            .map(|b| String::from_utf8_lossy(&b).into_owned());
        let doc = json!({
            "name": meta.get("name"),
            "license": meta.pointer("/license/spdx_id"),
            "readme": readme,
            "contributors": contributors,
            "topics": meta.get("topics").cloned().unwrap_or(json!([])),
        });
        serde_json::to_vec(&doc).map_err(|e| TransportError::Failure(e.to_string()))
    }

    fn submit_change(&self, _request: &ChangeRequest) -> Result<String, TransportError> {
        Err(TransportError::Failure(
            "opening pull requests needs repository credentials, which this transport does not hold; use a dry run".into(),
        ))
    }
}
