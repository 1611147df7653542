//! Probes service URLs and looks up a publication through the stub transport.
//!
//! cargo run --example enrich_with_stub

use std::path::Path;
use std::sync::Arc;

use observatory::enrich::{unavailable_fraction, EnrichSettings, Enricher, Provider, StubTransport};
use observatory::ingest::{PubKind, PublicationId};
use observatory::normalize::cleanse;
use observatory::{RawRecord, SourceKind, Tables};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let now = "2026-01-15T00:00:00Z".parse()?;

    let stub = Arc::new(StubTransport::from_file(&fixtures.join("availability/stub.json"))?);
    let enricher = Enricher::new(stub.clone(), EnrichSettings::default(), now);
    let mut r = RawRecord::minimal(SourceKind::Biotools, "svc", "svc", "Web application");
    r.webpages = vec![
        "https://svc.example.org/".into(),
        "https://down.example.org/".into(),
        "https://slow.example.org/".into(),
    ];
    let service = cleanse(&r, Tables::bundled())?.instance;
    let results = enricher.check_service(&service);
    for a in &results {
        println!("{:<32} ok={} status={:?} failure={:?}", a.url.normalized, a.ok, a.http_status, a.failure_kind);
    }
    println!("unavailable fraction: {:?}", unavailable_fraction(&results));
    println!("probes sent: {}", stub.calls.probes.load(std::sync::atomic::Ordering::SeqCst));

    let stub = Arc::new(StubTransport::from_file(&fixtures.join("mixed/stub.json"))?);
    let enricher = Enricher::new(stub, EnrichSettings::default(), now);
    let id = PublicationId { kind: PubKind::Pmid, value: "19505943".into() };
    let meta = enricher.fetch_publication(&id, Provider::EuropePmc)?;
    println!("\n{id}: {:?} ({:?}), cited {:?} times", meta.title, meta.year, meta.citation_count);
    Ok(())
}
