//! Parses every registry dump in the mixed fixture and reports what came in.
//!
//! cargo run --example ingest_dumps

use std::path::Path;

use observatory::ingest::parse_dump;
use observatory::SourceKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mixed");
    let at = "2026-01-15T00:00:00Z".parse()?;
    let files = [
        (SourceKind::Biotools, "biotools.json"),
        (SourceKind::Bioconda, "bioconda.json"),
        (SourceKind::Bioconductor, "bioconductor.json"),
        (SourceKind::Toolshed, "toolshed.json"),
        (SourceKind::GalaxyEu, "galaxy_eu.json"),
        (SourceKind::Sourceforge, "sourceforge.json"),
        (SourceKind::Github, "github.json"),
    ];
    let mut total = 0;
    for (source, file) in files {
        let dump = parse_dump(source, &std::fs::read(dir.join(file))?, at)?;
        println!("{source:<14} {:>3} records, {} rejected", dump.records.len(), dump.rejects.len());
        if let Some(first) = dump.records.first() {
            println!("{:<14} first: {} ({}) {}", "", first.name_raw, first.type_raw, first.source_id);
        }
        total += dump.records.len();
    }
    println!("total: {total}");
    Ok(())
}
