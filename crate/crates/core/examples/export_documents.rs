//! Turns a draft into CITATION.cff, maSMP JSON-LD and a dry-run PR payload.
//!
//! cargo run --example export_documents

use observatory::draft::DraftMetadata;
use observatory::export::{export_document, pr_payload, validate_cff, ExportFormat};
use observatory::Tables;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let draft: DraftMetadata = serde_json::from_str(
        r#"{
            "name": "readtrim",
            "type": "cmd",
            "description": "Trims adapters from short reads",
            "repositories": ["https://github.com/example/readtrim"],
            "licenses": ["Apache 2.0"],
            "authors": ["Ada Lovelace", "Example University"],
            "versions": ["1.4.2"],
            "publications": [{"kind": "doi", "value": "10.1000/readtrim"}]
        }"#,
    )?;
    let tool = draft.to_tool(Tables::bundled())?;

    let cff = export_document(&tool, ExportFormat::Cff)?;
    validate_cff(&cff).map_err(|e| e.join("; "))?;
    println!("--- CITATION.cff\n{cff}");
    println!("--- masmp.jsonld\n{}", export_document(&tool, ExportFormat::Masmp)?);

    let pr = pr_payload(&tool, ExportFormat::Cff, None, true)?;
    println!("--- PR to {} on {}\n{}", pr.repo, pr.branch, pr.title);
    Ok(())
}
