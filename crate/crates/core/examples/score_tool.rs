//! Scores a draft the way the evaluate endpoint does, then shows what one
//! more field changes.
//!
//! cargo run --example score_tool

use observatory::draft::{evaluate_draft, DraftMetadata};
use observatory::{ScoringConfig, Tables};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let at = "2026-01-15T00:00:00Z".parse()?;
    let mut draft: DraftMetadata = serde_json::from_str(
        r#"{
            "name": "readtrim",
            "type": "cmd",
            "description": "Trims adapters from short reads",
            "repositories": ["https://github.com/example/readtrim"],
            "input_formats": ["FASTQ"]
        }"#,
    )?;
    let scoring = ScoringConfig::bundled();
    let before = evaluate_draft(&draft, Tables::bundled(), &scoring, at)?;
    for s in &before.profile.indicators {
        println!("{:<3} {:.2}  {}", s.id, s.value, s.guidance.join("; "));
    }
    println!("principles {:?} overall {:.3}", before.profile.principles, before.profile.overall);

    draft.licenses.push("MIT".into());
    let after = evaluate_draft(&draft, Tables::bundled(), &scoring, at)?;
    println!("with a license: overall {:.3} -> {:.3}", before.profile.overall, after.profile.overall);
    Ok(())
}
