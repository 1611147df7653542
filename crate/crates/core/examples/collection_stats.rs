//! Aggregates the ten-tool fixture into collection statistics and one chart.
//!
//! cargo run --example collection_stats

use std::collections::HashMap;
use std::path::Path;

use observatory::disambiguate::MERGED_SCHEMA;
use observatory::layer::read_lines;
use observatory::score::PROFILES_SCHEMA;
use observatory::stats::{chart, collection_stats};
use observatory::{FairProfile, MergedTool};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/stats10");
    let tools: Vec<MergedTool> = read_lines(&dir.join("tools.jsonl"), MERGED_SCHEMA)?;
    let profiles: Vec<FairProfile> = read_lines(&dir.join("profiles.jsonl"), PROFILES_SCHEMA)?;
    let refs: Vec<&FairProfile> = profiles.iter().collect();

    let stats = collection_stats("all", &tools, &refs, &HashMap::new(), "2026-01-15T00:00:00Z".parse()?)?;
    println!("{} tools", stats.n_tools);
    for (field, share) in &stats.field_completeness {
        println!("  {field:<16} {share:.2}");
    }
    println!("sources: {:?}", stats.source_breakdown.by_combination);
    println!("overall mean: {:?}", stats.scoreboard.overall);
    println!("{}", serde_json::to_string_pretty(&chart(&stats, "licenses")?)?);
    Ok(())
}
