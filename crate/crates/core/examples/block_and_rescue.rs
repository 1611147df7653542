//! Blocks the gromacs records, detects the name conflict and rescues it.
//!
//! cargo run --example block_and_rescue

use std::path::Path;

use observatory::disambiguate::{
    build_blocks, detect_conflicts, merge_all, rescue, BlockStatus, Catalog, KnownApart, Priority,
};
use observatory::ingest::parse_dump;
use observatory::normalize::cleanse;
use observatory::{SourceKind, Tables};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let at = "2026-01-15T00:00:00Z".parse()?;
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/gromacs/biotools.json");
    let dump = parse_dump(SourceKind::Biotools, &std::fs::read(path)?, at)?;
    let instances: Vec<_> = dump
        .records
        .iter()
        .map(|r| cleanse(r, Tables::bundled()).map(|c| c.instance))
        .collect::<Result<_, _>>()?;

    let mut set = build_blocks(&instances)?;
    let conflicts = detect_conflicts(&mut set);
    println!("{} blocks, conflicts: {conflicts:?}", set.blocks.len());

    let catalog = Catalog::new(instances.iter().cloned());
    let priority = Priority::default();
    for block in set.blocks.values_mut() {
        if block.status == BlockStatus::Conflict {
            rescue(block, &catalog, &priority, &KnownApart::new(), at)?;
        }
        println!("{} {:?} subclusters={:?}", block.block_id, block.status, block.subclusters);
        for r in &block.resolutions {
            println!("  {:?}: {}", r.method, r.rationale);
        }
    }

    for tool in merge_all(&set, &catalog, &priority)? {
        let members: Vec<_> = tool.members.iter().map(|m| m.member_ref()).collect();
        println!("{:<20} {members:?}", tool.tool_id);
    }
    Ok(())
}
