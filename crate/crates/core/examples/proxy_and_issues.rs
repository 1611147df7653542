//! Routes name conflicts through the agreement proxy, renders the issue for
//! the one it cannot settle, and applies a curator decision.
//!
//! cargo run --example proxy_and_issues

use observatory::disambiguate::{
    apply_decision, integrate, render_issue, BlockStatus, Catalog, Decision, IntegrateOptions, JaccardProxy,
    Priority,
};
use observatory::normalize::cleanse;
use observatory::{RawRecord, SourceKind, Tables};

fn record(source: SourceKind, name: &str, ty: &str, desc: &str) -> observatory::Instance {
    let mut r = RawRecord::minimal(source, name, name, ty);
    r.description = Some(desc.into());
    cleanse(&r, Tables::bundled()).unwrap().instance
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let now = "2026-01-15T00:00:00Z".parse()?;
    let corpus = vec![
        record(SourceKind::Biotools, "deepbind", "cmd", "Predicting sequence specificities of DNA and RNA binding proteins by deep learning"),
        record(SourceKind::Bioconda, "deepbind", "lib", "DeepBind predicting sequence specificities of DNA and RNA binding proteins"),
        record(SourceKind::Biotools, "mira", "cmd", "Whole genome shotgun and EST sequence assembler"),
        record(SourceKind::Bioconductor, "mira", "lib", "Methylation-based inference of regulatory activity"),
        record(SourceKind::Toolshed, "pipits", "cmd", "Automated pipeline for analyses of fungal ITS sequences from Illumina"),
        record(SourceKind::Sourceforge, "pipits", "workflow", "Fungal ITS amplicon analysis pipeline with taxonomic classification"),
    ];
    let proxy = JaccardProxy { tau_same: 0.5, tau_diff: 0.15 };
    let opts = IntegrateOptions { priority: Priority::default(), proxy_retries: 1, now, state_path: None };
    let out = integrate(&corpus, None, &proxy, &opts)?;
    for b in out.blocks.blocks.values() {
        println!("{:<22} {:?} groups={}", b.block_id, b.status, b.groups().len());
    }

    let catalog = Catalog::new(corpus.iter().cloned());
    let mut set = out.blocks;
    let escalated = set.blocks.values().find(|b| b.status == BlockStatus::Escalated).cloned();
    if let Some(block) = escalated {
        println!("\n{}", render_issue(&set, &block.block_id, &catalog)?);
        let decision = Decision {
            block_id: block.block_id.clone(),
            partition: vec![block.member_refs()],
            decided_by: "curator".into(),
            rationale: "both are the PIPITS fungal ITS pipeline".into(),
        };
        apply_decision(&mut set, &decision, now)?;
        let after = &set.blocks[&block.block_id];
        println!("after decision: {:?}, {} resolution(s)", after.status, after.resolutions.len());
    }
    Ok(())
}
