//! Runs every stage over a private copy of the mixed corpus, then runs again
//! to show block reuse.
//!
//! cargo run --example run_pipeline

use std::path::Path;

use observatory::pipeline::{Pipeline, Stage};
use observatory::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mixed");
    let work = tempfile::tempdir()?;
    for entry in std::fs::read_dir(&src)? {
        let p = entry?.path();
        if p.is_file() {
            std::fs::copy(&p, work.path().join(p.file_name().unwrap()))?;
        }
    }
    let config = RunConfig::load(&work.path().join("obs.toml"))?;

    let first = Pipeline::new(config.clone())?.run(&Stage::ALL)?;
    print!("{}", first.summary());
    first.check()?;

    let second = Pipeline::new(config.clone())?.run(&[Stage::Integrate])?;
    println!("\nre-integrate: reused {:?} of {:?} blocks", second.reused_blocks, second.blocks);

    let issues = work.path().join("issues");
    let n = Pipeline::new(config)?.export_issues(&issues)?;
    println!("{n} issue document(s) in {}", issues.display());
    Ok(())
}
