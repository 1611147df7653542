//! Cleanses one hand-written registry record: URLs, licenses, formats, authors.
//!
//! cargo run --example normalize_record

use observatory::normalize::{cleanse, normalize_url};
use observatory::{RawRecord, SourceKind, Tables};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tables = Tables::bundled();

    let mut r = RawRecord::minimal(SourceKind::Biotools, "bwa", "BWA ", "Command-line tool");
    r.description = Some("Burrows-Wheeler Aligner for short reads".into());
    r.repositories = vec!["git+https://github.com/LH3/bwa.git".into()];
    r.webpages = vec!["http://bio-bwa.sourceforge.net/".into(), "not a url".into()];
    r.licenses_raw = vec!["GPLv3".into(), "see LICENSE file".into()];
    r.input_formats_raw = vec!["FASTQ".into(), "my-binary-format".into()];
    r.authors_raw = vec!["Heng Li <lh3@example.org>".into(), "Broad Institute".into()];

    let out = cleanse(&r, tables)?;
    let i = &out.instance;
    println!("key:      {} / {:?} / {}", i.key.canonical_name, i.key.software_type, i.key.member_ref());
    for u in &i.urls {
        println!("url:      {:<40} -> {} ({:?})", u.raw, u.normalized, u.kind);
    }
    for l in &i.licenses {
        println!("license:  {:<20} -> {:?} ({:?})", l.raw, l.spdx_id, l.family);
    }
    for t in &i.input_formats {
        println!("format:   {:<20} -> {:?}", t.raw, t.edam_id);
    }
    for a in &i.agents {
        println!("agent:    {} ({:?})", a.name, a.kind);
    }
    for n in &out.notes {
        println!("note:     {} `{}`: {}", n.field, n.value, n.reason);
    }

    let u = normalize_url("HTTPS://www.GitHub.com/Owner/Repo/tree/main/src", &tables.hosts)?;
    println!("\n{} -> {}", u.raw, u.normalized);
    Ok(())
}
