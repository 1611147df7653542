#![allow(dead_code)]

use std::path::{Path, PathBuf};

use observatory::config::RunConfig;
use observatory::ingest::parse_dump;
use observatory::normalize::cleanse;
use observatory::{Instance, SourceKind, Tables, Timestamp};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn ts(s: &str) -> Timestamp {
    s.parse().unwrap()
}

pub fn t0() -> Timestamp {
    ts("2026-01-15T00:00:00Z")
}

/// Parses and cleanses one dump with the bundled tables.
pub fn instances(source: SourceKind, rel: &str) -> Vec<Instance> {
    let bytes = std::fs::read(fixture(rel)).unwrap();
    let dump = parse_dump(source, &bytes, t0()).unwrap();
    assert!(dump.rejects.is_empty(), "{:?}", dump.rejects);
    dump.records
        .iter()
        .map(|r| cleanse(r, Tables::bundled()).unwrap().instance)
        .collect()
}

/// Copies a fixture directory into a fresh temp dir.
pub fn copy_fixture(rel: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixture(rel)).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    dir
}

/// The mixed corpus configured against a private copy.
pub fn mixed_config() -> (tempfile::TempDir, RunConfig) {
    let dir = copy_fixture("mixed");
    let cfg = RunConfig::load_unchecked(&dir.path().join("obs.toml")).unwrap();
    (dir, cfg)
}

pub fn obs() -> std::process::Command {
    let mut c = std::process::Command::new(env!("CARGO_BIN_EXE_obs"));
    c.env_remove("OBS_TRANSPORT");
    c
}
