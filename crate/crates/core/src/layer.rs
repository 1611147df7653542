//! Line-delimited layer files and canonical JSON.
//!
//! Every persisted layer starts with a header line `{"schema":"<tag>"}`
//! followed by one JSON object per line. Objects are written with sorted keys
//! so identical content always produces identical bytes.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum LayerError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: expected schema `{expected}`, found `{found}`")]
    SchemaMismatch {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

/// Serializes `value` as compact JSON with object keys sorted.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("layer types always serialize");
    serde_json::to_string(&v).expect("json value always serializes")
}

/// Serializes `value` as 2-space indented JSON with sorted keys and a trailing newline.
pub fn canonical_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("layer types always serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("json value always serializes");
    s.push('\n');
    s
}

/// Renders a layer document (header + records) to a string.
pub fn render_lines<T: Serialize>(schema: &str, records: &[T]) -> String {
    let mut out = canonical_json(&serde_json::json!({ "schema": schema }));
    out.push('\n');
    for r in records {
        out.push_str(&canonical_json(r));
        out.push('\n');
    }
    out
}

pub fn parse_lines<T: DeserializeOwned>(
    schema: &str,
    text: &str,
    origin: &str,
) -> Result<Vec<T>, LayerError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let found = match lines.next() {
        Some((_, header)) => serde_json::from_str::<serde_json::Value>(header)
            .ok()
            .and_then(|v| v.get("schema").and_then(|s| s.as_str()).map(str::to_owned))
            .unwrap_or_default(),
        None => String::new(),
    };
    if found != schema {
        return Err(LayerError::SchemaMismatch {
            path: origin.to_owned(),
            expected: schema.to_owned(),
            found,
        });
    }
    lines
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LayerError::Malformed {
                path: origin.to_owned(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_lines<T: Serialize>(path: &Path, schema: &str, records: &[T]) -> Result<(), LayerError> {
    write_atomic(path, render_lines(schema, records).as_bytes())
}

pub fn read_lines<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>, LayerError> {
    let text = fs::read_to_string(path).map_err(|source| LayerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lines(schema, &text, &path.display().to_string())
}

/// Writes to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LayerError> {
    let io_err = |source| LayerError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

/// Lowercase hex SHA-256 truncated to `len` characters.
pub fn short_hash(parts: &[&str], len: usize) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    let mut s = hex::encode(h.finalize());
    s.truncate(len);
    s
}
