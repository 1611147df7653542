//! License mapping by exact lookup in a curated synonym table.
//!
//! There is deliberately no similarity matching: a raw string either folds to
//! a listed synonym or stays unmapped.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::TableError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LicenseFamily {
    Copyleft,
    Permissive,
    Other,
    Unknown,
}

impl LicenseFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            LicenseFamily::Copyleft => "copyleft",
            LicenseFamily::Permissive => "permissive",
            LicenseFamily::Other => "other",
            LicenseFamily::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LicenseRef {
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spdx_id: Option<String>,
    pub family: LicenseFamily,
}

const TRIM: &[char] = &['.', ',', ';', ':', '"', '\'', '(', ')', '[', ']', '{', '}'];

/// Casefold and trim surrounding whitespace and punctuation.
pub fn fold_license(raw: &str) -> String {
    raw.trim_matches(|c: char| c.is_whitespace() || TRIM.contains(&c))
        .to_lowercase()
}

#[derive(Debug, Clone, Default)]
pub struct LicenseTable {
    synonyms: HashMap<String, String>,
    families: BTreeMap<String, LicenseFamily>,
}

impl LicenseTable {
    /// `families`: `spdx_id<TAB>family`; `synonyms`: `spdx_id<TAB>synonym`.
    /// Lines starting with `#` are comments.
    pub fn parse(families: &str, synonyms: &str) -> Result<Self, TableError> {
        let mut table = LicenseTable::default();
        for (line, id, fam) in tsv_rows(families, "spdx families")? {
            let family = match fam {
                "copyleft" => LicenseFamily::Copyleft,
                "permissive" => LicenseFamily::Permissive,
                "other" => LicenseFamily::Other,
                _ => {
                    return Err(TableError::Row {
                        table: "spdx families",
                        line,
                        message: format!("unknown family `{fam}`"),
                    })
                }
            };
            table.families.insert(id.to_owned(), family);
        }
        for (line, id, synonym) in tsv_rows(synonyms, "spdx synonyms")? {
            if !table.families.contains_key(id) {
                return Err(TableError::Row {
                    table: "spdx synonyms",
                    line,
                    message: format!("`{id}` is not in the SPDX list"),
                });
            }
            let key = fold_license(synonym);
            if key.is_empty() {
                continue;
            }
            if let Some(prev) = table.synonyms.insert(key.clone(), id.to_owned()) {
                if prev != id {
                    return Err(TableError::Row {
                        table: "spdx synonyms",
                        line,
                        message: format!("synonym `{synonym}` maps to both {prev} and {id}"),
                    });
                }
            }
        }
        Ok(table)
    }

    pub fn is_spdx_id(&self, id: &str) -> bool {
        self.families.contains_key(id)
    }

    pub fn spdx_ids(&self) -> impl Iterator<Item = &str> {
        self.families.keys().map(String::as_str)
    }

    pub fn family_of(&self, id: &str) -> LicenseFamily {
        self.families.get(id).copied().unwrap_or(LicenseFamily::Unknown)
    }

    pub fn lookup(&self, raw: &str) -> Option<&str> {
        self.synonyms.get(&fold_license(raw)).map(String::as_str)
    }

    pub fn synonyms(&self) -> impl Iterator<Item = (&str, &str)> {
        self.synonyms.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

pub fn map_license(raw: &str, table: &LicenseTable) -> LicenseRef {
    match table.lookup(raw) {
        Some(id) => LicenseRef {
            raw: raw.to_owned(),
            spdx_id: Some(id.to_owned()),
            family: table.family_of(id),
        },
        None => LicenseRef {
            raw: raw.to_owned(),
            spdx_id: None,
            family: LicenseFamily::Unknown,
        },
    }
}

pub(super) fn tsv_rows<'a>(
    text: &'a str,
    table: &'static str,
) -> Result<Vec<(usize, &'a str, &'a str)>, TableError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line.split_once('\t').ok_or(TableError::Row {
            table,
            line: i + 1,
            message: "expected two tab-separated columns".into(),
        })?;
        rows.push((i + 1, a.trim(), b.trim()));
    }
    Ok(rows)
}
