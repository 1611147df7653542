use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::license::tsv_rows;
use super::TableError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermRef {
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edam_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// EDAM label table: casefolded label → term id.
#[derive(Debug, Clone, Default)]
pub struct TermTable {
    by_label: HashMap<String, String>,
    labels: BTreeMap<String, String>,
}

fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

impl TermTable {
    /// Parses `edam_id<TAB>label` rows. The first label listed for an id is
    /// its preferred label.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut t = TermTable::default();
        for (line, id, label) in tsv_rows(text, "edam labels")? {
            let valid = id
                .split_once('_')
                .map(|(ns, num)| {
                    matches!(ns, "format" | "topic" | "data" | "operation")
                        && num.len() == 4
                        && num.bytes().all(|b| b.is_ascii_digit())
                })
                .unwrap_or(false);
            if !valid {
                return Err(TableError::Row {
                    table: "edam labels",
                    line,
                    message: format!("malformed EDAM id `{id}`"),
                });
            }
            t.labels.entry(id.to_owned()).or_insert_with(|| label.to_owned());
            t.by_label.insert(fold(label), id.to_owned());
        }
        Ok(t)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.labels.contains_key(id)
    }

    pub fn label_of(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }
}

pub fn map_format(raw: &str, table: &TermTable) -> TermRef {
    let id = table.by_label.get(&fold(raw)).cloned();
    TermRef {
        raw: raw.to_owned(),
        label: id.as_deref().and_then(|i| table.label_of(i)).map(str::to_owned),
        edam_id: id,
    }
}
