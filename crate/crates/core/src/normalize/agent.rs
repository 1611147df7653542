use serde::{Deserialize, Serialize};

use super::NormalizeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Person,
    Organization,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Agent {
    pub name: String,
    pub kind: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub email: Option<String>,
}

fn is_email(s: &str) -> bool {
    let mut parts = s.split('@');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(local), Some(domain), None) => {
            !local.is_empty() && domain.contains('.') && !domain.starts_with('.')
        }
        _ => false,
    }
}

fn split_email(raw: &str) -> (String, Option<String>) {
    if let (Some(open), Some(close)) = (raw.find('<'), raw.rfind('>')) {
        if open < close {
            let inner = raw[open + 1..close].trim();
            if is_email(inner) {
                let name = format!("{}{}", &raw[..open], &raw[close + 1..]);
                return (name, Some(inner.to_owned()));
            }
        }
    }
    let mut email = None;
    let mut rest = Vec::new();
    for tok in raw.split_whitespace() {
        let bare = tok.trim_matches(|c: char| matches!(c, '(' | ')' | ',' | ';' | '[' | ']'));
        if email.is_none() && is_email(bare) {
            email = Some(bare.to_owned());
        } else {
            rest.push(tok);
        }
    }
    (rest.join(" "), email)
}

/// Classifies a free-text author as a person or an organization.
///
/// An agent is an organization iff any configured keyword occurs in it as a
/// whole word, case-insensitively.
pub fn classify_agent(raw: &str, org_keywords: &[String]) -> Result<Agent, NormalizeError> {
    if raw.trim().is_empty() {
        return Err(NormalizeError::EmptyAgent);
    }
    let (name, email) = split_email(raw);
    let mut name = name
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_matches(|c: char| matches!(c, ',' | ';' | '-' | '(' | ')'))
        .trim()
        .to_owned();
    if name.is_empty() {
        name = email.clone().unwrap_or_default();
    }
    let is_org = name
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .any(|w| org_keywords.iter().any(|k| k.eq_ignore_ascii_case(w)));
    Ok(Agent {
        name,
        kind: if is_org { AgentKind::Organization } else { AgentKind::Person },
        email,
    })
}
