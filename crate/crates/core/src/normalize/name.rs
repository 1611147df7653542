use super::NormalizeError;

const QUOTES: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];

/// Canonical software name: lowercase, outer whitespace and quotes stripped,
/// inner whitespace collapsed. Underscores, hyphens and suffixes are kept, so
/// `gromacs_mpi` stays distinct from `gromacs`.
pub fn normalize_name(raw: &str) -> Result<String, NormalizeError> {
    let mut s = raw.trim();
    loop {
        let stripped = s.trim_matches(|c: char| c.is_whitespace() || QUOTES.contains(&c));
        if stripped.len() == s.len() {
            break;
        }
        s = stripped;
    }
    if s.is_empty() {
        return Err(NormalizeError::EmptyName);
    }
    Ok(s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase())
}
