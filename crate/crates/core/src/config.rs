//! Run configuration (`obs.toml`). Relative paths resolve against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::disambiguate::{JaccardProxy, Priority};
use crate::enrich::{DisabledTransport, EnrichSettings, SharedTransport, StubTransport};
use crate::ingest::SourceKind;
use crate::normalize::Tables;
use crate::score::ScoringConfig;
use crate::Timestamp;

pub const TRANSPORT_ENV: &str = "OBS_TRANSPORT";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{what} does not exist: {path}")]
    MissingPath { what: String, path: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    #[default]
    Stub,
    Live,
    Disabled,
}

impl FromStr for TransportMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "stub" => Ok(TransportMode::Stub),
            "live" => Ok(TransportMode::Live),
            "disabled" => Ok(TransportMode::Disabled),
            other => Err(ConfigError::Invalid(format!("unknown transport mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFiles {
    pub spdx_synonyms: Option<PathBuf>,
    pub spdx_families: Option<PathBuf>,
    pub edam_labels: Option<PathBuf>,
    /// Code hosts and organization keywords.
    pub normalize_rules: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProxySettings {
    pub tau_same: f64,
    pub tau_diff: f64,
    pub retries: u32,
}

impl Default for ProxySettings {
    fn default() -> Self {
        let j = JaccardProxy::default();
        ProxySettings { tau_same: j.tau_same, tau_diff: j.tau_diff, retries: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSettings {
    pub mode: TransportMode,
    /// Fixture for stub mode.
    pub stub_fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServeSettings {
    pub bind: SocketAddr,
    /// Allowed CORS origin; `*` allows any.
    pub cors_origin: String,
    /// Built UI assets served under `/`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub static_dir: Option<PathBuf>,
    /// Seconds between checks for a newer snapshot; 0 disables reloading.
    pub reload_secs: u64,
}

impl Default for ServeSettings {
    fn default() -> Self {
        ServeSettings {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            cors_origin: "*".into(),
            static_dir: None,
            reload_secs: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Timestamp stamped on every output of a run; defaults to the start time.
    #[serde(default)]
    pub snapshot_at: Option<Timestamp>,
    /// Layer files, block state and stats snapshots.
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Issue documents and dry-run pull requests.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub sources: BTreeMap<SourceKind, PathBuf>,
    #[serde(default)]
    pub tables: TableFiles,
    #[serde(default)]
    pub priority: Option<Vec<SourceKind>>,
    #[serde(default)]
    pub proxy: ProxySettings,
    #[serde(default)]
    pub scoring: Option<PathBuf>,
    #[serde(default)]
    pub enrich: EnrichSettings,
    /// Follow repository links found in registry records.
    #[serde(default = "yes")]
    pub mine_repositories: bool,
    #[serde(default)]
    pub transport: TransportSettings,
    #[serde(default)]
    pub serve: ServeSettings,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("state")
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl RunConfig {
    /// Reads, applies the `OBS_TRANSPORT` override and validates.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::load_unchecked(path)?;
        if let Ok(mode) = std::env::var(TRANSPORT_ENV) {
            cfg.transport.mode = mode.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads without validation or environment overrides.
    pub fn load_unchecked(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
        let mut cfg = RunConfig::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.resolve(&self.data_dir)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn state_path(&self) -> PathBuf {
        self.data_dir().join("blocks.json")
    }

    /// Checks referenced files, priority order and thresholds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let must_exist = |what: &str, p: &Path| -> Result<(), ConfigError> {
            let full = self.resolve(p);
            if full.exists() {
                Ok(())
            } else {
                Err(ConfigError::MissingPath { what: what.to_owned(), path: full.display().to_string() })
            }
        };
        if self.sources.is_empty() {
            return Err(ConfigError::Invalid("no sources configured".into()));
        }
        for (s, p) in &self.sources {
            must_exist(&format!("{s} dump"), p)?;
        }
        for (what, p) in [
            ("spdx_synonyms", &self.tables.spdx_synonyms),
            ("spdx_families", &self.tables.spdx_families),
            ("edam_labels", &self.tables.edam_labels),
            ("normalize_rules", &self.tables.normalize_rules),
            ("scoring config", &self.scoring),
        ] {
            if let Some(p) = p {
                must_exist(what, p)?;
            }
        }
        if let Some(order) = &self.priority {
            let configured: Vec<SourceKind> = self.sources.keys().copied().collect();
            if !Priority(order.clone()).is_permutation_of(&configured) {
                return Err(ConfigError::Invalid(format!(
                    "priority {order:?} is not a permutation of the configured sources {configured:?}"
                )));
            }
        }
        let p = &self.proxy;
        if !(0.0..=1.0).contains(&p.tau_diff) || !(0.0..=1.0).contains(&p.tau_same) || p.tau_diff >= p.tau_same {
            return Err(ConfigError::Invalid("proxy thresholds need 0 <= tau_diff < tau_same <= 1".into()));
        }
        if self.transport.mode == TransportMode::Stub {
            if let Some(f) = &self.transport.stub_fixture {
                must_exist("stub fixture", f)?;
            }
        }
        if self.transport.mode == TransportMode::Live && !cfg!(feature = "live") {
            return Err(ConfigError::Invalid("live transport needs the `live` feature".into()));
        }
        Ok(())
    }

    /// Source order: the configured one, or the default restricted to the
    /// configured sources.
    pub fn priority(&self) -> Priority {
        match &self.priority {
            Some(p) => Priority(p.clone()),
            None => Priority(
                Priority::default()
                    .0
                    .into_iter()
                    .filter(|s| self.sources.contains_key(s))
                    .collect(),
            ),
        }
    }

    pub fn proxy(&self) -> JaccardProxy {
        JaccardProxy { tau_same: self.proxy.tau_same, tau_diff: self.proxy.tau_diff }
    }

    pub fn tables(&self) -> Result<Tables, ConfigError> {
        let r = |p: &Option<PathBuf>| p.as_ref().map(|p| self.resolve(p));
        Tables::load(
            r(&self.tables.spdx_families).as_deref(),
            r(&self.tables.spdx_synonyms).as_deref(),
            r(&self.tables.edam_labels).as_deref(),
            r(&self.tables.normalize_rules).as_deref(),
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn scoring(&self) -> Result<ScoringConfig, ConfigError> {
        match &self.scoring {
            Some(p) => ScoringConfig::load(&self.resolve(p)).map_err(|e| ConfigError::Invalid(e.to_string())),
            None => Ok(ScoringConfig::bundled()),
        }
    }

    pub fn transport(&self) -> Result<SharedTransport, ConfigError> {
        match self.transport.mode {
            TransportMode::Disabled => Ok(Arc::new(DisabledTransport)),
            TransportMode::Stub => match &self.transport.stub_fixture {
                Some(f) => StubTransport::from_file(&self.resolve(f))
                    .map(|t| Arc::new(t) as SharedTransport)
                    .map_err(ConfigError::Invalid),
                None => Ok(Arc::new(StubTransport::new(Default::default()))),
            },
            #[cfg(feature = "live")]
            TransportMode::Live => Ok(Arc::new(crate::enrich::LiveTransport::new(&self.enrich))),
            #[cfg(not(feature = "live"))]
            TransportMode::Live => Err(ConfigError::Invalid("live transport needs the `live` feature".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal() {
        let c = RunConfig::parse("[sources]\nbiotools = \"b.json\"\n").unwrap();
        assert_eq!(c.data_dir, PathBuf::from("state"));
        assert_eq!(c.transport.mode, TransportMode::Stub);
        assert_eq!(c.priority().0, vec![SourceKind::Biotools]);
        assert!(c.mine_repositories);
    }

    #[test]
    fn priority_must_be_permutation() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.json"), "[]").unwrap();
        let mut c = RunConfig::parse("priority = [\"bioconda\"]\n[sources]\nbiotools = \"b.json\"\n").unwrap();
        c.base_dir = dir.path().to_path_buf();
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))));
        c.priority = Some(vec![SourceKind::Biotools]);
        c.validate().unwrap();
    }

    #[test]
    fn missing_dump() {
        let c = RunConfig::parse("[sources]\nbiotools = \"/nonexistent/b.json\"\n").unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::MissingPath { .. })));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[sources]\nbiotools = \"b\"\nbogus = 1\n").is_err());
    }
}
