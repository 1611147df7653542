//! Stage orchestration over layer files.
//!
//! Each stage reads the layers written by earlier stages from the data
//! directory, so any stage can be re-run on its own once its inputs exist.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};
use crate::disambiguate::{
    apply_decision_file, integrate, load_state, render_issue, AgreementProxy, BlockStatus, Catalog, Decision,
    DisambiguateError, IntegrateOptions, MergedTool, MERGED_SCHEMA,
};
use crate::enrich::{Enricher, Enrichment, SharedTransport, ENRICH_SCHEMA};
use crate::ingest::{
    extract_repo_candidates, ingest_repo_document, parse_dump, IngestError, RawRecord, RejectReport, SourceKind,
    RAW_SCHEMA, REJECT_SCHEMA,
};
use crate::layer::{canonical_json_pretty, read_lines, write_atomic, write_lines, LayerError};
use crate::normalize::{cleanse, normalize_url, Instance, Tables, UrlKind, NORMALIZED_SCHEMA};
use crate::score::{score_collection, FairProfile, ScoreError, ScoringConfig, PROFILES_SCHEMA};
use crate::stats::{compute_all, write_snapshot, StatsError};
use crate::Timestamp;

pub const NOTES_SCHEMA: &str = "observatory-normalize-notes/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Normalize,
    Enrich,
    Integrate,
    Score,
    Stats,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Normalize,
        Stage::Enrich,
        Stage::Integrate,
        Stage::Score,
        Stage::Stats,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Normalize => "normalize",
            Stage::Enrich => "enrich",
            Stage::Integrate => "integrate",
            Stage::Score => "score",
            Stage::Stats => "stats",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage} needs the {layer} layer at {path}; run the earlier stages first")]
    MissingUpstreamLayer { stage: Stage, layer: &'static str, path: String },
    #[error("another run holds the lock {0}")]
    Locked(String),
    #[error("{source_kind} dump: {error}")]
    Ingest { source_kind: SourceKind, error: IngestError },
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Disambiguate(#[from] DisambiguateError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// File names inside the data directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Layout { dir: dir.into() }
    }

    pub fn raw(&self) -> PathBuf {
        self.dir.join("raw.jsonl")
    }
    pub fn rejects(&self) -> PathBuf {
        self.dir.join("rejects.jsonl")
    }
    pub fn normalized(&self) -> PathBuf {
        self.dir.join("normalized.jsonl")
    }
    pub fn notes(&self) -> PathBuf {
        self.dir.join("normalize-notes.jsonl")
    }
    pub fn enrichment(&self) -> PathBuf {
        self.dir.join("enrichment.jsonl")
    }
    pub fn blocks(&self) -> PathBuf {
        self.dir.join("blocks.json")
    }
    pub fn merged(&self) -> PathBuf {
        self.dir.join("merged.jsonl")
    }
    pub fn profiles(&self) -> PathBuf {
        self.dir.join("profiles.jsonl")
    }
    pub fn report(&self) -> PathBuf {
        self.dir.join("report.json")
    }
    pub fn lock(&self) -> PathBuf {
        self.dir.join(".lock")
    }
}

/// Counts per stage; `None` for stages that did not run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub snapshot_id: String,
    pub stages: Vec<Stage>,
    pub raw: Option<usize>,
    pub rejected: Option<usize>,
    pub mined_repositories: Option<usize>,
    pub normalized: Option<usize>,
    pub normalize_notes: Option<usize>,
    pub enriched: Option<usize>,
    pub blocks: Option<usize>,
    pub conflicts: Option<usize>,
    pub rescued: Option<usize>,
    pub proxy_resolved: Option<usize>,
    pub human_resolved: Option<usize>,
    pub escalated: Option<usize>,
    pub remaining_conflicts: Option<usize>,
    pub reused_blocks: Option<usize>,
    pub merged: Option<usize>,
    pub profiles: Option<usize>,
    pub stats_collections: Option<usize>,
    pub durations_ms: BTreeMap<Stage, u64>,
}

impl PipelineReport {
    /// Report arithmetic: merged ≤ normalized, and every conflict is
    /// accounted for exactly once.
    pub fn check(&self) -> Result<(), String> {
        if let (Some(m), Some(n)) = (self.merged, self.normalized) {
            if m > n {
                return Err(format!("merged {m} > normalized {n}"));
            }
        }
        if let (Some(c), Some(r), Some(p), Some(h), Some(e), Some(rem)) = (
            self.conflicts,
            self.rescued,
            self.proxy_resolved,
            self.human_resolved,
            self.escalated,
            self.remaining_conflicts,
        ) {
            if r + p + h + e + rem != c {
                return Err(format!("{r} + {p} + {h} + {e} + {rem} != {c} conflicts"));
            }
        }
        Ok(())
    }

    /// Conflicts still needing a human.
    pub fn unresolved(&self) -> usize {
        self.escalated.unwrap_or(0) + self.remaining_conflicts.unwrap_or(0)
    }

    pub fn summary(&self) -> String {
        let mut out = format!("snapshot {}\n", self.snapshot_id);
        let rows: [(&str, Option<usize>); 18] = [
            ("raw", self.raw),
            ("rejected", self.rejected),
            ("mined_repositories", self.mined_repositories),
            ("normalized", self.normalized),
            ("normalize_notes", self.normalize_notes),
            ("enriched", self.enriched),
            ("blocks", self.blocks),
            ("conflicts", self.conflicts),
            ("rescued", self.rescued),
            ("proxy_resolved", self.proxy_resolved),
            ("human_resolved", self.human_resolved),
            ("escalated", self.escalated),
            ("remaining_conflicts", self.remaining_conflicts),
            ("reused_blocks", self.reused_blocks),
            ("merged", self.merged),
            ("profiles", self.profiles),
            ("stats_collections", self.stats_collections),
            ("unresolved", (self.escalated.is_some()).then(|| self.unresolved())),
        ];
        for (k, v) in rows {
            if let Some(v) = v {
                out.push_str(&format!("{k:>20}: {v}\n"));
            }
        }
        for (stage, ms) in &self.durations_ms {
            out.push_str(&format!("{:>20}: {ms} ms\n", format!("{stage} time")));
        }
        out
    }
}

/// Normalization problem attached to one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberNote {
    pub member: String,
    pub field: String,
    pub value: String,
    pub reason: String,
}

struct RunLock(PathBuf);

impl RunLock {
    fn acquire(path: PathBuf) -> Result<RunLock, PipelineError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|source| LayerError::Io { path: parent.display().to_string(), source })?;
        }
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(RunLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Locked(path.display().to_string()))
            }
            Err(source) => Err(LayerError::Io { path: path.display().to_string(), source }.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

pub fn snapshot_id(at: Timestamp) -> String {
    at.format("%Y%m%dT%H%M%SZ").to_string()
}

/// A configured pipeline.
pub struct Pipeline {
    pub config: RunConfig,
    pub tables: Tables,
    pub scoring: ScoringConfig,
    pub transport: SharedTransport,
    pub proxy: Box<dyn AgreementProxy>,
    pub now: Timestamp,
    pub layout: Layout,
}

fn read_required<T: serde::de::DeserializeOwned>(
    path: PathBuf,
    schema: &str,
    stage: Stage,
    layer: &'static str,
) -> Result<Vec<T>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingUpstreamLayer { stage, layer, path: path.display().to_string() });
    }
    Ok(read_lines(&path, schema)?)
}

fn read_optional<T: serde::de::DeserializeOwned>(path: PathBuf, schema: &str) -> Result<Vec<T>, PipelineError> {
    if path.exists() {
        Ok(read_lines(&path, schema)?)
    } else {
        Ok(Vec::new())
    }
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Pipeline, PipelineError> {
        let now = config.snapshot_at.unwrap_or_else(chrono::Utc::now);
        Ok(Pipeline {
            tables: config.tables()?,
            scoring: config.scoring()?,
            transport: config.transport()?,
            proxy: Box::new(config.proxy()),
            layout: Layout::new(config.data_dir()),
            now,
            config,
        })
    }

    pub fn with_proxy(mut self, proxy: Box<dyn AgreementProxy>) -> Self {
        self.proxy = proxy;
        self
    }

    pub fn with_transport(mut self, transport: SharedTransport) -> Self {
        self.transport = transport;
        self
    }

    /// Runs the requested stages in pipeline order.
    pub fn run(&self, stages: &[Stage]) -> Result<PipelineReport, PipelineError> {
        let _lock = RunLock::acquire(self.layout.lock())?;
        let wanted: BTreeSet<Stage> = stages.iter().copied().collect();
        let mut report = PipelineReport {
            snapshot_id: snapshot_id(self.now),
            stages: wanted.iter().copied().collect(),
            ..Default::default()
        };
        for stage in wanted {
            let start = Instant::now();
            match stage {
                Stage::Ingest => self.ingest(&mut report)?,
                Stage::Normalize => self.normalize(&mut report)?,
                Stage::Enrich => self.enrich(&mut report)?,
                Stage::Integrate => self.integrate(&mut report)?,
                Stage::Score => self.score(&mut report)?,
                Stage::Stats => self.stats(&mut report)?,
            }
            report.durations_ms.insert(stage, start.elapsed().as_millis() as u64);
            tracing::info!(%stage, ms = report.durations_ms[&stage], "stage finished");
        }
        write_atomic(&self.layout.report(), canonical_json_pretty(&report).as_bytes())?;
        Ok(report)
    }

    fn ingest(&self, report: &mut PipelineReport) -> Result<(), PipelineError> {
        let mut records: Vec<RawRecord> = Vec::new();
        let mut rejects: Vec<RejectReport> = Vec::new();
        for (source, path) in &self.config.sources {
            let path = self.config.resolve(path);
            let bytes = std::fs::read(&path)
                .map_err(|source| LayerError::Io { path: path.display().to_string(), source })?;
            let parsed = parse_dump(*source, &bytes, self.now)
                .map_err(|error| PipelineError::Ingest { source_kind: *source, error })?;
            records.extend(parsed.records);
            rejects.extend(parsed.rejects);
        }
        let mined = if self.config.mine_repositories && self.transport.enabled() {
            self.mine_repositories(&records)
        } else {
            Vec::new()
        };
        report.mined_repositories = Some(mined.len());
        records.extend(mined);
        report.raw = Some(records.len());
        report.rejected = Some(rejects.len());
        write_lines(&self.layout.raw(), RAW_SCHEMA, &records)?;
        write_lines(&self.layout.rejects(), REJECT_SCHEMA, &rejects)?;
        Ok(())
    }

    /// Repository documents for code-host links not already ingested.
    fn mine_repositories(&self, records: &[RawRecord]) -> Vec<RawRecord> {
        let hosts = &self.tables.hosts;
        let known: BTreeSet<&str> = records
            .iter()
            .filter(|r| r.source == SourceKind::Github)
            .map(|r| r.source_id.as_str())
            .collect();
        let mut targets: BTreeMap<String, String> = BTreeMap::new();
        for r in records.iter().filter(|r| r.source != SourceKind::Github) {
            for raw in extract_repo_candidates(r, hosts) {
                if let Ok(u) = normalize_url(&raw, hosts) {
                    if u.kind == UrlKind::Repository && !known.contains(u.normalized.as_str()) {
                        targets.entry(u.normalized).or_insert(raw);
                    }
                }
            }
        }
        let targets: Vec<(String, String)> = targets.into_iter().collect();
        targets
            .par_iter()
            .filter_map(|(path, raw)| match self.transport.fetch_repository(path) {
                Ok(bytes) => match ingest_repo_document(raw, &bytes, hosts, self.now) {
                    Ok(rec) => Some(rec),
                    Err(e) => {
                        tracing::warn!(repo = %path, error = %e, "unreadable repository document");
                        None
                    }
                },
                Err(e) => {
                    tracing::debug!(repo = %path, error = %e, "repository not mined");
                    None
                }
            })
            .collect()
    }

    fn normalize(&self, report: &mut PipelineReport) -> Result<(), PipelineError> {
        let raw: Vec<RawRecord> = read_required(self.layout.raw(), RAW_SCHEMA, Stage::Normalize, "raw")?;
        let results: Vec<_> = raw.par_iter().map(|r| (r, cleanse(r, &self.tables))).collect();
        let mut instances = Vec::new();
        let mut notes = Vec::new();
        for (r, result) in results {
            let member = format!("{}:{}", r.source, r.source_id);
            match result {
                Ok(c) => {
                    notes.extend(c.notes.into_iter().map(|n| MemberNote {
                        member: member.clone(),
                        field: n.field,
                        value: n.value,
                        reason: n.reason,
                    }));
                    instances.push(c.instance);
                }
                Err(e) => notes.push(MemberNote {
                    member,
                    field: "name".into(),
                    value: r.name_raw.clone(),
                    reason: format!("record dropped: {e}"),
                }),
            }
        }
        instances.sort_by(|a, b| a.key.cmp(&b.key));
        report.normalized = Some(instances.len());
        report.normalize_notes = Some(notes.len());
        write_lines(&self.layout.normalized(), NORMALIZED_SCHEMA, &instances)?;
        write_lines(&self.layout.notes(), NOTES_SCHEMA, &notes)?;
        Ok(())
    }

    fn enrich(&self, report: &mut PipelineReport) -> Result<(), PipelineError> {
        let instances: Vec<Instance> =
            read_required(self.layout.normalized(), NORMALIZED_SCHEMA, Stage::Enrich, "normalized")?;
        let records: Vec<Enrichment> = if self.transport.enabled() {
            let enricher = Enricher::new(self.transport.clone(), self.config.enrich.clone(), self.now);
            instances
                .par_iter()
                .map(|i| enricher.enrich(i))
                .filter(|e| !e.publications.is_empty() || !e.availability.is_empty())
                .collect()
        } else {
            tracing::info!("transport disabled; enrichment skipped");
            Vec::new()
        };
        report.enriched = Some(records.len());
        write_lines(&self.layout.enrichment(), ENRICH_SCHEMA, &records)?;
        Ok(())
    }

    fn integrate(&self, report: &mut PipelineReport) -> Result<(), PipelineError> {
        let instances: Vec<Instance> =
            read_required(self.layout.normalized(), NORMALIZED_SCHEMA, Stage::Integrate, "normalized")?;
        let state = self.layout.blocks();
        let previous = if state.exists() { Some(load_state(&state)?) } else { None };
        let opts = IntegrateOptions {
            priority: self.config.priority(),
            proxy_retries: self.config.proxy.retries,
            now: self.now,
            state_path: Some(state),
        };
        let outcome = integrate(&instances, previous.as_ref(), self.proxy.as_ref(), &opts)?;
        let r = &outcome.report;
        report.normalized.get_or_insert(instances.len());
        report.blocks = Some(r.blocks);
        report.conflicts = Some(r.conflicts);
        report.rescued = Some(r.rescued);
        report.proxy_resolved = Some(r.proxy_resolved);
        report.human_resolved = Some(r.human_resolved);
        report.escalated = Some(r.escalated);
        report.remaining_conflicts = Some(r.remaining);
        report.reused_blocks = Some(r.reused);
        report.merged = Some(r.merged);
        write_lines(&self.layout.merged(), MERGED_SCHEMA, &outcome.merged)?;
        Ok(())
    }

    /// Enrichment records grouped by merged tool.
    fn enrichment_by_tool(&self, tools: &[MergedTool]) -> Result<HashMap<String, Vec<Enrichment>>, PipelineError> {
        let records: Vec<Enrichment> = read_optional(self.layout.enrichment(), ENRICH_SCHEMA)?;
        let by_member: HashMap<String, Enrichment> = records.into_iter().map(|e| (e.key.member_ref(), e)).collect();
        Ok(tools
            .iter()
            .map(|t| {
                let found = t
                    .members
                    .iter()
                    .filter_map(|k| by_member.get(&k.member_ref()).cloned())
                    .collect();
                (t.tool_id.clone(), found)
            })
            .collect())
    }

    fn score(&self, report: &mut PipelineReport) -> Result<(), PipelineError> {
        let tools: Vec<MergedTool> = read_required(self.layout.merged(), MERGED_SCHEMA, Stage::Score, "merged")?;
        let availability = self
            .enrichment_by_tool(&tools)?
            .into_iter()
            .map(|(id, es)| (id, es.into_iter().flat_map(|e| e.availability).collect()))
            .collect();
        let profiles = score_collection(&tools, &availability, &self.scoring, self.now)?;
        report.profiles = Some(profiles.len());
        write_lines(&self.layout.profiles(), PROFILES_SCHEMA, &profiles)?;
        Ok(())
    }

    fn stats(&self, report: &mut PipelineReport) -> Result<(), PipelineError> {
        let tools: Vec<MergedTool> = read_required(self.layout.merged(), MERGED_SCHEMA, Stage::Stats, "merged")?;
        let profiles: Vec<FairProfile> =
            read_required(self.layout.profiles(), PROFILES_SCHEMA, Stage::Stats, "profiles")?;
        let publications = self
            .enrichment_by_tool(&tools)?
            .into_iter()
            .map(|(id, es)| (id, es.into_iter().flat_map(|e| e.publications).collect()))
            .collect();
        let all = compute_all(&tools, &profiles, &publications, self.now)?;
        for s in &all {
            write_snapshot(&self.layout.dir, s)?;
        }
        report.stats_collections = Some(all.len());
        Ok(())
    }

    /// Writes `issue-<block_id>.md` for every escalated block.
    pub fn export_issues(&self, dir: &Path) -> Result<usize, PipelineError> {
        let set = load_state(&self.layout.blocks())?;
        let instances: Vec<Instance> =
            read_required(self.layout.normalized(), NORMALIZED_SCHEMA, Stage::Integrate, "normalized")?;
        let catalog = Catalog::new(instances);
        let mut n = 0;
        for (id, block) in &set.blocks {
            if block.status != BlockStatus::Escalated {
                continue;
            }
            let doc = render_issue(&set, id, &catalog)?;
            write_atomic(&dir.join(format!("issue-{id}.md")), doc.as_bytes())?;
            n += 1;
        }
        Ok(n)
    }

    /// Applies every `decision-*.json` in `dir`, in name order.
    pub fn apply_decisions(&self, dir: &Path) -> Result<usize, PipelineError> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|source| LayerError::Io { path: dir.display().to_string(), source })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("decision-") && n.ends_with(".json"))
            })
            .collect();
        files.sort();
        let _lock = RunLock::acquire(self.layout.lock())?;
        for f in &files {
            apply_decision_file(&self.layout.blocks(), f, self.now)?;
        }
        Ok(files.len())
    }

    pub fn load_merged(&self) -> Result<Vec<MergedTool>, PipelineError> {
        read_required(self.layout.merged(), MERGED_SCHEMA, Stage::Score, "merged")
    }
}

/// Name of a decision file for a block.
pub fn decision_file_name(block_id: &str) -> String {
    Decision::file_name(block_id)
}
