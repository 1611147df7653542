//! Software metadata observatory.
//!
//! Consolidates software metadata harvested from several registries into a
//! deduplicated collection, scores every merged tool against weighted FAIR
//! indicators, aggregates collection statistics, and serves the results over
//! HTTP.
//!
//! The pipeline is organised in layers, each persisted as its own file:
//!
//! ```text
//! dumps ──ingest──▶ raw ──normalize──▶ normalized ──integrate──▶ blocks + merged
//!                                 └──enrich──▶ enrichment ─┐         │
//!                                                          └─score──▶ profiles ──stats──▶ snapshots
//! ```
//!
//! Every stage is available as a library call; the `obs` binary is a thin
//! orchestrator over [`pipeline`]. See the crate's `examples/` directory for
//! one runnable program per capability.

pub mod api;
pub mod config;
pub mod disambiguate;
pub mod draft;
pub mod enrich;
pub mod export;
pub mod ingest;
pub mod layer;
pub mod normalize;
pub mod pipeline;
pub mod score;
pub mod stats;
pub mod unionfind;

pub use config::RunConfig;
pub use disambiguate::{Block, BlockSet, MergedTool, Resolution};
pub use ingest::{RawRecord, SourceKind};
pub use normalize::{Instance, InstanceKey, Tables};
pub use score::{FairProfile, ScoringConfig};

/// UTC timestamp used throughout the layer files.
pub type Timestamp = chrono::DateTime<chrono::Utc>;
