//! Temporal multilayer network toolkit for cross-platform hate-extremism
//! ecosystems.
//!
//! The crate is organised around a sealed, append-only log of timestamped
//! community-to-community link events:
//!
//! * [`graph`] holds the node registry, the event log, snapshots, and
//!   platform-level aggregation.
//! * [`ingest`] reads and writes the JSONL dataset format, applies the
//!   2-of-20 community labeling rule, and synthesizes seeded ecosystems.
//! * [`analytics`] computes components, one-click reach, link growth,
//!   platform connectivity, inter-platform bypass motifs, and shock response.
//! * [`pathways`] mines individual joining journeys.
//! * [`attrition`] implements the moderator-versus-hate attrition laws with
//!   closed forms, conserved quantities, RK4 integration, and sweeps.
//! * [`modsim`] runs agent-based moderation strategies against a graph.
//! * [`export`] writes GEXF and CSV edge lists.
//!
//! Data-parallel loops go through [`exec`]; with the default `parallel`
//! feature they run on rayon, otherwise sequentially. Results never depend
//! on the schedule.

pub mod analytics;
pub mod attrition;
pub mod exec;
pub mod export;
pub mod graph;
pub mod ingest;
pub mod modsim;
pub mod pathways;

pub use exec::Execution;
pub use graph::{
    CommunityNode, EcosystemGraph, GraphBuilder, GraphError, LinkEvent, LinkKind, NodeClass,
    PlatformId, Snapshot,
};

/// Timestamps are integer seconds since the Unix epoch.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;
