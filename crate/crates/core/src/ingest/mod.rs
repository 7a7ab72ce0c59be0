//! Dataset records, JSONL ingestion, community labeling, and the seeded
//! synthetic ecosystem generator.

mod generator;
mod io;
mod labeling;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EcosystemGraph, GraphError, NodeClass};
use crate::Timestamp;

pub use generator::{generate_ecosystem, GeneratorConfig, PlatformSpec, PostRates, ShockSpec};
pub use io::{load_dataset, write_dataset, DatasetMeta, DATASET_FILES};
pub use labeling::{classify_community, classify_recent_first, label_communities, Label, LABEL_THRESHOLD, LABEL_WINDOW};

/// Maximum number of offending lines listed in an integrity report.
pub const MAX_REPORTED_PROBLEMS: usize = 20;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: parse error: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{total} integrity problem(s):\n  {}", .problems.join("\n  "))]
    Integrity { problems: Vec<String>, total: usize },
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostFlag {
    HateSpeech,
    FascistPromotion,
}

/// Hate-type category of a post, used for event-response series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Antisemitic,
    Islamophobic,
    #[default]
    Other,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Antisemitic, Category::Islamophobic, Category::Other];

    pub fn name(self) -> &'static str {
        match self {
            Category::Antisemitic => "antisemitic",
            Category::Islamophobic => "islamophobic",
            Category::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.name() == s.trim().to_lowercase())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub community: String,
    pub t: Timestamp,
    #[serde(default)]
    pub flags: BTreeSet<PostFlag>,
    #[serde(default)]
    pub category: Category,
}

impl PostRecord {
    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// One individual joining one community. Individuals are synthetic
/// integer pseudonyms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JoinEvent {
    pub individual: u64,
    pub community: String,
    pub t: Timestamp,
}

/// A sealed graph together with its join and post logs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: EcosystemGraph,
    pub joins: Vec<JoinEvent>,
    pub posts: Vec<PostRecord>,
}

impl Dataset {
    /// Ban status of every community, keyed by id.
    pub fn ban_map(&self) -> HashMap<String, bool> {
        self.graph
            .nodes()
            .iter()
            .map(|n| (n.id.clone(), n.banned))
            .collect()
    }
}

/// Hate-core size estimate: for each platform, the mean membership of its
/// hate communities times their count, summed over platforms.
pub fn estimate_core_size(g: &EcosystemGraph) -> u64 {
    let mut per_platform: HashMap<u16, (u64, u64)> = HashMap::new();
    for idx in g.hate_nodes() {
        let e = per_platform.entry(g.platform_of(idx)).or_default();
        e.0 += g.node(idx).members;
        e.1 += 1;
    }
    let total: f64 = per_platform
        .values()
        .map(|&(sum, count)| (sum as f64 / count as f64) * count as f64)
        .sum();
    total.round() as u64
}

/// Counts of nodes per class, in `[hate, mainstream, news]` order.
pub fn class_counts(g: &EcosystemGraph) -> [usize; 3] {
    [
        g.count_class(NodeClass::HateCore),
        g.count_class(NodeClass::VulnerableMainstream),
        g.count_class(NodeClass::NewsSource),
    ]
}
