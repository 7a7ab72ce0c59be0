//! Ecosystem graph: node registry, append-only link-event log, snapshots,
//! and platform-level aggregation.
//!
//! Construction happens through [`GraphBuilder`], which accepts events in
//! any order. [`GraphBuilder::seal`] sorts and freezes the log into an
//! [`EcosystemGraph`]; there is no way to append to a sealed graph.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Timestamp;

/// Dense index of a registered node, assigned in registration order.
pub type NodeIdx = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node id `{0}` is already registered")]
    DuplicateId(String),
    #[error("platform `{0}` is not in the declared platform set")]
    UnknownPlatform(String),
    #[error("platform `{0}` declared twice")]
    DuplicatePlatform(String),
    #[error("invalid platform name `{0}`")]
    InvalidPlatform(String),
    #[error("event endpoint `{0}` is not registered")]
    UnknownEndpoint(String),
    #[error("event source `{0}` is not a hate-core community")]
    SourceNotHateCore(String),
    #[error("event kind {kind:?} does not match target `{target}` of class {klass:?}")]
    KindMismatch {
        kind: LinkKind,
        target: String,
        klass: NodeClass,
    },
    #[error("event time {t} outside dataset range [{start}, {end}]")]
    OutOfRange {
        t: Timestamp,
        start: Timestamp,
        end: Timestamp,
    },
}

/// Case-normalized platform name, e.g. `telegram`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PlatformId(String);

impl PlatformId {
    pub fn new(name: &str) -> Result<Self, GraphError> {
        let norm = name.trim().to_lowercase();
        if norm.is_empty() || norm.chars().any(char::is_whitespace) {
            return Err(GraphError::InvalidPlatform(name.to_string()));
        }
        Ok(PlatformId(norm))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PlatformId {
    type Error = GraphError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        PlatformId::new(&s)
    }
}

impl From<PlatformId> for String {
    fn from(p: PlatformId) -> String {
        p.0
    }
}

impl fmt::Display for PlatformId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    HateCore,
    VulnerableMainstream,
    NewsSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    CoreToCore,
    CoreToMainstream,
    CoreToNews,
}

impl LinkKind {
    pub const ALL: [LinkKind; 3] = [
        LinkKind::CoreToCore,
        LinkKind::CoreToMainstream,
        LinkKind::CoreToNews,
    ];

    /// The only kind a link into a node of class `klass` can have.
    pub fn for_target(klass: NodeClass) -> LinkKind {
        match klass {
            NodeClass::HateCore => LinkKind::CoreToCore,
            NodeClass::VulnerableMainstream => LinkKind::CoreToMainstream,
            NodeClass::NewsSource => LinkKind::CoreToNews,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityNode {
    pub id: String,
    pub platform: PlatformId,
    pub klass: NodeClass,
    pub members: u64,
    pub created_at: Timestamp,
    /// Ban status at the end of the study period.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub banned: bool,
}

impl CommunityNode {
    pub fn new(
        id: impl Into<String>,
        platform: PlatformId,
        klass: NodeClass,
        members: u64,
        created_at: Timestamp,
    ) -> Self {
        CommunityNode {
            id: id.into(),
            platform,
            klass,
            members,
            created_at,
            banned: false,
        }
    }
}

/// A link event as it appears in files: endpoints referenced by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEvent {
    pub source: String,
    pub target: String,
    pub t: Timestamp,
    pub kind: LinkKind,
}

/// A link event with resolved endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub source: NodeIdx,
    pub target: NodeIdx,
    pub t: Timestamp,
    pub kind: LinkKind,
}

#[derive(Debug, Clone)]
pub struct GraphBuilder {
    platforms: Vec<PlatformId>,
    platform_index: HashMap<PlatformId, u16>,
    nodes: Vec<CommunityNode>,
    node_platform: Vec<u16>,
    index: HashMap<String, NodeIdx>,
    events: Vec<Event>,
    time_range: Option<(Timestamp, Timestamp)>,
}

impl GraphBuilder {
    pub fn new(platforms: impl IntoIterator<Item = PlatformId>) -> Result<Self, GraphError> {
        let mut b = GraphBuilder {
            platforms: Vec::new(),
            platform_index: HashMap::new(),
            nodes: Vec::new(),
            node_platform: Vec::new(),
            index: HashMap::new(),
            events: Vec::new(),
            time_range: None,
        };
        for p in platforms {
            if b.platform_index.contains_key(&p) {
                return Err(GraphError::DuplicatePlatform(p.0));
            }
            b.platform_index.insert(p.clone(), b.platforms.len() as u16);
            b.platforms.push(p);
        }
        Ok(b)
    }

    /// Declares the dataset time range; later appends outside it are rejected.
    pub fn with_time_range(mut self, start: Timestamp, end: Timestamp) -> Self {
        self.time_range = Some((start.min(end), start.max(end)));
        self
    }

    pub fn register_node(&mut self, node: CommunityNode) -> Result<NodeIdx, GraphError> {
        let platform = *self
            .platform_index
            .get(&node.platform)
            .ok_or_else(|| GraphError::UnknownPlatform(node.platform.0.clone()))?;
        if self.index.contains_key(&node.id) {
            return Err(GraphError::DuplicateId(node.id));
        }
        let idx = self.nodes.len() as NodeIdx;
        self.index.insert(node.id.clone(), idx);
        self.node_platform.push(platform);
        self.nodes.push(node);
        Ok(idx)
    }

    pub fn index_of(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn append_event(&mut self, e: &LinkEvent) -> Result<(), GraphError> {
        let source = self
            .index_of(&e.source)
            .ok_or_else(|| GraphError::UnknownEndpoint(e.source.clone()))?;
        let target = self
            .index_of(&e.target)
            .ok_or_else(|| GraphError::UnknownEndpoint(e.target.clone()))?;
        let kind = self.check(source, target, e.t)?;
        if kind != e.kind {
            return Err(GraphError::KindMismatch {
                kind: e.kind,
                target: e.target.clone(),
                klass: self.nodes[target as usize].klass,
            });
        }
        self.events.push(Event {
            source,
            target,
            t: e.t,
            kind,
        });
        Ok(())
    }

    /// Appends by node index; the kind is inferred from the target class.
    pub fn append_indexed(
        &mut self,
        source: NodeIdx,
        target: NodeIdx,
        t: Timestamp,
    ) -> Result<(), GraphError> {
        for idx in [source, target] {
            if idx as usize >= self.nodes.len() {
                return Err(GraphError::UnknownEndpoint(format!("#{idx}")));
            }
        }
        let kind = self.check(source, target, t)?;
        self.events.push(Event {
            source,
            target,
            t,
            kind,
        });
        Ok(())
    }

    fn check(&self, source: NodeIdx, target: NodeIdx, t: Timestamp) -> Result<LinkKind, GraphError> {
        let src = &self.nodes[source as usize];
        if src.klass != NodeClass::HateCore {
            return Err(GraphError::SourceNotHateCore(src.id.clone()));
        }
        if let Some((start, end)) = self.time_range {
            if t < start || t > end {
                return Err(GraphError::OutOfRange { t, start, end });
            }
        }
        Ok(LinkKind::for_target(self.nodes[target as usize].klass))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    /// Sorts the event log by time (stable, so ties keep ingestion order)
    /// and freezes the graph.
    pub fn seal(mut self) -> EcosystemGraph {
        self.events.sort_by_key(|e| e.t);
        let time_range = self.time_range.unwrap_or_else(|| {
            match (self.events.first(), self.events.last()) {
                (Some(a), Some(b)) => (a.t, b.t),
                _ => (0, 0),
            }
        });
        EcosystemGraph {
            platforms: self.platforms,
            nodes: self.nodes,
            node_platform: self.node_platform,
            index: self.index,
            events: self.events,
            time_range,
        }
    }
}

/// A sealed ecosystem graph. Immutable and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct EcosystemGraph {
    platforms: Vec<PlatformId>,
    nodes: Vec<CommunityNode>,
    node_platform: Vec<u16>,
    index: HashMap<String, NodeIdx>,
    events: Vec<Event>,
    time_range: (Timestamp, Timestamp),
}

impl EcosystemGraph {
    pub fn platforms(&self) -> &[PlatformId] {
        &self.platforms
    }

    pub fn nodes(&self) -> &[CommunityNode] {
        &self.nodes
    }

    pub fn node(&self, idx: NodeIdx) -> &CommunityNode {
        &self.nodes[idx as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    /// Index into [`Self::platforms`] of the node's platform.
    pub fn platform_of(&self, idx: NodeIdx) -> u16 {
        self.node_platform[idx as usize]
    }

    pub fn platform_index(&self, p: &PlatformId) -> Option<u16> {
        self.platforms.iter().position(|q| q == p).map(|i| i as u16)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn time_range(&self) -> (Timestamp, Timestamp) {
        self.time_range
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn count_class(&self, klass: NodeClass) -> usize {
        self.nodes.iter().filter(|n| n.klass == klass).count()
    }

    pub fn hate_nodes(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.klass == NodeClass::HateCore)
            .map(|(i, _)| i as NodeIdx)
    }

    /// The prefix of the sorted log with `t <= as_of`.
    pub fn events_until(&self, as_of: Timestamp) -> &[Event] {
        let n = self.events.partition_point(|e| e.t <= as_of);
        &self.events[..n]
    }

    pub fn to_link_event(&self, e: &Event) -> LinkEvent {
        LinkEvent {
            source: self.nodes[e.source as usize].id.clone(),
            target: self.nodes[e.target as usize].id.clone(),
            t: e.t,
            kind: e.kind,
        }
    }

    /// Event totals per [`LinkKind`] up to `as_of`, indexed by `LinkKind::index`.
    pub fn kind_totals(&self, as_of: Timestamp) -> [u64; 3] {
        let mut out = [0u64; 3];
        for e in self.events_until(as_of) {
            out[e.kind.index()] += 1;
        }
        out
    }

    pub fn snapshot_at(&self, as_of: Timestamp) -> Snapshot<'_> {
        let events = self.events_until(as_of);
        let mut pairs: Vec<(NodeIdx, NodeIdx)> =
            events.iter().map(|e| (e.source, e.target)).collect();
        pairs.sort_unstable();
        let mut weights: Vec<((NodeIdx, NodeIdx), u64)> = Vec::new();
        for p in pairs {
            match weights.last_mut() {
                Some((q, w)) if *q == p => *w += 1,
                _ => weights.push((p, 1)),
            }
        }
        Snapshot {
            graph: self,
            as_of,
            n_events: events.len(),
            weights,
        }
    }
}

/// All events with `t <= as_of`, collapsed to a weighted directed graph.
#[derive(Debug, Clone)]
pub struct Snapshot<'g> {
    graph: &'g EcosystemGraph,
    as_of: Timestamp,
    n_events: usize,
    weights: Vec<((NodeIdx, NodeIdx), u64)>,
}

impl<'g> Snapshot<'g> {
    pub fn graph(&self) -> &'g EcosystemGraph {
        self.graph
    }

    pub fn as_of(&self) -> Timestamp {
        self.as_of
    }

    pub fn event_count(&self) -> usize {
        self.n_events
    }

    pub fn events(&self) -> &'g [Event] {
        &self.graph.events[..self.n_events]
    }

    /// Distinct `(source, target)` pairs with their event counts, sorted.
    pub fn edges(&self) -> &[((NodeIdx, NodeIdx), u64)] {
        &self.weights
    }

    pub fn weight(&self, source: NodeIdx, target: NodeIdx) -> u64 {
        self.weights
            .binary_search_by_key(&(source, target), |(p, _)| *p)
            .map(|i| self.weights[i].1)
            .unwrap_or(0)
    }

    pub fn weight_by_id(&self, source: &str, target: &str) -> u64 {
        match (self.graph.index_of(source), self.graph.index_of(target)) {
            (Some(s), Some(t)) => self.weight(s, t),
            _ => 0,
        }
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().map(|(_, w)| w).sum()
    }

    pub fn aggregate_by_platform(&self) -> PlatformAggregate {
        aggregate_by_platform(self)
    }
}

/// Vertex of the platform-level aggregate: one supernode per platform for
/// its hate-core communities, plus one sink each for mainstream and news.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggregateNode {
    Platform(u16),
    Mainstream,
    News,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformAggregate {
    pub as_of: Timestamp,
    pub platforms: Vec<PlatformId>,
    pub edges: BTreeMap<(AggregateNode, AggregateNode), u64>,
}

impl PlatformAggregate {
    pub fn label(&self, n: AggregateNode) -> String {
        match n {
            AggregateNode::Platform(p) => self.platforms[p as usize].to_string(),
            AggregateNode::Mainstream => "vulnerable_mainstream".to_string(),
            AggregateNode::News => "news_sources".to_string(),
        }
    }

    pub fn weight(&self, from: AggregateNode, to: AggregateNode) -> u64 {
        self.edges.get(&(from, to)).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }
}

pub fn aggregate_by_platform(s: &Snapshot<'_>) -> PlatformAggregate {
    let g = s.graph();
    let mut edges = BTreeMap::new();
    for &((src, dst), w) in s.edges() {
        let from = AggregateNode::Platform(g.platform_of(src));
        let to = match g.node(dst).klass {
            NodeClass::HateCore => AggregateNode::Platform(g.platform_of(dst)),
            NodeClass::VulnerableMainstream => AggregateNode::Mainstream,
            NodeClass::NewsSource => AggregateNode::News,
        };
        *edges.entry((from, to)).or_insert(0) += w;
    }
    PlatformAggregate {
        as_of: s.as_of(),
        platforms: g.platforms().to_vec(),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str) -> PlatformId {
        PlatformId::new(name).unwrap()
    }

    fn node(id: &str, platform: &str, klass: NodeClass) -> CommunityNode {
        CommunityNode::new(id, p(platform), klass, 100, 0)
    }

    fn ev(s: &str, t: &str, time: Timestamp, kind: LinkKind) -> LinkEvent {
        LinkEvent {
            source: s.into(),
            target: t.into(),
            t: time,
            kind,
        }
    }

    #[test]
    fn platform_ids_are_normalized() {
        assert_eq!(p(" Telegram ").as_str(), "telegram");
        assert!(PlatformId::new("").is_err());
        assert!(PlatformId::new("two words").is_err());
    }

    #[test]
    fn register_first_and_duplicate() {
        let mut b = GraphBuilder::new([p("telegram")]).unwrap();
        let n = CommunityNode::new("tg_001", p("telegram"), NodeClass::HateCore, 1200, 0);
        assert_eq!(b.register_node(n.clone()).unwrap(), 0);
        assert_eq!(b.node_count(), 1);
        assert_eq!(b.register_node(n), Err(GraphError::DuplicateId("tg_001".into())));
        assert_eq!(
            b.register_node(node("x", "gab", NodeClass::HateCore)),
            Err(GraphError::UnknownPlatform("gab".into()))
        );
    }

    #[test]
    fn append_validation() {
        let mut b = GraphBuilder::new([p("telegram")]).unwrap();
        b.register_node(node("a", "telegram", NodeClass::HateCore)).unwrap();
        b.register_node(node("m", "telegram", NodeClass::VulnerableMainstream)).unwrap();
        assert_eq!(
            b.append_event(&ev("m", "a", 0, LinkKind::CoreToCore)),
            Err(GraphError::SourceNotHateCore("m".into()))
        );
        assert_eq!(
            b.append_event(&ev("a", "zz", 0, LinkKind::CoreToCore)),
            Err(GraphError::UnknownEndpoint("zz".into()))
        );
        assert!(matches!(
            b.append_event(&ev("a", "m", 0, LinkKind::CoreToNews)),
            Err(GraphError::KindMismatch { .. })
        ));
        let mut b = b.with_time_range(0, 10);
        assert!(matches!(
            b.append_event(&ev("a", "m", 11, LinkKind::CoreToMainstream)),
            Err(GraphError::OutOfRange { .. })
        ));
        b.append_event(&ev("a", "m", 10, LinkKind::CoreToMainstream)).unwrap();
    }

    #[test]
    fn snapshot_boundary_and_weights() {
        let mut b = GraphBuilder::new([p("telegram")]).unwrap();
        b.register_node(node("a", "telegram", NodeClass::HateCore)).unwrap();
        b.register_node(node("m", "telegram", NodeClass::VulnerableMainstream)).unwrap();
        for i in 0..10 {
            b.append_event(&ev("a", "m", 200 - i, LinkKind::CoreToMainstream)).unwrap();
        }
        b.append_event(&ev("a", "m", 100, LinkKind::CoreToMainstream)).unwrap();
        let g = b.seal();
        assert!(g.events().windows(2).all(|w| w[0].t <= w[1].t));
        assert_eq!(g.snapshot_at(99).event_count(), 0);
        assert!(g.snapshot_at(99).edges().is_empty());
        assert_eq!(g.snapshot_at(100).event_count(), 1);
        let all = g.snapshot_at(g.time_range().1);
        assert_eq!(all.event_count(), 11);
        assert_eq!(all.weight_by_id("a", "m"), 11);
        assert_eq!(all.weight_by_id("m", "a"), 0);
    }

    #[test]
    fn aggregate_self_loop_and_cross_links() {
        let mut b = GraphBuilder::new([p("telegram"), p("gab")]).unwrap();
        for id in ["a", "b", "c"] {
            b.register_node(node(id, "telegram", NodeClass::HateCore)).unwrap();
        }
        b.register_node(node("g", "gab", NodeClass::HateCore)).unwrap();
        b.register_node(node("n", "gab", NodeClass::NewsSource)).unwrap();
        for (s, t) in [("a", "b"), ("b", "c"), ("c", "a")] {
            b.append_event(&ev(s, t, 1, LinkKind::CoreToCore)).unwrap();
        }
        for i in 0..5 {
            b.append_event(&ev("a", "g", i, LinkKind::CoreToCore)).unwrap();
        }
        b.append_event(&ev("g", "n", 3, LinkKind::CoreToNews)).unwrap();
        let g = b.seal();
        let agg = g.snapshot_at(10).aggregate_by_platform();
        let tg = AggregateNode::Platform(0);
        let gab = AggregateNode::Platform(1);
        assert_eq!(agg.weight(tg, tg), 3);
        assert_eq!(agg.weight(tg, gab), 5);
        assert_eq!(agg.weight(gab, AggregateNode::News), 1);
        assert_eq!(agg.total_weight(), 9);
        assert_eq!(agg.label(AggregateNode::News), "news_sources");
    }
}
