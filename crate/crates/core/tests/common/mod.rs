//! Random instances and brute-force reference implementations shared by the
//! integration tests. Each oracle works from the raw, unsorted input rather
//! than from the sealed log.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use ecosim_core::graph::NodeIdx;
use ecosim_core::ingest::JoinEvent;
use ecosim_core::{CommunityNode, EcosystemGraph, GraphBuilder, NodeClass, PlatformId, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DAY: i64 = 86_400;

pub struct Instance {
    pub graph: EcosystemGraph,
    pub nodes: Vec<CommunityNode>,
    /// (source, target, t) in insertion order, indices into `nodes`.
    pub raw: Vec<(NodeIdx, NodeIdx, Timestamp)>,
    pub horizon: Timestamp,
}

/// A random graph with up to `max_nodes` nodes and `max_events` events on
/// one to five platforms.
pub fn random_instance(seed: u64, max_nodes: usize, max_events: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_platforms = rng.random_range(1..=5);
    let platforms: Vec<PlatformId> = (0..n_platforms).map(|i| PlatformId::new(&format!("p{i}")).unwrap()).collect();
    let n_nodes = rng.random_range(2..=max_nodes);
    let mut nodes = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        // At least one hate node so events are possible.
        let klass = match (i, rng.random_range(0..10)) {
            (0, _) => NodeClass::HateCore,
            (_, 0..=5) => NodeClass::HateCore,
            (_, 6..=8) => NodeClass::VulnerableMainstream,
            _ => NodeClass::NewsSource,
        };
        let p = platforms[rng.random_range(0..n_platforms)].clone();
        nodes.push(CommunityNode::new(format!("n{i:03}"), p, klass, rng.random_range(1..10_000), 0));
    }
    let hate: Vec<usize> = (0..n_nodes).filter(|&i| nodes[i].klass == NodeClass::HateCore).collect();
    let horizon = rng.random_range(1..=60) * DAY;
    let n_events = rng.random_range(0..=max_events);
    let raw: Vec<(NodeIdx, NodeIdx, Timestamp)> = (0..n_events)
        .map(|_| {
            let s = hate[rng.random_range(0..hate.len())] as NodeIdx;
            let t = rng.random_range(0..n_nodes) as NodeIdx;
            // Coarse times so that ties are common.
            (s, t, rng.random_range(0..=horizon / 3600) * 3600)
        })
        .collect();
    let mut b = GraphBuilder::new(platforms).unwrap().with_time_range(0, horizon);
    for n in &nodes {
        b.register_node(n.clone()).unwrap();
    }
    for &(s, t, time) in &raw {
        b.append_indexed(s, t, time).unwrap();
    }
    Instance {
        graph: b.seal(),
        nodes,
        raw,
        horizon,
    }
}

pub fn snapshot_oracle(inst: &Instance, as_of: Timestamp) -> Vec<((NodeIdx, NodeIdx), u64)> {
    let mut m: BTreeMap<(NodeIdx, NodeIdx), u64> = BTreeMap::new();
    for &(s, t, time) in &inst.raw {
        if time <= as_of {
            *m.entry((s, t)).or_default() += 1;
        }
    }
    m.into_iter().collect()
}

/// Platform-level edge weights keyed by the sink/platform labels.
pub fn aggregate_oracle(inst: &Instance, as_of: Timestamp) -> BTreeMap<(String, String), u64> {
    let label = |i: NodeIdx| {
        let n = &inst.nodes[i as usize];
        match n.klass {
            NodeClass::HateCore => n.platform.to_string(),
            NodeClass::VulnerableMainstream => "vulnerable_mainstream".to_string(),
            NodeClass::NewsSource => "news_sources".to_string(),
        }
    };
    let mut m = BTreeMap::new();
    for &(s, t, time) in &inst.raw {
        if time <= as_of {
            *m.entry((label(s), label(t))).or_default() += 1;
        }
    }
    m
}

/// Quick-find components over hate-hate links, as sorted member-id lists
/// sorted lexicographically.
pub fn components_oracle(inst: &Instance, as_of: Timestamp) -> Vec<Vec<String>> {
    let n = inst.nodes.len();
    let mut label: Vec<usize> = (0..n).collect();
    let mut touched = vec![false; n];
    for &(s, t, time) in &inst.raw {
        let (s, t) = (s as usize, t as usize);
        if time > as_of || inst.nodes[t].klass != NodeClass::HateCore {
            continue;
        }
        touched[s] = true;
        touched[t] = true;
        let (from, to) = (label[t], label[s]);
        if from != to {
            for l in label.iter_mut() {
                if *l == from {
                    *l = to;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in (0..n).filter(|&i| touched[i]) {
        groups.entry(label[i]).or_default().push(inst.nodes[i].id.clone());
    }
    let mut out: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut v| {
            v.sort();
            v
        })
        .collect();
    out.sort();
    out
}

/// Every ordered pair of events forming a bypass, as (a, b, c, t1, t2),
/// sorted.
pub fn bypass_oracle(inst: &Instance, window: i64) -> Vec<(NodeIdx, NodeIdx, NodeIdx, Timestamp, Timestamp)> {
    let plat = |i: NodeIdx| &inst.nodes[i as usize].platform;
    let mut out = Vec::new();
    for (i, &(a, b, t1)) in inst.raw.iter().enumerate() {
        for (j, &(b2, c, t2)) in inst.raw.iter().enumerate() {
            if i != j && b2 == b && plat(b) != plat(a) && plat(c) == plat(a) && t1 <= t2 && t2 <= t1 + window {
                out.push((a, b, c, t1, t2));
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn random_joins(seed: u64, max_events: usize, n_communities: usize) -> (Vec<JoinEvent>, HashMap<String, bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bans: HashMap<String, bool> = (0..n_communities).map(|i| (format!("c{i}"), rng.random_bool(0.3))).collect();
    let n_ind = rng.random_range(1..=50u64);
    let mut seen = std::collections::HashSet::new();
    let mut joins = Vec::new();
    for _ in 0..rng.random_range(0..=max_events) {
        let individual = rng.random_range(0..n_ind);
        let c = rng.random_range(0..n_communities);
        if seen.insert((individual, c)) {
            joins.push(JoinEvent {
                individual,
                community: format!("c{c}"),
                t: rng.random_range(0..400) * DAY,
            });
        }
    }
    (joins, bans)
}

/// Per-individual join counts within the horizon, binned by
/// 1, 2, 3-4, 5-8, ... Returns the count per bin.
pub fn journey_histogram_oracle(joins: &[JoinEvent], horizon: i64) -> Vec<usize> {
    let mut times: BTreeMap<u64, Vec<Timestamp>> = BTreeMap::new();
    for j in joins {
        times.entry(j.individual).or_default().push(j.t);
    }
    let lengths: Vec<usize> = times
        .values()
        .map(|ts| {
            let first = *ts.iter().min().unwrap();
            ts.iter().filter(|&&t| t - first < horizon).count()
        })
        .collect();
    let bin = |n: usize| (n as f64).log2().ceil() as usize;
    let max = lengths.iter().copied().max().unwrap_or(1);
    let mut counts = vec![0; bin(max) + 1];
    for n in lengths {
        counts[bin(n)] += 1;
    }
    counts
}

/// Compares every graph analytic against its oracle on one instance at a
/// few probe times. Returns the first mismatch.
pub fn check_graph_oracles(inst: &Instance, seed: u64) -> Result<(), String> {
    use ecosim_core::analytics::{components_at, detect_bypasses};

    let g = &inst.graph;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut probes = vec![-1, 0, inst.horizon];
    probes.extend((0..3).map(|_| rng.random_range(0..=inst.horizon)));
    for &t in &probes {
        let snap = g.snapshot_at(t);
        if snap.edges() != snapshot_oracle(inst, t).as_slice() {
            return Err(format!("snapshot mismatch at t={t}"));
        }
        let agg = snap.aggregate_by_platform();
        let got: BTreeMap<(String, String), u64> =
            agg.edges.iter().map(|(&(a, b), &w)| ((agg.label(a), agg.label(b)), w)).collect();
        if got != aggregate_oracle(inst, t) {
            return Err(format!("aggregate mismatch at t={t}"));
        }
        let mut comps: Vec<Vec<String>> = components_at(g, t).components.into_iter().map(|c| c.members).collect();
        comps.sort();
        if comps != components_oracle(inst, t) {
            return Err(format!("components mismatch at t={t}"));
        }
    }
    let window = rng.random_range(1..=10) * DAY;
    let motifs = detect_bypasses(g, window).map_err(|e| e.to_string())?;
    let mut got: Vec<_> = motifs.iter().map(|m| (m.a, m.b, m.c, m.t1, m.t2)).collect();
    got.sort_unstable();
    if got != bypass_oracle(inst, window) {
        return Err(format!("bypass mismatch (window {window}s): {} vs oracle", got.len()));
    }
    for m in &motifs {
        let (e1, e2) = (&g.events()[m.first], &g.events()[m.second]);
        if (e1.source, e1.target, e1.t, e2.source, e2.target, e2.t) != (m.a, m.b, m.t1, m.b, m.c, m.t2) {
            return Err("bypass event indices do not match endpoints".into());
        }
    }
    Ok(())
}

pub fn check_journey_oracle(seed: u64, max_events: usize) -> Result<(), String> {
    use ecosim_core::pathways::{build_journeys, journey_histogram, BinScheme};

    let (joins, bans) = random_joins(seed, max_events, 60);
    let horizon = 180 * DAY;
    let journeys = build_journeys(&joins, &bans).map_err(|e| e.to_string())?;
    let hist = journey_histogram(&journeys, horizon, &BinScheme::Log2);
    let got: Vec<usize> = hist.bins.iter().map(|b| b.count).collect();
    let want = if joins.is_empty() { vec![0] } else { journey_histogram_oracle(&joins, horizon) };
    if got != want {
        return Err(format!("journey histogram {got:?} vs oracle {want:?}"));
    }
    Ok(())
}
