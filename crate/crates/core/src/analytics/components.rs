use std::collections::HashMap;

use serde::Serialize;

use crate::exec::Execution;
use crate::graph::{EcosystemGraph, LinkKind, NodeIdx};
use crate::Timestamp;

/// Union-find with union by size and path halving.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    /// Member ids, sorted.
    pub members: Vec<String>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    pub as_of: Timestamp,
    /// Largest first; ties broken by smallest member id.
    pub components: Vec<Component>,
    pub largest_sizes: Vec<usize>,
}

/// Weakly connected components of the hate-core subgraph at `as_of`.
/// Only core-core links count, read as undirected; nodes without any such
/// link are left out.
pub fn components_at(g: &EcosystemGraph, as_of: Timestamp) -> ComponentReport {
    let mut sets = DisjointSets::new(g.node_count());
    let mut touched = vec![false; g.node_count()];
    for e in g.events_until(as_of) {
        if e.kind == LinkKind::CoreToCore {
            sets.union(e.source, e.target);
            touched[e.source as usize] = true;
            touched[e.target as usize] = true;
        }
    }
    let mut groups: HashMap<u32, Vec<NodeIdx>> = HashMap::new();
    for (i, _) in touched.iter().enumerate().filter(|(_, &t)| t) {
        groups.entry(sets.find(i as u32)).or_default().push(i as NodeIdx);
    }
    let mut components: Vec<Component> = groups
        .into_values()
        .map(|idxs| {
            let mut members: Vec<String> = idxs.iter().map(|&i| g.node(i).id.clone()).collect();
            members.sort();
            Component {
                size: members.len(),
                members,
            }
        })
        .collect();
    components.sort_by(|a, b| b.size.cmp(&a.size).then_with(|| a.members[0].cmp(&b.members[0])));
    ComponentReport {
        as_of,
        largest_sizes: components.iter().map(|c| c.size).collect(),
        components,
    }
}

pub fn components_over_time(g: &EcosystemGraph, sample_times: &[Timestamp]) -> Vec<ComponentReport> {
    components_over_time_with(Execution::default(), g, sample_times)
}

/// One report per sample time, in input order.
pub fn components_over_time_with(
    exec: Execution,
    g: &EcosystemGraph,
    sample_times: &[Timestamp],
) -> Vec<ComponentReport> {
    exec.map(sample_times, |&t| components_at(g, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CommunityNode, GraphBuilder, LinkEvent, NodeClass, PlatformId};

    #[test]
    fn two_disjoint_triangles() {
        let tg = PlatformId::new("telegram").unwrap();
        let gab = PlatformId::new("gab").unwrap();
        let mut b = GraphBuilder::new([tg.clone(), gab.clone()]).unwrap();
        for (i, id) in ["a", "b", "c", "x", "y", "z", "lonely"].iter().enumerate() {
            let p = if i % 2 == 0 { tg.clone() } else { gab.clone() };
            b.register_node(CommunityNode::new(*id, p, NodeClass::HateCore, 1, 0)).unwrap();
        }
        for (s, t) in [("a", "b"), ("b", "c"), ("c", "a"), ("x", "y"), ("y", "z"), ("z", "x")] {
            b.append_event(&LinkEvent {
                source: s.into(),
                target: t.into(),
                t: 1,
                kind: LinkKind::CoreToCore,
            })
            .unwrap();
        }
        let g = b.seal();
        let r = components_at(&g, 1);
        assert_eq!(r.largest_sizes, vec![3, 3]);
        assert_eq!(r.components[0].members, vec!["a", "b", "c"]);
        assert!(components_at(&g, 0).components.is_empty());
        let over = components_over_time(&g, &[1, 0]);
        assert_eq!(over[0], r);
        assert!(over[1].components.is_empty());
    }

    #[test]
    fn dsu_basics() {
        let mut d = DisjointSets::new(5);
        assert!(d.union(0, 1));
        assert!(d.union(3, 4));
        assert!(!d.union(1, 0));
        assert_eq!(d.find(0), d.find(1));
        assert_ne!(d.find(0), d.find(3));
    }
}
