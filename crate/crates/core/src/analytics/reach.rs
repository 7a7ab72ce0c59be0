use serde::Serialize;

use crate::graph::{AggregateNode, EcosystemGraph, LinkKind, PlatformId};
use crate::Timestamp;

/// R² at or above which a cumulative link curve counts as steady growth.
pub const STEADY_R_SQUARED: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReachReport {
    pub as_of: Timestamp,
    /// Distinct mainstream communities with at least one inbound core link.
    pub n_mainstream: usize,
    /// Summed memberships of those communities. Individuals in several
    /// communities are counted once per community.
    pub total_members: u64,
}

pub fn one_click_reach(g: &EcosystemGraph, as_of: Timestamp) -> ReachReport {
    let mut seen = vec![false; g.node_count()];
    let mut n = 0;
    let mut total = 0u64;
    for e in g.events_until(as_of) {
        if e.kind == LinkKind::CoreToMainstream && !seen[e.target as usize] {
            seen[e.target as usize] = true;
            n += 1;
            total += g.node(e.target).members;
        }
    }
    ReachReport {
        as_of,
        n_mainstream: n,
        total_members: total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindGrowth {
    pub kind: LinkKind,
    /// Cumulative event count at the end of each bin.
    pub cumulative: Vec<u64>,
    pub total: u64,
    /// Least-squares slope of the cumulative curve, events per bin.
    pub slope: f64,
    pub r_squared: f64,
    pub steady: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkGrowth {
    pub t0: Timestamp,
    pub bin_width: i64,
    pub n_bins: usize,
    pub kinds: Vec<KindGrowth>,
}

impl LinkGrowth {
    pub fn kind(&self, kind: LinkKind) -> &KindGrowth {
        &self.kinds[kind.index()]
    }
}

/// Ordinary least squares of `ys` against `0..n`; returns (slope, R²).
fn linear_fit(ys: &[u64]) -> (f64, f64) {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return (0.0, 0.0);
    }
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().map(|&y| y as f64).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - mean_x;
        let dy = y as f64 - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 0.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Cumulative link counts per kind over fixed bins spanning the graph's
/// time range, with a linear fit of each curve.
pub fn link_growth(g: &EcosystemGraph, bin_width: i64) -> LinkGrowth {
    assert!(bin_width > 0, "bin width must be positive");
    let (t0, t1) = g.time_range();
    let n_bins = ((t1 - t0) / bin_width + 1) as usize;
    let mut per_bin = vec![[0u64; 3]; n_bins];
    for e in g.events() {
        let b = (((e.t - t0) / bin_width) as usize).min(n_bins - 1);
        per_bin[b][e.kind.index()] += 1;
    }
    let kinds = LinkKind::ALL
        .iter()
        .map(|&kind| {
            let mut acc = 0;
            let cumulative: Vec<u64> = per_bin
                .iter()
                .map(|c| {
                    acc += c[kind.index()];
                    acc
                })
                .collect();
            let (slope, r_squared) = linear_fit(&cumulative);
            KindGrowth {
                kind,
                total: acc,
                steady: acc > 0 && r_squared >= STEADY_R_SQUARED,
                cumulative,
                slope,
                r_squared,
            }
        })
        .collect();
    LinkGrowth {
        t0,
        bin_width,
        n_bins,
        kinds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatformDegree {
    pub platform: PlatformId,
    pub out_weight: u64,
    pub in_weight: u64,
    pub degree: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityReport {
    pub as_of: Timestamp,
    pub platforms: Vec<PlatformDegree>,
    pub max_degree: u64,
    pub median_degree: f64,
    /// max / median over platforms hosting hate communities. 1 when every
    /// degree is zero; infinite (serialized as null) when only the median is.
    pub equivalence_ratio: f64,
}

/// Weighted in+out degree of each platform supernode in the platform
/// aggregate at `as_of`. Platforms without hate communities are skipped.
pub fn platform_connectivity(g: &EcosystemGraph, as_of: Timestamp) -> ConnectivityReport {
    let agg = g.snapshot_at(as_of).aggregate_by_platform();
    let n = g.platforms().len();
    let mut has_core = vec![false; n];
    for idx in g.hate_nodes() {
        has_core[g.platform_of(idx) as usize] = true;
    }
    let mut out_w = vec![0u64; n];
    let mut in_w = vec![0u64; n];
    for (&(from, to), &w) in &agg.edges {
        if let AggregateNode::Platform(p) = from {
            out_w[p as usize] += w;
        }
        if let AggregateNode::Platform(p) = to {
            in_w[p as usize] += w;
        }
    }
    let platforms: Vec<PlatformDegree> = (0..n)
        .filter(|&i| has_core[i])
        .map(|i| PlatformDegree {
            platform: g.platforms()[i].clone(),
            out_weight: out_w[i],
            in_weight: in_w[i],
            degree: out_w[i] + in_w[i],
        })
        .collect();
    let mut degrees: Vec<u64> = platforms.iter().map(|p| p.degree).collect();
    degrees.sort_unstable();
    let max_degree = degrees.last().copied().unwrap_or(0);
    let median_degree = match degrees.len() {
        0 => 0.0,
        k if k % 2 == 1 => degrees[k / 2] as f64,
        k => (degrees[k / 2 - 1] + degrees[k / 2]) as f64 / 2.0,
    };
    let equivalence_ratio = if max_degree == 0 {
        1.0
    } else if median_degree == 0.0 {
        f64::INFINITY
    } else {
        max_degree as f64 / median_degree
    };
    ConnectivityReport {
        as_of,
        platforms,
        max_degree,
        median_degree,
        equivalence_ratio,
    }
}

/// Total hate-core membership per platform, largest first.
pub(crate) fn platforms_by_core_membership(g: &EcosystemGraph) -> Vec<(u16, u64)> {
    let mut totals = vec![0u64; g.platforms().len()];
    for n in g.hate_nodes() {
        totals[g.platform_of(n) as usize] += g.node(n).members;
    }
    let mut v: Vec<(u16, u64)> = totals.into_iter().enumerate().map(|(i, t)| (i as u16, t)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CommunityNode, GraphBuilder, LinkEvent, NodeClass};

    fn fixture() -> EcosystemGraph {
        let tg = PlatformId::new("telegram").unwrap();
        let mut b = GraphBuilder::new([tg.clone()]).unwrap().with_time_range(0, 10 * 86_400 - 1);
        b.register_node(CommunityNode::new("h", tg.clone(), NodeClass::HateCore, 10, 0)).unwrap();
        b.register_node(CommunityNode::new("m", tg.clone(), NodeClass::VulnerableMainstream, 500, 0))
            .unwrap();
        b.register_node(CommunityNode::new("m2", tg, NodeClass::VulnerableMainstream, 70, 0)).unwrap();
        for t in [5, 6, 7] {
            b.append_event(&LinkEvent {
                source: "h".into(),
                target: "m".into(),
                t,
                kind: LinkKind::CoreToMainstream,
            })
            .unwrap();
        }
        b.seal()
    }

    #[test]
    fn reach_dedups_targets() {
        let g = fixture();
        assert_eq!(one_click_reach(&g, 4).n_mainstream, 0);
        let r = one_click_reach(&g, 100);
        assert_eq!((r.n_mainstream, r.total_members), (1, 500));
    }

    #[test]
    fn growth_of_empty_graph() {
        let tg = PlatformId::new("telegram").unwrap();
        let g = GraphBuilder::new([tg]).unwrap().with_time_range(0, 5 * 86_400).seal();
        let lg = link_growth(&g, 86_400);
        assert_eq!(lg.n_bins, 6);
        for k in &lg.kinds {
            assert_eq!(k.slope, 0.0);
            assert!(!k.steady);
        }
    }

    #[test]
    fn growth_of_linear_curve_is_exact() {
        let tg = PlatformId::new("telegram").unwrap();
        let mut b = GraphBuilder::new([tg.clone()]).unwrap().with_time_range(0, 10 * 86_400 - 1);
        b.register_node(CommunityNode::new("h", tg, NodeClass::HateCore, 10, 0)).unwrap();
        for day in 0..10 {
            for _ in 0..3 {
                b.append_indexed(0, 0, day * 86_400 + 10).unwrap();
            }
        }
        let lg = link_growth(&b.seal(), 86_400);
        let k = lg.kind(LinkKind::CoreToCore);
        assert!((k.slope - 3.0).abs() < 1e-12);
        assert!((k.r_squared - 1.0).abs() < 1e-12);
        assert!(k.steady);
        assert_eq!(k.cumulative.last(), Some(&30));
    }

    #[test]
    fn single_platform_ratio_is_one() {
        let r = platform_connectivity(&fixture(), 100);
        assert_eq!(r.platforms.len(), 1);
        assert_eq!(r.platforms[0].degree, 3);
        assert_eq!(r.equivalence_ratio, 1.0);
    }
}
