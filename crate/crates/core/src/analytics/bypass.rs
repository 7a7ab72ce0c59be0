use serde::Serialize;

use super::AnalyticsError;
use crate::exec::Execution;
use crate::graph::{EcosystemGraph, NodeIdx};
use crate::Timestamp;

pub const DEFAULT_BYPASS_WINDOW_DAYS: i64 = 7;

/// An inter-platform bypass: `a -> b` leaves `a`'s platform, then
/// `b -> c` lands back on it within the window (`c` may be `a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BypassMotif {
    /// Index of the outbound event in the sealed log.
    pub first: usize,
    /// Index of the returning event in the sealed log.
    pub second: usize,
    pub a: NodeIdx,
    pub b: NodeIdx,
    pub c: NodeIdx,
    pub t1: Timestamp,
    pub t2: Timestamp,
}

pub fn detect_bypasses(g: &EcosystemGraph, window: i64) -> Result<Vec<BypassMotif>, AnalyticsError> {
    detect_bypasses_with(Execution::default(), g, window)
}

/// All event pairs `(a -> b, b -> c)` with `platform(b) != platform(a)`,
/// `platform(c) == platform(a)` and `t1 <= t2 <= t1 + window` (seconds),
/// sorted by `(first, second)`.
pub fn detect_bypasses_with(
    exec: Execution,
    g: &EcosystemGraph,
    window: i64,
) -> Result<Vec<BypassMotif>, AnalyticsError> {
    if window <= 0 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "bypass window must be positive, got {window}"
        )));
    }
    let events = g.events();
    // Outgoing event indices per node; time-sorted because the log is.
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); g.node_count()];
    for (i, e) in events.iter().enumerate() {
        outgoing[e.source as usize].push(i);
    }
    let motifs = exec.flat_map_chunks(events, 4096, |start, chunk| {
        let mut found = Vec::new();
        for (k, e1) in chunk.iter().enumerate() {
            let home = g.platform_of(e1.source);
            if g.platform_of(e1.target) == home {
                continue;
            }
            let out = &outgoing[e1.target as usize];
            let from = out.partition_point(|&j| events[j].t < e1.t);
            for &j in &out[from..] {
                let e2 = &events[j];
                if e2.t > e1.t + window {
                    break;
                }
                if g.platform_of(e2.target) == home {
                    found.push(BypassMotif {
                        first: start + k,
                        second: j,
                        a: e1.source,
                        b: e1.target,
                        c: e2.target,
                        t1: e1.t,
                        t2: e2.t,
                    });
                }
            }
        }
        found
    });
    Ok(motifs)
}
