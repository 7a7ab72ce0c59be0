//! Agent-based moderation against the hate core of a sealed graph.
//!
//! Every hate community becomes an agent that
//! carries its final out-links. Each tick, moderators remove up to a budget
//! of agents; a removed agent may respawn as a new community on another
//! platform that inherits its out-links, which is how removed content
//! bypasses a platform-local ban.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::platforms_by_core_membership;
use crate::exec::Execution;
use crate::graph::{EcosystemGraph, NodeClass, NodeIdx, PlatformId};

/// Platforms targeted by the default major-platforms policy.
pub const DEFAULT_MAJOR_PLATFORMS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModSimError {
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid adaptation rule: {0}")]
    InvalidRule(String),
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Only communities on the named platforms can be removed; the heaviest
    /// linkers go first.
    MajorPlatformsOnly(Vec<PlatformId>),
    /// Any platform; communities with fresh cross-platform links go first,
    /// then by cross-platform out-weight.
    AdaptiveSystemWide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationPolicy {
    pub strategy: Strategy,
    pub budget_per_tick: usize,
    /// A respawned community can only be removed this many ticks after it
    /// appears.
    #[serde(default)]
    pub detection_delay_ticks: u32,
}

impl ModerationPolicy {
    pub fn majors(platforms: Vec<PlatformId>, budget_per_tick: usize) -> Self {
        ModerationPolicy {
            strategy: Strategy::MajorPlatformsOnly(platforms),
            budget_per_tick,
            detection_delay_ticks: 0,
        }
    }

    pub fn adaptive(budget_per_tick: usize) -> Self {
        ModerationPolicy {
            strategy: Strategy::AdaptiveSystemWide,
            budget_per_tick,
            detection_delay_ticks: 0,
        }
    }

    pub fn label(&self) -> String {
        match &self.strategy {
            Strategy::MajorPlatformsOnly(ps) => {
                let names: Vec<&str> = ps.iter().map(|p| p.as_str()).collect();
                format!("majors[{}]", names.join(","))
            }
            Strategy::AdaptiveSystemWide => "adaptive".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRule {
    /// Chance that a removed community respawns elsewhere.
    pub bypass_probability: f64,
    /// Respawns appear 1..=relink_window_ticks ticks after the removal.
    pub relink_window_ticks: u32,
}

impl AdaptationRule {
    pub fn validate(&self) -> Result<(), ModSimError> {
        let p = self.bypass_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(ModSimError::InvalidRule(format!("bypass probability {p} not in [0, 1]")));
        }
        if self.relink_window_ticks == 0 {
            return Err(ModSimError::InvalidRule("relink window must be at least one tick".into()));
        }
        Ok(())
    }
}

/// The `k` platforms with the largest total hate-core membership.
pub fn major_platforms(g: &EcosystemGraph, k: usize) -> Vec<PlatformId> {
    platforms_by_core_membership(g)
        .into_iter()
        .filter(|&(_, total)| total > 0)
        .take(k)
        .map(|(p, _)| g.platforms()[p as usize].clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TickRecord {
    pub tick: u32,
    pub active: usize,
    /// Distinct mainstream communities linked by an active agent.
    pub reach: usize,
    pub removals: usize,
    pub bypasses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub policy: String,
    pub seed: u64,
    pub initial_active: usize,
    pub initial_reach: usize,
    pub ticks: Vec<TickRecord>,
    pub total_removals: usize,
    pub total_bypasses: usize,
    /// Respawns scheduled past the last tick.
    pub pending_respawns: usize,
    /// Active agents at the end plus pending respawns, over agents at the
    /// start.
    pub residual_fraction: f64,
}

pub fn write_trace_csv<W: Write>(out: &SimOutcome, mut w: W) -> io::Result<()> {
    writeln!(w, "tick,active,reach,removals,bypasses")?;
    for r in &out.ticks {
        writeln!(w, "{},{},{},{},{}", r.tick, r.active, r.reach, r.removals, r.bypasses)?;
    }
    Ok(())
}

struct Agent {
    key: String,
    platform: u16,
    /// Original community whose out-links this agent carries.
    origin: NodeIdx,
    /// Tick of the respawn that created it; `None` for initial agents.
    born: Option<u32>,
    active: bool,
    total_weight: u64,
    cross_weight: u64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Random stream private to one agent, so its fate does not depend on how
/// many other agents were drawn before it.
fn agent_rng(seed: u64, key: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(key.as_bytes()));
    rng
}

struct World<'g> {
    g: &'g EcosystemGraph,
    /// Final out-links per original node: (target, weight).
    links: Vec<Vec<(NodeIdx, u64)>>,
    agents: Vec<Agent>,
    mainstream_refs: Vec<u32>,
    reach: usize,
    active: usize,
}

impl<'g> World<'g> {
    fn new(g: &'g EcosystemGraph) -> Self {
        let (_, end) = g.time_range();
        let snap = g.snapshot_at(end);
        let mut links: Vec<Vec<(NodeIdx, u64)>> = vec![Vec::new(); g.node_count()];
        for &((s, t), w) in snap.edges() {
            links[s as usize].push((t, w));
        }
        let mut world = World {
            g,
            links,
            agents: Vec::new(),
            mainstream_refs: vec![0; g.node_count()],
            reach: 0,
            active: 0,
        };
        for idx in g.hate_nodes() {
            world.spawn(g.node(idx).id.clone(), g.platform_of(idx), idx, None);
        }
        world
    }

    fn spawn(&mut self, key: String, platform: u16, origin: NodeIdx, born: Option<u32>) {
        let mut total_weight = 0;
        let mut cross_weight = 0;
        for &(t, w) in &self.links[origin as usize] {
            total_weight += w;
            if self.g.platform_of(t) != platform {
                cross_weight += w;
            }
            if self.g.node(t).klass == NodeClass::VulnerableMainstream {
                let r = &mut self.mainstream_refs[t as usize];
                if *r == 0 {
                    self.reach += 1;
                }
                *r += 1;
            }
        }
        self.agents.push(Agent {
            key,
            platform,
            origin,
            born,
            active: true,
            total_weight,
            cross_weight,
        });
        self.active += 1;
    }

    fn remove(&mut self, i: usize) {
        let a = &mut self.agents[i];
        debug_assert!(a.active);
        a.active = false;
        self.active -= 1;
        for &(t, _) in &self.links[a.origin as usize] {
            if self.g.node(t).klass == NodeClass::VulnerableMainstream {
                let r = &mut self.mainstream_refs[t as usize];
                *r -= 1;
                if *r == 0 {
                    self.reach -= 1;
                }
            }
        }
    }
}

fn validate_policy(g: &EcosystemGraph, policy: &ModerationPolicy) -> Result<Option<Vec<bool>>, ModSimError> {
    match &policy.strategy {
        Strategy::AdaptiveSystemWide => Ok(None),
        Strategy::MajorPlatformsOnly(ps) => {
            if ps.is_empty() {
                return Err(ModSimError::InvalidPolicy("major-platforms policy names no platforms".into()));
            }
            let mut allowed = vec![false; g.platforms().len()];
            for p in ps {
                let i = g
                    .platform_index(p)
                    .ok_or_else(|| ModSimError::InvalidPolicy(format!("unknown platform `{p}`")))?;
                allowed[i as usize] = true;
            }
            Ok(Some(allowed))
        }
    }
}

/// Runs `ticks` rounds of moderation. Deterministic in all arguments.
pub fn run_sim(
    g: &EcosystemGraph,
    policy: &ModerationPolicy,
    rule: &AdaptationRule,
    ticks: u32,
    seed: u64,
) -> Result<SimOutcome, ModSimError> {
    let allowed = validate_policy(g, policy)?;
    rule.validate()?;
    let n_platforms = g.platforms().len() as u16;
    let mut world = World::new(g);
    let initial_active = world.active;
    let initial_reach = world.reach;
    let mut pending: BTreeMap<u32, Vec<(usize, u16)>> = BTreeMap::new();
    let mut records = Vec::with_capacity(ticks as usize);
    let (mut total_removals, mut total_bypasses) = (0, 0);

    for tick in 0..ticks {
        let mut bypasses = 0;
        if let Some(due) = pending.remove(&tick) {
            for (parent, platform) in due {
                let key = format!("{}~b", world.agents[parent].key);
                let origin = world.agents[parent].origin;
                world.spawn(key, platform, origin, Some(tick));
                bypasses += 1;
            }
        }

        let detectable = |a: &Agent| match a.born {
            None => true,
            Some(b) => tick - b >= policy.detection_delay_ticks,
        };
        let mut candidates: Vec<usize> = (0..world.agents.len())
            .filter(|&i| {
                let a = &world.agents[i];
                a.active
                    && detectable(a)
                    && allowed.as_ref().is_none_or(|ok| ok[a.platform as usize])
            })
            .collect();
        let budget = policy.budget_per_tick.min(candidates.len());
        let agents = &world.agents;
        match allowed {
            Some(_) => candidates.sort_by(|&x, &y| {
                let (a, b) = (&agents[x], &agents[y]);
                b.total_weight.cmp(&a.total_weight).then_with(|| a.key.cmp(&b.key))
            }),
            None => {
                let fresh = |a: &Agent| a.born.is_some_and(|b| tick - b < rule.relink_window_ticks);
                candidates.sort_by(|&x, &y| {
                    let (a, b) = (&agents[x], &agents[y]);
                    fresh(b)
                        .cmp(&fresh(a))
                        .then(b.cross_weight.cmp(&a.cross_weight))
                        .then_with(|| a.key.cmp(&b.key))
                })
            }
        }
        for &i in &candidates[..budget] {
            world.remove(i);
            let a = &world.agents[i];
            let mut rng = agent_rng(seed, &a.key);
            if rule.bypass_probability > 0.0 && rng.random_bool(rule.bypass_probability) {
                let delay = rng.random_range(1..=rule.relink_window_ticks);
                let platform = if n_platforms > 1 {
                    let p = rng.random_range(0..n_platforms - 1);
                    if p >= a.platform {
                        p + 1
                    } else {
                        p
                    }
                } else {
                    a.platform
                };
                pending.entry(tick + delay).or_default().push((i, platform));
            }
        }
        total_removals += budget;
        total_bypasses += bypasses;
        records.push(TickRecord {
            tick,
            active: world.active,
            reach: world.reach,
            removals: budget,
            bypasses,
        });
    }

    let pending_respawns: usize = pending.values().map(Vec::len).sum();
    Ok(SimOutcome {
        policy: policy.label(),
        seed,
        initial_active,
        initial_reach,
        ticks: records,
        total_removals,
        total_bypasses,
        pending_respawns,
        residual_fraction: if initial_active == 0 {
            0.0
        } else {
            (world.active + pending_respawns) as f64 / initial_active as f64
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    /// One residual per seed, in seed order.
    pub residuals: Vec<f64>,
    pub mean_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedOrdering {
    pub first: usize,
    pub second: usize,
    /// Seeds on which the first policy's residual is at most the second's.
    pub fraction_first_not_worse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyComparison {
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicySummary>,
    pub orderings: Vec<PairedOrdering>,
}

pub fn compare_strategies(
    g: &EcosystemGraph,
    policies: &[ModerationPolicy],
    rule: &AdaptationRule,
    ticks: u32,
    seeds: &[u64],
) -> Result<StrategyComparison, ModSimError> {
    compare_strategies_with(Execution::default(), g, policies, rule, ticks, seeds)
}

/// Runs every policy on every seed and summarizes the seed-paired residuals.
pub fn compare_strategies_with(
    exec: Execution,
    g: &EcosystemGraph,
    policies: &[ModerationPolicy],
    rule: &AdaptationRule,
    ticks: u32,
    seeds: &[u64],
) -> Result<StrategyComparison, ModSimError> {
    if policies.len() < 2 {
        return Err(ModSimError::InvalidComparison("need at least two policies".into()));
    }
    if seeds.len() < 10 {
        return Err(ModSimError::InvalidComparison(format!("need at least 10 seeds, got {}", seeds.len())));
    }
    for p in policies {
        validate_policy(g, p)?;
    }
    rule.validate()?;
    let n = seeds.len();
    let runs = exec.map_range(policies.len() * n, |i| {
        run_sim(g, &policies[i / n], rule, ticks, seeds[i % n]).map(|o| o.residual_fraction)
    });
    let runs = runs.into_iter().collect::<Result<Vec<f64>, _>>()?;
    let summaries: Vec<PolicySummary> = policies
        .iter()
        .zip(runs.chunks(n))
        .map(|(p, rs)| PolicySummary {
            policy: p.label(),
            residuals: rs.to_vec(),
            mean_residual: rs.iter().sum::<f64>() / n as f64,
        })
        .collect();
    let mut orderings = Vec::new();
    for a in 0..policies.len() {
        for b in 0..policies.len() {
            if a == b {
                continue;
            }
            let wins = summaries[a]
                .residuals
                .iter()
                .zip(&summaries[b].residuals)
                .filter(|(x, y)| x <= y)
                .count();
            orderings.push(PairedOrdering {
                first: a,
                second: b,
                fraction_first_not_worse: wins as f64 / n as f64,
            });
        }
    }
    Ok(StrategyComparison {
        seeds: seeds.to_vec(),
        policies: summaries,
        orderings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CommunityNode, GraphBuilder};

    /// `a` on platform one links to mainstream `m` on platform two; `x` is
    /// an unlinked hate community on platform two.
    fn tiny() -> EcosystemGraph {
        let p1 = PlatformId::new("one").unwrap();
        let p2 = PlatformId::new("two").unwrap();
        let mut b = GraphBuilder::new([p1.clone(), p2.clone()]).unwrap();
        b.register_node(CommunityNode::new("a", p1.clone(), NodeClass::HateCore, 10, 0)).unwrap();
        b.register_node(CommunityNode::new("m", p2.clone(), NodeClass::VulnerableMainstream, 99, 0))
            .unwrap();
        b.register_node(CommunityNode::new("x", p2, NodeClass::HateCore, 10, 0)).unwrap();
        b.append_indexed(0, 1, 5).unwrap();
        b.seal()
    }

    fn rule(p: f64) -> AdaptationRule {
        AdaptationRule {
            bypass_probability: p,
            relink_window_ticks: 3,
        }
    }

    #[test]
    fn zero_budget_changes_nothing() {
        let out = run_sim(&tiny(), &ModerationPolicy::adaptive(0), &rule(1.0), 5, 1).unwrap();
        assert_eq!(out.residual_fraction, 1.0);
        assert_eq!(out.total_removals, 0);
    }

    #[test]
    fn full_budget_without_bypass_is_immediate() {
        let out = run_sim(&tiny(), &ModerationPolicy::adaptive(100), &rule(0.0), 3, 1).unwrap();
        assert_eq!(out.ticks[0].active, 0);
        assert_eq!(out.residual_fraction, 0.0);
    }

    #[test]
    fn bypass_restores_reach() {
        let g = tiny();
        let one = PlatformId::new("one").unwrap();
        let out = run_sim(&g, &ModerationPolicy::majors(vec![one], 1), &rule(1.0), 5, 7).unwrap();
        assert_eq!(out.initial_reach, 1);
        assert_eq!(out.ticks[0].reach, 0);
        let back = out.ticks.iter().position(|r| r.reach == 1).unwrap();
        assert!((1..=3).contains(&back));
        assert_eq!(out.ticks[back].bypasses, 1);
        // The respawn lives on platform two, out of the policy's reach.
        assert!(out.ticks[back..].iter().all(|r| r.reach == 1 && r.active == 2));
    }

    #[test]
    fn deterministic() {
        let g = tiny();
        let a = run_sim(&g, &ModerationPolicy::adaptive(1), &rule(0.5), 20, 3).unwrap();
        let b = run_sim(&g, &ModerationPolicy::adaptive(1), &rule(0.5), 20, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_inputs() {
        let g = tiny();
        let bad = ModerationPolicy::majors(vec![PlatformId::new("nowhere").unwrap()], 1);
        assert!(matches!(run_sim(&g, &bad, &rule(0.5), 1, 0), Err(ModSimError::InvalidPolicy(_))));
        assert!(run_sim(&g, &ModerationPolicy::majors(vec![], 1), &rule(0.5), 1, 0).is_err());
        assert!(run_sim(&g, &ModerationPolicy::adaptive(1), &rule(1.5), 1, 0).is_err());
        let seeds: Vec<u64> = (0..5).collect();
        let ps = [ModerationPolicy::adaptive(1), ModerationPolicy::adaptive(2)];
        assert!(compare_strategies(&g, &ps, &rule(0.5), 3, &seeds).is_err());
    }

    #[test]
    fn identical_policies_compare_equal() {
        let g = tiny();
        let ps = [ModerationPolicy::adaptive(1), ModerationPolicy::adaptive(1)];
        let seeds: Vec<u64> = (0..10).collect();
        let c = compare_strategies(&g, &ps, &rule(0.5), 10, &seeds).unwrap();
        assert_eq!(c.policies[0].residuals, c.policies[1].residuals);
        assert!(c.orderings.iter().all(|o| o.fraction_first_not_worse == 1.0));
    }

    #[test]
    fn majors_follow_membership() {
        let g = tiny();
        let names: Vec<String> = major_platforms(&g, 3).iter().map(|p| p.to_string()).collect();
        assert_eq!(names, vec!["one", "two"]);
    }
}
