//! Seeded synthetic ecosystem generator.
//!
//! Link events of each kind form a homogeneous Poisson process over the
//! study period. Sources are drawn by picking a platform uniformly and then
//! one of its hate communities uniformly. Mainstream and news targets
//! follow a copying rule: with `preferential_probability` the target of an
//! earlier link of the same kind is reused, otherwise a target is drawn
//! uniformly. Hate communities are split into clusters spanning platforms;
//! core-core links stay inside the source's cluster unless
//! `cross_cluster_probability` fires. A core-core event may instead be the
//! return leg of a recent cross-platform link (see `bypass_probability`).
//!
//! Every random stream is derived from `seed` alone, so a config fully
//! determines the dataset.

use std::collections::VecDeque;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Category, Dataset, IngestError, JoinEvent, PostFlag, PostRecord, LABEL_WINDOW};
use crate::graph::{CommunityNode, GraphBuilder, NodeClass, NodeIdx, PlatformId};
use crate::{Timestamp, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSpec {
    pub name: PlatformId,
    pub n_hate_communities: usize,
    pub mean_members: f64,
}

/// Base post rates per category, posts per day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostRates {
    pub antisemitic: f64,
    pub islamophobic: f64,
    pub other: f64,
}

impl PostRates {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::Antisemitic => self.antisemitic,
            Category::Islamophobic => self.islamophobic,
            Category::Other => self.other,
        }
    }
}

/// At `t` the category's post rate jumps to `multiplier` times its base
/// rate, and the excess decays exponentially with time constant
/// `decay_days`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSpec {
    pub t: Timestamp,
    pub category: Category,
    pub multiplier: f64,
    pub decay_days: f64,
}

fn default_t_start() -> Timestamp {
    // 2020-06-01T00:00:00Z
    1_590_969_600
}
fn default_sigma() -> f64 {
    1.0
}
fn default_half() -> f64 {
    0.5
}
fn default_clusters() -> usize {
    4
}
fn default_window() -> f64 {
    7.0
}
fn default_label_posts() -> usize {
    LABEL_WINDOW
}
fn default_max_journey() -> usize {
    403
}
fn default_horizon() -> f64 {
    180.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    #[serde(default = "default_t_start")]
    pub t_start: Timestamp,
    pub duration_days: f64,
    pub platforms: Vec<PlatformSpec>,
    /// Shape parameter of the log-normal membership distributions.
    #[serde(default = "default_sigma")]
    pub members_sigma: f64,
    pub n_mainstream: usize,
    #[serde(default)]
    pub mainstream_mean_members: f64,
    pub n_news: usize,
    /// Events per day.
    pub rate_core_core: f64,
    pub rate_core_mainstream: f64,
    pub rate_core_news: f64,
    #[serde(default = "default_half")]
    pub preferential_probability: f64,
    #[serde(default = "default_clusters")]
    pub n_clusters: usize,
    #[serde(default)]
    pub cross_cluster_probability: f64,
    /// Probability that a core-core event is the return leg of a pending
    /// cross-platform link made within `bypass_window_days`.
    #[serde(default)]
    pub bypass_probability: f64,
    #[serde(default = "default_window")]
    pub bypass_window_days: f64,
    #[serde(default)]
    pub post_rates: PostRates,
    #[serde(default)]
    pub shock_events: Vec<ShockSpec>,
    /// Labeling posts written per hate community.
    #[serde(default = "default_label_posts")]
    pub label_posts_per_community: usize,
    /// Mainstream communities that also get a (non-hate) labeling history.
    #[serde(default)]
    pub n_labeled_mainstream: usize,
    #[serde(default)]
    pub n_individuals: usize,
    #[serde(default = "default_max_journey")]
    pub max_journey_length: usize,
    #[serde(default = "default_horizon")]
    pub journey_horizon_days: f64,
    #[serde(default)]
    pub banned_fraction: f64,
}

impl GeneratorConfig {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let cfg: GeneratorConfig =
            serde_json::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// 26 platforms, 1,592 hate communities, 3.5 years of links.
    pub fn full_scale() -> Self {
        Self::from_json(include_str!("../../configs/full_scale.json")).expect("shipped config is valid")
    }

    /// The full-scale ecosystem with link rates, mainstream population and
    /// memberships divided by 100. Platforms and hate community counts are
    /// unchanged.
    pub fn ci_scale() -> Self {
        Self::from_json(include_str!("../../configs/ci_scale.json")).expect("shipped config is valid")
    }

    pub fn t_end(&self) -> Timestamp {
        self.t_start + (self.duration_days * SECONDS_PER_DAY as f64).round() as i64
    }

    pub fn n_hate(&self) -> usize {
        self.platforms.iter().map(|p| p.n_hate_communities).sum()
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Config(m));
        if !(self.duration_days.is_finite() && self.duration_days > 0.0) {
            return bad(format!("duration_days must be positive, got {}", self.duration_days));
        }
        if self.platforms.is_empty() {
            return bad("at least one platform is required".into());
        }
        let mut names = std::collections::HashSet::new();
        for p in &self.platforms {
            if !names.insert(&p.name) {
                return bad(format!("platform `{}` listed twice", p.name));
            }
            if !(p.mean_members.is_finite() && p.mean_members >= 0.0) {
                return bad(format!("platform `{}` mean_members must be >= 0", p.name));
            }
        }
        for (name, r) in [
            ("rate_core_core", self.rate_core_core),
            ("rate_core_mainstream", self.rate_core_mainstream),
            ("rate_core_news", self.rate_core_news),
            ("post_rates.antisemitic", self.post_rates.antisemitic),
            ("post_rates.islamophobic", self.post_rates.islamophobic),
            ("post_rates.other", self.post_rates.other),
            ("mainstream_mean_members", self.mainstream_mean_members),
            ("members_sigma", self.members_sigma),
        ] {
            if !(r.is_finite() && r >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {r}"));
            }
        }
        for (name, p) in [
            ("preferential_probability", self.preferential_probability),
            ("cross_cluster_probability", self.cross_cluster_probability),
            ("bypass_probability", self.bypass_probability),
            ("banned_fraction", self.banned_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if self.n_clusters == 0 {
            return bad("n_clusters must be >= 1".into());
        }
        if !(self.bypass_window_days.is_finite() && self.bypass_window_days > 0.0) {
            return bad("bypass_window_days must be positive".into());
        }
        let n_hate = self.n_hate();
        if n_hate == 0
            && (self.rate_core_core + self.rate_core_mainstream + self.rate_core_news > 0.0
                || self.post_rates.get(Category::Antisemitic)
                    + self.post_rates.islamophobic
                    + self.post_rates.other
                    > 0.0
                || self.n_individuals > 0)
        {
            return bad("links, posts and joins need at least one hate community".into());
        }
        if self.n_mainstream == 0 && self.rate_core_mainstream > 0.0 {
            return bad("rate_core_mainstream > 0 needs n_mainstream > 0".into());
        }
        if self.n_news == 0 && self.rate_core_news > 0.0 {
            return bad("rate_core_news > 0 needs n_news > 0".into());
        }
        if self.n_labeled_mainstream > self.n_mainstream {
            return bad("n_labeled_mainstream exceeds n_mainstream".into());
        }
        for s in &self.shock_events {
            if !(s.multiplier.is_finite() && s.multiplier >= 1.0) {
                return bad(format!("shock multiplier must be >= 1, got {}", s.multiplier));
            }
            if !(s.decay_days.is_finite() && s.decay_days > 0.0) {
                return bad("shock decay_days must be positive".into());
            }
            if s.t < self.t_start || s.t > self.t_end() {
                return bad(format!("shock at {} outside the study period", s.t));
            }
        }
        if self.max_journey_length == 0 {
            return bad("max_journey_length must be >= 1".into());
        }
        if !(self.journey_horizon_days.is_finite() && self.journey_horizon_days > 0.0) {
            return bad("journey_horizon_days must be positive".into());
        }
        Ok(())
    }
}

// Independent random streams, one per generator stage.
const STREAM_NODES: u64 = 1;
const STREAM_CORE_CORE: u64 = 2;
const STREAM_MAINSTREAM: u64 = 3;
const STREAM_NEWS: u64 = 4;
const STREAM_POSTS: u64 = 5;
const STREAM_LABELS: u64 = 6;
const STREAM_JOINS: u64 = 7;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
}

fn lognormal_members<R: Rng>(rng: &mut R, mean: f64, sigma: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if sigma == 0.0 {
        return mean.round() as u64;
    }
    let mu = mean.ln() - sigma * sigma / 2.0;
    LogNormal::new(mu, sigma).expect("valid lognormal").sample(rng).round() as u64
}

/// Sorted uniform integer times in `[start, end]`.
fn uniform_times<R: Rng>(rng: &mut R, n: usize, start: Timestamp, end: Timestamp) -> Vec<Timestamp> {
    let mut ts: Vec<Timestamp> = (0..n).map(|_| rng.random_range(start..=end)).collect();
    ts.sort_unstable();
    ts
}

struct Layout {
    /// Hate node indices grouped by platform (only platforms with nodes).
    by_platform: Vec<Vec<NodeIdx>>,
    /// Hate node indices grouped by (platform, cluster).
    by_platform_cluster: Vec<Vec<Vec<NodeIdx>>>,
    by_cluster: Vec<Vec<NodeIdx>>,
    hate: Vec<NodeIdx>,
    platform_of: Vec<usize>,
    cluster_of: Vec<usize>,
    mainstream: Vec<NodeIdx>,
    news: Vec<NodeIdx>,
}

impl Layout {
    fn pick_source<R: Rng>(&self, rng: &mut R) -> NodeIdx {
        let nonempty: Vec<&Vec<NodeIdx>> = self.by_platform.iter().filter(|v| !v.is_empty()).collect();
        let group = nonempty[rng.random_range(0..nonempty.len())];
        group[rng.random_range(0..group.len())]
    }
}

pub fn generate_ecosystem(cfg: &GeneratorConfig) -> Result<Dataset, IngestError> {
    cfg.validate()?;
    let t_start = cfg.t_start;
    let t_end = cfg.t_end();
    let mut builder = GraphBuilder::new(cfg.platforms.iter().map(|p| p.name.clone()))?
        .with_time_range(t_start, t_end);
    let n_platforms = cfg.platforms.len();

    let mut layout = Layout {
        by_platform: vec![Vec::new(); n_platforms],
        by_platform_cluster: vec![vec![Vec::new(); cfg.n_clusters]; n_platforms],
        by_cluster: vec![Vec::new(); cfg.n_clusters],
        hate: Vec::new(),
        platform_of: Vec::new(),
        cluster_of: Vec::new(),
        mainstream: Vec::new(),
        news: Vec::new(),
    };

    let mut rng = stream(cfg.seed, STREAM_NODES);
    for (pi, spec) in cfg.platforms.iter().enumerate() {
        for j in 0..spec.n_hate_communities {
            let mut node = CommunityNode::new(
                format!("{}_h{:04}", spec.name, j + 1),
                spec.name.clone(),
                NodeClass::HateCore,
                lognormal_members(&mut rng, spec.mean_members, cfg.members_sigma),
                t_start,
            );
            node.banned = rng.random::<f64>() < cfg.banned_fraction;
            let cluster = rng.random_range(0..cfg.n_clusters);
            let idx = builder.register_node(node)?;
            layout.hate.push(idx);
            layout.by_platform[pi].push(idx);
            layout.by_platform_cluster[pi][cluster].push(idx);
            layout.by_cluster[cluster].push(idx);
            layout.platform_of.push(pi);
            layout.cluster_of.push(cluster);
        }
    }
    for (class, count, prefix, mean) in [
        (NodeClass::VulnerableMainstream, cfg.n_mainstream, "ms", cfg.mainstream_mean_members),
        (NodeClass::NewsSource, cfg.n_news, "news", 0.0),
    ] {
        for j in 0..count {
            let pi = rng.random_range(0..n_platforms);
            let members = lognormal_members(&mut rng, mean, cfg.members_sigma);
            let node = CommunityNode::new(
                format!("{prefix}_{:06}", j + 1),
                cfg.platforms[pi].name.clone(),
                class,
                members,
                t_start,
            );
            let idx = builder.register_node(node)?;
            match class {
                NodeClass::VulnerableMainstream => layout.mainstream.push(idx),
                _ => layout.news.push(idx),
            }
            layout.platform_of.push(pi);
            layout.cluster_of.push(usize::MAX);
        }
    }

    let days = cfg.duration_days;
    core_core_links(cfg, &layout, &mut builder, t_start, t_end)?;
    let mut rng = stream(cfg.seed, STREAM_MAINSTREAM);
    copying_links(&mut rng, &layout, &layout.mainstream, cfg.rate_core_mainstream * days, cfg.preferential_probability, &mut builder, t_start, t_end)?;
    let mut rng = stream(cfg.seed, STREAM_NEWS);
    copying_links(&mut rng, &layout, &layout.news, cfg.rate_core_news * days, cfg.preferential_probability, &mut builder, t_start, t_end)?;

    let graph = builder.seal();
    let id = |i: NodeIdx| graph.node(i).id.clone();

    let mut posts = category_posts(cfg, &layout, &id, t_start, t_end);
    posts.extend(label_posts(cfg, &layout, &id, t_start, t_end));
    posts.sort_by(|a, b| (a.t, &a.community).cmp(&(b.t, &b.community)));

    let mut joins = journeys(cfg, &layout, &id, t_start, t_end);
    joins.sort_by_key(|j| (j.t, j.individual));

    Ok(Dataset { graph, joins, posts })
}

fn core_core_links(
    cfg: &GeneratorConfig,
    layout: &Layout,
    builder: &mut GraphBuilder,
    t_start: Timestamp,
    t_end: Timestamp,
) -> Result<(), IngestError> {
    let mut rng = stream(cfg.seed, STREAM_CORE_CORE);
    let n = poisson(&mut rng, cfg.rate_core_core * cfg.duration_days);
    let window = (cfg.bypass_window_days * SECONDS_PER_DAY as f64).round() as i64;
    // Cross-platform links still awaiting a return leg: (source, target, t).
    let mut pending: VecDeque<(NodeIdx, NodeIdx, Timestamp)> = VecDeque::new();
    for t in uniform_times(&mut rng, n, t_start, t_end) {
        while pending.front().is_some_and(|&(_, _, t1)| t - t1 > window) {
            pending.pop_front();
        }
        let bypass = !pending.is_empty() && rng.random::<f64>() < cfg.bypass_probability;
        if bypass {
            let (a, b, _) = pending.pop_front().expect("nonempty");
            let home = &layout.by_platform_cluster[layout.platform_of[a as usize]]
                [layout.cluster_of[a as usize]];
            let c = home[rng.random_range(0..home.len())];
            builder.append_indexed(b, c, t)?;
            continue;
        }
        let src = layout.pick_source(&mut rng);
        let tgt = if rng.random::<f64>() < cfg.cross_cluster_probability {
            layout.hate[rng.random_range(0..layout.hate.len())]
        } else {
            let cluster = &layout.by_cluster[layout.cluster_of[src as usize]];
            if cluster.len() == 1 {
                src
            } else {
                loop {
                    let c = cluster[rng.random_range(0..cluster.len())];
                    if c != src {
                        break c;
                    }
                }
            }
        };
        if layout.platform_of[src as usize] != layout.platform_of[tgt as usize] {
            pending.push_back((src, tgt, t));
        }
        builder.append_indexed(src, tgt, t)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn copying_links<R: Rng>(
    rng: &mut R,
    layout: &Layout,
    targets: &[NodeIdx],
    mean: f64,
    preferential: f64,
    builder: &mut GraphBuilder,
    t_start: Timestamp,
    t_end: Timestamp,
) -> Result<(), IngestError> {
    let n = poisson(rng, mean);
    let mut history: Vec<NodeIdx> = Vec::with_capacity(n);
    for t in uniform_times(rng, n, t_start, t_end) {
        let src = layout.pick_source(rng);
        let tgt = if !history.is_empty() && rng.random::<f64>() < preferential {
            history[rng.random_range(0..history.len())]
        } else {
            targets[rng.random_range(0..targets.len())]
        };
        history.push(tgt);
        builder.append_indexed(src, tgt, t)?;
    }
    Ok(())
}

fn flag_for(c: Category) -> PostFlag {
    match c {
        Category::Antisemitic | Category::Islamophobic => PostFlag::HateSpeech,
        Category::Other => PostFlag::FascistPromotion,
    }
}

/// Hate-community posts per category: a homogeneous base process plus, for
/// each shock, an exponentially decaying excess process.
fn category_posts(
    cfg: &GeneratorConfig,
    layout: &Layout,
    id: &impl Fn(NodeIdx) -> String,
    t_start: Timestamp,
    t_end: Timestamp,
) -> Vec<PostRecord> {
    let mut rng = stream(cfg.seed, STREAM_POSTS);
    let mut out = Vec::new();
    for category in Category::ALL {
        let base = cfg.post_rates.get(category);
        let n_base = poisson(&mut rng, base * cfg.duration_days);
        let mut times = uniform_times(&mut rng, n_base, t_start, t_end);
        for shock in cfg.shock_events.iter().filter(|s| s.category == category) {
            let decay = shock.decay_days * SECONDS_PER_DAY as f64;
            let span = (t_end - shock.t) as f64;
            let mass = 1.0 - (-span / decay).exp();
            let mean = base * (shock.multiplier - 1.0) * shock.decay_days * mass;
            for _ in 0..poisson(&mut rng, mean) {
                // Inverse CDF of the exponential truncated to the remaining span.
                let u: f64 = rng.random();
                let dt = -decay * (1.0 - u * mass).ln();
                times.push((shock.t + dt.floor() as i64).min(t_end));
            }
        }
        for t in times {
            let c = layout.hate[rng.random_range(0..layout.hate.len())];
            out.push(PostRecord {
                community: id(c),
                t,
                flags: [flag_for(category)].into(),
                category,
            });
        }
    }
    out
}

/// Labeling histories. Each hate community gets `label_posts_per_community`
/// posts whose most recent `k >= 2` are flagged, so it labels as hate under
/// any interleaving with the (always flagged) category posts. Labeled
/// mainstream communities get at most one flagged post.
fn label_posts(
    cfg: &GeneratorConfig,
    layout: &Layout,
    id: &impl Fn(NodeIdx) -> String,
    t_start: Timestamp,
    t_end: Timestamp,
) -> Vec<PostRecord> {
    let mut rng = stream(cfg.seed, STREAM_LABELS);
    let n = cfg.label_posts_per_community;
    let mut out = Vec::new();
    let mut history = |rng: &mut ChaCha8Rng, node: NodeIdx, flagged_recent: usize| {
        let times = uniform_times(rng, n, t_start, t_end);
        for (age, &t) in times.iter().rev().enumerate() {
            let flags = if age < flagged_recent {
                let f = if rng.random::<bool>() { PostFlag::HateSpeech } else { PostFlag::FascistPromotion };
                [f].into()
            } else {
                Default::default()
            };
            out.push(PostRecord {
                community: id(node),
                t,
                flags,
                category: Category::Other,
            });
        }
    };
    if n >= 2 {
        for &h in &layout.hate {
            let k = rng.random_range(2..=n);
            history(&mut rng, h, k);
        }
    }
    for &m in layout.mainstream.iter().take(cfg.n_labeled_mainstream) {
        let k = rng.random_range(0..=1usize.min(n));
        history(&mut rng, m, k);
    }
    out
}

/// Per-individual joining journeys: a log-uniform length in
/// `[1, max_journey_length]`, distinct hate communities, and distinct join
/// times within the horizon after the first join.
fn journeys(
    cfg: &GeneratorConfig,
    layout: &Layout,
    id: &impl Fn(NodeIdx) -> String,
    t_start: Timestamp,
    t_end: Timestamp,
) -> Vec<JoinEvent> {
    let mut rng = stream(cfg.seed, STREAM_JOINS);
    let horizon = (cfg.journey_horizon_days * SECONDS_PER_DAY as f64).round() as i64;
    let mut out = Vec::new();
    for individual in 0..cfg.n_individuals as u64 {
        let cap = cfg.max_journey_length.min(layout.hate.len());
        let u: f64 = rng.random();
        let mut len = ((cap as f64 + 1.0).ln() * u).exp().floor() as usize;
        len = len.clamp(1, cap);
        let first = rng.random_range(t_start..=(t_end - horizon).max(t_start));
        let span = horizon.min(t_end - first + 1).max(1) as usize;
        len = len.min(span);
        let communities = index::sample(&mut rng, layout.hate.len(), len);
        let mut offsets: Vec<usize> = if len > 1 {
            index::sample(&mut rng, span - 1, len - 1).into_iter().map(|o| o + 1).collect()
        } else {
            Vec::new()
        };
        offsets.push(0);
        offsets.sort_unstable();
        for (c, off) in communities.into_iter().zip(offsets) {
            out.push(JoinEvent {
                individual,
                community: id(layout.hate[c]),
                t: first + off as i64,
            });
        }
    }
    out
}
