use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use ecosim_core::analytics::{
    category_series, components_at, components_over_time, detect_bypasses, link_growth, one_click_reach,
    platform_connectivity, shock_response,
};
use ecosim_core::attrition::{
    analytic_boundary, containment_capacity, integrate, predict_outcome, square_law_extinction_time, sweep,
    write_sweep_csv, AttritionError, AttritionScenario, Law, SweepSpec,
};
use ecosim_core::export::{write_aggregate_csv, write_aggregate_gexf, write_snapshot_csv, write_snapshot_gexf};
use ecosim_core::ingest::{
    class_counts, estimate_core_size, generate_ecosystem, label_communities, load_dataset, write_dataset, Category,
    Dataset, GeneratorConfig, Label, DATASET_FILES,
};
use ecosim_core::modsim::{
    compare_strategies, major_platforms, run_sim, write_trace_csv, AdaptationRule, ModSimError, ModerationPolicy,
};
use ecosim_core::pathways::{build_journeys, journey_histogram, violence_mix, BinScheme};
use ecosim_core::{LinkKind, NodeClass, PlatformId, Timestamp, SECONDS_PER_DAY};
use serde_json::json;

use super::{
    usage, AnalyzeArgs, AttritionArgs, Done, ExportArgs, ExportFormat, GenerateArgs, LawArg, Metric, PathwaysArgs,
    PolicyArg, Preset, SimulateArgs, ValidateArgs,
};
use crate::manifest::Artifacts;

fn load(dir: &Path) -> Result<Dataset> {
    load_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn days_to_seconds(flag: &str, days: f64) -> Result<i64> {
    let secs = (days * SECONDS_PER_DAY as f64).round();
    if !(secs.is_finite() && secs >= 1.0) {
        return Err(usage(format!("{flag} must be positive, got {days}")));
    }
    Ok(secs as i64)
}

/// `n` times spread evenly over `[start, end]`, ending at `end`.
fn sample_times(start: Timestamp, end: Timestamp, n: usize) -> Vec<Timestamp> {
    match n {
        0 => vec![],
        1 => vec![end],
        _ => (0..n).map(|i| start + (end - start) * i as i64 / (n as i64 - 1)).collect(),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub(super) fn generate(a: &GenerateArgs, seed: Option<u64>, arts: &mut Artifacts) -> Result<Done> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            GeneratorConfig::from_json(&text)?
        }
        (None, Some(Preset::Ci)) => GeneratorConfig::ci_scale(),
        (None, Some(Preset::Full)) => GeneratorConfig::full_scale(),
        (None, None) => return Err(usage("one of --config or --preset is required")),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let ds = generate_ecosystem(&cfg)?;
    write_dataset(&a.out, &ds)?;
    for name in DATASET_FILES {
        let path = a.out.join(name);
        let bytes = std::fs::read(&path).with_context(|| format!("reading back {}", path.display()))?;
        arts.record(path.display().to_string(), &bytes);
    }
    let effective = serde_json::to_string_pretty(&cfg)? + "\n";
    arts.write(&a.out.join("config.json"), effective.as_bytes())?;

    let g = &ds.graph;
    let [hate, mainstream, news] = class_counts(g);
    let totals = g.kind_totals(g.time_range().1);
    let report = json!({
        "out": a.out.display().to_string(),
        "seed": cfg.seed,
        "platforms": g.platforms().len(),
        "communities": {"hate_core": hate, "vulnerable_mainstream": mainstream, "news_source": news},
        "events": {
            "core_to_core": totals[LinkKind::CoreToCore.index()],
            "core_to_mainstream": totals[LinkKind::CoreToMainstream.index()],
            "core_to_news": totals[LinkKind::CoreToNews.index()],
        },
        "joins": ds.joins.len(),
        "posts": ds.posts.len(),
        "time_range": g.time_range(),
        "estimated_core_size": estimate_core_size(g),
    });
    Ok(Done {
        summary: format!(
            "wrote {} ({} hate communities on {} platforms, {} link events)",
            a.out.display(),
            hate,
            g.platforms().len(),
            g.events().len()
        ),
        report,
        params: serde_json::to_value(&cfg)?,
        dataset: Some(a.out.clone()),
        seeds: vec![cfg.seed],
        default_manifest: Some(a.out.join("manifest.json")),
    })
}

pub(super) fn validate(a: &ValidateArgs) -> Result<Done> {
    let ds = load(&a.dir)?;
    let g = &ds.graph;
    let [hate, mainstream, news] = class_counts(g);
    let labels = label_communities(&ds.posts);
    let klass: HashMap<&str, NodeClass> = g.nodes().iter().map(|n| (n.id.as_str(), n.klass)).collect();
    let mut disagreeing: Vec<&str> = labels
        .iter()
        .filter_map(|(id, label)| {
            let k = *klass.get(id.as_str())?;
            ((*label == Label::Hate) != (k == NodeClass::HateCore)).then_some(id.as_str())
        })
        .collect();
    disagreeing.sort_unstable();
    let report = json!({
        "valid": true,
        "platforms": g.platforms().len(),
        "communities": {"hate_core": hate, "vulnerable_mainstream": mainstream, "news_source": news},
        "events": g.events().len(),
        "joins": ds.joins.len(),
        "posts": ds.posts.len(),
        "time_range": g.time_range(),
        "labeling": {
            "labeled_communities": labels.len(),
            "class_disagreements": disagreeing.len(),
            "examples": &disagreeing[..disagreeing.len().min(20)],
        },
    });
    Ok(Done {
        summary: format!("{} is valid ({} communities, {} events)", a.dir.display(), g.node_count(), g.events().len()),
        report,
        params: json!({"command": "validate"}),
        dataset: Some(a.dir.clone()),
        seeds: vec![],
        default_manifest: None,
    })
}

pub(super) fn analyze(a: &AnalyzeArgs, arts: &mut Artifacts) -> Result<Done> {
    let ds = load(&a.dir)?;
    let g = &ds.graph;
    let (start, end) = g.time_range();
    let at = a.at.unwrap_or(end);
    let samples = sample_times(start, at.max(start), a.samples);
    let mut csv = None;
    let result = match a.metric {
        Metric::Components => {
            if a.csv.is_some() {
                csv = Some(csv_bytes(|w| {
                    use std::io::Write;
                    writeln!(w, "as_of,n_components,largest_size,linked_core_nodes")?;
                    for r in components_over_time(g, &samples) {
                        let linked: usize = r.largest_sizes.iter().sum();
                        let largest = r.largest_sizes.first().copied().unwrap_or(0);
                        writeln!(w, "{},{},{},{}", r.as_of, r.components.len(), largest, linked)?;
                    }
                    Ok(())
                })?);
            }
            serde_json::to_value(components_at(g, at))?
        }
        Metric::Reach => {
            if a.csv.is_some() {
                csv = Some(csv_bytes(|w| {
                    use std::io::Write;
                    writeln!(w, "as_of,n_mainstream,total_members")?;
                    for &t in &samples {
                        let r = one_click_reach(g, t);
                        writeln!(w, "{},{},{}", t, r.n_mainstream, r.total_members)?;
                    }
                    Ok(())
                })?);
            }
            serde_json::to_value(one_click_reach(g, at))?
        }
        Metric::Growth => {
            let bin = a.bin.unwrap_or(SECONDS_PER_DAY);
            if bin <= 0 {
                return Err(usage(format!("--bin must be positive, got {bin}")));
            }
            let lg = link_growth(g, bin);
            if a.csv.is_some() {
                csv = Some(csv_bytes(|w| {
                    use std::io::Write;
                    writeln!(w, "bin,t_end,core_to_core,core_to_mainstream,core_to_news")?;
                    for i in 0..lg.n_bins {
                        let c = |k: LinkKind| lg.kind(k).cumulative[i];
                        writeln!(
                            w,
                            "{},{},{},{},{}",
                            i,
                            lg.t0 + (i as i64 + 1) * lg.bin_width,
                            c(LinkKind::CoreToCore),
                            c(LinkKind::CoreToMainstream),
                            c(LinkKind::CoreToNews)
                        )?;
                    }
                    Ok(())
                })?);
            }
            serde_json::to_value(&lg)?
        }
        Metric::Connectivity => {
            let r = platform_connectivity(g, at);
            if a.csv.is_some() {
                csv = Some(csv_bytes(|w| {
                    use std::io::Write;
                    writeln!(w, "platform,out_weight,in_weight,degree")?;
                    for p in &r.platforms {
                        writeln!(w, "{},{},{},{}", p.platform, p.out_weight, p.in_weight, p.degree)?;
                    }
                    Ok(())
                })?);
            }
            serde_json::to_value(&r)?
        }
        Metric::Bypass => {
            let window = days_to_seconds("--window-days", a.window_days)?;
            let motifs: Vec<_> = detect_bypasses(g, window)?.into_iter().filter(|m| m.t2 <= at).collect();
            let id = |i| g.node(i).id.as_str();
            let row = |m: &ecosim_core::analytics::BypassMotif| {
                json!({"a": id(m.a), "b": id(m.b), "c": id(m.c), "t1": m.t1, "t2": m.t2})
            };
            if a.csv.is_some() {
                csv = Some(csv_bytes(|w| {
                    use std::io::Write;
                    writeln!(w, "t1,t2,a,b,c")?;
                    for m in &motifs {
                        writeln!(w, "{},{},{},{},{}", m.t1, m.t2, id(m.a), id(m.b), id(m.c))?;
                    }
                    Ok(())
                })?);
            }
            json!({
                "window_seconds": window,
                "count": motifs.len(),
                "truncated": motifs.len() > a.limit,
                "motifs": motifs.iter().take(a.limit).map(row).collect::<Vec<_>>(),
            })
        }
        Metric::Shock => {
            let event_t = a.event_t.ok_or_else(|| usage("--metric shock needs --event-t"))?;
            let name = a.category.as_deref().ok_or_else(|| usage("--metric shock needs --category"))?;
            let category = Category::parse(name).ok_or_else(|| usage(format!("unknown category `{name}`")))?;
            let bin = a.bin.unwrap_or(3_600);
            if bin <= 0 {
                return Err(usage(format!("--bin must be positive, got {bin}")));
            }
            let t0 = ds.posts.iter().map(|p| p.t).min().unwrap_or(start).min(start);
            let t1 = ds.posts.iter().map(|p| p.t).max().unwrap_or(end).max(end) + 1;
            let series = category_series(&ds.posts, category, bin, t0, t1)?;
            if a.csv.is_some() {
                csv = Some(csv_bytes(|w| {
                    use std::io::Write;
                    writeln!(w, "bin,t,count")?;
                    for (i, c) in series.counts.iter().enumerate() {
                        writeln!(w, "{},{},{}", i, series.t0 + i as i64 * series.bin_width, c)?;
                    }
                    Ok(())
                })?);
            }
            serde_json::to_value(shock_response(&series, event_t, a.pre_bins, a.post_bins)?)?
        }
    };
    if let (Some(path), Some(bytes)) = (&a.csv, csv) {
        arts.write(path, &bytes)?;
    }
    let metric = serde_json::to_value(a.metric.to_possible_value_name())?;
    let summary = format!("{} at {}: done", metric.as_str().unwrap_or("metric"), at);
    Ok(Done {
        report: json!({"metric": metric, "as_of": at, "result": result}),
        params: json!({
            "metric": metric,
            "at": at,
            "bin": a.bin,
            "window_days": a.window_days,
            "event_t": a.event_t,
            "category": a.category,
            "pre_bins": a.pre_bins,
            "post_bins": a.post_bins,
            "samples": a.samples,
            "limit": a.limit,
        }),
        dataset: Some(a.dir.clone()),
        seeds: vec![],
        summary,
        default_manifest: None,
    })
}

impl Metric {
    fn to_possible_value_name(self) -> &'static str {
        match self {
            Metric::Components => "components",
            Metric::Reach => "reach",
            Metric::Growth => "growth",
            Metric::Connectivity => "connectivity",
            Metric::Bypass => "bypass",
            Metric::Shock => "shock",
        }
    }
}

pub(super) fn pathways(a: &PathwaysArgs, arts: &mut Artifacts) -> Result<Done> {
    let horizon = days_to_seconds("--horizon-days", a.horizon_days)?;
    let scheme = match &a.edges {
        None => BinScheme::Log2,
        Some(e) => {
            if e.first() != Some(&1) || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("--edges must start at 1 and increase strictly"));
            }
            BinScheme::Edges(e.clone())
        }
    };
    let ds = load(&a.dir)?;
    let journeys = build_journeys(&ds.joins, &ds.ban_map())?;
    let hist = journey_histogram(&journeys, horizon, &scheme);
    let mixes: Vec<_> = journeys.iter().filter(|j| !j.is_empty()).map(violence_mix).collect();
    let mixed = mixes.iter().filter(|m| m.n_banned > 0 && m.n_active > 0).count();
    let with_banned = mixes.iter().filter(|m| m.n_banned > 0).count();
    let mean_banned = if mixes.is_empty() {
        0.0
    } else {
        mixes.iter().map(|m| m.fraction_banned).sum::<f64>() / mixes.len() as f64
    };
    if let Some(path) = &a.csv {
        let mut text = String::from("individual,step,community,t,status,within_horizon\n");
        for j in &journeys {
            let within = j.joins_within(horizon);
            for (i, s) in j.joins.iter().enumerate() {
                let status = match s.status {
                    ecosim_core::pathways::BanStatus::Banned => "banned",
                    ecosim_core::pathways::BanStatus::Active => "active",
                };
                writeln!(text, "{},{},{},{},{},{}", j.individual, i + 1, s.community, s.t, status, i < within)?;
            }
        }
        arts.write(path, text.as_bytes())?;
    }
    let report = json!({
        "horizon_days": a.horizon_days,
        "histogram": hist,
        "violence_mix": {
            "individuals": mixes.len(),
            "with_banned_community": with_banned,
            "mixing_banned_and_active": mixed,
            "mean_fraction_banned": mean_banned,
        },
    });
    Ok(Done {
        summary: format!(
            "{} individuals, journey lengths {}..={} within {} days",
            hist.individuals, hist.min_length, hist.max_length, a.horizon_days
        ),
        report,
        params: json!({"horizon_days": a.horizon_days, "edges": a.edges}),
        dataset: Some(a.dir.clone()),
        seeds: vec![],
        default_manifest: None,
    })
}

fn law_of(l: LawArg) -> Law {
    match l {
        LawArg::Square => Law::Square,
        LawArg::Linear => Law::Linear,
        LawArg::Ambush => Law::Ambush,
    }
}

fn attrition_usage(e: AttritionError) -> anyhow::Error {
    match e {
        AttritionError::InvalidScenario(_) | AttritionError::InvalidParameter(_) => usage(e.to_string()),
        other => other.into(),
    }
}

pub(super) fn attrition(a: &AttritionArgs, arts: &mut Artifacts) -> Result<Done> {
    let law = law_of(a.law);
    if let (Some(ratios), Some(sizes)) = (&a.sweep_ratios, &a.sweep_sizes) {
        return attrition_sweep(a, law, ratios, sizes, arts);
    }
    let (m, h0) = match (a.m, a.H0) {
        (Some(m), Some(h0)) => (m, h0),
        _ => return Err(usage("--m and --H0 are required outside sweep mode")),
    };
    let s = AttritionScenario::new(law, m, a.h, h0, a.M0).map_err(attrition_usage)?;
    let prediction = predict_outcome(&s)?;
    let tc = s.characteristic_time();
    let dt = a.dt.unwrap_or(1e-3 * tc);
    let horizon = a.T.unwrap_or(1e5 * tc);
    let traj = integrate(&s, dt, horizon).map_err(attrition_usage)?;
    if let Some(path) = &a.csv {
        let mut text = String::from("t,hate,moderators\n");
        for i in 0..traj.times.len() {
            writeln!(text, "{},{},{}", traj.times[i], traj.hate[i], traj.moderators[i])?;
        }
        arts.write(path, text.as_bytes())?;
    }
    let numeric_winner = traj.outcome.winner();
    let report = json!({
        "mode": "single",
        "scenario": s,
        "characteristic_time": tc,
        "prediction": prediction,
        "containment_capacity": (law == Law::Ambush).then(|| containment_capacity(a.M0, m, a.h)),
        "extinction_time": if law == Law::Square { square_law_extinction_time(&s) } else { None },
        "numeric": {
            "dt": dt,
            "horizon": horizon,
            "outcome": traj.outcome,
            "winner": numeric_winner,
            "end_time": traj.end_time,
            "final_hate": traj.final_hate,
            "final_moderators": traj.final_moderators,
            "invariant_drift": traj.invariant_drift,
            "steps": traj.steps,
            "agrees_with_prediction": numeric_winner.map(|w| w == prediction.winner),
        },
    });
    Ok(Done {
        summary: format!(
            "{} law: predicted {:?}, numeric {:?} at t = {:.4}",
            law.name(),
            prediction.winner,
            traj.outcome,
            traj.end_time
        ),
        report,
        params: json!({"scenario": s, "dt": dt, "horizon": horizon}),
        dataset: None,
        seeds: vec![],
        default_manifest: None,
    })
}

fn attrition_sweep(a: &AttritionArgs, law: Law, ratios: &[f64], sizes: &[f64], arts: &mut Artifacts) -> Result<Done> {
    if a.m.is_some() || a.H0.is_some() {
        return Err(usage("--m and --H0 are set by the sweep axes; drop them"));
    }
    let mut spec = SweepSpec::new(law, ratios.to_vec(), sizes.to_vec());
    spec.hate_efficiency = a.h;
    spec.initial_moderators = a.M0;
    for &r in ratios {
        for &z in sizes {
            spec.scenario(r, z).validate().map_err(attrition_usage)?;
        }
    }
    let grid = sweep(&spec).map_err(attrition_usage)?;
    if let Some(path) = &a.csv {
        let bytes = csv_bytes(|w| write_sweep_csv(&grid, w))?;
        arts.write(path, &bytes)?;
    }
    let rows: Vec<_> = sizes
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            json!({
                "size_ratio": z,
                "analytic_boundary": analytic_boundary(law, z, a.M0),
                "numeric_flip": grid.numeric_flip(i),
            })
        })
        .collect();
    let report = json!({
        "mode": "sweep",
        "spec": grid.spec,
        "disagreements": grid.disagreements,
        "undetermined": grid.undetermined,
        "rows": rows,
        "cells": grid.cells,
    });
    Ok(Done {
        summary: format!(
            "{} law sweep: {} cells, {} disagreements, {} undetermined",
            law.name(),
            grid.cells.len(),
            grid.disagreements,
            grid.undetermined
        ),
        report,
        params: json!({"sweep": spec}),
        dataset: None,
        seeds: vec![],
        default_manifest: None,
    })
}

fn modsim_usage(e: ModSimError) -> anyhow::Error {
    usage(e.to_string())
}

pub(super) fn simulate(a: &SimulateArgs, seed: u64, arts: &mut Artifacts) -> Result<Done> {
    let ds = load(&a.dir)?;
    let g = &ds.graph;
    let rule = AdaptationRule {
        bypass_probability: a.bypass_probability,
        relink_window_ticks: a.relink_window,
    };
    rule.validate().map_err(modsim_usage)?;
    let majors = match &a.platforms {
        Some(names) => names
            .iter()
            .map(|n| PlatformId::new(n).map_err(|e| usage(e.to_string())))
            .collect::<Result<Vec<_>>>()?,
        None => {
            if a.majors == 0 {
                return Err(usage("--majors must be at least 1"));
            }
            major_platforms(g, a.majors)
        }
    };
    let mut majors_policy = ModerationPolicy::majors(majors, a.budget);
    majors_policy.detection_delay_ticks = a.detection_delay;
    let mut adaptive_policy = ModerationPolicy::adaptive(a.budget);
    adaptive_policy.detection_delay_ticks = a.detection_delay;

    let (report, seeds, summary) = match a.policy {
        PolicyArg::Majors | PolicyArg::Adaptive => {
            let policy = if a.policy == PolicyArg::Majors { majors_policy } else { adaptive_policy };
            let out = run_sim(g, &policy, &rule, a.ticks, seed).map_err(modsim_usage)?;
            if let Some(path) = &a.csv {
                let bytes = csv_bytes(|w| write_trace_csv(&out, w))?;
                arts.write(path, &bytes)?;
            }
            let summary = format!(
                "{}: residual {:.4} after {} ticks ({} removals, {} bypasses)",
                out.policy, out.residual_fraction, a.ticks, out.total_removals, out.total_bypasses
            );
            let report = json!({
                "mode": "single",
                "policy": policy,
                "rule": rule,
                "ticks": a.ticks,
                "seed": seed,
                "outcome": out,
            });
            (report, vec![seed], summary)
        }
        PolicyArg::Compare => {
            let seeds: Vec<u64> = (0..a.seeds).map(|i| seed.wrapping_add(i)).collect();
            let policies = [majors_policy, adaptive_policy];
            let cmp = compare_strategies(g, &policies, &rule, a.ticks, &seeds).map_err(modsim_usage)?;
            if let Some(path) = &a.csv {
                let mut text = String::from("seed");
                for p in &cmp.policies {
                    write!(text, ",{}", p.policy)?;
                }
                text.push('\n');
                for (i, s) in cmp.seeds.iter().enumerate() {
                    write!(text, "{s}")?;
                    for p in &cmp.policies {
                        write!(text, ",{}", p.residuals[i])?;
                    }
                    text.push('\n');
                }
                arts.write(path, text.as_bytes())?;
            }
            let summary = cmp
                .policies
                .iter()
                .map(|p| format!("{}: mean residual {:.4}", p.policy, p.mean_residual))
                .collect::<Vec<_>>()
                .join("; ");
            let report = json!({
                "mode": "compare",
                "policies": policies,
                "rule": rule,
                "ticks": a.ticks,
                "comparison": cmp,
            });
            (report, seeds, summary)
        }
    };
    Ok(Done {
        params: json!({
            "policy": report["mode"],
            "policies": report.get("policies").or(report.get("policy")),
            "rule": rule,
            "ticks": a.ticks,
        }),
        report,
        dataset: Some(a.dir.clone()),
        seeds,
        summary,
        default_manifest: None,
    })
}

pub(super) fn export(a: &ExportArgs, arts: &mut Artifacts) -> Result<Done> {
    let ds = load(&a.dir)?;
    let g = &ds.graph;
    let at = a.at.unwrap_or(g.time_range().1);
    let snap = g.snapshot_at(at);
    let mut buf = Vec::new();
    let edges = if a.aggregate {
        let agg = snap.aggregate_by_platform();
        match a.format {
            ExportFormat::Gexf => write_aggregate_gexf(&agg, g, &mut buf)?,
            ExportFormat::Csv => write_aggregate_csv(&agg, &mut buf)?,
        }
        agg.edges.len()
    } else {
        match a.format {
            ExportFormat::Gexf => write_snapshot_gexf(&snap, &mut buf)?,
            ExportFormat::Csv => write_snapshot_csv(&snap, &mut buf)?,
        }
        snap.edges().len()
    };
    arts.write(&a.out, &buf)?;
    let format = match a.format {
        ExportFormat::Gexf => "gexf",
        ExportFormat::Csv => "csv",
    };
    let report = json!({
        "as_of": at,
        "aggregate": a.aggregate,
        "format": format,
        "path": a.out.display().to_string(),
        "edges": edges,
        "total_weight": snap.total_weight(),
    });
    Ok(Done {
        summary: format!("wrote {} ({} edges)", a.out.display(), edges),
        report,
        params: json!({"at": at, "aggregate": a.aggregate, "format": format}),
        dataset: Some(a.dir.clone()),
        seeds: vec![],
        default_manifest: Some(super::sibling(&a.out, "manifest.json")),
    })
}
