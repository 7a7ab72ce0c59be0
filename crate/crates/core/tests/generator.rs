use ecosim_core::analytics::{components_at, link_growth, one_click_reach, platform_connectivity};
use ecosim_core::ingest::{
    estimate_core_size, generate_ecosystem, DATASET_FILES, load_dataset, write_dataset, GeneratorConfig, PlatformSpec, PostRates,
};
use ecosim_core::{LinkKind, NodeClass, PlatformId, SECONDS_PER_DAY};

fn uniform(seed: u64, days: f64) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        duration_days: days,
        platforms: (0..26)
            .map(|i| PlatformSpec {
                name: PlatformId::new(&format!("p{i:02}")).unwrap(),
                n_hate_communities: 12,
                mean_members: 500.0,
            })
            .collect(),
        n_mainstream: 400,
        n_news: 10,
        rate_core_core: 8.0,
        rate_core_mainstream: 30.0,
        rate_core_news: 2.0,
        bypass_probability: 0.0,
        post_rates: PostRates::default(),
        shock_events: vec![],
        n_labeled_mainstream: 0,
        n_individuals: 20,
        ..GeneratorConfig::ci_scale()
    }
}

#[test]
fn event_totals_within_five_sigma() {
    let cfg = uniform(11, 365.0);
    let g = generate_ecosystem(&cfg).unwrap().graph;
    let totals = g.kind_totals(g.time_range().1);
    for (kind, rate) in [
        (LinkKind::CoreToCore, cfg.rate_core_core),
        (LinkKind::CoreToMainstream, cfg.rate_core_mainstream),
        (LinkKind::CoreToNews, cfg.rate_core_news),
    ] {
        let mean = rate * cfg.duration_days;
        let z = (totals[kind.index()] as f64 - mean) / mean.sqrt();
        assert!(z.abs() < 5.0, "{kind:?}: {} events, expected {mean} (z = {z:.2})", totals[kind.index()]);
    }
}

#[test]
fn growth_slope_within_three_sigma() {
    // OLS slope of a cumulative Poisson count over n bins has variance
    // about 1.2 * rate / n.
    let cfg = uniform(5, 400.0);
    let g = generate_ecosystem(&cfg).unwrap().graph;
    let lg = link_growth(&g, SECONDS_PER_DAY);
    for (kind, rate) in [(LinkKind::CoreToCore, cfg.rate_core_core), (LinkKind::CoreToMainstream, cfg.rate_core_mainstream)] {
        let k = lg.kind(kind);
        let sigma = (1.2 * rate / lg.n_bins as f64).sqrt();
        assert!((k.slope - rate).abs() < 3.0 * sigma, "{kind:?}: slope {} vs {rate} (sigma {sigma})", k.slope);
        assert!(k.steady);
    }
}

#[test]
fn uniform_platforms_are_equivalent() {
    let ok = (0..100)
        .filter(|&seed| {
            let g = generate_ecosystem(&uniform(seed, 120.0)).unwrap().graph;
            platform_connectivity(&g, g.time_range().1).equivalence_ratio <= 2.0
        })
        .count();
    assert!(ok >= 95, "ratio <= 2 on only {ok}/100 seeds");
}

#[test]
fn clustered_core_has_several_large_components() {
    let g = generate_ecosystem(&GeneratorConfig::ci_scale()).unwrap().graph;
    let n_core = g.count_class(NodeClass::HateCore);
    let report = components_at(&g, g.time_range().1);
    let large = report.largest_sizes.iter().filter(|&&s| s * 20 >= n_core).count();
    assert!(large >= 2, "sizes {:?}", &report.largest_sizes[..report.largest_sizes.len().min(8)]);
    assert_eq!(&report.largest_sizes[..4], &[393, 390, 360, 353]);
}

#[test]
fn round_trip_preserves_everything() {
    let mut cfg = uniform(3, 60.0);
    cfg.post_rates = PostRates {
        antisemitic: 30.0,
        islamophobic: 10.0,
        other: 5.0,
    };
    cfg.banned_fraction = 0.4;
    let ds = generate_ecosystem(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &ds).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);
    let end = ds.graph.time_range().1;
    assert_eq!(one_click_reach(&back.graph, end), one_click_reach(&ds.graph, end));
    assert_eq!(estimate_core_size(&back.graph), estimate_core_size(&ds.graph));
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_dataset(a.path(), &generate_ecosystem(&uniform(9, 30.0)).unwrap()).unwrap();
    write_dataset(b.path(), &generate_ecosystem(&uniform(9, 30.0)).unwrap()).unwrap();
    for f in DATASET_FILES {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
