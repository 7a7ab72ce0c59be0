//! GEXF 1.3 and CSV edge-list writers for snapshots and platform aggregates.

use std::collections::BTreeSet;
use std::io::{self, Write};

use crate::graph::{AggregateNode, NodeClass, NodeIdx, PlatformAggregate, Snapshot};

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn klass_label(k: NodeClass) -> &'static str {
    match k {
        NodeClass::HateCore => "hate_core",
        NodeClass::VulnerableMainstream => "vulnerable_mainstream",
        NodeClass::NewsSource => "news_source",
    }
}

fn gexf_header<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(w, r#"<gexf xmlns="http://gexf.net/1.3" version="1.3">"#)?;
    writeln!(w, r#"  <meta><creator>ecosim</creator></meta>"#)?;
    writeln!(w, r#"  <graph mode="static" defaultedgetype="directed">"#)?;
    writeln!(w, r#"    <attributes class="node">"#)?;
    writeln!(w, r#"      <attribute id="platform" title="platform" type="string"/>"#)?;
    writeln!(w, r#"      <attribute id="klass" title="klass" type="string"/>"#)?;
    writeln!(w, r#"      <attribute id="members" title="members" type="long"/>"#)?;
    writeln!(w, r#"    </attributes>"#)?;
    writeln!(w, r#"    <attributes class="edge">"#)?;
    writeln!(w, r#"      <attribute id="weight" title="weight" type="long"/>"#)?;
    writeln!(w, r#"    </attributes>"#)
}

fn gexf_node<W: Write>(
    w: &mut W,
    id: &str,
    platform: &str,
    klass: &str,
    members: u64,
) -> io::Result<()> {
    let id = xml_escape(id);
    writeln!(
        w,
        r#"      <node id="{id}" label="{id}"><attvalues><attvalue for="platform" value="{}"/><attvalue for="klass" value="{klass}"/><attvalue for="members" value="{members}"/></attvalues></node>"#,
        xml_escape(platform)
    )
}

fn gexf_edge<W: Write>(w: &mut W, n: usize, source: &str, target: &str, weight: u64) -> io::Result<()> {
    writeln!(
        w,
        r#"      <edge id="{n}" source="{}" target="{}" weight="{weight}"><attvalues><attvalue for="weight" value="{weight}"/></attvalues></edge>"#,
        xml_escape(source),
        xml_escape(target)
    )
}

/// Nodes written for a snapshot: every hate-core community plus every
/// endpoint of an edge present at `as_of`.
fn snapshot_nodes(s: &Snapshot<'_>) -> BTreeSet<NodeIdx> {
    let g = s.graph();
    let mut set: BTreeSet<NodeIdx> = g.hate_nodes().collect();
    for &((a, b), _) in s.edges() {
        set.insert(a);
        set.insert(b);
    }
    set
}

pub fn write_snapshot_gexf<W: Write>(s: &Snapshot<'_>, w: &mut W) -> io::Result<()> {
    let g = s.graph();
    gexf_header(w)?;
    writeln!(w, "    <nodes>")?;
    for idx in snapshot_nodes(s) {
        let n = g.node(idx);
        gexf_node(w, &n.id, n.platform.as_str(), klass_label(n.klass), n.members)?;
    }
    writeln!(w, "    </nodes>")?;
    writeln!(w, "    <edges>")?;
    for (i, &((a, b), wt)) in s.edges().iter().enumerate() {
        gexf_edge(w, i, &g.node(a).id, &g.node(b).id, wt)?;
    }
    writeln!(w, "    </edges>")?;
    writeln!(w, "  </graph>")?;
    writeln!(w, "</gexf>")
}

pub fn write_aggregate_gexf<W: Write>(
    agg: &PlatformAggregate,
    g: &crate::EcosystemGraph,
    w: &mut W,
) -> io::Result<()> {
    gexf_header(w)?;
    writeln!(w, "    <nodes>")?;
    for (i, p) in agg.platforms.iter().enumerate() {
        let members: u64 = g
            .hate_nodes()
            .filter(|&n| g.platform_of(n) as usize == i)
            .map(|n| g.node(n).members)
            .sum();
        gexf_node(w, p.as_str(), p.as_str(), "hate_core", members)?;
    }
    let sink_members = |klass: NodeClass| -> u64 {
        g.nodes().iter().filter(|n| n.klass == klass).map(|n| n.members).sum()
    };
    gexf_node(
        w,
        &agg.label(AggregateNode::Mainstream),
        "*",
        "vulnerable_mainstream",
        sink_members(NodeClass::VulnerableMainstream),
    )?;
    gexf_node(w, &agg.label(AggregateNode::News), "*", "news_source", 0)?;
    writeln!(w, "    </nodes>")?;
    writeln!(w, "    <edges>")?;
    for (i, (&(a, b), &wt)) in agg.edges.iter().enumerate() {
        gexf_edge(w, i, &agg.label(a), &agg.label(b), wt)?;
    }
    writeln!(w, "    </edges>")?;
    writeln!(w, "  </graph>")?;
    writeln!(w, "</gexf>")
}

pub fn write_snapshot_csv<W: Write>(s: &Snapshot<'_>, w: &mut W) -> io::Result<()> {
    let g = s.graph();
    writeln!(w, "source,target,source_platform,target_platform,target_klass,weight")?;
    for &((a, b), wt) in s.edges() {
        let (na, nb) = (g.node(a), g.node(b));
        writeln!(
            w,
            "{},{},{},{},{},{wt}",
            csv_field(&na.id),
            csv_field(&nb.id),
            na.platform,
            nb.platform,
            klass_label(nb.klass)
        )?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(agg: &PlatformAggregate, w: &mut W) -> io::Result<()> {
    writeln!(w, "source,target,weight")?;
    for (&(a, b), &wt) in &agg.edges {
        writeln!(w, "{},{},{wt}", csv_field(&agg.label(a)), csv_field(&agg.label(b)))?;
    }
    Ok(())
}
