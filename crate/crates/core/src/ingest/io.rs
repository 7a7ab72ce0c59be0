//! JSONL dataset directories.
//!
//! A dataset directory holds `nodes.jsonl`, `events.jsonl`, `joins.jsonl`,
//! `posts.jsonl` (one JSON object per line, UTF-8, integer-second
//! timestamps) and an optional `dataset.json` declaring the platform set
//! and time range. Without `dataset.json` the platform set is taken from
//! the nodes file in first-seen order and the time range from the events.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError, JoinEvent, PostRecord, MAX_REPORTED_PROBLEMS};
use crate::graph::{CommunityNode, GraphBuilder, LinkEvent, PlatformId};
use crate::Timestamp;

pub const DATASET_FILES: [&str; 5] = [
    "dataset.json",
    "nodes.jsonl",
    "events.jsonl",
    "joins.jsonl",
    "posts.jsonl",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub platforms: Vec<PlatformId>,
    pub time_range: (Timestamp, Timestamp),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a JSONL file, failing on the first malformed line. A missing
/// optional file reads as empty.
fn read_jsonl<T: DeserializeOwned>(dir: &Path, name: &str, required: bool) -> Result<Vec<(usize, T)>, IngestError> {
    let path = dir.join(name);
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(&path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            file: name.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

#[derive(Default)]
struct Problems {
    listed: Vec<String>,
    total: usize,
}

impl Problems {
    fn push(&mut self, file: &str, line: usize, msg: impl std::fmt::Display) {
        self.total += 1;
        if self.listed.len() < MAX_REPORTED_PROBLEMS {
            self.listed.push(format!("{file}:{line}: {msg}"));
        }
    }

    fn finish(self) -> Result<(), IngestError> {
        if self.total == 0 {
            Ok(())
        } else {
            Err(IngestError::Integrity {
                problems: self.listed,
                total: self.total,
            })
        }
    }
}

/// Loads and seals a dataset directory, checking referential integrity of
/// every record.
pub fn load_dataset(dir: &Path) -> Result<Dataset, IngestError> {
    let meta_path = dir.join("dataset.json");
    let meta: Option<DatasetMeta> = match std::fs::read_to_string(&meta_path) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| IngestError::Parse {
            file: "dataset.json".into(),
            line: e.line(),
            message: e.to_string(),
        })?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(&meta_path)(e)),
    };

    let nodes: Vec<(usize, CommunityNode)> = read_jsonl(dir, "nodes.jsonl", true)?;
    let events: Vec<(usize, LinkEvent)> = read_jsonl(dir, "events.jsonl", true)?;
    let joins: Vec<(usize, JoinEvent)> = read_jsonl(dir, "joins.jsonl", false)?;
    let posts: Vec<(usize, PostRecord)> = read_jsonl(dir, "posts.jsonl", false)?;

    let platforms = match &meta {
        Some(m) => m.platforms.clone(),
        None => {
            let mut seen = HashSet::new();
            nodes
                .iter()
                .filter(|(_, n)| seen.insert(n.platform.clone()))
                .map(|(_, n)| n.platform.clone())
                .collect()
        }
    };
    let mut builder = GraphBuilder::new(platforms)?;
    if let Some(m) = &meta {
        builder = builder.with_time_range(m.time_range.0, m.time_range.1);
    }

    let mut problems = Problems::default();
    for (line, node) in nodes {
        if let Err(e) = builder.register_node(node) {
            problems.push("nodes.jsonl", line, e);
        }
    }
    for (line, ev) in &events {
        if let Err(e) = builder.append_event(ev) {
            problems.push("events.jsonl", *line, e);
        }
    }
    let mut pairs = HashSet::new();
    for (line, j) in &joins {
        if builder.index_of(&j.community).is_none() {
            problems.push("joins.jsonl", *line, format!("unknown community `{}`", j.community));
        } else if !pairs.insert((j.individual, j.community.as_str())) {
            problems.push(
                "joins.jsonl",
                *line,
                format!("individual {} joins `{}` twice", j.individual, j.community),
            );
        }
    }
    for (line, p) in &posts {
        if builder.index_of(&p.community).is_none() {
            problems.push("posts.jsonl", *line, format!("unknown community `{}`", p.community));
        }
    }
    problems.finish()?;

    Ok(Dataset {
        graph: builder.seal(),
        joins: joins.into_iter().map(|(_, j)| j).collect(),
        posts: posts.into_iter().map(|(_, p)| p).collect(),
    })
}

fn write_jsonl<T: Serialize>(dir: &Path, name: &str, items: impl Iterator<Item = T>) -> Result<(), IngestError> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| io_err(&path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))
}

/// Writes a dataset directory that [`load_dataset`] reads back losslessly.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let g = &ds.graph;
    let meta = DatasetMeta {
        platforms: g.platforms().to_vec(),
        time_range: g.time_range(),
    };
    let meta_path = dir.join("dataset.json");
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;
    write_jsonl(dir, "nodes.jsonl", g.nodes().iter())?;
    write_jsonl(dir, "events.jsonl", g.events().iter().map(|e| g.to_link_event(e)))?;
    write_jsonl(dir, "joins.jsonl", ds.joins.iter())?;
    write_jsonl(dir, "posts.jsonl", ds.posts.iter())
}
