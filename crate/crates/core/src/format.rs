//! Plain-text instance files.
//!
//! ```text
//! # comments start with '#'
//! sdsp <node_count> <start|-> <target>
//! arc <tail> <head> <weight>
//! ```
//!
//! Two structured comments are understood when present: `# label: <text>`
//! and `# nominal_n: <int>`. Nodes left without outgoing arcs are treated as
//! dead ends.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::GraphBuilder;
use crate::instances::SdspInstance;

pub fn to_text(instance: &SdspInstance) -> String {
    let g = &instance.graph;
    let mut out = String::new();
    let _ = writeln!(out, "# label: {}", instance.label);
    let _ = writeln!(out, "# nominal_n: {}", instance.nominal_n);
    let start = g.start().map_or("-".to_string(), |s| s.to_string());
    let _ = writeln!(out, "sdsp {} {} {}", g.node_count(), start, g.target());
    for a in g.arcs() {
        let _ = writeln!(out, "arc {} {} {}", a.tail, a.head, a.weight);
    }
    out
}

pub fn parse(text: &str) -> Result<SdspInstance> {
    let mut header: Option<(usize, Option<usize>, usize)> = None;
    let mut builder: Option<GraphBuilder> = None;
    let mut label = None;
    let mut nominal_n = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let (content, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(raw[pos + 1..].trim())),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(rest) = c.strip_prefix("label:") {
                label = Some(rest.trim().to_string());
            } else if let Some(rest) = c.strip_prefix("nominal_n:") {
                nominal_n = Some(
                    rest.trim()
                        .parse::<usize>()
                        .map_err(|e| err(format!("nominal_n: {e}")))?,
                );
            }
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let num = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("expected {what}, found `{s}`")))
        };
        match fields[0] {
            "sdsp" => {
                if header.is_some() {
                    return Err(err("duplicate sdsp header".into()));
                }
                if fields.len() != 4 {
                    return Err(err("header is `sdsp <node_count> <start|-> <target>`".into()));
                }
                let n = num(fields[1], "node count")?;
                let start = if fields[2] == "-" {
                    None
                } else {
                    Some(num(fields[2], "start node")?)
                };
                let target = num(fields[3], "target node")?;
                header = Some((n, start, target));
                let mut b = GraphBuilder::new(n, target).allow_dead_ends();
                if let Some(s) = start {
                    b = b.start(s);
                }
                builder = Some(b);
            }
            "arc" => {
                let b = builder
                    .take()
                    .ok_or_else(|| err("arc before sdsp header".into()))?;
                if fields.len() != 4 {
                    return Err(err("arc line is `arc <tail> <head> <weight>`".into()));
                }
                let tail = num(fields[1], "tail")?;
                let head = num(fields[2], "head")?;
                let w: f64 = fields[3]
                    .parse()
                    .map_err(|_| err(format!("bad weight `{}`", fields[3])))?;
                builder = Some(b.arc(tail, head, w));
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    let b = builder.ok_or(Error::Parse {
        line: 0,
        message: "missing sdsp header".into(),
    })?;
    let graph = b.build()?;
    let mut inst = SdspInstance::new(graph, label.unwrap_or_else(|| "file".into()));
    if let Some(n) = nominal_n {
        inst = inst.with_nominal_n(n);
    }
    Ok(inst)
}

pub fn read(path: impl AsRef<Path>) -> Result<SdspInstance> {
    parse(&fs::read_to_string(path)?)
}

pub fn write(instance: &SdspInstance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_text(instance))?;
    Ok(())
}
