//! Graph directory format: `meta.json`, `edges.tsv`, `features.csv`,
//! `labels.csv` and `split.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Graph, Split};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::io(path, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(file: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_err(file, e.line(), e.to_string()))
}

pub fn load_graph(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();
    let meta: Meta = parse_json("meta.json", &read(dir, "meta.json")?)?;
    let n = meta.num_nodes;
    let r = meta.num_features;

    let mut edges = Vec::new();
    for (i, line) in read(dir, "edges.tsv")?.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("edges.tsv", lineno, "expected `u<TAB>v`"));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| parse_err("edges.tsv", lineno, format!("{s:?}: {e}")))
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u >= n || v >= n {
            return Err(parse_err(
                "edges.tsv",
                lineno,
                format!("node index out of range for {n} nodes"),
            ));
        }
        if u == v {
            return Err(parse_err("edges.tsv", lineno, format!("self-loop on node {u}")));
        }
        edges.push((u, v));
    }

    let mut features = Array2::zeros((n, r));
    let text = read(dir, "features.csv")?;
    let rows: Vec<&str> = text.lines().collect();
    if rows.len() != n {
        return Err(parse_err(
            "features.csv",
            rows.len(),
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    for (v, line) in rows.iter().enumerate() {
        let values: Vec<&str> = if line.is_empty() { vec![] } else { line.split(',').collect() };
        if values.len() != r {
            return Err(parse_err(
                "features.csv",
                v + 1,
                format!("expected {r} values, found {}", values.len()),
            ));
        }
        for (j, s) in values.into_iter().enumerate() {
            features[[v, j]] = s
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err("features.csv", v + 1, format!("{s:?}: {e}")))?;
        }
    }

    let text = read(dir, "labels.csv")?;
    let rows: Vec<&str> = text.lines().collect();
    if rows.len() != n {
        return Err(parse_err(
            "labels.csv",
            rows.len(),
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    let labels = rows
        .iter()
        .enumerate()
        .map(|(v, s)| match s.trim().parse::<i64>() {
            Ok(-1) => Ok(None),
            Ok(c) if c >= 0 && (c as usize) < meta.num_classes => Ok(Some(c as usize)),
            Ok(c) => Err(parse_err(
                "labels.csv",
                v + 1,
                format!("label {c} outside [0, {}) and not -1", meta.num_classes),
            )),
            Err(e) => Err(parse_err("labels.csv", v + 1, format!("{s:?}: {e}"))),
        })
        .collect::<Result<Vec<_>>>()?;

    let split: Split = parse_json("split.json", &read(dir, "split.json")?)?;
    Graph::new(&edges, features, labels, meta.num_classes, split)
}

pub fn save_graph(g: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = Meta {
        num_nodes: g.num_nodes(),
        num_features: g.num_features(),
        num_classes: g.num_classes(),
    };
    write(dir, "meta.json", &serde_json::to_string(&meta)?)?;

    let mut edges = String::new();
    for (u, v) in g.edges() {
        writeln!(edges, "{u}\t{v}").unwrap();
    }
    write(dir, "edges.tsv", &edges)?;

    let mut features = String::new();
    for row in g.features().rows() {
        let mut first = true;
        for x in row {
            if !first {
                features.push(',');
            }
            first = false;
            // `{}` on f64 prints the shortest string that parses back exactly.
            write!(features, "{x}").unwrap();
        }
        features.push('\n');
    }
    write(dir, "features.csv", &features)?;

    let mut labels = String::new();
    for l in g.labels() {
        match l {
            Some(c) => writeln!(labels, "{c}").unwrap(),
            None => labels.push_str("-1\n"),
        }
    }
    write(dir, "labels.csv", &labels)?;
    write(dir, "split.json", &serde_json::to_string(g.split())?)
}
