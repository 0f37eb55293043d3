use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

/// Per-node scores as stored on disk: `node_id<TAB>score<TAB>is_candidate`,
/// with `NA` for nodes that were not scored.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFile {
    pub scores: Vec<Option<f64>>,
}

impl ScoreFile {
    /// Sidecar JSON path next to a score file: `a/b.tsv` → `a/b.params.json`.
    pub fn sidecar(path: &Path) -> PathBuf {
        path.with_extension("params.json")
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("node_id\tscore\tis_candidate\n");
        for (v, s) in self.scores.iter().enumerate() {
            match s {
                Some(x) => writeln!(out, "{v}\t{x}\t1"),
                None => writeln!(out, "{v}\tNA\t0"),
            }
            .expect("writing to a String");
        }
        out
    }
}

/// Writes the TSV and its sidecar JSON of `params`.
pub fn write_scores(path: impl AsRef<Path>, scores: &[Option<f64>], params: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    let file = ScoreFile {
        scores: scores.to_vec(),
    };
    fs::write(path, file.to_tsv()).map_err(|e| Error::io(path, e))?;
    let sidecar = ScoreFile::sidecar(path);
    let json = serde_json::to_string_pretty(params)?;
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let parse = |line: usize, message: String| Error::Parse {
        file: name.clone(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "node_id\tscore\tis_candidate")) => {}
        _ => return Err(parse(1, "expected header node_id\\tscore\\tis_candidate".into())),
    }
    let mut scores = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, score, flag] = fields[..] else {
            return Err(parse(lineno, format!("expected 3 fields, found {}", fields.len())));
        };
        let id: usize = id.parse().map_err(|_| parse(lineno, format!("bad node id {id:?}")))?;
        if id != scores.len() {
            return Err(parse(lineno, format!("node id {id} out of order")));
        }
        let value = match (score, flag) {
            ("NA", "0") => None,
            (s, "1") => Some(s.parse::<f64>().map_err(|_| parse(lineno, format!("bad score {s:?}")))?),
            _ => return Err(parse(lineno, format!("inconsistent score {score:?} / flag {flag:?}"))),
        };
        scores.push(value);
    }
    Ok(ScoreFile { scores })
}
