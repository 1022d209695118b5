//! Tab-separated dataset directories.
//!
//! ```text
//! meta.tsv      n<TAB>d<TAB>c
//! edges.tsv     u<TAB>v<TAB>weight        each undirected edge once, u != v
//! features.tsv  id<TAB>idx:val idx:val    omitted indices are 0
//! labels.tsv    id<TAB>l1,l2,...          labeled nodes only
//! split.tsv     id<TAB>train|test         absent ids are unscored
//! ```
//!
//! Lines starting with `#` and blank lines are ignored everywhere.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::{DenseMatrix, SparseMatrix};

struct TsvFile {
    path: PathBuf,
    text: String,
}

impl TsvFile {
    fn open(dir: &Path, name: &str) -> Result<Self> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self { path, text })
    }

    /// Non-comment lines with their 1-based line numbers.
    fn lines(&self) -> impl Iterator<Item = (usize, &str)> {
        self.text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            file: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn parse<T: FromStr>(&self, line: usize, field: &str, what: &str) -> Result<T> {
        field
            .trim()
            .parse()
            .map_err(|_| self.err(line, format!("expected {what}, found `{field}`")))
    }

    fn node_id(&self, line: usize, field: &str, n: usize) -> Result<usize> {
        let id: usize = self.parse(line, field, "node id")?;
        if id >= n {
            return Err(self.err(line, format!("node id {id} out of range (n = {n})")));
        }
        Ok(id)
    }
}

/// Reads a dataset directory into a validated [`Graph`].
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();

    let meta = TsvFile::open(dir, "meta.tsv")?;
    let (n, d, c) = {
        let mut it = meta.lines();
        let (ln, line) = it
            .next()
            .ok_or_else(|| meta.err(1, "missing `n<TAB>d<TAB>c` line"))?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(meta.err(ln, "expected 3 fields `n<TAB>d<TAB>c`"));
        }
        if let Some((ln, _)) = it.next() {
            return Err(meta.err(ln, "unexpected extra line"));
        }
        let n: usize = meta.parse(ln, fields[0], "node count")?;
        let d: usize = meta.parse(ln, fields[1], "feature dimension")?;
        let c: usize = meta.parse(ln, fields[2], "class count")?;
        (n, d, c)
    };

    let edges = TsvFile::open(dir, "edges.tsv")?;
    let mut edge_map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (ln, line) in edges.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(edges.err(ln, "expected `u<TAB>v<TAB>weight`"));
        }
        let u = edges.node_id(ln, fields[0], n)?;
        let v = edges.node_id(ln, fields[1], n)?;
        let w: f64 = edges.parse(ln, fields[2], "edge weight")?;
        if u == v {
            return Err(edges.err(ln, format!("self-loop on node {u}")));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(edges.err(ln, format!("edge weight must be finite and >= 0, found {w}")));
        }
        let key = (u.min(v), u.max(v));
        match edge_map.get(&key) {
            Some(&prev) if prev != w => {
                return Err(edges.err(
                    ln,
                    format!("conflicting weights {prev} and {w} for edge ({u}, {v})"),
                ))
            }
            _ => {
                edge_map.insert(key, w);
            }
        }
    }
    let triplets = edge_map
        .iter()
        .flat_map(|(&(u, v), &w)| [(u, v, w), (v, u, w)])
        .collect();
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;

    let feats = TsvFile::open(dir, "features.tsv")?;
    let mut features = DenseMatrix::zeros(n, d);
    let mut seen = vec![false; n];
    for (ln, line) in feats.lines() {
        let (id, rest) = line.split_once('\t').unwrap_or((line, ""));
        let id = feats.node_id(ln, id, n)?;
        if std::mem::replace(&mut seen[id], true) {
            return Err(feats.err(ln, format!("duplicate features for node {id}")));
        }
        for pair in rest.split_whitespace() {
            let (idx, val) = pair
                .split_once(':')
                .ok_or_else(|| feats.err(ln, format!("expected `idx:val`, found `{pair}`")))?;
            let idx: usize = feats.parse(ln, idx, "feature index")?;
            if idx >= d {
                return Err(feats.err(ln, format!("feature index {idx} out of range (d = {d})")));
            }
            let val: f64 = feats.parse(ln, val, "feature value")?;
            if !val.is_finite() {
                return Err(feats.err(ln, format!("non-finite feature value {val}")));
            }
            features[(id, idx)] = val;
        }
    }

    let labs = TsvFile::open(dir, "labels.tsv")?;
    let mut labels = DenseMatrix::zeros(n, c);
    let mut seen = vec![false; n];
    for (ln, line) in labs.lines() {
        let (id, rest) = line.split_once('\t').unwrap_or((line, ""));
        let id = labs.node_id(ln, id, n)?;
        if std::mem::replace(&mut seen[id], true) {
            return Err(labs.err(ln, format!("duplicate labels for node {id}")));
        }
        for l in rest.split(',').map(str::trim).filter(|l| !l.is_empty()) {
            let l: usize = labs.parse(ln, l, "label id")?;
            if l >= c {
                return Err(labs.err(ln, format!("label {l} out of range (c = {c})")));
            }
            labels[(id, l)] = 1.0;
        }
    }

    let split = TsvFile::open(dir, "split.tsv")?;
    let mut train_mask = vec![false; n];
    let mut test_mask = vec![false; n];
    let mut seen = vec![false; n];
    for (ln, line) in split.lines() {
        let (id, tag) = line
            .split_once('\t')
            .ok_or_else(|| split.err(ln, "expected `id<TAB>train|test`"))?;
        let id = split.node_id(ln, id, n)?;
        if std::mem::replace(&mut seen[id], true) {
            return Err(split.err(ln, format!("node {id} listed twice")));
        }
        match tag.trim() {
            "train" => {
                if labels.row(id).iter().all(|&v| v == 0.0) {
                    return Err(split.err(ln, format!("train node {id} has no labels")));
                }
                train_mask[id] = true;
            }
            "test" => test_mask[id] = true,
            other => {
                return Err(split.err(ln, format!("expected `train` or `test`, found `{other}`")))
            }
        }
    }
    if !train_mask.iter().any(|&t| t) {
        return Err(Error::Validation("no training nodes".into()));
    }

    Graph::new(adjacency, features, labels, train_mask, test_mask)
}

/// Writes `g` in the format [`load_dataset`] reads. Floats use the shortest
/// representation that parses back to the same value.
pub fn save_dataset(g: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(path, e))
    };

    write("meta.tsv", format!("{}\t{}\t{}\n", g.n(), g.d(), g.c()))?;

    let mut s = String::new();
    for i in 0..g.n() {
        for (j, w) in g.adjacency().row(i).filter(|&(j, _)| j > i) {
            writeln!(s, "{i}\t{j}\t{w}").unwrap();
        }
    }
    write("edges.tsv", s)?;

    let mut s = String::new();
    for i in 0..g.n() {
        let pairs: Vec<String> = g
            .features()
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, v)| format!("{j}:{v}"))
            .collect();
        writeln!(s, "{i}\t{}", pairs.join(" ")).unwrap();
    }
    write("features.tsv", s)?;

    let mut s = String::new();
    for i in 0..g.n() {
        let ls = g.node_labels(i);
        if !ls.is_empty() {
            let ls: Vec<String> = ls.iter().map(usize::to_string).collect();
            writeln!(s, "{i}\t{}", ls.join(",")).unwrap();
        }
    }
    write("labels.tsv", s)?;

    let mut s = String::new();
    for i in 0..g.n() {
        if g.train_mask()[i] {
            writeln!(s, "{i}\ttrain").unwrap();
        } else if g.test_mask()[i] {
            writeln!(s, "{i}\ttest").unwrap();
        }
    }
    write("split.tsv", s)
}
