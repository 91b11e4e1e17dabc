//! Reading and writing networks and tabular outputs.
//!
//! Edge lists are UTF-8 text with one whitespace-separated pair of node
//! tokens per line and `#` comments. A line holding a single token declares a
//! node without edges. Adjacency matrices are square numeric CSV files with an
//! optional header row of node labels.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::positions::NodePositions;
use crate::testing::CellTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Edges,
    Adjacency,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" => Ok(InputFormat::Edges),
            "adjacency" => Ok(InputFormat::Adjacency),
            other => Err(Error::Usage(format!(
                "unknown format '{other}', expected 'edges' or 'adjacency'"
            ))),
        }
    }
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.context(path.display()))
}

pub fn read_graph(path: &Path, format: InputFormat, threshold: Option<f64>) -> Result<Graph> {
    match format {
        InputFormat::Edges => parse_edge_list(path),
        InputFormat::Adjacency => parse_adjacency(path, threshold),
    }
}

pub fn parse_edge_list(path: &Path) -> Result<Graph> {
    let text = with_path(path, fs::read_to_string(path).map_err(Error::from))?;
    with_path(path, parse_edge_list_str(&text))
}

pub fn parse_edge_list_str(text: &str) -> Result<Graph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut node = |tok: &str, labels: &mut Vec<String>| -> usize {
        *index.entry(tok.to_string()).or_insert_with(|| {
            labels.push(tok.to_string());
            labels.len() - 1
        })
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            [a] => {
                node(a, &mut labels);
            }
            [a, b] => {
                if a == b {
                    return Err(Error::input(lineno + 1, format!("self-loop at node '{a}'")));
                }
                let i = node(a, &mut labels);
                let j = node(b, &mut labels);
                edges.push((i, j));
            }
            _ => {
                return Err(Error::input(
                    lineno + 1,
                    format!("expected two node tokens, found {}", tokens.len()),
                ))
            }
        }
    }
    if labels.len() < 2 {
        return Err(Error::input_nl(format!(
            "edge list declares {} node(s), at least 2 are needed",
            labels.len()
        )));
    }
    Graph::from_edges(labels.len(), &edges)?.with_labels(labels)
}

/// Every node on its own line (in index order), then one line per edge.
pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    let labels: Vec<String> = (0..graph.n()).map(|i| graph.label(i)).collect();
    if let Some(bad) = labels
        .iter()
        .find(|l| l.is_empty() || l.contains('#') || l.chars().any(char::is_whitespace))
    {
        return Err(Error::Usage(format!("label '{bad}' cannot be written to an edge list")));
    }
    writeln!(out, "# {} nodes, {} edges", graph.n(), graph.edge_count())?;
    for l in &labels {
        writeln!(out, "{l}")?;
    }
    for (i, j) in graph.edges() {
        writeln!(out, "{} {}", labels[i], labels[j])?;
    }
    Ok(())
}

pub fn parse_adjacency(path: &Path, threshold: Option<f64>) -> Result<Graph> {
    let text = with_path(path, fs::read_to_string(path).map_err(Error::from))?;
    with_path(path, parse_adjacency_str(&text, threshold))
}

const SYMMETRY_TOL: f64 = 1e-9;

/// Without `threshold` every off-diagonal entry must be 0 or 1; with it an
/// entry becomes an edge when strictly greater than the threshold. The
/// diagonal is ignored.
pub fn parse_adjacency_str(text: &str, threshold: Option<f64>) -> Result<Graph> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut labels = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::input_nl(e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(r + 1);
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                    return Err(Error::input(line, format!("non-finite entry {v}")));
                }
                rows.push(vals);
            }
            Err(_) if r == 0 => labels = Some(record.iter().map(str::to_string).collect::<Vec<_>>()),
            Err(e) => return Err(Error::input(line, format!("non-numeric entry: {e}"))),
        }
    }
    let n = rows.len();
    if n < 2 {
        return Err(Error::input_nl(format!("adjacency matrix has {n} row(s), at least 2 are needed")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::input_nl(format!(
                "matrix is not square: row {} has {} entries for {n} rows",
                i + 1,
                row.len()
            )));
        }
    }
    let mut bin = vec![vec![0u8; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            if (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::input_nl(format!(
                    "matrix is not symmetric at ({}, {}): {a} vs {b}",
                    i + 1,
                    j + 1
                )));
            }
            let edge = match threshold {
                Some(t) => a > t,
                None if a == 0.0 && b == 0.0 => false,
                None if a == 1.0 && b == 1.0 => true,
                None => {
                    return Err(Error::input_nl(format!(
                        "entry ({}, {}) = {a} is not binary; pass a threshold for weighted input",
                        i + 1,
                        j + 1
                    )))
                }
            };
            bin[i][j] = u8::from(edge);
            bin[j][i] = u8::from(edge);
        }
    }
    let g = Graph::from_adjacency(&bin)?;
    match labels {
        Some(l) if l.len() != n => Err(Error::input(1, format!("{} labels for {n} columns", l.len()))),
        Some(l) => g.with_labels(l).map_err(|e| Error::input(1, e.to_string())),
        None => Ok(g),
    }
}

/// Binary adjacency CSV, with a label header when the graph has labels.
pub fn write_adjacency<W: Write>(graph: &Graph, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(labels) = graph.labels() {
        w.write_record(labels).map_err(csv_err)?;
    }
    for i in 0..graph.n() {
        w.write_record(graph.row(i).iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::input_nl(format!("{other:?}")),
    }
}

/// `node,label,position`.
pub fn write_positions<W: Write>(graph: &Graph, positions: &NodePositions, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "label", "position"]).map_err(csv_err)?;
    for i in 0..positions.len() {
        w.write_record([i.to_string(), graph.label(i), positions[i].to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read the `position` column written by [`write_positions`].
pub fn read_positions(path: &Path) -> Result<NodePositions> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let col = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .position(|h| h == "position")
        .ok_or_else(|| Error::input(1, "missing 'position' column"))?;
    let mut u = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let v: f64 = rec
            .get(col)
            .unwrap_or("")
            .parse()
            .map_err(|e| Error::input(k + 2, format!("bad position: {e}")))?;
        u.push(v);
    }
    NodePositions::new(u)
}

/// Header plus rows of floats.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `k,l,d1,d2,m1,m2,E1,V1,contrib`; empty fields for omitted cells.
pub fn write_cells<W: Write>(terms: &[CellTerm], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "l", "d1", "d2", "m1", "m2", "E1", "V1", "contrib"])
        .map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for t in terms {
        w.write_record([
            t.k.to_string(),
            t.l.to_string(),
            t.d1.to_string(),
            t.d2.to_string(),
            t.m1.to_string(),
            t.m2.to_string(),
            opt(t.e1),
            opt(t.v1),
            opt(t.contrib),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
