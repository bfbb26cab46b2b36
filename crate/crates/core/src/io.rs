//! Text formats: graph files (TOML), whitespace matrices and eigencurve CSV.
//!
//! A graph file looks like
//!
//! ```toml
//! vertices = 3
//! alpha = [0.0, -1.0, 0.0]
//!
//! [[edges]]
//! i = 1
//! j = 2
//! length = 0.5   # defaults: length 1, c_i = c_j = 1, q = 0
//!
//! [[edges]]
//! i = 2
//! j = 3
//!
//! [metadata]     # optional
//! lambda2 = 0.25
//! scale = 1.0
//! family = "delta"
//! ```
//!
//! Vertex ids are 1-based in every text format.

use std::fmt::{self, Write as _};
use std::ops::Range;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;
use toml::Spanned;

use crate::graph::{validate_graph, CouplingVector, EdgeSpec, MetricGraph};
use crate::mfunction::Family;
use crate::realize::Realization;
use crate::spectral::{self, EigenCurveTable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line, when the problem can be pinned to one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseError {
    fn single(line: Option<usize>, message: impl Into<String>) -> Self {
        ParseError { diagnostics: vec![Diagnostic { line, message: message.into() }] }
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.diagnostics.iter().any(|d| d.message.contains(needle))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.diagnostics.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metadata {
    pub lambda2: Option<f64>,
    pub scale: Option<f64>,
    pub family: Option<Family>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub graph: MetricGraph,
    pub alpha: CouplingVector,
    pub metadata: Option<Metadata>,
}

impl GraphFile {
    pub fn new(graph: MetricGraph, alpha: CouplingVector) -> Self {
        GraphFile { graph, alpha, metadata: None }
    }

    pub fn from_realization(r: &Realization) -> Self {
        GraphFile {
            graph: r.graph.clone(),
            alpha: r.alpha.clone(),
            metadata: Some(Metadata { lambda2: Some(r.lambda2), scale: Some(r.scale), family: Some(r.family) }),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    vertices: Spanned<usize>,
    #[serde(default)]
    edges: Vec<Spanned<RawEdge>>,
    alpha: Option<Spanned<Vec<f64>>>,
    metadata: Option<Spanned<RawMetadata>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    i: Spanned<usize>,
    j: Spanned<usize>,
    length: Option<f64>,
    c_i: Option<f64>,
    c_j: Option<f64>,
    q: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetadata {
    lambda2: Option<f64>,
    scale: Option<f64>,
    family: Option<String>,
}

fn line_of(text: &str, span: &Range<usize>) -> usize {
    let end = span.start.min(text.len());
    text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Parses and validates a graph file.
pub fn parse_graph_file(text: &str) -> Result<GraphFile, ParseError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, &s));
        ParseError::single(line, e.message().trim().to_string())
    })?;
    let mut diagnostics = Vec::new();
    let n = *raw.vertices.get_ref();
    let vertices_line = line_of(text, &raw.vertices.span());

    let mut specs = Vec::with_capacity(raw.edges.len());
    let mut edge_lines = Vec::with_capacity(raw.edges.len());
    for (k, e) in raw.edges.iter().enumerate() {
        let line = line_of(text, &e.span());
        let e = e.get_ref();
        let mut id = |v: &Spanned<usize>| {
            let x = *v.get_ref();
            if x == 0 || x > n {
                diagnostics.push(Diagnostic {
                    line: Some(line_of(text, &v.span())),
                    message: format!("edge #{}: vertex id {x} outside 1..={n}", k + 1),
                });
                None
            } else {
                Some(x - 1)
            }
        };
        let (i, j) = (id(&e.i), id(&e.j));
        if let (Some(i), Some(j)) = (i, j) {
            specs.push(EdgeSpec {
                i,
                j,
                length: e.length.unwrap_or(1.0),
                c_i: e.c_i.unwrap_or(1.0),
                c_j: e.c_j.unwrap_or(1.0),
                q: e.q.unwrap_or(0.0),
            });
            edge_lines.push(line);
        }
    }

    let alpha = match &raw.alpha {
        None => vec![0.0; n],
        Some(a) => {
            let line = Some(line_of(text, &a.span()));
            let values = a.get_ref().clone();
            if values.len() != n {
                diagnostics
                    .push(Diagnostic { line, message: format!("alpha has {} entries, expected {n}", values.len()) });
            } else if let Some(k) = values.iter().position(|x| !x.is_finite()) {
                diagnostics.push(Diagnostic { line, message: format!("alpha entry {} is not finite", k + 1) });
            }
            values
        }
    };

    let metadata = match &raw.metadata {
        None => None,
        Some(m) => {
            let line = Some(line_of(text, &m.span()));
            let m = m.get_ref();
            let family = match &m.family {
                None => None,
                Some(s) => match s.parse::<Family>() {
                    Ok(f) => Some(f),
                    Err(_) => {
                        diagnostics.push(Diagnostic { line, message: format!("unknown family {s:?}") });
                        None
                    }
                },
            };
            Some(Metadata { lambda2: m.lambda2, scale: m.scale, family })
        }
    };

    if diagnostics.is_empty() {
        for v in validate_graph(n, &specs).violations {
            let line = v.edge().map_or(vertices_line, |k| edge_lines[k]);
            diagnostics.push(Diagnostic { line: Some(line), message: v.to_string() });
        }
    }
    if !diagnostics.is_empty() {
        return Err(ParseError { diagnostics });
    }
    let graph = MetricGraph::new(n, specs).map_err(|e| ParseError::single(None, e.to_string()))?;
    let alpha = CouplingVector::new(alpha, n).map_err(|e| ParseError::single(None, e.to_string()))?;
    Ok(GraphFile { graph, alpha, metadata })
}

/// Reads and parses a graph file; I/O failures become a single diagnostic.
pub fn load_graph_file(path: &Path) -> Result<GraphFile, ParseError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ParseError::single(None, format!("{}: {e}", path.display())))?;
    parse_graph_file(&text).map_err(|mut e| {
        for d in &mut e.diagnostics {
            d.message = format!("{}: {}", path.display(), d.message);
        }
        e
    })
}

/// Shortest decimal that reads back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn num_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", ")
}

pub fn serialize_graph_file(file: &GraphFile) -> String {
    let mut out = String::new();
    let g = &file.graph;
    let _ = writeln!(out, "vertices = {}", g.vertex_count());
    let _ = writeln!(out, "alpha = [{}]", num_list(file.alpha.as_slice()));
    for ((i, j), d) in g.edges() {
        let _ = write!(
            out,
            "\n[[edges]]\ni = {}\nj = {}\nlength = {}\nc_i = {}\nc_j = {}\nq = {}\n",
            i + 1,
            j + 1,
            num(d.length),
            num(d.c_lo),
            num(d.c_hi),
            num(d.q)
        );
    }
    if let Some(m) = &file.metadata {
        out.push_str("\n[metadata]\n");
        if let Some(x) = m.lambda2 {
            let _ = writeln!(out, "lambda2 = {}", num(x));
        }
        if let Some(x) = m.scale {
            let _ = writeln!(out, "scale = {}", num(x));
        }
        if let Some(f) = m.family {
            let _ = writeln!(out, "family = \"{f}\"");
        }
    }
    out
}

/// Square matrix, one row per line, `#` starts a comment.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, ParseError> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut diagnostics = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(x) if x.is_finite() => row.push(x),
                _ => {
                    diagnostics.push(Diagnostic { line: Some(k + 1), message: format!("not a finite number: {tok:?}") })
                }
            }
        }
        rows.push((k + 1, row));
    }
    if !diagnostics.is_empty() {
        return Err(ParseError { diagnostics });
    }
    let m = rows.len();
    if m == 0 {
        return Err(ParseError::single(None, "matrix is empty"));
    }
    for (line, row) in &rows {
        if row.len() != m {
            diagnostics.push(Diagnostic {
                line: Some(*line),
                message: format!("row has {} entries, expected {m} for a square matrix", row.len()),
            });
        }
    }
    if !diagnostics.is_empty() {
        return Err(ParseError { diagnostics });
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i].1[j]))
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>, ParseError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ParseError::single(None, format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn curves_csv(table: &EigenCurveTable, size: usize) -> String {
    let mut out = String::from("lambda");
    for k in 1..=size {
        let _ = write!(out, ",xi_{k}");
    }
    out.push('\n');
    for (lambda, row) in table.grid.iter().zip(&table.values) {
        out.push_str(&num(*lambda));
        for x in row {
            out.push(',');
            out.push_str(&num(*x));
        }
        out.push('\n');
    }
    for s in &table.skipped {
        let _ = writeln!(out, "# skipped lambda={} (singularity)", num(*s));
    }
    out
}

/// Sorted eigenvalue curves of `Q(λ)` as CSV; grid points next to a
/// singularity are listed as trailing comment lines.
pub fn emit_curves(g: &MetricGraph, alpha: &CouplingVector, lo: f64, hi: f64, points: usize) -> String {
    curves_csv(&spectral::eigen_curves(g, alpha, lo, hi, points), g.vertex_count())
}
