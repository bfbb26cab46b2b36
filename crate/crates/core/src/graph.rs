//! Combinatorial and metric graph data model.
//!
//! Vertices are indexed `0..vertex_count` inside the library. The graph file
//! format and the command line use 1-based ids; conversion happens in [`crate::io`].

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(ValidationReport),
    #[error("unknown vertex {vertex} (graph has {vertex_count} vertices)")]
    UnknownVertex { vertex: usize, vertex_count: usize },
    #[error("unknown catalog graph `{0}`")]
    UnknownCatalogName(String),
    #[error("catalog graph `{name}`: {message}")]
    BadParameter { name: String, message: String },
    #[error("coupling vector has {got} entries, graph has {expected} vertices")]
    CouplingLength { expected: usize, got: usize },
    #[error("coupling entry {index} is not finite")]
    CouplingNotFinite { index: usize },
}

/// One violated graph invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoVertices,
    Loop { edge: usize, vertex: usize },
    ParallelEdge { edge: usize, i: usize, j: usize },
    VertexOutOfRange { edge: usize, vertex: usize },
    Disconnected { unreachable: Vec<usize> },
    NonPositiveLength { edge: usize, length: f64 },
    NonPositiveWeight { edge: usize, weight: f64 },
    NonFinitePotential { edge: usize, q: f64 },
}

impl Violation {
    /// Short machine-friendly tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::NoVertices => "empty",
            Violation::Loop { .. } => "loop",
            Violation::ParallelEdge { .. } => "parallel",
            Violation::VertexOutOfRange { .. } => "vertex-range",
            Violation::Disconnected { .. } => "disconnected",
            Violation::NonPositiveLength { .. } => "length",
            Violation::NonPositiveWeight { .. } => "weight",
            Violation::NonFinitePotential { .. } => "potential",
        }
    }

    /// Index into the edge list this violation refers to, if any.
    pub fn edge(&self) -> Option<usize> {
        match *self {
            Violation::Loop { edge, .. }
            | Violation::ParallelEdge { edge, .. }
            | Violation::VertexOutOfRange { edge, .. }
            | Violation::NonPositiveLength { edge, .. }
            | Violation::NonPositiveWeight { edge, .. }
            | Violation::NonFinitePotential { edge, .. } => Some(edge),
            Violation::NoVertices | Violation::Disconnected { .. } => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // edges and vertices are reported 1-based, as in graph files
        let e = self.edge().map_or(0, |e| e + 1);
        match self {
            Violation::NoVertices => write!(f, "empty: graph needs at least one vertex"),
            Violation::Loop { vertex, .. } => write!(f, "loop: edge #{e} joins vertex {} to itself", vertex + 1),
            Violation::ParallelEdge { i, j, .. } => {
                write!(f, "parallel: edge #{e} repeats the pair {{{}, {}}}", i + 1, j + 1)
            }
            Violation::VertexOutOfRange { vertex, .. } => {
                write!(f, "vertex-range: edge #{e} references unknown vertex {}", vertex + 1)
            }
            Violation::Disconnected { unreachable } => {
                let ids: Vec<String> = unreachable.iter().map(|v| (v + 1).to_string()).collect();
                write!(f, "disconnected: vertices [{}] unreachable from vertex 1", ids.join(", "))
            }
            Violation::NonPositiveLength { length, .. } => {
                write!(f, "positive length required: edge #{e} has length {length}")
            }
            Violation::NonPositiveWeight { weight, .. } => {
                write!(f, "positive weight required: edge #{e} has weight {weight}")
            }
            Violation::NonFinitePotential { q, .. } => {
                write!(f, "potential: edge #{e} has non-finite potential {q}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind() == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", lines.join("; "))
    }
}

/// Raw edge description: endpoints, length, endpoint weights and constant potential.
///
/// `c_i` is the weight at endpoint `i`, `c_j` at endpoint `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub i: usize,
    pub j: usize,
    pub length: f64,
    pub c_i: f64,
    pub c_j: f64,
    pub q: f64,
}

impl EdgeSpec {
    /// Unit length, unit weights, zero potential.
    pub fn unit(i: usize, j: usize) -> Self {
        EdgeSpec { i, j, length: 1.0, c_i: 1.0, c_j: 1.0, q: 0.0 }
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }
}

/// Checks every invariant of a metric graph given as raw data.
pub fn validate_graph(vertex_count: usize, edges: &[EdgeSpec]) -> ValidationReport {
    let mut violations = Vec::new();
    if vertex_count == 0 {
        violations.push(Violation::NoVertices);
        return ValidationReport { violations };
    }

    let mut seen = BTreeSet::new();
    let mut adjacency = vec![Vec::new(); vertex_count];
    for (k, e) in edges.iter().enumerate() {
        let mut endpoints_ok = true;
        for v in [e.i, e.j] {
            if v >= vertex_count {
                violations.push(Violation::VertexOutOfRange { edge: k, vertex: v });
                endpoints_ok = false;
            }
        }
        if e.i == e.j {
            violations.push(Violation::Loop { edge: k, vertex: e.i });
            endpoints_ok = false;
        }
        if endpoints_ok {
            let key = (e.i.min(e.j), e.i.max(e.j));
            if !seen.insert(key) {
                violations.push(Violation::ParallelEdge { edge: k, i: key.0, j: key.1 });
            } else {
                adjacency[e.i].push(e.j);
                adjacency[e.j].push(e.i);
            }
        }
        if !(e.length > 0.0 && e.length.is_finite()) {
            violations.push(Violation::NonPositiveLength { edge: k, length: e.length });
        }
        for w in [e.c_i, e.c_j] {
            if !(w > 0.0 && w.is_finite()) {
                violations.push(Violation::NonPositiveWeight { edge: k, weight: w });
            }
        }
        if !e.q.is_finite() {
            violations.push(Violation::NonFinitePotential { edge: k, q: e.q });
        }
    }

    let reached = reachable_from_first(&adjacency);
    let unreachable: Vec<usize> = (0..vertex_count).filter(|&v| !reached[v]).collect();
    if !unreachable.is_empty() {
        violations.push(Violation::Disconnected { unreachable });
    }
    ValidationReport { violations }
}

fn reachable_from_first(adjacency: &[Vec<usize>]) -> Vec<bool> {
    let mut reached = vec![false; adjacency.len()];
    if adjacency.is_empty() {
        return reached;
    }
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adjacency[v] {
            if !reached[w] {
                reached[w] = true;
                stack.push(w);
            }
        }
    }
    reached
}

/// Simple connected combinatorial graph. Edges are stored as `(min, max)` pairs
/// in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl DiscreteGraph {
    pub fn new(vertex_count: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let specs: Vec<EdgeSpec> = pairs.iter().map(|&(i, j)| EdgeSpec::unit(i, j)).collect();
        let report = validate_graph(vertex_count, &specs);
        if !report.is_ok() {
            return Err(GraphError::Invalid(report));
        }
        Ok(Self::from_valid_pairs(vertex_count, pairs.iter().copied()))
    }

    fn from_valid_pairs(vertex_count: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<(usize, usize)> = pairs.map(|(i, j)| (i.min(j), i.max(j))).collect();
        edges.sort_unstable();
        let mut neighbors = vec![Vec::new(); vertex_count];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        DiscreteGraph { vertex_count, edges, neighbors }
    }

    /// Graph whose edges are the nonzero off-diagonal entries of a square matrix.
    pub fn from_pattern(a: &DMatrix<f64>) -> Result<Self, GraphError> {
        let n = a.nrows();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n.min(a.ncols()) {
                if a[(i, j)] != 0.0 || a[(j, i)] != 0.0 {
                    pairs.push((i, j));
                }
            }
        }
        Self::new(n, &pairs)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> Result<usize, GraphError> {
        self.neighbors
            .get(v)
            .map(Vec::len)
            .ok_or(GraphError::UnknownVertex { vertex: v, vertex_count: self.vertex_count })
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.edge_index(i, j).is_some()
    }

    /// Position of edge `{i, j}` in [`Self::edges`].
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    /// Unordered non-adjacent vertex pairs `p < q`, the index set of the
    /// complement pattern.
    pub fn non_adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.vertex_count {
            for q in (p + 1)..self.vertex_count {
                if !self.adjacent(p, q) {
                    out.push((p, q));
                }
            }
        }
        out
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.vertex_count, self.vertex_count);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }
}

/// Per-edge metric data, aligned with the canonical `(lo, hi)` orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeData {
    pub length: f64,
    /// Weight at the lower-numbered endpoint.
    pub c_lo: f64,
    /// Weight at the higher-numbered endpoint.
    pub c_hi: f64,
    pub q: f64,
}

/// A discrete graph with edge lengths, endpoint weights and edge-wise constant
/// potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    base: DiscreteGraph,
    data: Vec<EdgeData>,
}

impl MetricGraph {
    pub fn new(vertex_count: usize, edges: Vec<EdgeSpec>) -> Result<Self, GraphError> {
        let report = validate_graph(vertex_count, &edges);
        if !report.is_ok() {
            return Err(GraphError::Invalid(report));
        }
        let base = DiscreteGraph::from_valid_pairs(vertex_count, edges.iter().map(|e| (e.i, e.j)));
        let mut data = vec![EdgeData { length: 1.0, c_lo: 1.0, c_hi: 1.0, q: 0.0 }; edges.len()];
        for e in &edges {
            let k = base.edge_index(e.i, e.j).expect("edge present after validation");
            let (c_lo, c_hi) = if e.i < e.j { (e.c_i, e.c_j) } else { (e.c_j, e.c_i) };
            data[k] = EdgeData { length: e.length, c_lo, c_hi, q: e.q };
        }
        Ok(MetricGraph { base, data })
    }

    /// Equilateral unit-length metric graph with unit weights and zero potential.
    pub fn equilateral(base: DiscreteGraph) -> Self {
        let data = vec![EdgeData { length: 1.0, c_lo: 1.0, c_hi: 1.0, q: 0.0 }; base.edge_count()];
        MetricGraph { base, data }
    }

    pub fn base(&self) -> &DiscreteGraph {
        &self.base
    }

    pub fn vertex_count(&self) -> usize {
        self.base.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.base.edge_count()
    }

    pub fn edge_data(&self) -> &[EdgeData] {
        &self.data
    }

    /// Iterates edges as `((lo, hi), data)`.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), &EdgeData)> {
        self.base.edges().iter().copied().zip(self.data.iter())
    }

    pub fn data_between(&self, i: usize, j: usize) -> Option<&EdgeData> {
        self.base.edge_index(i, j).map(|k| &self.data[k])
    }

    /// Weight `c_ij`: the weight of the endpoint of edge `{i, j}` lying at `i`.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.data_between(i, j).map(|d| if i < j { d.c_lo } else { d.c_hi })
    }

    pub fn max_length(&self) -> f64 {
        self.data.iter().map(|d| d.length).fold(0.0, f64::max)
    }

    pub fn min_length(&self) -> f64 {
        self.data.iter().map(|d| d.length).fold(f64::INFINITY, f64::min)
    }

    /// Edge list in raw form, for serialization and re-validation.
    pub fn to_specs(&self) -> Vec<EdgeSpec> {
        self.edges().map(|((i, j), d)| EdgeSpec { i, j, length: d.length, c_i: d.c_lo, c_j: d.c_hi, q: d.q }).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_graph(self.vertex_count(), &self.to_specs())
    }

    /// Copy with edge data replaced through `f`.
    pub fn map_edges(&self, mut f: impl FnMut((usize, usize), EdgeData) -> EdgeData) -> Result<Self, GraphError> {
        let specs = self
            .edges()
            .map(|(ij, d)| {
                let d = f(ij, *d);
                EdgeSpec { i: ij.0, j: ij.1, length: d.length, c_i: d.c_lo, c_j: d.c_hi, q: d.q }
            })
            .collect();
        MetricGraph::new(self.vertex_count(), specs)
    }
}

/// Delta coupling strengths, one per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector(Vec<f64>);

impl CouplingVector {
    pub fn new(alpha: Vec<f64>, vertex_count: usize) -> Result<Self, GraphError> {
        if alpha.len() != vertex_count {
            return Err(GraphError::CouplingLength { expected: vertex_count, got: alpha.len() });
        }
        if let Some(index) = alpha.iter().position(|a| !a.is_finite()) {
            return Err(GraphError::CouplingNotFinite { index });
        }
        Ok(CouplingVector(alpha))
    }

    pub fn zeros(vertex_count: usize) -> Self {
        CouplingVector(vec![0.0; vertex_count])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl std::ops::Index<usize> for CouplingVector {
    type Output = f64;

    fn index(&self, v: usize) -> &f64 {
        &self.0[v]
    }
}

pub const CATALOG_NAMES: [&str; 6] = ["path", "cycle", "complete", "k33", "k33_plus_edge", "star"];

/// Named test graphs, equilateral with unit weights and zero potentials.
///
/// * `path n` (n ≥ 2), `cycle n` (n ≥ 3), `complete n` (n ≥ 2)
/// * `star n` (n ≥ 1 leaves): vertex 0 is the center
/// * `k33`: parts {0,1,2} and {3,4,5}; `k33_plus_edge` adds {1,2}
pub fn catalog(name: &str, params: &[usize]) -> Result<MetricGraph, GraphError> {
    let bad = |message: &str| GraphError::BadParameter { name: name.to_string(), message: message.to_string() };
    let one_param = |min: usize| -> Result<usize, GraphError> {
        match params {
            [n] if *n >= min => Ok(*n),
            [_] => Err(bad(&format!("needs n >= {min}"))),
            _ => Err(bad("expects exactly one integer parameter")),
        }
    };
    let no_params = || -> Result<(), GraphError> {
        if params.is_empty() {
            Ok(())
        } else {
            Err(bad("takes no parameters"))
        }
    };

    let (n, pairs): (usize, Vec<(usize, usize)>) = match name {
        "path" => {
            let n = one_param(2)?;
            (n, (0..n - 1).map(|i| (i, i + 1)).collect())
        }
        "cycle" => {
            let n = one_param(3)?;
            (n, (0..n).map(|i| (i, (i + 1) % n)).collect())
        }
        "complete" => {
            let n = one_param(2)?;
            (n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect())
        }
        "star" => {
            let n = one_param(1)?;
            (n + 1, (1..=n).map(|leaf| (0, leaf)).collect())
        }
        "k33" => {
            no_params()?;
            (6, k33_pairs())
        }
        "k33_plus_edge" => {
            no_params()?;
            let mut pairs = k33_pairs();
            pairs.push((1, 2));
            (6, pairs)
        }
        other => return Err(GraphError::UnknownCatalogName(other.to_string())),
    };
    let specs = pairs.into_iter().map(|(i, j)| EdgeSpec::unit(i, j)).collect();
    MetricGraph::new(n, specs)
}

fn k33_pairs() -> Vec<(usize, usize)> {
    (0..3).flat_map(|i| (3..6).map(move |j| (i, j))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_sizes() {
        let star = catalog("star", &[6]).unwrap();
        assert_eq!((star.vertex_count(), star.edge_count()), (7, 6));
        let k = catalog("k33_plus_edge", &[]).unwrap();
        assert_eq!((k.vertex_count(), k.edge_count()), (6, 10));
        assert!(k.base().adjacent(1, 2));
        let p = catalog("path", &[2]).unwrap();
        assert_eq!((p.vertex_count(), p.edge_count()), (2, 1));
        assert_eq!(catalog("complete", &[5]).unwrap().edge_count(), 10);
        assert_eq!(catalog("cycle", &[5]).unwrap().edge_count(), 5);
    }

    #[test]
    fn degrees() {
        let star = catalog("star", &[6]).unwrap();
        assert_eq!(star.base().degree(0).unwrap(), 6);
        assert_eq!(star.base().degree(3).unwrap(), 1);
        assert!(matches!(star.base().degree(7), Err(GraphError::UnknownVertex { .. })));
        let k = catalog("k33", &[]).unwrap();
        assert!(k.base().degrees().iter().all(|&d| d == 3));
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog("petersen", &[]), Err(GraphError::UnknownCatalogName(_))));
        assert!(matches!(catalog("path", &[1]), Err(GraphError::BadParameter { .. })));
        assert!(matches!(catalog("cycle", &[2]), Err(GraphError::BadParameter { .. })));
        assert!(matches!(catalog("k33", &[3]), Err(GraphError::BadParameter { .. })));
        assert!(matches!(catalog("star", &[]), Err(GraphError::BadParameter { .. })));
    }

    #[test]
    fn loop_is_reported() {
        let report = validate_graph(2, &[EdgeSpec::unit(0, 1), EdgeSpec::unit(0, 0)]);
        assert!(report.has("loop"));
    }

    #[test]
    fn disjoint_triangles_are_disconnected() {
        let pairs = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        let specs: Vec<_> = pairs.iter().map(|&(i, j)| EdgeSpec::unit(i, j)).collect();
        let report = validate_graph(6, &specs);
        assert!(report.has("disconnected"));
        assert_eq!(report.violations.len(), 1);
        assert!(DiscreteGraph::new(6, &pairs).is_err());
    }

    #[test]
    fn parallel_and_metric_violations() {
        let specs = [
            EdgeSpec::unit(0, 1),
            EdgeSpec::unit(1, 0),
            EdgeSpec { c_i: 0.0, ..EdgeSpec::unit(1, 2).with_length(-1.0) },
        ];
        let report = validate_graph(3, &specs);
        assert!(report.has("parallel"));
        assert!(report.has("length"));
        assert!(report.has("weight"));
        assert!(report.to_string().contains("positive length required"));
    }

    #[test]
    fn weights_follow_orientation() {
        let g = MetricGraph::new(2, vec![EdgeSpec { i: 1, j: 0, length: 2.0, c_i: 3.0, c_j: 5.0, q: 0.5 }]).unwrap();
        assert_eq!(g.weight(1, 0), Some(3.0));
        assert_eq!(g.weight(0, 1), Some(5.0));
        assert_eq!(g.max_length(), 2.0);
        assert!(g.validate().is_ok());
    }

    #[test]
    fn coupling_vector_checks() {
        assert!(CouplingVector::new(vec![0.0; 3], 2).is_err());
        assert!(CouplingVector::new(vec![0.0, f64::NAN], 2).is_err());
        assert_eq!(CouplingVector::new(vec![1.0, -2.0], 2).unwrap().max_abs(), 2.0);
    }

    #[test]
    fn catalog_is_valid_deterministic_and_handshakes() {
        let cases: [(&str, &[usize]); 8] = [
            ("path", &[2]),
            ("path", &[5]),
            ("cycle", &[4]),
            ("complete", &[5]),
            ("k33", &[]),
            ("k33_plus_edge", &[]),
            ("star", &[6]),
            ("star", &[1]),
        ];
        for (name, params) in cases {
            let g = catalog(name, params).unwrap();
            assert!(g.validate().is_ok(), "{name}");
            assert_eq!(g, catalog(name, params).unwrap());
            let degree_sum: usize = g.base().degrees().iter().sum();
            assert_eq!(degree_sum, 2 * g.edge_count());
        }
    }

    #[test]
    fn pattern_graph() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let g = DiscreteGraph::from_pattern(&a).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.non_adjacent_pairs(), vec![(0, 2)]);
    }
}
