//! Finite weighted graphs with directed jump rates, their metric structure,
//! and recovery of the reversible measure.
//!
//! A graph is a finite vertex set together with nonnegative jump rates
//! `q(x,y)`; the diagonal is identically zero and absent pairs mean rate 0.
//! Two vertices are adjacent when either directed rate is positive. The
//! graph is immutable after construction.

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("graph must have at least one vertex")]
    NoVertices,
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate edge {from:?} -> {to:?}")]
    DuplicateEdge { from: String, to: String },
    #[error("nonpositive rate {rate} on edge {from:?} -> {to:?}")]
    NonpositiveRate { from: String, to: String, rate: f64 },
    #[error("self-loop on vertex {0:?}")]
    SelfLoop(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("graph has no edges")]
    NoEdges,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("empty vertex set")]
    EmptySet,
}

/// Why no reversible measure could be produced.
#[derive(Debug, Clone, Error)]
pub enum MeasureFailure {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("not reversible: edge {from:?} -> {to:?} has no reverse rate")]
    OneDirectionalEdge { from: String, to: String },
    #[error(
        "not reversible: cycle {cycle:?} violates the Kolmogorov criterion \
         (forward product {forward}, backward product {backward})"
    )]
    CycleViolation {
        cycle: Vec<String>,
        forward: f64,
        backward: f64,
    },
    #[error("measure range exceeds double precision")]
    Unrepresentable,
}

impl MeasureFailure {
    /// True for the expected "graph is genuinely not reversible" outcomes,
    /// as opposed to structural errors.
    pub fn is_not_reversible(&self) -> bool {
        matches!(
            self,
            MeasureFailure::OneDirectionalEdge { .. } | MeasureFailure::CycleViolation { .. }
        )
    }
}

/// Minimum positive jump rate and maximum vertex degree `max_x sum_y q(x,y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphConstants {
    pub q_min: f64,
    pub max_degree: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<String>,
    edges: Vec<EdgeFile>,
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    from: String,
    to: String,
    rate: f64,
}

/// A finite graph with directed positive jump rates and zero diagonal.
#[derive(Debug, Clone)]
pub struct Graph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    // outgoing positive rates, sorted by target index
    out: Vec<Vec<(usize, f64)>>,
    // symmetrized adjacency (q(x,y) > 0 or q(y,x) > 0), sorted
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from named vertices and directed rated edges.
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<(String, String, f64)>,
    ) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::NoVertices);
        }
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let n = vertices.len();
        let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (from, to, rate) in &edges {
            let &x = index
                .get(from)
                .ok_or_else(|| GraphError::UnknownVertex(from.clone()))?;
            let &y = index
                .get(to)
                .ok_or_else(|| GraphError::UnknownVertex(to.clone()))?;
            if x == y {
                return Err(GraphError::SelfLoop(from.clone()));
            }
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(GraphError::NonpositiveRate {
                    from: from.clone(),
                    to: to.clone(),
                    rate: *rate,
                });
            }
            if out[x].iter().any(|&(t, _)| t == y) {
                return Err(GraphError::DuplicateEdge {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            out[x].push((y, *rate));
        }
        for row in &mut out {
            row.sort_by_key(|&(t, _)| t);
        }
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for x in 0..n {
            for &(y, _) in &out[x] {
                if !neighbors[x].contains(&y) {
                    neighbors[x].push(y);
                }
                if !neighbors[y].contains(&x) {
                    neighbors[y].push(x);
                }
            }
        }
        for row in &mut neighbors {
            row.sort_unstable();
        }
        Ok(Graph {
            names: vertices,
            index,
            out,
            neighbors,
        })
    }

    /// Parses the JSON graph file format.
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| GraphError::Syntax(e.to_string()))?;
        Graph::new(
            file.vertices,
            file.edges
                .into_iter()
                .map(|e| (e.from, e.to, e.rate))
                .collect(),
        )
    }

    /// Serializes to the JSON graph file format: vertices in declared order,
    /// edges sorted lexicographically by (from, to).
    pub fn to_json(&self) -> String {
        let mut edges: Vec<EdgeFile> = self
            .edges()
            .map(|(x, y, rate)| EdgeFile {
                from: self.names[x].clone(),
                to: self.names[y].clone(),
                rate,
            })
            .collect();
        edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        let file = GraphFile {
            vertices: self.names.clone(),
            edges,
        };
        serde_json::to_string_pretty(&file).expect("graph serialization cannot fail")
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn vertex_name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    pub(crate) fn check_vertex(&self, x: usize) -> Result<(), GraphError> {
        if x < self.names.len() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange(x))
        }
    }

    /// The jump rate `q(x,y)`; zero when no edge is stored.
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.out[x]
            .iter()
            .find(|&&(t, _)| t == y)
            .map(|&(_, r)| r)
            .unwrap_or(0.0)
    }

    /// Outgoing edges of `x` with positive rate, sorted by target.
    pub fn out_edges(&self, x: usize) -> &[(usize, f64)] {
        &self.out[x]
    }

    /// Neighbors of `x` in the symmetrized adjacency.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    /// All stored directed edges `(x, y, q(x,y))`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&(y, r)| (x, y, r)))
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|row| row.len()).sum()
    }

    /// The structural constants q_min and D. Errors on edgeless graphs.
    pub fn constants(&self) -> Result<GraphConstants, GraphError> {
        let mut q_min = f64::INFINITY;
        let mut max_degree: f64 = 0.0;
        for row in &self.out {
            let degree: f64 = row.iter().map(|&(_, r)| r).sum();
            max_degree = max_degree.max(degree);
            for &(_, r) in row {
                q_min = q_min.min(r);
            }
        }
        if !q_min.is_finite() {
            return Err(GraphError::NoEdges);
        }
        Ok(GraphConstants { q_min, max_degree })
    }

    /// Combinatorial distances from `x` to every vertex; `None` means
    /// unreachable.
    pub fn distances_from(&self, x: usize) -> Result<Vec<Option<u32>>, GraphError> {
        self.check_vertex(x)?;
        let mut dist = vec![None; self.names.len()];
        dist[x] = Some(0);
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &w in &self.neighbors[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Combinatorial graph distance; `None` when disconnected.
    pub fn distance(&self, x: usize, y: usize) -> Result<Option<u32>, GraphError> {
        self.check_vertex(y)?;
        Ok(self.distances_from(x)?[y])
    }

    /// The ball `B_r(x)` as a sorted vertex list.
    pub fn ball(&self, x: usize, r: u32) -> Result<Vec<usize>, GraphError> {
        let dist = self.distances_from(x)?;
        Ok((0..self.names.len())
            .filter(|&v| matches!(dist[v], Some(d) if d <= r))
            .collect())
    }

    /// True when the symmetrized graph is connected.
    pub fn is_connected(&self) -> bool {
        match self.distances_from(0) {
            Ok(dist) => dist.iter().all(|d| d.is_some()),
            Err(_) => false,
        }
    }

    /// Largest distance realized from `x` (eccentricity).
    pub fn eccentricity(&self, x: usize) -> Result<Option<u32>, GraphError> {
        let dist = self.distances_from(x)?;
        if dist.iter().any(|d| d.is_none()) {
            return Ok(None);
        }
        Ok(dist.iter().map(|d| d.unwrap()).max())
    }
}

/// A strictly positive measure on the vertex set.
#[derive(Debug, Clone)]
pub struct Measure {
    values: Vec<f64>,
}

impl Measure {
    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Recovers the reversible measure via spanning-tree propagation, verifying
/// every non-tree edge against the Kolmogorov criterion (relative tolerance
/// 1e-12). The result is normalized so the minimum value is exactly 1.
pub fn reversible_measure(g: &Graph) -> Result<Measure, MeasureFailure> {
    let n = g.vertex_count();
    // Any one-directional edge rules reversibility out immediately.
    for (x, y, _) in g.edges() {
        if g.rate(y, x) == 0.0 {
            return Err(MeasureFailure::OneDirectionalEdge {
                from: g.vertex_name(x).to_string(),
                to: g.vertex_name(y).to_string(),
            });
        }
    }
    // BFS spanning tree from vertex 0, propagating log m along tree edges.
    let mut log_m = vec![f64::NAN; n];
    let mut parent = vec![usize::MAX; n];
    log_m[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if log_m[w].is_nan() {
                // detailed balance: m(w) = m(v) q(v,w) / q(w,v)
                log_m[w] = log_m[v] + g.rate(v, w).ln() - g.rate(w, v).ln();
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    if log_m.iter().any(|v| v.is_nan()) {
        return Err(MeasureFailure::Disconnected);
    }
    // Every stored edge must now satisfy detailed balance; a violation yields
    // the fundamental cycle of the offending edge as witness.
    for (x, y, q_xy) in g.edges() {
        let defect = q_xy.ln() + log_m[x] - g.rate(y, x).ln() - log_m[y];
        if defect.abs() > 1e-12 {
            return Err(cycle_violation(g, &parent, x, y));
        }
    }
    let (min_vertex, min_log) = log_m.iter().enumerate().fold(
        (0, f64::INFINITY),
        |(bi, bv), (i, &v)| {
            if v < bv {
                (i, v)
            } else {
                (bi, bv)
            }
        },
    );
    if log_m.iter().any(|&l| l - min_log > 709.0) {
        return Err(MeasureFailure::Unrepresentable);
    }
    // Re-propagate linearly along the tree from the minimum vertex so that
    // rational rate ratios stay exact; the log pass above already bounded
    // the range.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, &p) in parent.iter().enumerate() {
        if p != usize::MAX {
            children[p].push(v);
        }
    }
    let tree_neighbors = |v: usize| {
        let mut adj = children[v].clone();
        if parent[v] != usize::MAX {
            adj.push(parent[v]);
        }
        adj
    };
    let mut values = vec![f64::NAN; n];
    values[min_vertex] = 1.0;
    let mut queue = VecDeque::from([min_vertex]);
    while let Some(v) = queue.pop_front() {
        for w in tree_neighbors(v) {
            if values[w].is_nan() {
                values[w] = values[v] * g.rate(v, w) / g.rate(w, v);
                queue.push_back(w);
            }
        }
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min != 1.0 {
        // self-division pins the attaining vertex at exactly 1
        for v in &mut values {
            *v /= min;
        }
    }
    Ok(Measure { values })
}

fn cycle_violation(g: &Graph, parent: &[usize], x: usize, y: usize) -> MeasureFailure {
    // Tree paths from x and y up to the root; the fundamental cycle runs
    // x -> y along the offending edge and back through the tree.
    let path_to_root = |mut v: usize| {
        let mut p = vec![v];
        while parent[v] != usize::MAX {
            v = parent[v];
            p.push(v);
        }
        p
    };
    let px = path_to_root(x);
    let py = path_to_root(y);
    // Drop the common suffix, keeping the join vertex once.
    let mut ix = px.len();
    let mut iy = py.len();
    while ix > 0 && iy > 0 && px[ix - 1] == py[iy - 1] {
        ix -= 1;
        iy -= 1;
    }
    // cycle: x, y, tree path y -> join, join, tree path join -> x reversed
    let mut cycle = vec![x, y];
    cycle.extend(&py[1..=iy]);
    cycle.extend(px[1..ix].iter().rev());
    let mut forward = 0.0f64;
    let mut backward = 0.0f64;
    for i in 0..cycle.len() {
        let a = cycle[i];
        let b = cycle[(i + 1) % cycle.len()];
        forward += g.rate(a, b).ln();
        backward += g.rate(b, a).ln();
    }
    MeasureFailure::CycleViolation {
        cycle: cycle
            .into_iter()
            .map(|v| g.vertex_name(v).to_string())
            .collect(),
        forward: forward.exp(),
        backward: backward.exp(),
    }
}

/// Total measure of a nonempty vertex set.
pub fn measure_volume(m: &Measure, set: &[usize]) -> Result<f64, GraphError> {
    if set.is_empty() {
        return Err(GraphError::EmptySet);
    }
    for &x in set {
        if x >= m.len() {
            return Err(GraphError::VertexOutOfRange(x));
        }
    }
    Ok(set.iter().map(|&x| m.value(x)).sum())
}
