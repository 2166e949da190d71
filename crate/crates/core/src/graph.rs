//! Weighted undirected multigraphs, paths and metric quantities.

use crate::rational::{frac, zero, Q};
use num::Signed;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v#{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge {0} is a self-loop")]
    SelfLoop(String),
    #[error("edge {0} has a non-positive weight")]
    NonPositiveWeight(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has no edges")]
    Trivial,
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("sequence is not a path of the graph")]
    NotAPath,
    #[error("target of the first path is not the source of the second")]
    SourceTargetMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct EdgeData {
    name: String,
    // Stored with the smaller vertex id first.
    ends: (VertexId, VertexId),
    weight: Q,
}

/// Undirected multigraph with positive rational edge weights.
///
/// Identifiers are dense indices in insertion order; their order is the total order used for
/// every deterministic tie-break downstream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Multigraph {
    vertex_names: Vec<String>,
    edges: Vec<EdgeData>,
    incident: Vec<Vec<EdgeId>>,
}

impl Multigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> Result<VertexId, GraphError> {
        let name = name.into();
        if self.vertex_by_name(&name).is_some() {
            return Err(GraphError::DuplicateVertex(name));
        }
        self.vertex_names.push(name);
        self.incident.push(Vec::new());
        Ok(VertexId(self.vertex_names.len() as u32 - 1))
    }

    /// Adds an edge. Self-loops and non-positive weights are accepted here and rejected by
    /// [`Multigraph::validate`], so that parse errors and invariant errors stay distinct.
    pub fn add_edge(
        &mut self,
        name: impl Into<String>,
        a: VertexId,
        b: VertexId,
        weight: Q,
    ) -> Result<EdgeId, GraphError> {
        let name = name.into();
        if self.edge_by_name(&name).is_some() {
            return Err(GraphError::DuplicateEdge(name));
        }
        for v in [a, b] {
            if v.0 as usize >= self.vertex_names.len() {
                return Err(GraphError::UnknownVertex(v.to_string()));
            }
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(EdgeData {
            name,
            ends: (a.min(b), a.max(b)),
            weight,
        });
        self.incident[a.0 as usize].push(id);
        if a != b {
            self.incident[b.0 as usize].push(id);
        }
        Ok(id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_names.len() as u32).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0 as usize]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edges[e.0 as usize].name
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names
            .iter()
            .position(|n| n == name)
            .map(|i| VertexId(i as u32))
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.name == name).map(|i| EdgeId(i as u32))
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        (v.0 as usize) < self.vertex_names.len()
    }

    /// Endpoints ordered by id: `(source, target)` of the canonical orientation.
    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e.0 as usize].ends
    }

    pub fn weight(&self, e: EdgeId) -> &Q {
        &self.edges[e.0 as usize].weight
    }

    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v.0 as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident(v).len()
    }

    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints(e);
        if v == a {
            b
        } else {
            a
        }
    }

    pub fn total_weight(&self) -> Q {
        self.edges.iter().fold(zero(), |acc, e| acc + &e.weight)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.edges.is_empty() {
            return Err(GraphError::Trivial);
        }
        for e in &self.edges {
            if e.ends.0 == e.ends.1 {
                return Err(GraphError::SelfLoop(e.name.clone()));
            }
            if !e.weight.is_positive() {
                return Err(GraphError::NonPositiveWeight(e.name.clone()));
            }
        }
        let mut seen = vec![false; self.vertex_count()];
        let mut queue = VecDeque::from([VertexId(0)]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &e in self.incident(v) {
                let w = self.other_end(e, v);
                if !seen[w.0 as usize] {
                    seen[w.0 as usize] = true;
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(GraphError::Disconnected)
        }
    }

    /// Whether the graph is a tree: connected with one edge fewer than vertices.
    pub fn is_tree(&self) -> bool {
        self.validate().is_ok() && self.edge_count() + 1 == self.vertex_count()
    }
}

/// Alternating vertex/edge sequence `v0, e1, v1, ..., en, vn`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    start: VertexId,
    steps: Vec<(EdgeId, VertexId)>,
}

impl Path {
    pub fn empty(v: VertexId) -> Self {
        Path {
            start: v,
            steps: Vec::new(),
        }
    }

    /// Builds a path, checking that each edge joins the vertices around it.
    pub fn new(g: &Multigraph, start: VertexId, steps: Vec<(EdgeId, VertexId)>) -> Result<Self, GraphError> {
        let p = Path { start, steps };
        p.check(g)?;
        Ok(p)
    }

    pub fn check(&self, g: &Multigraph) -> Result<(), GraphError> {
        if !g.has_vertex(self.start) {
            return Err(GraphError::NotAPath);
        }
        let mut at = self.start;
        for &(e, v) in &self.steps {
            if e.0 as usize >= g.edge_count() {
                return Err(GraphError::NotAPath);
            }
            let (a, b) = g.endpoints(e);
            if !((a == at && b == v) || (b == at && a == v)) {
                return Err(GraphError::NotAPath);
            }
            at = v;
        }
        Ok(())
    }

    /// Extends the path by `e` from its current target.
    pub fn push(&mut self, g: &Multigraph, e: EdgeId) {
        let at = self.target();
        self.steps.push((e, g.other_end(e, at)));
    }

    pub fn source(&self) -> VertexId {
        self.start
    }

    pub fn target(&self) -> VertexId {
        self.steps.last().map_or(self.start, |s| s.1)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.steps.iter().map(|s| s.0)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.1))
    }

    pub fn steps(&self) -> &[(EdgeId, VertexId)] {
        &self.steps
    }

    pub fn is_direction_preserving(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].0 != w[1].0)
    }

    pub fn weight(&self, g: &Multigraph) -> Result<Q, GraphError> {
        self.check(g)?;
        Ok(self.edges().fold(zero(), |acc, e| acc + g.weight(e)))
    }

    pub fn concat(&self, other: &Path) -> Result<Path, GraphError> {
        if self.target() != other.start {
            return Err(GraphError::SourceTargetMismatch);
        }
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Ok(Path {
            start: self.start,
            steps,
        })
    }

    pub fn invert(&self) -> Path {
        let vertices: Vec<VertexId> = self.vertices().collect();
        let steps = self
            .steps
            .iter()
            .enumerate()
            .rev()
            .map(|(i, &(e, _))| (e, vertices[i]))
            .collect();
        Path {
            start: self.target(),
            steps,
        }
    }
}

/// Single-source shortest distances (Dijkstra over exact rationals).
///
/// The metric on the continuum only admits paths without immediate edge reversals, but a walk
/// that turns back on an edge is longer by twice that edge's positive weight, so the plain
/// shortest-walk distance is the same infimum.
pub fn distances_from(g: &Multigraph, source: VertexId) -> Vec<Q> {
    let n = g.vertex_count();
    let mut dist: Vec<Option<Q>> = vec![None; n];
    let mut done = vec![false; n];
    dist[source.0 as usize] = Some(zero());
    // Frontier ordered by (distance, vertex) for deterministic extraction.
    let mut frontier: BTreeSet<(Q, VertexId)> = BTreeSet::from([(zero(), source)]);
    while let Some((d, v)) = frontier.pop_first() {
        if done[v.0 as usize] {
            continue;
        }
        done[v.0 as usize] = true;
        for &e in g.incident(v) {
            let w = g.other_end(e, v);
            let cand = &d + g.weight(e);
            let better = match &dist[w.0 as usize] {
                Some(old) => cand < *old,
                None => true,
            };
            if better {
                dist[w.0 as usize] = Some(cand.clone());
                frontier.insert((cand, w));
            }
        }
    }
    dist.into_iter()
        .map(|d| d.expect("distances_from requires a connected graph"))
        .collect()
}

pub fn vertex_distance(g: &Multigraph, v: VertexId, w: VertexId) -> Result<Q, GraphError> {
    for x in [v, w] {
        if !g.has_vertex(x) {
            return Err(GraphError::UnknownVertex(x.to_string()));
        }
    }
    Ok(distances_from(g, v).swap_remove(w.0 as usize))
}

/// All-pairs distance table indexed `[v][w]`.
pub fn distance_table(g: &Multigraph) -> Vec<Vec<Q>> {
    g.vertices().map(|v| distances_from(g, v)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSummary {
    pub general: VertexId,
    pub radius: Q,
    pub diameter: Q,
}

/// Largest distance from `general` to any point, including edge interiors.
pub fn continuum_eccentricity(g: &Multigraph, dist: &[Q]) -> Q {
    // Inside edge {u, w} the farthest point sits where the routes via u and via w balance;
    // since |d(u) - d(w)| <= weight this value dominates both endpoints.
    g.edges()
        .map(|e| {
            let (u, w) = g.endpoints(e);
            (&dist[u.0 as usize] + &dist[w.0 as usize] + g.weight(e)) * frac(1, 2)
        })
        .max()
        .unwrap_or_else(zero)
}

/// Largest distance between two points of the continuum.
pub fn continuum_diameter(g: &Multigraph) -> Q {
    let table = distance_table(g);
    let d = |a: VertexId, b: VertexId| &table[a.0 as usize][b.0 as usize];
    let half = frac(1, 2);
    let mut best = zero();
    let edges: Vec<EdgeId> = g.edges().collect();
    for (i, &e) in edges.iter().enumerate() {
        let (a, b) = g.endpoints(e);
        let we = g.weight(e);
        // Two points on the same edge: the gap g is covered either directly or around.
        let same = (d(a, b) + we) * &half;
        let same = if &same < we { same } else { we.clone() };
        best = best.max(same);
        for &f in &edges[i + 1..] {
            let (c, dd) = g.endpoints(f);
            let wf = g.weight(f);
            let to = |s: &Q, v: VertexId| {
                let via_a = s + d(a, v);
                let via_b = we - s + d(b, v);
                via_a.min(via_b)
            };
            // The farthest point of f from x is at (d(x,c) + d(x,dd) + wf) / 2, a concave
            // function of the offset s of x; its maximum is at a breakpoint or an end.
            let mut candidates = vec![zero(), we.clone()];
            for v in [c, dd] {
                let s = (we + d(b, v) - d(a, v)) * &half;
                if !s.is_negative() && &s <= we {
                    candidates.push(s);
                }
            }
            for s in candidates {
                let far = (to(&s, c) + to(&s, dd) + wf) * &half;
                best = best.max(far);
            }
        }
    }
    best
}

pub fn metric_summary(g: &Multigraph, general: VertexId) -> Result<MetricSummary, GraphError> {
    if !g.has_vertex(general) {
        return Err(GraphError::UnknownVertex(general.to_string()));
    }
    let dist = distances_from(g, general);
    Ok(MetricSummary {
        general,
        radius: continuum_eccentricity(g, &dist),
        diameter: continuum_diameter(g),
    })
}

/// Vertex-only eccentricity of `v`.
pub fn vertex_eccentricity(g: &Multigraph, v: VertexId) -> Q {
    distances_from(g, v).into_iter().max().unwrap_or_else(zero)
}

/// Adjacency lists `(edge, other end)` per vertex.
pub fn neighbours(g: &Multigraph) -> BTreeMap<VertexId, Vec<(EdgeId, VertexId)>> {
    g.vertices()
        .map(|v| {
            let adj = g.incident(v).iter().map(|&e| (e, g.other_end(e, v))).collect();
            (v, adj)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    pub(crate) fn path_graph(weights: &[Q]) -> Multigraph {
        let mut g = Multigraph::new();
        let vs: Vec<_> = (0..=weights.len())
            .map(|i| g.add_vertex(format!("v{i}")).unwrap())
            .collect();
        for (i, w) in weights.iter().enumerate() {
            g.add_edge(format!("e{i}"), vs[i], vs[i + 1], w.clone()).unwrap();
        }
        g
    }

    #[test]
    fn validate_cases() {
        assert!(path_graph(&[int(1)]).validate().is_ok());
        let mut g = Multigraph::new();
        g.add_vertex("v0").unwrap();
        assert_eq!(g.validate(), Err(GraphError::Trivial));
        let v0 = VertexId(0);
        g.add_edge("e", v0, v0, int(1)).unwrap();
        assert!(matches!(g.validate(), Err(GraphError::SelfLoop(_))));

        let mut g = path_graph(&[int(1)]);
        g.add_vertex("lonely").unwrap();
        assert_eq!(g.validate(), Err(GraphError::Disconnected));
        let g = path_graph(&[int(0)]);
        assert!(matches!(g.validate(), Err(GraphError::NonPositiveWeight(_))));
    }

    #[test]
    fn path_weights() {
        let g = path_graph(&[int(2), int(1)]);
        assert_eq!(Path::empty(VertexId(0)).weight(&g).unwrap(), int(0));
        let p = Path::new(
            &g,
            VertexId(0),
            vec![(EdgeId(0), VertexId(1)), (EdgeId(1), VertexId(2))],
        )
        .unwrap();
        assert_eq!(p.weight(&g).unwrap(), int(3));
        assert_eq!(p.invert().invert(), p);
        assert_eq!(p.invert().weight(&g).unwrap(), int(3));
        assert_eq!(p.invert().source(), VertexId(2));
        let e = Path::empty(VertexId(1));
        assert_eq!(e.invert(), e);
        let bad = Path {
            start: VertexId(0),
            steps: vec![(EdgeId(1), VertexId(2))],
        };
        assert_eq!(bad.weight(&g), Err(GraphError::NotAPath));
    }

    #[test]
    fn concat_paths() {
        let g = path_graph(&[int(2), int(1)]);
        let a = Path::new(&g, VertexId(0), vec![(EdgeId(0), VertexId(1))]).unwrap();
        let b = Path::new(&g, VertexId(1), vec![(EdgeId(1), VertexId(2))]).unwrap();
        let ab = a.concat(&b).unwrap();
        assert_eq!(
            ab.vertices().collect::<Vec<_>>(),
            vec![VertexId(0), VertexId(1), VertexId(2)]
        );
        assert_eq!(b.concat(&a), Err(GraphError::SourceTargetMismatch));
        let back = a.concat(&a.invert()).unwrap();
        assert!(!back.is_direction_preserving());
        assert!(ab.is_direction_preserving());
    }

    #[test]
    fn summaries() {
        let g = path_graph(&[int(2), int(1)]);
        let m = metric_summary(&g, VertexId(1)).unwrap();
        assert_eq!((m.radius, m.diameter), (int(2), int(3)));
        let m = metric_summary(&g, VertexId(0)).unwrap();
        assert_eq!((m.radius, m.diameter), (int(3), int(3)));
        let g = path_graph(&[frac(5, 2)]);
        let m = metric_summary(&g, VertexId(0)).unwrap();
        assert_eq!((m.radius, m.diameter), (frac(5, 2), frac(5, 2)));
    }
}
