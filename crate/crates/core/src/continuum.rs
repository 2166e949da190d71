//! Points, directions and motion on the metric realisation of a multigraph.
//!
//! Each edge `e` is the interval `[0, ω(e)]`, with offset 0 at its source (the endpoint with the
//! smaller id). Endpoint offsets are never stored: they are the vertices themselves.

use crate::graph::{distances_from, EdgeId, Multigraph, VertexId};
use crate::rational::{zero, Q};
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContinuumError {
    #[error("direction {0} is not available at {1}")]
    BadDirection(Direction, Point),
    #[error("distance must be non-negative")]
    NegativeDistance,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Vertex(VertexId),
    Edge { edge: EdgeId, offset: Q },
}

impl Point {
    /// Canonical point at `offset` on `edge`; endpoints become vertices.
    ///
    /// Panics if `offset` lies outside `[0, ω(edge)]`.
    pub fn on_edge(g: &Multigraph, edge: EdgeId, offset: Q) -> Point {
        let w = g.weight(edge);
        assert!(!offset.is_negative() && &offset <= w, "offset outside edge {edge}");
        let (s, t) = g.endpoints(edge);
        if offset.is_zero() {
            Point::Vertex(s)
        } else if &offset == w {
            Point::Vertex(t)
        } else {
            Point::Edge { edge, offset }
        }
    }

    pub fn vertex(&self) -> Option<VertexId> {
        match self {
            Point::Vertex(v) => Some(*v),
            Point::Edge { .. } => None,
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self, Point::Vertex(_))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Vertex(v) => write!(f, "{v}"),
            Point::Edge { edge, offset } => write!(f, "{edge}@{offset}"),
        }
    }
}

/// Orientation along an edge. `forward` means increasing offset (towards the target end).
///
/// Ordered by `(edge, orientation)` with the negative orientation first; this is the total order
/// used wherever a deterministic choice among directions is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub edge: EdgeId,
    pub forward: bool,
}

impl Direction {
    pub fn new(edge: EdgeId, forward: bool) -> Self {
        Direction { edge, forward }
    }

    pub fn reverse(self) -> Self {
        Direction {
            edge: self.edge,
            forward: !self.forward,
        }
    }

    /// +1 or -1.
    pub fn sign(self) -> i64 {
        if self.forward {
            1
        } else {
            -1
        }
    }

    /// The direction leaving `v` along `edge`.
    pub fn away_from(g: &Multigraph, v: VertexId, edge: EdgeId) -> Self {
        Direction::new(edge, g.endpoints(edge).0 == v)
    }

    /// The direction of travel that ends at `v` along `edge`.
    pub fn towards(g: &Multigraph, v: VertexId, edge: EdgeId) -> Self {
        Direction::away_from(g, v, edge).reverse()
    }

    /// Vertex a signal moving this way reaches at the end of the edge.
    pub fn head(self, g: &Multigraph) -> VertexId {
        let (s, t) = g.endpoints(self.edge);
        if self.forward {
            t
        } else {
            s
        }
    }

    /// Vertex a signal moving this way comes from.
    pub fn tail(self, g: &Multigraph) -> VertexId {
        self.reverse().head(g)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.forward { '+' } else { '-' }, self.edge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemiDirection {
    Dir(Direction),
    Every,
}

impl SemiDirection {
    pub fn direction(self) -> Option<Direction> {
        match self {
            SemiDirection::Dir(d) => Some(d),
            SemiDirection::Every => None,
        }
    }
}

impl fmt::Display for SemiDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemiDirection::Dir(d) => d.fmt(f),
            SemiDirection::Every => f.write_str("*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    magnitude: Q,
    direction: SemiDirection,
}

impl Arrow {
    /// Builds an arrow; a zero magnitude always collapses to `Every`.
    pub fn new(magnitude: Q, direction: SemiDirection) -> Option<Self> {
        if magnitude.is_negative() {
            return None;
        }
        if magnitude.is_zero() {
            return Some(Arrow::still());
        }
        match direction {
            SemiDirection::Every => None,
            d => Some(Arrow {
                magnitude,
                direction: d,
            }),
        }
    }

    pub fn still() -> Self {
        Arrow {
            magnitude: zero(),
            direction: SemiDirection::Every,
        }
    }

    pub fn magnitude(&self) -> &Q {
        &self.magnitude
    }

    pub fn direction(&self) -> SemiDirection {
        self.direction
    }
}

pub fn scalar_mul(a: &Arrow, t: &Q) -> Arrow {
    assert!(!t.is_negative(), "scalar must be non-negative");
    if t.is_zero() || a.magnitude.is_zero() {
        Arrow::still()
    } else {
        Arrow {
            magnitude: &a.magnitude * t,
            direction: a.direction,
        }
    }
}

/// `(source, target)` per edge, source being the endpoint with the smaller id.
pub fn orientation(g: &Multigraph) -> Vec<(VertexId, VertexId)> {
    g.edges().map(|e| g.endpoints(e)).collect()
}

pub fn dirs(g: &Multigraph, p: &Point) -> BTreeSet<Direction> {
    match p {
        Point::Vertex(v) => g.incident(*v).iter().map(|&e| Direction::away_from(g, *v, e)).collect(),
        Point::Edge { edge, .. } => [Direction::new(*edge, false), Direction::new(*edge, true)]
            .into_iter()
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoveOutcome {
    Interior(Point),
    HitVertex {
        vertex: VertexId,
        consumed: Q,
        arrival: Direction,
    },
}

/// Offset of `p` on `d`'s edge, where `p` is either interior to that edge or one of its ends.
fn offset_on(g: &Multigraph, p: &Point, edge: EdgeId) -> Q {
    match p {
        Point::Edge { offset, .. } => offset.clone(),
        Point::Vertex(v) => {
            if g.endpoints(edge).0 == *v {
                zero()
            } else {
                g.weight(edge).clone()
            }
        }
    }
}

/// Moves along `d` for at most `dist`, stopping at the first vertex reached.
pub fn advance(g: &Multigraph, p: &Point, d: Direction, dist: &Q) -> Result<MoveOutcome, ContinuumError> {
    if dist.is_negative() {
        return Err(ContinuumError::NegativeDistance);
    }
    let legal = match p {
        Point::Vertex(_) => dirs(g, p).contains(&d),
        Point::Edge { edge, .. } => *edge == d.edge,
    };
    if !legal {
        return Err(ContinuumError::BadDirection(d, p.clone()));
    }
    if dist.is_zero() {
        return Ok(MoveOutcome::Interior(p.clone()));
    }
    let x = offset_on(g, p, d.edge);
    let w = g.weight(d.edge);
    let room = if d.forward { w - &x } else { x.clone() };
    if dist < &room {
        let nx = if d.forward { x + dist } else { x - dist };
        Ok(MoveOutcome::Interior(Point::on_edge(g, d.edge, nx)))
    } else {
        Ok(MoveOutcome::HitVertex {
            vertex: d.head(g),
            consumed: room,
            arrival: d,
        })
    }
}

/// Endpoints of all direction-preserving walks of length `|a|` from `p` heading along `a`.
///
/// Walks that run into a leaf before the length is used up end there and contribute nothing.
pub fn reach(g: &Multigraph, p: &Point, a: &Arrow) -> BTreeSet<(Point, SemiDirection)> {
    let mut out = BTreeSet::new();
    match a.direction {
        SemiDirection::Every => {
            out.insert((p.clone(), SemiDirection::Every));
        }
        SemiDirection::Dir(d) => walk(g, p, d, a.magnitude.clone(), &mut out),
    }
    out
}

fn walk(g: &Multigraph, p: &Point, d: Direction, left: Q, out: &mut BTreeSet<(Point, SemiDirection)>) {
    match advance(g, p, d, &left) {
        Err(_) => {}
        Ok(MoveOutcome::Interior(q)) => {
            out.insert((q, SemiDirection::Dir(d)));
        }
        Ok(MoveOutcome::HitVertex {
            vertex,
            consumed,
            arrival,
        }) => {
            let rest = left - consumed;
            if rest.is_zero() {
                out.insert((Point::Vertex(vertex), SemiDirection::Dir(arrival)));
                return;
            }
            let here = Point::Vertex(vertex);
            for e in dirs(g, &here) {
                if e != arrival.reverse() {
                    walk(g, &here, e, rest.clone(), out);
                }
            }
        }
    }
}

/// Shortest distance between two points of the continuum.
pub fn point_distance(g: &Multigraph, p: &Point, q: &Point) -> Q {
    if p == q {
        return zero();
    }
    // Each point is reached through the ends of its edge; list (vertex, extra length) exits.
    let exits = |x: &Point| -> Vec<(VertexId, Q)> {
        match x {
            Point::Vertex(v) => vec![(*v, zero())],
            Point::Edge { edge, offset } => {
                let (s, t) = g.endpoints(*edge);
                vec![(s, offset.clone()), (t, g.weight(*edge) - offset)]
            }
        }
    };
    let mut best: Option<Q> = None;
    if let (Point::Edge { edge: e1, offset: a }, Point::Edge { edge: e2, offset: b }) = (p, q) {
        if e1 == e2 {
            best = Some((a - b).abs());
        }
    }
    for (u, du) in exits(p) {
        let dist = distances_from(g, u);
        for (v, dv) in exits(q) {
            let cand = &du + &dist[v.0 as usize] + &dv;
            if best.as_ref().is_none_or(|b| &cand < b) {
                best = Some(cand);
            }
        }
    }
    best.expect("points have at least one exit")
}
