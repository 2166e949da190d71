//! Analytic predictors and brute-force enumerations used to check simulator traces.
//!
//! Nothing here runs the machine: every value is computed from the graph metric alone.

use crate::continuum::{point_distance, Direction, Point};
use crate::graph::{distances_from, metric_summary, EdgeId, GraphError, Multigraph, Path, VertexId};
use crate::rational::{frac, int, zero, Q};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("path is not direction-preserving")]
    NotDirectionPreserving,
    #[error("path is empty")]
    EmptyPath,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("word does not describe a walk from {0}")]
    BadWord(Point),
    #[error("maximum-weight paths have different midpoints")]
    ScatteredMidpoints,
    #[error("class {0} is not reachable from a maximum-weight class")]
    ReachabilityFailure(String),
    #[error("cut graph is not a tree")]
    NotATree,
    #[error("weight mismatch at {what}: expected {expected}, found {found}")]
    WeightMismatch { what: String, expected: Q, found: Q },
}

/// Point at distance `s` from the source along `p`.
///
/// Panics if `s` exceeds the weight of `p`.
pub fn point_along(g: &Multigraph, p: &Path, s: &Q) -> Point {
    let mut left = s.clone();
    let mut at = p.source();
    for &(e, next) in p.steps() {
        let w = g.weight(e);
        if &left < w {
            let off = if g.endpoints(e).0 == at { left } else { w - left };
            return Point::on_edge(g, e, off);
        }
        left -= w;
        at = next;
    }
    assert!(left == zero(), "distance beyond the end of the path");
    Point::Vertex(at)
}

pub fn path_midpoint(g: &Multigraph, p: &Path) -> Point {
    let w = p.weight(g).expect("valid path");
    point_along(g, p, &(w * frac(1, 2)))
}

/// Whether `x` lies on the embedding of `p`, ends included.
pub fn lies_on(p: &Path, x: &Point) -> bool {
    match x {
        Point::Vertex(v) => p.vertices().any(|u| u == *v),
        Point::Edge { edge, .. } => p.edges().any(|e| e == *edge),
    }
}

/// `max(d(g, σ(p)), d(g, τ(p))) + ω(p)/2`.
pub fn midpoint_time(g: &Multigraph, general: VertexId, p: &Path) -> Result<Q, OracleError> {
    if p.is_empty() {
        return Err(OracleError::EmptyPath);
    }
    if !p.is_direction_preserving() {
        return Err(OracleError::NotDirectionPreserving);
    }
    let w = p.weight(g)?;
    let dist = distances_from(g, general);
    let far = dist[p.source().0 as usize]
        .clone()
        .max(dist[p.target().0 as usize].clone());
    Ok(far + w * frac(1, 2))
}

/// All non-empty direction-preserving paths with at most `hop_limit` edges, in both orientations.
pub fn path_catalog(g: &Multigraph, hop_limit: usize) -> Vec<Path> {
    fn extend(g: &Multigraph, p: &Path, hop_limit: usize, out: &mut Vec<Path>) {
        if p.len() == hop_limit {
            return;
        }
        let last = p.steps().last().map(|s| s.0);
        for &e in g.incident(p.target()) {
            if Some(e) == last {
                continue;
            }
            let mut q = p.clone();
            q.push(g, e);
            extend(g, &q, hop_limit, out);
            out.push(q);
        }
    }
    let mut out = Vec::new();
    for v in g.vertices() {
        extend(g, &Path::empty(v), hop_limit, &mut out);
    }
    out
}

/// Default catalog bound: `2·|E|` hops, which on trees never truncates anything.
pub fn default_catalog(g: &Multigraph) -> Vec<Path> {
    path_catalog(g, 2 * g.edge_count())
}

/// Representative of the undirected class `{p, invert(p)}`.
pub fn class_of(p: &Path) -> Path {
    let q = p.invert();
    if q < *p {
        q
    } else {
        p.clone()
    }
}

/// The path a midpoint signal at `at` designates, read from its two words.
pub fn path_from_words(g: &Multigraph, at: &Point, w1: &[Direction], w2: &[Direction]) -> Result<Path, OracleError> {
    let bad = || OracleError::BadWord(at.clone());
    // Follows a word, returning the edges taken and the vertices reached.
    let follow = |w: &[Direction]| -> Result<Vec<(EdgeId, VertexId)>, OracleError> {
        let (first, rest) = w.split_first().ok_or_else(bad)?;
        let ok = match at {
            Point::Vertex(v) => first.tail(g) == *v,
            Point::Edge { edge, .. } => first.edge == *edge,
        };
        if !ok {
            return Err(bad());
        }
        let mut steps = vec![(first.edge, first.head(g))];
        for d in rest {
            if d.tail(g) != steps.last().expect("non-empty").1 {
                return Err(bad());
            }
            steps.push((d.edge, d.head(g)));
        }
        Ok(steps)
    };
    let a = follow(w1)?;
    let b = follow(w2)?;
    let p = match at {
        Point::Vertex(v) => {
            let left = Path::new(g, *v, a)?.invert();
            left.concat(&Path::new(g, *v, b)?)?
        }
        Point::Edge { .. } => {
            if a[0].0 != b[0].0 || a[0].1 == b[0].1 {
                return Err(bad());
            }
            let start = b[0].1;
            let right = Path::new(g, start, a)?;
            let left = Path::new(g, start, b[1..].to_vec())?.invert();
            left.concat(&right)?
        }
    };
    if !p.is_direction_preserving() {
        return Err(OracleError::NotDirectionPreserving);
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LongestMidpoint {
    pub point: Point,
    pub time: Q,
    pub diameter: Q,
    pub radius: Q,
}

/// Common midpoint of all maximum-weight direction-preserving paths, found at `r + d/2`, where
/// `d` is the maximum path weight and `r` the continuum eccentricity of the general.
pub fn longest_midpoint(g: &Multigraph, general: VertexId) -> Result<LongestMidpoint, OracleError> {
    let catalog = default_catalog(g);
    let weights: Vec<Q> = catalog.iter().map(|p| p.weight(g)).collect::<Result<_, _>>()?;
    let d = weights.iter().max().cloned().unwrap_or_else(zero);
    let mids: BTreeSet<Point> = catalog
        .iter()
        .zip(&weights)
        .filter(|(_, w)| **w == d)
        .map(|(p, _)| path_midpoint(g, p))
        .collect();
    if mids.len() != 1 {
        return Err(OracleError::ScatteredMidpoints);
    }
    let r = metric_summary(g, general)?.radius;
    Ok(LongestMidpoint {
        point: mids.into_iter().next().expect("one midpoint"),
        time: &r + &d * frac(1, 2),
        diameter: d,
        radius: r,
    })
}

/// `r + d` on the continuum metric.
pub fn sync_time(g: &Multigraph, general: VertexId) -> Result<Q, OracleError> {
    let m = metric_summary(g, general)?;
    Ok(m.radius + m.diameter)
}

/// Primary-cascade boundary offsets on an edge of length `len`, measured from the end the
/// cascade starts at, for types `1..=depth`.
///
/// Each is where the reflected signal `x(t) = 2L - t` meets type `n` moving at
/// `(2/3)^n / (2 - (2/3)^n)`.
pub fn division_positions(len: &Q, depth: u8) -> Vec<Q> {
    (1..=depth)
        .map(|n| {
            let r = num::pow(frac(2, 3), n as usize);
            let v = &r / (int(2) - &r);
            let t = len * int(2) / (int(1) + &v);
            v * t
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThawGraph {
    /// Class representatives, empty paths included.
    pub classes: Vec<Path>,
    pub weights: Vec<Q>,
    pub midpoints: Vec<Point>,
    /// `(from, to, midpoint distance)`.
    pub edges: Vec<(usize, usize, Q)>,
}

/// Builds the graph of undirected paths in which each path points, for each of its two ends, to
/// the heaviest lighter paths from that end whose midpoint lies on it.
pub fn thaw_graph(g: &Multigraph) -> Result<ThawGraph, OracleError> {
    let mut all: Vec<Path> = g.vertices().map(Path::empty).collect();
    all.extend(default_catalog(g));
    let classes: Vec<Path> = all.iter().map(class_of).collect::<BTreeSet<_>>().into_iter().collect();
    let index: BTreeMap<&Path, usize> = classes.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let weight_of = |p: &Path| p.weight(g);
    let weights: Vec<Q> = classes.iter().map(weight_of).collect::<Result<_, _>>()?;
    let midpoints: Vec<Point> = classes.iter().map(|p| path_midpoint(g, p)).collect();
    let all_w: Vec<Q> = all.iter().map(weight_of).collect::<Result<_, _>>()?;
    let all_m: Vec<Point> = all.iter().map(|p| path_midpoint(g, p)).collect();
    let mut edges = Vec::new();
    for (i, p) in classes.iter().enumerate() {
        // Heaviest lighter paths from the source end and, separately, into the target end.
        let mut targets = BTreeSet::new();
        for from_source in [true, false] {
            let candidates: Vec<usize> = (0..all.len())
                .filter(|&k| {
                    let q = &all[k];
                    let shares_end = if from_source {
                        q.source() == p.source()
                    } else {
                        q.target() == p.target()
                    };
                    shares_end && all_w[k] < weights[i] && lies_on(p, &all_m[k])
                })
                .collect();
            if let Some(best) = candidates.iter().map(|&k| &all_w[k]).max() {
                targets.extend(
                    candidates
                        .iter()
                        .filter(|&&k| &all_w[k] == best)
                        .map(|&k| index[&class_of(&all[k])]),
                );
            }
        }
        for j in targets {
            edges.push((i, j, point_distance(g, &midpoints[i], &midpoints[j])));
        }
    }
    Ok(ThawGraph {
        classes,
        weights,
        midpoints,
        edges,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThawReport {
    pub classes: usize,
    pub edges: usize,
    pub max_classes: usize,
    /// Distinct path weights checked, summed over classes.
    pub path_weights_checked: usize,
}

/// Checks that every class is reachable from a maximum-weight class, that every such path has
/// weight `d/2 - ω(p)/2`, that edge weights equal half the weight difference, and that
/// maximum-weight classes have in-degree 0.
pub fn thaw_path_weight_check(tg: &ThawGraph) -> Result<ThawReport, OracleError> {
    let half = frac(1, 2);
    let n = tg.classes.len();
    let d = tg.weights.iter().max().cloned().unwrap_or_else(zero);
    let name = |i: usize| format!("{:?}", tg.classes[i]);
    let mut out: Vec<Vec<(usize, &Q)>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (i, j, w) in &tg.edges {
        let expected = (&tg.weights[*i] - &tg.weights[*j]) * &half;
        if *w != expected {
            return Err(OracleError::WeightMismatch {
                what: format!("edge {} -> {}", name(*i), name(*j)),
                expected,
                found: w.clone(),
            });
        }
        out[*i].push((*j, w));
        indeg[*j] += 1;
    }
    let maxima: Vec<usize> = (0..n).filter(|&i| tg.weights[i] == d).collect();
    for &i in &maxima {
        if indeg[i] != 0 {
            return Err(OracleError::WeightMismatch {
                what: format!("in-degree of {}", name(i)),
                expected: zero(),
                found: int(indeg[i] as i64),
            });
        }
    }
    // All path weights from maxima, by relaxation in order of decreasing class weight.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| tg.weights[*b].cmp(&tg.weights[*a]));
    let mut reach: Vec<BTreeSet<Q>> = vec![BTreeSet::new(); n];
    for &i in &maxima {
        reach[i].insert(zero());
    }
    for &i in &order {
        let here: Vec<Q> = reach[i].iter().cloned().collect();
        for &(j, w) in &out[i] {
            for x in &here {
                reach[j].insert(x + w);
            }
        }
    }
    let mut checked = 0;
    for (i, weights) in reach.iter().enumerate() {
        if weights.is_empty() {
            return Err(OracleError::ReachabilityFailure(name(i)));
        }
        let expected = (&d - &tg.weights[i]) * &half;
        for w in weights {
            if *w != expected {
                return Err(OracleError::WeightMismatch {
                    what: format!("path to {}", name(i)),
                    expected,
                    found: w.clone(),
                });
            }
            checked += 1;
        }
    }
    Ok(ThawReport {
        classes: n,
        edges: tg.edges.len(),
        max_classes: maxima.len(),
        path_weights_checked: checked,
    })
}

/// Every weighted tree with `1..=max_edges` edges and weights from `weights`, up to isomorphism.
/// Vertices are `v0, v1, …` and edges `e0, e1, …`.
pub fn small_trees(max_edges: usize, weights: &[Q]) -> Vec<Multigraph> {
    // A tree is a list of (parent, child, weight index) with child = position + 1.
    type Shape = Vec<(usize, usize, usize)>;
    fn canonical(t: &Shape) -> Shape {
        let n = t.len() + 1;
        let mut best: Option<Shape> = None;
        let mut perm: Vec<usize> = (0..n).collect();
        permutations(&mut perm, 0, &mut |p| {
            let mut edges: Shape = t
                .iter()
                .map(|&(a, b, w)| {
                    let (x, y) = (p[a], p[b]);
                    (x.min(y), x.max(y), w)
                })
                .collect();
            edges.sort();
            if best.as_ref().is_none_or(|b| edges < *b) {
                best = Some(edges);
            }
        });
        best.expect("at least one permutation")
    }
    fn permutations(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permutations(p, k + 1, f);
            p.swap(k, i);
        }
    }
    let mut seen = BTreeSet::new();
    let mut layer: Vec<Shape> = vec![Vec::new()];
    let mut out = Vec::new();
    for _ in 0..max_edges {
        let mut next = Vec::new();
        for t in &layer {
            let child = t.len() + 1;
            for parent in 0..child {
                for w in 0..weights.len() {
                    let mut u = t.clone();
                    u.push((parent, child, w));
                    let c = canonical(&u);
                    if seen.insert(c.clone()) {
                        next.push(c);
                    }
                }
            }
        }
        for t in &next {
            let mut g = Multigraph::new();
            for v in 0..=t.len() {
                g.add_vertex(format!("v{v}")).expect("fresh name");
            }
            for (i, &(a, b, w)) in t.iter().enumerate() {
                g.add_edge(
                    format!("e{i}"),
                    VertexId(a as u32),
                    VertexId(b as u32),
                    weights[w].clone(),
                )
                .expect("valid edge");
            }
            out.push(g);
        }
        layer = next;
    }
    out
}

/// Where initiate signals collide, and the tree left after cutting there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualTree {
    /// Expected number of leaf signals created at each collision point.
    pub leaves: BTreeMap<Point, usize>,
    /// The graph with every collision point split into separate leaf vertices.
    pub tree: Multigraph,
    pub general: VertexId,
    pub radius: Q,
    pub diameter: Q,
}

impl VirtualTree {
    /// `r + d` on the cut tree, which is when the machine fires on `g`.
    pub fn sync_time(&self) -> Q {
        &self.radius + &self.diameter
    }
}

/// Predicts the virtual leaves from the distances alone. Initiate signals run along shortest
/// paths, so they meet inside every edge whose end distances differ by less than its weight, and
/// at every vertex reached simultaneously along two or more edges.
pub fn virtual_tree(g: &Multigraph, general: VertexId) -> Result<VirtualTree, OracleError> {
    let dist = distances_from(g, general);
    let d = |v: VertexId| &dist[v.0 as usize];
    let mut tight_in: BTreeMap<VertexId, BTreeSet<Direction>> = BTreeMap::new();
    let mut leaves = BTreeMap::new();
    let mut cut_edges = BTreeMap::new();
    for e in g.edges() {
        let (u, w) = g.endpoints(e);
        let om = g.weight(e);
        if d(u) + om == *d(w) {
            tight_in.entry(w).or_default().insert(Direction::towards(g, w, e));
        } else if d(w) + om == *d(u) {
            tight_in.entry(u).or_default().insert(Direction::towards(g, u, e));
        } else {
            let off = (d(w) + om - d(u)) * frac(1, 2);
            leaves.insert(Point::on_edge(g, e, off.clone()), 2);
            cut_edges.insert(e, off);
        }
    }
    // Incoming directions at a vertex that end in their own leaf copy of it.
    let mut detached: BTreeSet<Direction> = BTreeSet::new();
    for (v, mu) in &tight_in {
        if mu.len() < 2 {
            continue;
        }
        let cut: Vec<Direction> = if mu.len() == g.degree(*v) {
            mu.iter().copied().collect()
        } else {
            mu.iter().skip(1).copied().collect()
        };
        leaves.insert(Point::Vertex(*v), cut.len());
        detached.extend(cut);
    }

    let mut tree = Multigraph::new();
    for v in g.vertices() {
        tree.add_vertex(g.vertex_name(v))?;
    }
    let mut fresh = 0usize;
    let mut new_leaf = |tree: &mut Multigraph| -> Result<VertexId, OracleError> {
        fresh += 1;
        Ok(tree.add_vertex(format!("~cut{fresh}"))?)
    };
    for e in g.edges() {
        let (u, w) = g.endpoints(e);
        let name = g.edge_name(e);
        if let Some(off) = cut_edges.get(&e) {
            let a = new_leaf(&mut tree)?;
            let b = new_leaf(&mut tree)?;
            tree.add_edge(format!("{name}~0"), u, a, off.clone())?;
            tree.add_edge(format!("{name}~1"), b, w, g.weight(e) - off)?;
            continue;
        }
        let towards_w = Direction::towards(g, w, e);
        let towards_u = Direction::towards(g, u, e);
        let (mut a, mut b) = (u, w);
        if detached.contains(&towards_w) {
            b = new_leaf(&mut tree)?;
        } else if detached.contains(&towards_u) {
            a = new_leaf(&mut tree)?;
        }
        tree.add_edge(name, a, b, g.weight(e).clone())?;
    }
    // Vertices split into leaf copies on every side keep no edge of their own.
    let tree = drop_isolated(&tree)?;
    let general = tree
        .vertex_by_name(g.vertex_name(general))
        .expect("general keeps its edges");
    if !tree.is_tree() {
        return Err(OracleError::NotATree);
    }
    let m = metric_summary(&tree, general)?;
    Ok(VirtualTree {
        leaves,
        general,
        radius: m.radius,
        diameter: m.diameter,
        tree,
    })
}

fn drop_isolated(g: &Multigraph) -> Result<Multigraph, OracleError> {
    let mut out = Multigraph::new();
    let mut map = BTreeMap::new();
    for v in g.vertices().filter(|&v| g.degree(v) > 0) {
        map.insert(v, out.add_vertex(g.vertex_name(v))?);
    }
    for e in g.edges() {
        let (u, w) = g.endpoints(e);
        out.add_edge(g.edge_name(e), map[&u], map[&w], g.weight(e).clone())?;
    }
    Ok(out)
}
