//! The firing-squad machine for continuum representations of connected multigraphs.
//!
//! Local rules live in [`rules`]; this module composes them into the edge and vertex handlers:
//! freezing and thawing, the per-vertex count of returned searches, and the virtual-leaf cuts that
//! turn cycles into a tree.

pub mod rules;
pub mod signals;

use crate::continuum::{dirs, Direction, Point, SemiDirection};
use crate::engine::{run, Configuration, EngineError, Limits, Machine, Signal, Trace};
use crate::graph::{Multigraph, VertexId};
use crate::rational::Q;
use rules::{edge_pair, is_in_leaf, vertex_pair, vertex_single};
pub use signals::*;
use std::collections::BTreeSet;

/// Replaces freezable signals by their stationary frozen form.
pub fn freeze_set(s: &Set) -> Set {
    s.iter().map(freeze_one).collect()
}

pub fn freeze_one(s: &Sig) -> Sig {
    match s.kind.freezable() {
        Some(f) => Signal::still(
            Kind::Frozen(f),
            Datum::Frozen {
                heading: s.dir,
                inner: Box::new(s.datum.clone()),
            },
        ),
        None => s.clone(),
    }
}

/// Inverse of [`freeze_set`].
pub fn thaw_set(s: &Set) -> Set {
    s.iter().map(thaw_one).collect()
}

pub fn thaw_one(s: &Sig) -> Sig {
    match (s.kind, &s.datum) {
        (Kind::Frozen(f), Datum::Frozen { heading, inner }) => Signal::new(f.thawed(), *heading, (**inner).clone()),
        _ => s.clone(),
    }
}

fn has_freeze(s: &Set) -> bool {
    s.iter().any(|x| x.kind == Kind::Freeze)
}

fn has_thawing(s: &Set) -> bool {
    s.iter()
        .any(|x| x.kind == Kind::Thaw && matches!(&x.datum, Datum::Thaw { word, thawing: true } if word.is_empty()))
}

/// Freezes the outcome of an event if a freeze signal took part, thaws it if a thawing signal
/// did, and leaves it alone when both or neither are present.
pub fn settle(input: &Set, out: Set) -> Set {
    let f = has_freeze(input) || has_freeze(&out);
    let t = has_thawing(input) || has_thawing(&out);
    match (f, t) {
        (true, false) => freeze_set(&out),
        (false, true) => thaw_set(&out),
        _ => out,
    }
}

/// Directions remembered by count signals plus those of arriving marked searches that have
/// finished their way back.
pub fn returned(s: &Set) -> BTreeSet<Direction> {
    let mut out = BTreeSet::new();
    for x in s {
        match (&x.kind, &x.datum) {
            (Kind::Count, Datum::Directions(ds)) => out.extend(ds.iter().copied()),
            (
                Kind::ReflectedFind,
                Datum::Marked {
                    origin, marked: true, ..
                },
            ) if origin.is_empty() => out.extend(x.dir.direction()),
            (Kind::Slowed, Datum::Marked { marked: true, .. }) => out.extend(x.dir.direction()),
            _ => {}
        }
    }
    out
}

pub fn has_initiate(s: &Set) -> bool {
    s.iter().any(|x| x.kind == Kind::Initiate)
}

/// Unordered pairs of distinct members for which `rule` is defined.
fn rule_pairs<'a>(s: &'a [&'a Sig], rule: impl Fn(&Sig, &Sig) -> Option<Set>) -> Vec<(usize, usize, Set)> {
    let mut out = Vec::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if let Some(r) = rule(s[i], s[j]) {
                out.push((i, j, r));
            }
        }
    }
    out
}

/// Edge handler for a tree. When thawing, frozen signals are thawed before pairing, but two
/// signals neither of which arrived in motion are never paired: they merely sat together.
pub fn edge_tree(s: &Set) -> Set {
    let prethaw = has_thawing(s) && !has_freeze(s);
    let work: Set = if prethaw { thaw_set(s) } else { s.clone() };
    let members: Vec<&Sig> = work.iter().collect();
    let arrived = |x: &Sig| is_moving(x) && s.contains(x);
    let pairs: Vec<_> = rule_pairs(&members, edge_pair)
        .into_iter()
        .filter(|(i, j, _)| !prethaw || arrived(members[*i]) || arrived(members[*j]))
        .collect();
    let mut used = vec![false; members.len()];
    let mut out = Set::new();
    for (i, j, mut r) in pairs {
        used[i] = true;
        used[j] = true;
        // The search from the far end finds an edge midpoint again; the edge is frozen only once.
        if r.iter().any(|x| x.kind == Kind::Midpoint && s.contains(x)) {
            r.retain(|x| x.kind != Kind::Freeze);
        }
        out.extend(r);
    }
    for (k, x) in members.iter().enumerate() {
        if !used[k] {
            out.insert((*x).clone());
        }
    }
    settle(s, out)
}

/// Vertex handler for a tree.
pub fn vertex_tree(e: &BTreeSet<Direction>, s: &Set) -> Set {
    let k = returned(s);
    let n = k.len();
    let b = has_initiate(s);
    let members: Vec<&Sig> = s.iter().filter(|x| x.kind != Kind::Count).collect();
    let pairs = rule_pairs(&members, |x, y| vertex_pair(e, n, x, y));
    let mut used = vec![false; members.len()];
    let mut out = Set::new();
    if !is_in_leaf(e) {
        out.insert(count(k));
    }
    for (i, j, r) in pairs {
        used[i] = true;
        used[j] = true;
        out.extend(r);
    }
    for (idx, x) in members.iter().enumerate() {
        if !used[idx] {
            out.extend(vertex_single(e, n, b, x));
        }
    }
    settle(s, out)
}

pub fn edge_bc(s: &Set) -> Set {
    if s.len() <= 1 {
        Set::new()
    } else {
        edge_tree(s)
    }
}

pub fn vertex_bc(e: &BTreeSet<Direction>, s: &Set) -> Set {
    if e.is_empty() || s.is_empty() {
        Set::new()
    } else {
        vertex_tree(e, s)
    }
}

fn leaf_directions(s: &Set) -> BTreeSet<Direction> {
    s.iter()
        .filter_map(|x| match (&x.kind, &x.datum) {
            (Kind::Leaf, Datum::Direction(d)) => Some(*d),
            _ => None,
        })
        .collect()
}

/// Splits `s` into leaf signals, the signals arriving at each leaf, and the rest.
fn split_at_leaves(s: &Set) -> (Set, Vec<(Direction, Set)>, Set) {
    let cut = leaf_directions(s);
    let leaves: Set = s.iter().filter(|x| x.kind == Kind::Leaf).cloned().collect();
    let mut rest: Set = s.iter().filter(|x| x.kind != Kind::Leaf).cloned().collect();
    let mut parts = Vec::new();
    for d in cut {
        let part: Set = rest
            .iter()
            .filter(|x| x.dir == SemiDirection::Dir(d.reverse()))
            .cloned()
            .collect();
        rest.retain(|x| !part.contains(x));
        parts.push((d, part));
    }
    (leaves, parts, rest)
}

/// Edge handler with virtual leaves. Terminal divide signals vanish at a cut inside an edge: no
/// real end of the edge lies there.
pub fn edge_vt(s: &Set) -> Set {
    let (mut out, parts, rest) = split_at_leaves(s);
    out.extend(edge_bc(&rest));
    for (d, part) in parts {
        let part: Set = part.into_iter().filter(|x| x.kind != Kind::Terminal).collect();
        out.extend(vertex_bc(&BTreeSet::from([d]), &part));
    }
    out
}

pub fn vertex_vt(e: &BTreeSet<Direction>, s: &Set) -> Set {
    let (mut out, parts, rest) = split_at_leaves(s);
    let cut: BTreeSet<Direction> = parts.iter().map(|(d, _)| *d).collect();
    let uncut: BTreeSet<Direction> = e.difference(&cut).copied().collect();
    // With every direction cut the copies coincide, and stationary signals sit in each of them.
    let shared = if uncut.is_empty() {
        rest
    } else {
        out.extend(vertex_bc(&uncut, &rest));
        Set::new()
    };
    for (d, mut part) in parts {
        part.extend(shared.iter().cloned());
        out.extend(vertex_bc(&BTreeSet::from([d]), &part));
    }
    out
}

/// Directions from which initiate signals arrive.
pub fn initiate_sources(s: &Set) -> BTreeSet<Direction> {
    s.iter()
        .filter(|x| x.kind == Kind::Initiate)
        .filter_map(|x| x.dir.direction().map(Direction::reverse))
        .collect()
}

pub fn edge_leaves(s: &Set) -> Set {
    let mu = initiate_sources(s);
    if mu.len() < 2 {
        return Set::new();
    }
    mu.into_iter().map(leaf).collect()
}

/// Leaf signals for initiate signals colliding at a vertex. When some edges carry no initiate,
/// the smallest arriving direction stays uncut so that its initiate can spread onto them.
pub fn vertex_leaves(e: &BTreeSet<Direction>, s: &Set) -> Set {
    let mu = initiate_sources(s);
    if mu.len() < 2 {
        return Set::new();
    }
    if &mu == e && !is_in_leaf(e) {
        return mu.into_iter().map(leaf).collect();
    }
    mu.into_iter().skip(1).map(leaf).collect()
}

pub fn on_edge(s: &Set) -> Set {
    let mut s = s.clone();
    s.extend(edge_leaves(&s));
    edge_vt(&s)
}

pub fn at_vertex(e: &BTreeSet<Direction>, s: &Set) -> Set {
    let mut s = s.clone();
    s.extend(vertex_leaves(e, &s));
    vertex_vt(e, &s)
}

/// Which handlers the machine uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Virtual leaves for graphs with cycles.
    Full,
    /// The plain tree handlers, valid only on trees.
    TreeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fssp {
    pub depth: u8,
    pub mode: Mode,
}

impl Fssp {
    pub fn new(depth: u8) -> Self {
        Fssp {
            depth,
            mode: Mode::Full,
        }
    }

    pub fn tree_only(depth: u8) -> Self {
        Fssp {
            depth,
            mode: Mode::TreeOnly,
        }
    }
}

impl Machine for Fssp {
    type Kind = Kind;
    type Datum = Datum;

    fn speed(&self, kind: &Kind) -> Q {
        kind.speed()
    }

    fn on_edge(&self, s: &Set) -> Result<Set, String> {
        match self.mode {
            Mode::TreeOnly => Ok(edge_bc(s)),
            Mode::Full => {
                let out = on_edge(s);
                let cut = out.iter().any(|x| x.kind == Kind::Leaf);
                if let Some(x) = out.iter().find(|x| cut && x.kind != Kind::Leaf && !is_moving(x)) {
                    return Err(format!("stationary {} at a virtual leaf", x.kind));
                }
                Ok(out)
            }
        }
    }

    fn at_vertex(&self, e: &BTreeSet<Direction>, s: &Set) -> Result<Set, String> {
        Ok(match self.mode {
            Mode::TreeOnly => vertex_bc(e, s),
            Mode::Full => at_vertex(e, s),
        })
    }
}

/// Signals at the general at time 0; everything else is empty.
pub fn initial_configuration(g: &Multigraph, general: VertexId, depth: u8) -> Configuration<Kind, Datum> {
    let p = Point::Vertex(general);
    let e = dirs(g, &p);
    let leafy = is_in_leaf(&e);
    let mut c = Configuration::new();
    for &d in &e {
        c.insert(p.clone(), initiate(d, depth));
        c.extend(p.clone(), (0..=depth).map(|n| divide(n, d, depth)));
        c.insert(p.clone(), find(Vec::new(), d));
        c.insert(p.clone(), slowed(d, Vec::new(), Vec::new(), leafy));
    }
    c
}

/// Runs the machine from the general up to and including `horizon`.
pub fn simulate(
    g: &Multigraph,
    general: VertexId,
    machine: &Fssp,
    horizon: Option<Q>,
) -> Result<Trace<Kind, Datum>, EngineError> {
    let limits = Limits {
        horizon,
        ..Limits::default()
    };
    run(g, machine, &initial_configuration(g, general, machine.depth), &limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeId;

    fn dir(e: u32, fwd: bool) -> Direction {
        Direction::new(EdgeId(e), fwd)
    }

    #[test]
    fn freeze_round_trip() {
        let d = dir(0, true);
        let s: Set = [divide(2, d, 3), reflected_divide(d), terminal(d), fire(), boundary()].into();
        let f = freeze_set(&s);
        assert!(f.iter().all(|x| !is_moving(x)));
        assert!(f.contains(&boundary()));
        assert_eq!(thaw_set(&f), s);
    }

    #[test]
    fn settle_cases() {
        let d = dir(0, true);
        let out: Set = [divide(1, d, 2)].into();
        let with_f: Set = [freeze(d)].into();
        let with_t: Set = [thaw(d, vec![], true)].into();
        assert_eq!(settle(&with_f, out.clone()), freeze_set(&out));
        assert_eq!(settle(&with_t, freeze_set(&out)), out);
        let both: Set = with_f.union(&with_t).cloned().collect();
        assert_eq!(settle(&both, out.clone()), out);
    }

    #[test]
    fn overlapping_pairs_take_the_union() {
        let d = dir(0, true);
        let s: Set = [reflected_divide(d), terminal(d.reverse()), boundary()].into();
        assert_eq!(edge_tree(&s), Set::from([fire()]));
    }

    #[test]
    fn thawed_neighbours_are_not_paired() {
        let d = dir(0, true);
        let t = thaw(d, vec![], true);
        // A divide signal frozen just after leaving its boundary keeps going once thawed.
        let s: Set = [t.clone(), boundary(), freeze_one(&divide(0, d, 0))].into();
        assert_eq!(edge_tree(&s), Set::from([t.clone(), boundary(), divide(0, d, 0)]));
        // An arriving reflected divide signal still splits the thawed one.
        let s: Set = [t.clone(), reflected_divide(d.reverse()), freeze_one(&divide(1, d, 1))].into();
        let out = edge_tree(&s);
        assert!(out.contains(&boundary()) && out.contains(&divide(0, d, 0)));
    }

    #[test]
    fn count_signal() {
        let (a, b, c) = (dir(0, false), dir(1, true), dir(2, true));
        let e: BTreeSet<_> = [a, b, c].into();
        let s: Set = [
            count([b].into()),
            reflected_find(vec![], c.reverse(), vec![], true),
            slowed(a.reverse(), vec![b], vec![], false),
        ]
        .into();
        assert_eq!(returned(&s), [b, c.reverse()].into());
        let out = vertex_tree(&e, &s);
        assert!(out.contains(&count([b, c.reverse()].into())));
        let leaf_e: BTreeSet<_> = [a].into();
        let s: Set = [find(vec![b], a.reverse())].into();
        assert!(vertex_tree(&leaf_e, &s).iter().all(|x| x.kind != Kind::Count));
        assert!(vertex_bc(&BTreeSet::new(), &s).is_empty());
        assert!(edge_bc(&s).is_empty());
    }

    #[test]
    fn virtual_leaves() {
        let d = dir(0, true);
        let s: Set = [
            initiate(d, 1),
            initiate(d.reverse(), 1),
            divide(0, d, 1),
            divide(0, d.reverse(), 1),
        ]
        .into();
        assert_eq!(edge_leaves(&s), Set::from([leaf(d), leaf(d.reverse())]));
        let out = on_edge(&s);
        assert!(out.contains(&leaf(d)) && out.contains(&leaf(d.reverse())));
        assert!(out.contains(&reflected_divide(d)) && out.contains(&reflected_divide(d.reverse())));
        assert!(out.iter().all(|x| x.kind != Kind::Initiate));
        // Terminal signals vanish at a cut inside an edge.
        let s: Set = [leaf(d), leaf(d.reverse()), terminal(d)].into();
        assert_eq!(on_edge(&s), Set::from([leaf(d), leaf(d.reverse())]));

        let (a, b, c) = (dir(0, false), dir(1, true), dir(2, true));
        let e: BTreeSet<_> = [a, b, c].into();
        let s: Set = [initiate(a.reverse(), 1), initiate(b.reverse(), 1)].into();
        assert_eq!(vertex_leaves(&e, &s), Set::from([leaf(b)]));
        let out = at_vertex(&e, &s);
        assert!(out.contains(&initiate(c, 1)));
        assert!(!out.contains(&initiate(b, 1)));
        let s: Set = [
            initiate(a.reverse(), 1),
            initiate(b.reverse(), 1),
            initiate(c.reverse(), 1),
        ]
        .into();
        assert_eq!(vertex_leaves(&e, &s).len(), 3);
    }

    #[test]
    fn initial_signals() {
        let mut g = Multigraph::new();
        let a = g.add_vertex("a").unwrap();
        let b = g.add_vertex("b").unwrap();
        g.add_edge("e", a, b, crate::rational::int(1)).unwrap();
        let c = initial_configuration(&g, a, 3);
        assert_eq!(c.signal_count(), 1 + 4 + 2);
        assert!(c
            .iter()
            .flat_map(|(_, s)| s)
            .any(|x| x == &slowed(dir(0, true), vec![], vec![], true)));
    }

    mod properties {
        use super::*;
        use crate::io::{write_trace, TraceDocument};
        use crate::oracle::{small_trees, virtual_tree};
        use crate::rational::{frac, int};
        use proptest::prelude::*;
        use std::sync::OnceLock;

        fn any_signal() -> impl Strategy<Value = Sig> {
            (0..9u8, 0..4u32, any::<bool>(), 0..6u8, 0..6u8).prop_map(|(k, e, fwd, n, budget)| {
                let d = dir(e, fwd);
                match k {
                    0 => divide(n, d, budget),
                    1 => reflected_divide(d),
                    2 => terminal(d),
                    3 => fire(),
                    4 => boundary(),
                    5 => freeze(d),
                    6 => thaw(d, vec![d.reverse()], fwd),
                    7 => find(vec![d], d),
                    _ => midpoint(vec![d], vec![d.reverse()]),
                }
            })
        }

        fn trees() -> &'static [Multigraph] {
            static TREES: OnceLock<Vec<Multigraph>> = OnceLock::new();
            TREES.get_or_init(|| small_trees(3, &[int(1), frac(3, 2), int(2)]))
        }

        fn document(g: &Multigraph, general: VertexId, depth: u8) -> (Vec<u8>, Trace<Kind, Datum>) {
            let horizon = virtual_tree(g, general).unwrap().sync_time();
            let trace = simulate(g, general, &Fssp::new(depth), Some(horizon)).unwrap();
            let mut bytes = Vec::new();
            write_trace(&TraceDocument::new(g, general, depth, &trace), &mut bytes).unwrap();
            (bytes, trace)
        }

        /// Triangles, parallel edges and cycles with pendants, from every vertex: every point
        /// fires, and all at once.
        #[test]
        fn cycles_fire_together() {
            use crate::io::parse_graph;
            use crate::io::verify::{check_cut_points, check_fire_coverage, check_fire_time, check_leaves};
            let mut cases = 0;
            for (a, b, c) in [("1", "1", "1"), ("1", "2", "1"), ("2", "1", "3/2"), ("3/2", "2", "2")] {
                let shapes = [
                    format!("vertex a\nvertex b\nvertex c\nedge x a b {a}\nedge y b c {b}\nedge z c a {c}\n"),
                    format!("vertex a\nvertex b\nedge x a b {a}\nedge y a b {b}\n"),
                    format!("vertex a\nvertex b\nvertex c\nedge x a b {a}\nedge y a b {b}\nedge z b c {c}\n"),
                    format!("vertex a\nvertex b\nvertex c\nvertex d\nedge x a b {a}\nedge y b c {b}\nedge z c a {c}\nedge p c d 1\n"),
                ];
                for text in shapes {
                    let (g, _) = parse_graph(&format!("{text}general a\n")).unwrap();
                    for v in g.vertices() {
                        let expected = virtual_tree(&g, v).unwrap().sync_time();
                        let t = simulate(&g, v, &Fssp::new(2), Some(expected.clone())).unwrap();
                        let b = &t.batches;
                        let checks = [
                            check_fire_time(b, &expected),
                            check_fire_coverage(&g, &t),
                            check_leaves(&g, v, b),
                            check_cut_points(b),
                        ];
                        for r in checks {
                            assert!(r.is_ok(), "{text}from {v:?}: {r:?}");
                        }
                        cases += 1;
                    }
                }
            }
            assert_eq!(cases, 48);
        }

        proptest! {
            #[test]
            fn thaw_inverts_freeze(s in any_signal()) {
                let f = freeze_one(&s);
                prop_assert_eq!(thaw_one(&f), s.clone());
                if s.kind.freezable().is_some() {
                    prop_assert!(!is_moving(&f) && matches!(f.kind, Kind::Frozen(_)));
                } else {
                    prop_assert_eq!(f, s);
                }
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn runs_are_deterministic_and_ordered(tree in any::<prop::sample::Index>(), v in any::<prop::sample::Index>(), depth in 2..5u8) {
                let g = tree.get(trees());
                let general = VertexId(v.index(g.vertex_count()) as u32);
                let (a, trace) = document(g, general, depth);
                let (b, _) = document(g, general, depth);
                prop_assert!(a == b, "two runs differ");
                for w in trace.batches.windows(2) {
                    prop_assert!(w[0].time < w[1].time);
                }
                prop_assert!(trace.batches.iter().all(|b| b.time <= trace.end_time));
            }
        }
    }
}
