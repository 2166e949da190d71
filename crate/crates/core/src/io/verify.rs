//! Checks a trace against the oracle.

use crate::continuum::Point;
use crate::engine::{EventBatch, EventEntry, Trace};
use crate::fssp::{Datum, Kind, Sig};
use crate::graph::{distances_from, Multigraph, VertexId};
use crate::oracle::{
    class_of, default_catalog, longest_midpoint, midpoint_time, path_from_words, path_midpoint, sync_time, thaw_graph,
    thaw_path_weight_check, virtual_tree,
};
use crate::rational::{format, frac, Q};
use num::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Batches = [EventBatch<Kind, Datum>];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, result: Result<String, String>) {
        let (status, detail) = match result {
            Ok(d) => (Status::Pass, d),
            Err(d) => (Status::Fail, d),
        };
        self.checks.push(Check { name, status, detail });
    }

    fn skip(&mut self, name: &'static str, why: &str) {
        self.checks.push(Check {
            name,
            status: Status::Skipped,
            detail: why.into(),
        });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Signals produced at an entry that were not already there.
pub fn created(e: &EventEntry<Kind, Datum>) -> impl Iterator<Item = &Sig> {
    e.produced.difference(&e.consumed)
}

/// `(time, point, signal)` for every creation of a signal satisfying `keep`.
pub fn creations<'a>(batches: &'a Batches, keep: impl Fn(&Sig) -> bool + 'a) -> Vec<(&'a Q, &'a Point, &'a Sig)> {
    let mut out = Vec::new();
    for b in batches {
        for e in &b.entries {
            for s in created(e).filter(|s| keep(s)) {
                out.push((&b.time, &e.point, s));
            }
        }
    }
    out
}

/// Times and points at which fire signals are created, frozen ones excluded.
pub fn fire_events(batches: &Batches) -> Vec<(Q, Point)> {
    creations(batches, |s| s.kind == Kind::Fire)
        .into_iter()
        .map(|(t, p, _)| (t.clone(), p.clone()))
        .collect()
}

pub fn check_monotone(batches: &Batches) -> Result<String, String> {
    for w in batches.windows(2) {
        if w[0].time >= w[1].time {
            return Err(format!(
                "batch at {} follows {}",
                format(&w[1].time),
                format(&w[0].time)
            ));
        }
    }
    Ok(format!("{} batches", batches.len()))
}

/// All fire events happen at `expected` and nothing fires earlier.
pub fn check_fire_time(batches: &Batches, expected: &Q) -> Result<String, String> {
    let fires = fire_events(batches);
    let times: BTreeSet<&Q> = fires.iter().map(|(t, _)| t).collect();
    match times.iter().collect::<Vec<_>>().as_slice() {
        [] => Err("nothing fired".into()),
        [t] if **t == expected => Ok(format!("{} fire events at {}", fires.len(), format(expected))),
        _ => Err(format!(
            "fire times {} but expected {}",
            times.iter().map(|t| format(t)).collect::<Vec<_>>().join(", "),
            format(expected)
        )),
    }
}

/// Every vertex and every boundary point fires, and no frozen signal is left over.
pub fn check_fire_coverage(g: &Multigraph, trace: &Trace<Kind, Datum>) -> Result<String, String> {
    let fired: BTreeSet<Point> = fire_events(&trace.batches).into_iter().map(|(_, p)| p).collect();
    for v in g.vertices() {
        if !fired.contains(&Point::Vertex(v)) {
            return Err(format!("vertex {} never fired", g.vertex_name(v)));
        }
    }
    for (p, set) in trace.final_configuration.iter() {
        if let Some(s) = set.iter().find(|s| matches!(s.kind, Kind::Frozen(_))) {
            return Err(format!("{} still frozen at {p}", s.kind));
        }
    }
    let boundaries: BTreeSet<&Point> = creations(&trace.batches, |s| s.kind == Kind::Boundary)
        .into_iter()
        .map(|(_, p, _)| p)
        .collect();
    if let Some(p) = boundaries.iter().find(|p| !fired.contains(**p)) {
        return Err(format!("boundary at {p} never fired"));
    }
    Ok(format!("{} points fired, {} boundaries", fired.len(), boundaries.len()))
}

/// Leaf signals appear exactly at the predicted collision points, in the predicted numbers.
pub fn check_leaves(g: &Multigraph, general: VertexId, batches: &Batches) -> Result<String, String> {
    let vt = virtual_tree(g, general).map_err(|e| e.to_string())?;
    let mut seen: BTreeMap<Point, usize> = BTreeMap::new();
    for (_, p, _) in creations(batches, |s| s.kind == Kind::Leaf) {
        *seen.entry(p.clone()).or_default() += 1;
    }
    if seen != vt.leaves {
        return Err(format!("leaves at {seen:?}, expected {:?}", vt.leaves));
    }
    Ok(format!(
        "{} cut points; cut graph is a tree with {} vertices",
        vt.leaves.len(),
        vt.tree.vertex_count()
    ))
}

/// No stationary signal other than a leaf is ever produced at a cut point inside an edge.
pub fn check_cut_points(batches: &Batches) -> Result<String, String> {
    let cuts: BTreeSet<&Point> = creations(batches, |s| s.kind == Kind::Leaf)
        .into_iter()
        .filter(|(_, p, _)| !p.is_vertex())
        .map(|(_, p, _)| p)
        .collect();
    for b in batches {
        for e in b.entries.iter().filter(|e| cuts.contains(&e.point)) {
            if let Some(s) = e
                .produced
                .iter()
                .find(|s| s.kind != Kind::Leaf && s.kind.speed().is_zero())
            {
                return Err(format!("{} at {} at time {}", s.kind, e.point, format(&b.time)));
            }
        }
    }
    Ok(format!("{} cut points inside edges", cuts.len()))
}

/// Thaw signals with an empty word that are not thawing never reach a vertex.
pub fn check_bare_thaw(batches: &Batches) -> Result<String, String> {
    for b in batches {
        for e in b.entries.iter().filter(|e| e.point.is_vertex()) {
            let bad = e.consumed.iter().any(|s| {
                s.kind == Kind::Thaw && matches!(&s.datum, Datum::Thaw { word, thawing: false } if word.is_empty())
            });
            if bad {
                return Err(format!("at {} at time {}", e.point, format(&b.time)));
            }
        }
    }
    Ok("none".into())
}

/// Graph-only: thaw signals leaving the longest midpoint reach every midpoint signal just in time.
pub fn check_thaw_graph(g: &Multigraph) -> Result<String, String> {
    let r = thaw_graph(g)
        .and_then(|tg| thaw_path_weight_check(&tg))
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} classes, {} edges, {} path weights",
        r.classes, r.edges, r.path_weights_checked
    ))
}

/// Each non-maximal path class gets exactly one midpoint signal, first created at its midpoint at
/// the predicted time. Maximum-weight classes are marked by the thaw pair instead and get no
/// midpoint signal before it. Midpoint signals are never destroyed, so none is created twice.
pub fn check_midpoints(g: &Multigraph, general: VertexId, batches: &Batches, end: &Q) -> Result<String, String> {
    let catalog = default_catalog(g);
    let d = catalog
        .iter()
        .filter_map(|p| p.weight(g).ok())
        .max()
        .expect("non-trivial graph");
    let thaw_time = longest_midpoint(g, general).map_err(|e| e.to_string())?.time;
    let mut found: BTreeMap<_, BTreeSet<&Sig>> = BTreeMap::new();
    let mut seen: BTreeSet<(&Point, &Sig)> = BTreeSet::new();
    for b in batches {
        for e in &b.entries {
            let p = &e.point;
            for s in created(e).filter(|s| s.kind == Kind::Midpoint) {
                let Datum::Pair(w1, w2) = &s.datum else {
                    return Err(format!("midpoint without words at {p}"));
                };
                let path = path_from_words(g, p, w1, w2).map_err(|e| format!("{e} at {p}"))?;
                let expected_p = path_midpoint(g, &path);
                if *p != expected_p {
                    return Err(format!("midpoint of {path:?} at {p}, expected {expected_p}"));
                }
                if !seen.insert((p, s)) {
                    return Err(format!("midpoint of {path:?} created twice at {p}"));
                }
                let heaviest = path.weight(g).expect("decoded path") == d;
                let expected_t = midpoint_time(g, general, &path).map_err(|e| e.to_string())?;
                if heaviest && b.time < thaw_time {
                    return Err(format!(
                        "maximum-weight {path:?} got a midpoint signal at {}",
                        format(&b.time)
                    ));
                }
                if !heaviest && b.time != expected_t {
                    return Err(format!(
                        "midpoint of {path:?} created at time {}, expected {}",
                        format(&b.time),
                        format(&expected_t)
                    ));
                }
                found.entry(class_of(&path)).or_default().insert(s);
            }
        }
    }
    let mut classes = 0;
    for p in catalog.iter().map(class_of).collect::<BTreeSet<_>>() {
        let n = found.get(&p).map_or(0, |m| m.len());
        let heaviest = p.weight(g).expect("catalog path") == d;
        let due = midpoint_time(g, general, &p).map_err(|e| e.to_string())? <= *end;
        if (heaviest && n > 1) || (!heaviest && due && n != 1) {
            return Err(format!("{n} midpoint signals for {p:?}"));
        }
        classes += 1;
    }
    Ok(format!("{classes} path classes"))
}

/// The first thaw signals appear only at the longest midpoint, at `r + d/2`, and thaw signals
/// are never started anywhere else.
pub fn check_longest_midpoint(g: &Multigraph, general: VertexId, batches: &Batches) -> Result<String, String> {
    let lm = longest_midpoint(g, general).map_err(|e| e.to_string())?;
    let thaws = creations(batches, |s| s.kind == Kind::Thaw);
    if g.edge_count() == 1 {
        return if thaws.is_empty() {
            Ok("single edge: no thaw needed".into())
        } else {
            Err("thaw signals on a single edge".into())
        };
    }
    let Some(first) = thaws.iter().map(|(t, _, _)| *t).min() else {
        return Err("no thaw signals".into());
    };
    let first_points: BTreeSet<&Point> = thaws
        .iter()
        .filter(|(t, _, _)| *t == first)
        .map(|(_, p, _)| *p)
        .collect();
    if *first != lm.time || first_points != BTreeSet::from([&lm.point]) {
        return Err(format!(
            "first thaw at {first_points:?} time {}, expected {} time {}",
            format(first),
            lm.point,
            format(&lm.time)
        ));
    }
    for b in batches {
        for e in &b.entries {
            let starts = created(e).any(|s| s.kind == Kind::Thaw) && !e.consumed.iter().any(|s| s.kind == Kind::Thaw);
            if starts && e.point != lm.point {
                return Err(format!("thaw started at {} time {}", e.point, format(&b.time)));
            }
        }
    }
    Ok(format!("at {} time {}", lm.point, format(&lm.time)))
}

/// Each edge's first freeze pair is created at its midpoint `3/2·ω` after the edge was entered.
pub fn check_freeze_schedule(g: &Multigraph, general: VertexId, batches: &Batches) -> Result<String, String> {
    let freezes = creations(batches, |s| s.kind == Kind::Freeze);
    if g.edge_count() == 1 {
        return if freezes.is_empty() {
            Ok("single edge: nothing to freeze".into())
        } else {
            Err("freeze signals on a single edge".into())
        };
    }
    let dist = distances_from(g, general);
    for e in g.edges() {
        let (u, w) = g.endpoints(e);
        let start = dist[u.0 as usize].clone().min(dist[w.0 as usize].clone());
        let expected_t = start + g.weight(e) * frac(3, 2);
        let expected_p = Point::on_edge(g, e, g.weight(e) * frac(1, 2));
        let first = freezes
            .iter()
            .filter(|(_, p, _)| matches!(p, Point::Edge { edge, .. } if *edge == e))
            .map(|(t, p, _)| (*t, *p))
            .min();
        match first {
            Some((t, p)) if *t == expected_t && *p == expected_p => {}
            Some((t, p)) => {
                return Err(format!(
                    "edge {} froze at {p} time {}, expected time {}",
                    g.edge_name(e),
                    format(t),
                    format(&expected_t)
                ))
            }
            None => return Err(format!("edge {} never froze", g.edge_name(e))),
        }
    }
    Ok(format!("{} edges", g.edge_count()))
}

/// Runs every check that applies to the graph. The path and thaw checks need a tree; the fire
/// time is compared with `r + d` on the continuum metric.
pub fn verify(g: &Multigraph, general: VertexId, trace: &Trace<Kind, Datum>) -> Report {
    let b = &trace.batches;
    let mut r = Report::default();
    r.push("monotone-times", check_monotone(b));
    r.push(
        "fire-time",
        sync_time(g, general)
            .map_err(|e| e.to_string())
            .and_then(|t| check_fire_time(b, &t)),
    );
    r.push("fire-coverage", check_fire_coverage(g, trace));
    r.push("virtual-leaves", check_leaves(g, general, b));
    r.push("cut-points", check_cut_points(b));
    r.push("bare-thaw", check_bare_thaw(b));
    type TraceCheck = fn(&Multigraph, VertexId, &Batches) -> Result<String, String>;
    let tree_checks: [(&'static str, TraceCheck); 2] = [
        ("longest-midpoint", check_longest_midpoint),
        ("freeze-schedule", check_freeze_schedule),
    ];
    if g.is_tree() {
        r.push("midpoints", check_midpoints(g, general, b, &trace.end_time));
        r.push("thaw-graph", check_thaw_graph(g));
        for (name, f) in tree_checks {
            r.push(name, f(g, general, b));
        }
    } else {
        r.skip("midpoints", "graph has cycles");
        r.skip("thaw-graph", "graph has cycles");
        for (name, _) in tree_checks {
            r.skip(name, "graph has cycles");
        }
    }
    r
}
