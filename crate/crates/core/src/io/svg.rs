//! Space-time diagrams: one strip per edge, position across, time downwards.

use crate::continuum::{Point, SemiDirection};
use crate::engine::Trace;
use crate::fssp::{Datum, Kind, Sig};
use crate::graph::{EdgeId, Multigraph};
use crate::rational::{format, to_f64, zero, Q};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub width: f64,
    pub dash: Option<String>,
    pub colour: String,
}

impl Stroke {
    fn new(width: f64, dash: Option<&str>, colour: &str) -> Self {
        Stroke {
            width,
            dash: dash.map(str::to_owned),
            colour: colour.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramSpec {
    /// Edges to draw, left to right; `None` draws every edge.
    pub edges: Option<Vec<EdgeId>>,
    pub from: Option<Q>,
    pub to: Option<Q>,
    /// Pixels per unit of length and of time.
    pub scale: u32,
    /// Keyed by [`style_key`] plus `"vertex"` for the strip borders.
    pub styles: BTreeMap<String, Stroke>,
}

impl Default for DiagramSpec {
    fn default() -> Self {
        let styles = [
            ("vertex", Stroke::new(2.0, None, "black")),
            ("boundary", Stroke::new(2.0, None, "black")),
            ("midpoint", Stroke::new(2.0, None, "black")),
            ("leaf", Stroke::new(2.0, None, "darkgreen")),
            ("fire", Stroke::new(2.0, None, "red")),
            ("freeze", Stroke::new(1.0, Some("6 4"), "black")),
            ("thaw", Stroke::new(2.0, Some("1 6"), "black")),
            ("thawing", Stroke::new(1.0, None, "black")),
            ("reflected", Stroke::new(1.0, Some("1 2"), "black")),
            ("frozen", Stroke::new(1.0, None, "grey")),
            ("signal", Stroke::new(1.0, None, "black")),
        ]
        .into_iter()
        .map(|(k, s)| (k.to_owned(), s))
        .collect();
        DiagramSpec {
            edges: None,
            from: None,
            to: None,
            scale: 120,
            styles,
        }
    }
}

pub fn style_key(s: &Sig) -> &'static str {
    match s.kind {
        Kind::Boundary => "boundary",
        Kind::Midpoint => "midpoint",
        Kind::Leaf => "leaf",
        Kind::Fire => "fire",
        Kind::Freeze => "freeze",
        Kind::Thaw => match s.datum {
            Datum::Thaw { thawing: true, .. } => "thawing",
            _ => "thaw",
        },
        Kind::ReflectedFind | Kind::ReflectedDivide | Kind::Slowed => "reflected",
        Kind::Frozen(_) => "frozen",
        _ => "signal",
    }
}

/// A straight piece of a signal's world line inside one edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub edge: EdgeId,
    pub key: &'static str,
    pub label: String,
    pub start: (Q, Q),
    pub end: (Q, Q),
}

struct Open<'a> {
    sig: &'a Sig,
    edge: EdgeId,
    t0: Q,
    x0: Q,
    velocity: Q,
}

impl Open<'_> {
    fn at(&self, t: &Q) -> Q {
        &self.x0 + &self.velocity * (t - &self.t0)
    }
}

fn offset_of(g: &Multigraph, p: &Point, edge: EdgeId) -> Option<Q> {
    match p {
        Point::Edge { edge: e, offset } => (*e == edge).then(|| offset.clone()),
        Point::Vertex(v) => {
            let (a, b) = g.endpoints(edge);
            if *v == a {
                Some(zero())
            } else if *v == b {
                Some(g.weight(edge).clone())
            } else {
                None
            }
        }
    }
}

/// Where a signal produced at `p` travels: its edge, start offset and signed speed. Stationary
/// signals at a vertex are placed on every incident edge.
fn placements(g: &Multigraph, p: &Point, s: &Sig) -> Vec<(EdgeId, Q, Q)> {
    match (s.dir, p) {
        (SemiDirection::Dir(d), _) => {
            let x0 = match p {
                Point::Edge { offset, .. } => offset.clone(),
                Point::Vertex(_) if d.forward => zero(),
                Point::Vertex(_) => g.weight(d.edge).clone(),
            };
            let v = s.kind.speed() * Q::from_integer(d.sign().into());
            vec![(d.edge, x0, v)]
        }
        (SemiDirection::Every, Point::Edge { edge, offset }) => vec![(*edge, offset.clone(), zero())],
        (SemiDirection::Every, Point::Vertex(v)) => g
            .edges()
            .filter(|e| {
                let (a, b) = g.endpoints(*e);
                a == *v || b == *v
            })
            .map(|e| (e, offset_of(g, p, e).expect("incident edge"), zero()))
            .collect(),
    }
}

/// World lines of all signals, split at every event they take part in. Signals that pass an
/// edge-interior event unchanged keep one segment. Signals consumed without a recorded creation
/// belong to the initial configuration and are traced back to time 0.
pub fn segments(g: &Multigraph, trace: &Trace<Kind, Datum>) -> Vec<Segment> {
    let mut open: Vec<Open> = Vec::new();
    let mut out = Vec::new();
    let close = |o: Open, t: &Q, out: &mut Vec<Segment>| {
        out.push(Segment {
            edge: o.edge,
            key: style_key(o.sig),
            label: o.sig.kind.label(),
            end: (t.clone(), o.at(t)),
            start: (o.t0, o.x0),
        });
    };
    for b in &trace.batches {
        let t = &b.time;
        for e in &b.entries {
            let passing = |s: &Sig| !e.point.is_vertex() && e.produced.contains(s);
            for s in e.consumed.iter().filter(|s| !passing(s)) {
                let placed = placements(g, &e.point, s);
                for (edge, _, velocity) in placed {
                    let Some(x) = offset_of(g, &e.point, edge) else {
                        continue;
                    };
                    let hit = open
                        .iter()
                        .position(|o| o.sig == s && o.edge == edge && o.velocity == velocity && o.at(t) == x);
                    match hit {
                        Some(i) => close(open.remove(i), t, &mut out),
                        None => {
                            // Present from the start.
                            let back = Open {
                                sig: s,
                                edge,
                                t0: t.clone(),
                                x0: x,
                                velocity: velocity.clone(),
                            };
                            let start = back.at(&zero());
                            let o = Open {
                                x0: start,
                                t0: zero(),
                                ..back
                            };
                            close(o, t, &mut out);
                        }
                    }
                }
            }
            for s in e
                .produced
                .iter()
                .filter(|s| !e.consumed.contains(*s) || e.point.is_vertex())
            {
                for (edge, x0, velocity) in placements(g, &e.point, s) {
                    open.push(Open {
                        sig: s,
                        edge,
                        t0: t.clone(),
                        x0,
                        velocity,
                    });
                }
            }
        }
    }
    for o in open {
        let end = trace.end_time.clone();
        close(o, &end, &mut out);
    }
    out.sort_by(|a, b| (a.edge, &a.start, &a.end, a.key, &a.label).cmp(&(b.edge, &b.start, &b.end, b.key, &b.label)));
    out.dedup();
    out
}

/// Pixel coordinate, rounded to half a pixel.
fn px(q: &Q, scale: u32) -> String {
    let v = (to_f64(q) * f64::from(scale) * 2.0).round() / 2.0;
    format!("{v}")
}

fn stroke_attrs(s: &Stroke) -> String {
    let mut a = format!("stroke=\"{}\" stroke-width=\"{}\"", s.colour, s.width);
    if let Some(d) = &s.dash {
        let _ = write!(a, " stroke-dasharray=\"{d}\"");
    }
    a
}

/// Clips a segment to `[from, to]` in time.
fn clip(seg: &Segment, from: &Q, to: &Q) -> Option<((Q, Q), (Q, Q))> {
    let ((t0, x0), (t1, x1)) = (&seg.start, &seg.end);
    if t1 < from || t0 > to {
        return None;
    }
    let at = |t: &Q| {
        if t1 == t0 {
            x0.clone()
        } else {
            x0 + (x1 - x0) * (t - t0) / (t1 - t0)
        }
    };
    let a = if t0 < from { from.clone() } else { t0.clone() };
    let b = if t1 > to { to.clone() } else { t1.clone() };
    Some(((a.clone(), at(&a)), (b.clone(), at(&b))))
}

const MARGIN: u32 = 50;
const GAP: u32 = 40;

pub fn render_svg(g: &Multigraph, trace: &Trace<Kind, Datum>, spec: &DiagramSpec) -> String {
    let edges: Vec<EdgeId> = spec.edges.clone().unwrap_or_else(|| g.edges().collect());
    let from = spec.from.clone().unwrap_or_else(zero);
    let to = spec
        .to
        .clone()
        .unwrap_or_else(|| trace.end_time.clone())
        .max(from.clone());
    let sc = spec.scale;
    let fallback = Stroke::new(1.0, None, "black");
    let style = |k: &str| spec.styles.get(k).unwrap_or(&fallback);
    let y = |t: &Q| px(&(t - &from), sc);

    let mut lefts = Vec::new();
    let mut left = Q::from_integer(MARGIN.into()) / Q::from_integer(sc.into());
    for e in &edges {
        lefts.push(left.clone());
        left += g.weight(*e) + Q::from_integer(GAP.into()) / Q::from_integer(sc.into());
    }
    let width = to_f64(&left) * f64::from(sc) + f64::from(MARGIN);
    let height = to_f64(&(&to - &from)) * f64::from(sc) + f64::from(2 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        s,
        "<g transform=\"translate(0 {MARGIN})\" font-family=\"monospace\" font-size=\"10\">"
    );
    let _ = writeln!(
        s,
        "<line class=\"axis\" x1=\"{m}\" y1=\"0\" x2=\"{m}\" y2=\"{}\" stroke=\"black\"/>",
        y(&to),
        m = MARGIN / 2
    );
    let first = from.ceil().to_integer();
    let last = to.floor().to_integer();
    let mut tick = first;
    while tick <= last {
        let tq = Q::from_integer(tick.clone());
        let _ = writeln!(s, "<text x=\"2\" y=\"{}\">{}</text>", y(&tq), format(&tq));
        tick += 1;
    }
    let all = segments(g, trace);
    for (e, l) in edges.iter().zip(&lefts) {
        let (a, b) = g.endpoints(*e);
        let x = |q: &Q| px(&(l + q), sc);
        let w = g.weight(*e);
        let _ = writeln!(s, "<g class=\"edge\" id=\"{}\">", g.edge_name(*e));
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"-20\">{} {}-{}</text>",
            x(&zero()),
            g.edge_name(*e),
            g.vertex_name(a),
            g.vertex_name(b)
        );
        for end in [zero(), w.clone()] {
            let _ = writeln!(
                s,
                "<line class=\"vertex\" x1=\"{0}\" y1=\"0\" x2=\"{0}\" y2=\"{1}\" {2}/>",
                x(&end),
                y(&to),
                stroke_attrs(style("vertex"))
            );
        }
        for seg in all.iter().filter(|seg| seg.edge == *e) {
            let Some(((t0, x0), (t1, x1))) = clip(seg, &from, &to) else {
                continue;
            };
            let _ = writeln!(
                s,
                "<polyline class=\"{}\" points=\"{},{} {},{}\" fill=\"none\" {}><title>{}</title></polyline>",
                seg.key,
                x(&x0),
                y(&t0),
                x(&x1),
                y(&t1),
                stroke_attrs(style(seg.key)),
                seg.label
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Configuration, StopReason};
    use crate::fssp::{simulate, Fssp};
    use crate::io::parse_graph;
    use crate::rational::{frac, int};

    fn unit_edge() -> (Multigraph, Trace<Kind, Datum>) {
        let (g, general) = parse_graph("vertex a\nvertex b\nedge e a b 1\ngeneral a\n").unwrap();
        let trace = simulate(&g, general, &Fssp::new(3), Some(int(2))).unwrap();
        (g, trace)
    }

    #[test]
    fn empty_trace_has_axes_only() {
        let (g, _) = unit_edge();
        let trace = Trace {
            batches: vec![],
            stop: StopReason::Quiescent,
            end_time: zero(),
            final_configuration: Configuration::new(),
        };
        let svg = render_svg(&g, &trace, &DiagramSpec::default());
        assert!(svg.contains("class=\"axis\""));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn unit_edge_has_one_reflection_and_a_cascade() {
        let (g, trace) = unit_edge();
        let segs = segments(&g, &trace);
        // The first divide signal crosses the edge and comes back once.
        let reflected: Vec<_> = segs.iter().filter(|s| s.label == "Ď").collect();
        assert!(reflected.iter().any(|s| s.start == (int(1), int(1))));
        let boundaries: Vec<Q> = segs
            .iter()
            .filter(|s| s.label == "B")
            .map(|s| s.start.1.clone())
            .collect();
        for n in 1..=3 {
            assert!(boundaries.contains(&num::pow(frac(2, 3), n)), "boundary at (2/3)^{n}");
        }
        for s in &segs {
            assert!(s.start.0 <= s.end.0);
            if s.start.0 == zero() {
                assert_eq!(s.start.1, zero(), "{s:?} does not start at the general");
            }
            assert!(s.start.1 >= zero() && s.start.1 <= int(1));
            assert!(s.end.1 >= zero() && s.end.1 <= int(1));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let (g, trace) = unit_edge();
        let spec = DiagramSpec {
            from: Some(frac(1, 2)),
            ..DiagramSpec::default()
        };
        let a = render_svg(&g, &trace, &spec);
        let b = render_svg(&g, &unit_edge().1, &spec);
        assert_eq!(a, b);
        assert!(a.contains("stroke-dasharray=\"1 2\""));
    }
}
