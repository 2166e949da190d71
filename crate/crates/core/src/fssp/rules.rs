//! Local transition rules: collisions of two signals inside an edge, a single signal at a vertex,
//! and two signals at a vertex.

use super::signals::*;
use crate::continuum::{Direction, SemiDirection};
use std::collections::BTreeSet;

pub fn is_in_leaf(e: &BTreeSet<Direction>) -> bool {
    e.len() == 1
}

pub fn is_penultimate(e: &BTreeSet<Direction>, n: usize) -> bool {
    n + 1 == e.len()
}

pub fn are_empty(w: &[Direction], w2: &[Direction]) -> bool {
    w.is_empty() && w2.is_empty()
}

fn moving_dir(s: &Sig) -> Option<Direction> {
    direction_of(s)
}

fn marked_parts(s: &Sig) -> Option<(&Word, &Word, bool)> {
    match &s.datum {
        Datum::Marked {
            origin,
            reflection,
            marked,
        } => Some((origin, reflection, *marked)),
        _ => None,
    }
}

fn thaw_parts(s: &Sig) -> Option<(&Word, bool)> {
    match &s.datum {
        Datum::Thaw { word, thawing } => Some((word, *thawing)),
        _ => None,
    }
}

fn pair_words(s: &Sig) -> Option<(&Word, &Word)> {
    match (&s.kind, &s.datum) {
        (Kind::Midpoint, Datum::Pair(a, b)) => Some((a, b)),
        _ => None,
    }
}

/// If `m` is a midpoint signal with `word` as one of its words, the other one.
fn other_word<'a>(m: &'a Sig, word: &[Direction]) -> Option<&'a Word> {
    let (a, b) = pair_words(m)?;
    if a.as_slice() == word {
        Some(b)
    } else if b.as_slice() == word {
        Some(a)
    } else {
        None
    }
}

fn set<const K: usize>(items: [Sig; K]) -> Set {
    items.into_iter().collect()
}

fn budget(s: &Sig) -> u8 {
    match s.datum {
        Datum::Budget(b) => b,
        _ => 0,
    }
}

type PairRule = fn(&Sig, &Sig) -> Option<Set>;

fn first_match(rules: &[PairRule], a: &Sig, b: &Sig) -> Option<Set> {
    rules.iter().find_map(|r| r(a, b).or_else(|| r(b, a)))
}

// Rules inside an edge.

fn e_reflect(x: &Sig, y: &Sig) -> Option<Set> {
    if x.kind != Kind::Divide(0) || y.kind != Kind::Boundary {
        return None;
    }
    let d = moving_dir(x)?;
    Some(set([reflected_divide(d.reverse()), boundary()]))
}

/// The reflected divide signal survives the split so that it goes on to meet the slower types.
fn e_split(x: &Sig, y: &Sig) -> Option<Set> {
    if x.kind != Kind::ReflectedDivide || !matches!(y.kind, Kind::Divide(_)) {
        return None;
    }
    let r = moving_dir(x)?;
    let d = moving_dir(y)?;
    if r != d.reverse() {
        return None;
    }
    let mut out = cascade(d, budget(y).saturating_sub(1));
    out.insert(x.clone());
    out.insert(boundary());
    Some(out)
}

fn e_first_midpoint(x: &Sig, y: &Sig) -> Option<Set> {
    if x.kind != Kind::ReflectedFind || y.kind != Kind::Slowed {
        return None;
    }
    let d = moving_dir(x)?;
    let (xo, xr, b) = marked_parts(x)?;
    let (yo, yr, b2) = marked_parts(y)?;
    if moving_dir(y)? != d.reverse() || !xo.is_empty() || !xr.is_empty() || !yo.is_empty() || !yr.is_empty() {
        return None;
    }
    Some(if !b || !b2 {
        set([
            x.clone(),
            y.clone(),
            midpoint(vec![d.reverse()], vec![d]),
            freeze(d.reverse()),
            freeze(d),
        ])
    } else {
        Set::new()
    })
}

fn e_midpoint(x: &Sig, y: &Sig) -> Option<Set> {
    if x.kind != Kind::ReflectedFind || y.kind != Kind::Slowed {
        return None;
    }
    let d = moving_dir(x)?;
    let (wo, wr, b) = marked_parts(x)?;
    let (wo2, wr2, b2) = marked_parts(y)?;
    if moving_dir(y)? != d.reverse() || wo != wo2 {
        return None;
    }
    let towards_reflection = cons(d.reverse(), wr);
    let towards_other = cons(d, &concat(wo, wr2));
    Some(if !b || !b2 {
        set([x.clone(), y.clone(), midpoint(towards_reflection, towards_other)])
    } else {
        set([thaw(d.reverse(), wr.clone(), false), thaw(d, concat(wo, wr2), false)])
    })
}

fn e_thaw_at_midpoint(x: &Sig, y: &Sig) -> Option<Set> {
    if x.kind != Kind::Thaw {
        return None;
    }
    let d = moving_dir(x)?;
    let (w, thawing) = thaw_parts(x)?;
    if thawing {
        return None;
    }
    let other = other_word(y, &cons(d, w))?;
    let (&d2, w2) = other.split_first()?;
    let ae = are_empty(w, w2);
    Some(set([thaw(d, w.clone(), ae), thaw(d2, w2.to_vec(), ae), y.clone()]))
}

fn e_fire_at_boundary(x: &Sig, y: &Sig) -> Option<Set> {
    let ends = matches!(x.kind, Kind::ReflectedDivide | Kind::Terminal);
    (ends && y.kind == Kind::Boundary).then(|| set([fire()]))
}

/// Collision of two signals inside an edge, or `None` if no rule applies.
pub fn edge_pair(a: &Sig, b: &Sig) -> Option<Set> {
    first_match(
        &[
            e_reflect,
            e_split,
            e_first_midpoint,
            e_midpoint,
            e_thaw_at_midpoint,
            e_fire_at_boundary,
        ],
        a,
        b,
    )
}

/// A single signal at a vertex with outgoing directions `e`, given the count `n` of returned
/// marked searches and whether an initiate signal is present (`b`).
pub fn vertex_single(e: &BTreeSet<Direction>, n: usize, b: bool, s: &Sig) -> Set {
    let others = |d: Direction| e.iter().copied().filter(move |x| *x != d.reverse());
    let d = match s.dir {
        SemiDirection::Every => return set([s.clone()]),
        SemiDirection::Dir(d) => d,
    };
    let pen = is_penultimate(e, n);
    match s.kind {
        Kind::Divide(0) => set([reflected_divide(d.reverse())]),
        Kind::ReflectedDivide | Kind::Terminal => set([fire()]),
        Kind::Initiate => {
            let n_max = budget(s);
            let mut out = Set::new();
            for x in others(d) {
                out.insert(initiate(x, n_max));
                out.extend(cascade(x, n_max));
            }
            for &x in e {
                out.insert(find(Vec::new(), x));
                out.insert(slowed(x, Vec::new(), Vec::new(), is_in_leaf(e)));
            }
            out
        }
        Kind::Find => {
            let Datum::Word(wo) = &s.datum else {
                return generic(e, s, d);
            };
            let mut out = set([reflected_find(wo.clone(), d.reverse(), Vec::new(), b && is_in_leaf(e))]);
            for x in others(d) {
                out.insert(find(cons(d.reverse(), wo), x));
            }
            out
        }
        Kind::ReflectedFind => {
            let Some((wo, wr, m)) = marked_parts(s) else {
                return generic(e, s, d);
            };
            let back = cons(d.reverse(), wr);
            match wo.split_first() {
                None => others(d)
                    .map(|x| slowed(x, Vec::new(), back.clone(), m && pen))
                    .collect(),
                Some((&x, rest)) => set([reflected_find(rest.to_vec(), x, back, m && pen)]),
            }
        }
        Kind::Slowed => {
            let Some((wo, wr, m)) = marked_parts(s) else {
                return generic(e, s, d);
            };
            let origin = cons(d.reverse(), wo);
            others(d)
                .map(|x| slowed(x, origin.clone(), wr.clone(), m && pen))
                .collect()
        }
        Kind::Freeze => Set::new(),
        Kind::Thaw => match thaw_parts(s) {
            Some((w, true)) if w.is_empty() => Set::new(),
            Some((w, false)) if !w.is_empty() => set([thaw(w[0], w[1..].to_vec(), false)]),
            _ => generic(e, s, d),
        },
        _ => generic(e, s, d),
    }
}

fn generic(e: &BTreeSet<Direction>, s: &Sig, d: Direction) -> Set {
    e.iter()
        .filter(|x| **x != d.reverse())
        .map(|x| Sig::moving(s.kind, *x, s.datum.clone()))
        .collect()
}

/// Collision of two signals at a vertex, or `None` if no rule applies.
pub fn vertex_pair(e: &BTreeSet<Direction>, n: usize, a: &Sig, b: &Sig) -> Option<Set> {
    let v_fire = |x: &Sig, y: &Sig| -> Option<Set> {
        (x.kind == Kind::ReflectedDivide && y.kind == Kind::Boundary).then(|| set([fire()]))
    };
    let v_midpoint = |x: &Sig, y: &Sig| -> Option<Set> {
        if x.kind != Kind::ReflectedFind || y.kind != Kind::Slowed {
            return None;
        }
        let d = moving_dir(x)?;
        let d2 = moving_dir(y)?;
        let (wo, wr, bx) = marked_parts(x)?;
        let (wo2, wr2, by) = marked_parts(y)?;
        let (&first, rest) = wo.split_first()?;
        if first != d2.reverse() || rest != wo2.as_slice() {
            return None;
        }
        let to_reflection = cons(d.reverse(), wr);
        let to_other = cons(d2.reverse(), &concat(wo2, wr2));
        // As for two returning searches, a longer branch that has not reported back yet means
        // this is not the centre of a longest path.
        Some(if !bx || !by || n != e.len() {
            let mut out = vertex_single(e, n, false, x);
            out.extend(vertex_single(e, n, false, y));
            out.insert(midpoint(to_reflection, to_other));
            out
        } else {
            set([
                thaw(d.reverse(), wr.clone(), false),
                thaw(d2.reverse(), concat(wo2, wr2), false),
            ])
        })
    };
    let v_returned = |x: &Sig, y: &Sig| -> Option<Set> {
        if x.kind != Kind::ReflectedFind || y.kind != Kind::ReflectedFind {
            return None;
        }
        let d = moving_dir(x)?;
        let d2 = moving_dir(y)?;
        let (wo, wr, bx) = marked_parts(x)?;
        let (wo2, wr2, by) = marked_parts(y)?;
        // Two searches travelling together never collide.
        if !wo.is_empty() || !wo2.is_empty() || d == d2 {
            return None;
        }
        Some(if !bx || !by || n != e.len() {
            let mut out = vertex_single(e, n, false, x);
            out.extend(vertex_single(e, n, false, y));
            out.insert(midpoint(cons(d.reverse(), wr), cons(d2.reverse(), wr2)));
            out
        } else {
            set([
                thaw(d.reverse(), wr.clone(), false),
                thaw(d2.reverse(), wr2.clone(), false),
            ])
        })
    };
    let v_thaw = |x: &Sig, y: &Sig| -> Option<Set> {
        if x.kind != Kind::Thaw {
            return None;
        }
        let (w, thawing) = thaw_parts(x)?;
        if thawing {
            return None;
        }
        let other = other_word(y, w)?;
        let (&d1, w1) = w.split_first()?;
        let (&d2, w2) = other.split_first()?;
        Some(set([
            thaw(d1, w1.to_vec(), false),
            thaw(d2, w2.to_vec(), false),
            y.clone(),
        ]))
    };
    type Rule<'r> = &'r dyn Fn(&Sig, &Sig) -> Option<Set>;
    let rules: [Rule; 4] = [&v_fire, &v_midpoint, &v_returned, &v_thaw];
    rules.iter().find_map(|r| r(a, b).or_else(|| r(b, a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeId;

    fn dir(e: u32, fwd: bool) -> Direction {
        Direction::new(EdgeId(e), fwd)
    }

    #[test]
    fn reflect_and_split() {
        let d = dir(0, true);
        assert_eq!(
            edge_pair(&boundary(), &divide(0, d, 3)),
            Some(set([reflected_divide(d.reverse()), boundary()]))
        );
        let out = edge_pair(&reflected_divide(d.reverse()), &divide(2, d, 3)).unwrap();
        let mut want = cascade(d, 2);
        want.insert(boundary());
        want.insert(reflected_divide(d.reverse()));
        assert_eq!(out, want);
        // Same direction: no collision rule.
        assert_eq!(edge_pair(&reflected_divide(d), &divide(2, d, 3)), None);
        assert_eq!(edge_pair(&reflected_divide(d), &boundary()), Some(set([fire()])));
        assert_eq!(edge_pair(&terminal(d), &boundary()), Some(set([fire()])));
    }

    #[test]
    fn first_midpoint() {
        let d = dir(0, true);
        let u = reflected_find(vec![], d, vec![], false);
        let v = slowed(d.reverse(), vec![], vec![], true);
        let out = edge_pair(&u, &v).unwrap();
        assert!(out.contains(&midpoint(vec![d.reverse()], vec![d])));
        assert!(out.contains(&freeze(d)) && out.contains(&freeze(d.reverse())));
        assert_eq!(out.len(), 5);
        let u = reflected_find(vec![], d, vec![], true);
        assert_eq!(edge_pair(&u, &v), Some(Set::new()));
    }

    #[test]
    fn midpoint_and_thaw_on_edge() {
        let (d, a, b) = (dir(0, true), dir(1, false), dir(2, true));
        let u = reflected_find(vec![a], d, vec![b], false);
        let v = slowed(d.reverse(), vec![a], vec![], true);
        let out = edge_pair(&u, &v).unwrap();
        assert!(out.contains(&midpoint(vec![d.reverse(), b], vec![d, a])));
        let u = reflected_find(vec![a], d, vec![b], true);
        assert_eq!(
            edge_pair(&u, &v),
            Some(set([thaw(d.reverse(), vec![b], false), thaw(d, vec![a], false)]))
        );
        let m = midpoint(vec![d.reverse()], vec![d]);
        assert_eq!(
            edge_pair(&thaw(d, vec![], false), &m),
            Some(set([thaw(d, vec![], true), thaw(d.reverse(), vec![], true), m.clone()]))
        );
        let m = midpoint(vec![d.reverse(), b], vec![d]);
        assert_eq!(
            edge_pair(&thaw(d, vec![], false), &m),
            Some(set([
                thaw(d, vec![], false),
                thaw(d.reverse(), vec![b], false),
                m.clone()
            ]))
        );
        assert_eq!(edge_pair(&thaw(d, vec![a], false), &m), None);
    }

    #[test]
    fn single_at_vertex() {
        let (a, b, c) = (dir(0, false), dir(1, true), dir(2, true));
        let e: BTreeSet<_> = [a, b, c].into();
        // Arriving from edge 0 means travelling in direction +e0.
        let incoming = a.reverse();
        let out = vertex_single(&e, 0, false, &divide(0, incoming, 2));
        assert_eq!(out, set([reflected_divide(a)]));
        assert_eq!(vertex_single(&e, 0, false, &reflected_divide(incoming)), set([fire()]));
        let out = vertex_single(&e, 0, false, &initiate(incoming, 2));
        assert_eq!(out.iter().filter(|s| s.kind == Kind::Initiate).count(), 2);
        assert_eq!(out.iter().filter(|s| s.kind == Kind::Find).count(), 3);
        assert_eq!(out.iter().filter(|s| matches!(s.kind, Kind::Divide(_))).count(), 6);
        let out = vertex_single(&e, 0, true, &find(vec![], incoming));
        assert!(out.contains(&reflected_find(vec![], a, vec![], false)));
        assert!(out.contains(&find(vec![a], b)) && out.contains(&find(vec![a], c)));
        let out = vertex_single(&e, 2, false, &reflected_find(vec![], incoming, vec![c], true));
        assert_eq!(
            out,
            set([slowed(b, vec![], vec![a, c], true), slowed(c, vec![], vec![a, c], true)])
        );
        let out = vertex_single(&e, 1, false, &reflected_find(vec![b], incoming, vec![], true));
        assert_eq!(out, set([reflected_find(vec![], b, vec![a], false)]));
        assert_eq!(vertex_single(&e, 0, false, &freeze(incoming)), Set::new());
        assert_eq!(vertex_single(&e, 0, false, &thaw(incoming, vec![], true)), Set::new());
        assert_eq!(
            vertex_single(&e, 0, false, &thaw(incoming, vec![c, b], false)),
            set([thaw(c, vec![b], false)])
        );
        assert_eq!(vertex_single(&e, 0, false, &boundary()), set([boundary()]));
    }

    #[test]
    fn pairs_at_vertex() {
        let (a, b, c) = (dir(0, false), dir(1, true), dir(2, true));
        let e: BTreeSet<_> = [a, b, c].into();
        let x = reflected_find(vec![], b.reverse(), vec![], true);
        let y = reflected_find(vec![], c.reverse(), vec![], true);
        assert_eq!(
            vertex_pair(&e, 3, &x, &y),
            Some(set([thaw(b, vec![], false), thaw(c, vec![], false)]))
        );
        let out = vertex_pair(&e, 2, &x, &y).unwrap();
        assert!(out.contains(&midpoint(vec![b], vec![c])));
        let travelling = reflected_find(vec![], b.reverse(), vec![a], true);
        assert_eq!(vertex_pair(&e, 3, &x, &travelling), None);
        let m = midpoint(vec![b], vec![c, a]);
        assert_eq!(
            vertex_pair(&e, 0, &thaw(a.reverse(), vec![b], false), &m),
            Some(set([thaw(b, vec![], false), thaw(c, vec![a], false), m.clone()]))
        );
    }
}
