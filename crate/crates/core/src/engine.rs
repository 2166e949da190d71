//! Generic event-driven signal machine runtime.
//!
//! A machine supplies kind speeds and two handlers, one for collisions inside edges and one for
//! events at vertices. The runtime advances the configuration from event to event with exact
//! rational times; all simultaneous events form one [`EventBatch`].
//!
//! Internally each edge is a *lane* of linear tracks `x(t) = x0 + v·(t - t0)`. A lane caches the
//! time of its next event (a track reaching an end, or two tracks from distinct positions
//! meeting); only lanes touched by an event are recomputed.

use crate::continuum::{dirs, Direction, Point, SemiDirection};
use crate::graph::{EdgeId, Multigraph, VertexId};
use crate::rational::{zero, Q};
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signal<K, U> {
    pub kind: K,
    pub dir: SemiDirection,
    pub datum: U,
}

impl<K, U> Signal<K, U> {
    pub fn new(kind: K, dir: SemiDirection, datum: U) -> Self {
        Signal { kind, dir, datum }
    }

    pub fn moving(kind: K, dir: Direction, datum: U) -> Self {
        Signal::new(kind, SemiDirection::Dir(dir), datum)
    }

    pub fn still(kind: K, datum: U) -> Self {
        Signal::new(kind, SemiDirection::Every, datum)
    }
}

pub type SignalSet<K, U> = BTreeSet<Signal<K, U>>;

/// A signal machine: kinds with speeds plus the two local transition functions.
pub trait Machine {
    type Kind: Clone + Ord + fmt::Debug;
    type Datum: Clone + Ord + fmt::Debug;

    fn speed(&self, kind: &Self::Kind) -> Q;

    /// Handles the signals meeting at one point inside an edge.
    fn on_edge(
        &self,
        signals: &SignalSet<Self::Kind, Self::Datum>,
    ) -> Result<SignalSet<Self::Kind, Self::Datum>, String>;

    /// Handles an event at a vertex whose outgoing directions are `dirs`.
    fn at_vertex(
        &self,
        dirs: &BTreeSet<Direction>,
        signals: &SignalSet<Self::Kind, Self::Datum>,
    ) -> Result<SignalSet<Self::Kind, Self::Datum>, String>;
}

pub type MachineSignal<M> = Signal<<M as Machine>::Kind, <M as Machine>::Datum>;
pub type MachineSet<M> = SignalSet<<M as Machine>::Kind, <M as Machine>::Datum>;
pub type MachineBatch<M> = EventBatch<<M as Machine>::Kind, <M as Machine>::Datum>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("drift by {requested} overshoots the next event at {next}")]
    OvershootsEvent { requested: Q, next: Q },
    #[error("handler emitted {signal} at {point}, which is not legal there")]
    HandlerDomainViolation { point: String, signal: String },
    #[error("events accumulate right after time {time}")]
    SingularityMinusOne { time: Q },
    #[error("event budget of {events} batches exhausted at time {time}")]
    EventBudgetExhausted { events: usize, time: Q },
    #[error("handler failed at {point}: {message}")]
    Handler { point: String, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
}

/// Sparse map from points to non-empty signal sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration<K: Ord, U: Ord> {
    points: BTreeMap<Point, SignalSet<K, U>>,
}

impl<K: Ord, U: Ord> Default for Configuration<K, U> {
    fn default() -> Self {
        Configuration {
            points: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone, U: Ord + Clone> Configuration<K, U> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, point: Point, signal: Signal<K, U>) {
        self.points.entry(point).or_default().insert(signal);
    }

    pub fn extend(&mut self, point: Point, signals: impl IntoIterator<Item = Signal<K, U>>) {
        for s in signals {
            self.insert(point.clone(), s);
        }
    }

    pub fn get(&self, point: &Point) -> Option<&SignalSet<K, U>> {
        self.points.get(point)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &SignalSet<K, U>)> {
        self.points.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn signal_count(&self) -> usize {
        self.points.values().map(BTreeSet::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventTime {
    At(Q),
    /// An event is due at the current instant, which the order-0 loop cannot handle.
    Zero,
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventEntry<K: Ord, U: Ord> {
    pub point: Point,
    pub consumed: SignalSet<K, U>,
    pub produced: SignalSet<K, U>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventBatch<K: Ord, U: Ord> {
    pub time: Q,
    /// Sorted by point.
    pub entries: Vec<EventEntry<K, U>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    pub horizon: Option<Q>,
    pub max_events: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            horizon: None,
            max_events: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Quiescent,
    /// The next event lies beyond the horizon.
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace<K: Ord, U: Ord> {
    pub batches: Vec<EventBatch<K, U>>,
    pub stop: StopReason,
    pub end_time: Q,
    pub final_configuration: Configuration<K, U>,
}

type MachineTrack<M> = Track<<M as Machine>::Kind, <M as Machine>::Datum>;

#[derive(Debug, Clone)]
struct Track<K, U> {
    signal: Signal<K, U>,
    x0: Q,
    t0: Q,
    vel: Q,
}

impl<K, U> Track<K, U> {
    fn at(&self, t: &Q) -> Q {
        if self.vel.is_zero() {
            self.x0.clone()
        } else {
            &self.x0 + &self.vel * (t - &self.t0)
        }
    }
}

#[derive(Debug, Clone)]
struct Lane<K, U> {
    tracks: Vec<Track<K, U>>,
    next: Option<Q>,
}

/// Stateful runner; the configuration-level functions below wrap it.
pub struct Simulator<'a, M: Machine> {
    g: &'a Multigraph,
    m: &'a M,
    now: Q,
    residents: BTreeMap<VertexId, MachineSet<M>>,
    lanes: Vec<Lane<M::Kind, M::Datum>>,
    queue: BTreeSet<(Q, EdgeId)>,
    batches: Vec<EventBatch<M::Kind, M::Datum>>,
}

impl<'a, M: Machine> Simulator<'a, M> {
    /// Loads `c` at time `now`. Moving signals at a vertex must be leaving it.
    pub fn new(g: &'a Multigraph, m: &'a M, c: &Configuration<M::Kind, M::Datum>, now: Q) -> Result<Self, EngineError> {
        let mut sim = Simulator {
            g,
            m,
            now,
            residents: BTreeMap::new(),
            lanes: g
                .edges()
                .map(|_| Lane {
                    tracks: Vec::new(),
                    next: None,
                })
                .collect(),
            queue: BTreeSet::new(),
            batches: Vec::new(),
        };
        let invalid = |p: &Point, s: &MachineSignal<M>, why: &str| {
            EngineError::InvalidConfiguration(format!("{s:?} at {p}: {why}"))
        };
        for (p, set) in c.iter() {
            for s in set {
                let speed = m.speed(&s.kind);
                match (p, s.dir) {
                    (Point::Vertex(v), SemiDirection::Every) if speed.is_zero() => {
                        sim.residents.entry(*v).or_default().insert(s.clone());
                    }
                    (Point::Vertex(v), SemiDirection::Dir(d)) if speed.is_positive() => {
                        if !dirs(g, p).contains(&d) {
                            return Err(invalid(p, s, "moving signal at a vertex must be leaving it"));
                        }
                        sim.depart(*v, s.clone(), d, speed);
                    }
                    (Point::Edge { edge, offset }, SemiDirection::Every) if speed.is_zero() => {
                        sim.lanes[edge.0 as usize].tracks.push(Track {
                            signal: s.clone(),
                            x0: offset.clone(),
                            t0: sim.now.clone(),
                            vel: zero(),
                        });
                    }
                    (Point::Edge { edge, offset }, SemiDirection::Dir(d)) if speed.is_positive() && d.edge == *edge => {
                        sim.lanes[edge.0 as usize].tracks.push(Track {
                            signal: s.clone(),
                            x0: offset.clone(),
                            t0: sim.now.clone(),
                            vel: speed * Q::from_integer(d.sign().into()),
                        });
                    }
                    _ => return Err(invalid(p, s, "speed and direction disagree")),
                }
            }
        }
        for e in g.edges() {
            sim.refresh(e);
        }
        Ok(sim)
    }

    pub fn now(&self) -> &Q {
        &self.now
    }

    pub fn batches(&self) -> &[EventBatch<M::Kind, M::Datum>] {
        &self.batches
    }

    pub fn into_batches(self) -> Vec<EventBatch<M::Kind, M::Datum>> {
        self.batches
    }

    /// Absolute time of the next event, if any.
    pub fn next_event(&self) -> Option<&Q> {
        self.queue.first().map(|(t, _)| t)
    }

    fn depart(&mut self, v: VertexId, signal: MachineSignal<M>, d: Direction, speed: Q) {
        let x0 = if self.g.endpoints(d.edge).0 == v {
            zero()
        } else {
            self.g.weight(d.edge).clone()
        };
        self.lanes[d.edge.0 as usize].tracks.push(Track {
            signal,
            x0,
            t0: self.now.clone(),
            vel: speed * Q::from_integer(d.sign().into()),
        });
    }

    /// Recomputes the cached next event time of lane `e` from the current time.
    fn refresh(&mut self, e: EdgeId) {
        let lane = &mut self.lanes[e.0 as usize];
        if let Some(old) = lane.next.take() {
            self.queue.remove(&(old, e));
        }
        let w = self.g.weight(e);
        let now = &self.now;
        let mut best: Option<Q> = None;
        let mut consider = |t: Q| {
            if best.as_ref().is_none_or(|b| &t < b) {
                best = Some(t);
            }
        };
        let mut pv: Vec<(Q, Q)> = lane.tracks.iter().map(|t| (t.at(now), t.vel.clone())).collect();
        for (x, v) in &pv {
            if v.is_positive() {
                consider(now + (w - x) / v);
            } else if v.is_negative() {
                consider(now + x / -v);
            }
        }
        // The first meeting involves neighbours in (position, velocity) order; tracks sharing a
        // position diverge or travel together, so only adjacent distinct positions matter.
        pv.sort();
        let mut i = 0;
        let mut prev: Option<(Q, Q)> = None; // (position, fastest velocity) of previous group
        while i < pv.len() {
            let x = pv[i].0.clone();
            let mut j = i;
            while j < pv.len() && pv[j].0 == x {
                j += 1;
            }
            let slowest = &pv[i].1;
            if let Some((px, pfast)) = &prev {
                if pfast > slowest {
                    consider(now + (&x - px) / (pfast - slowest));
                }
            }
            prev = Some((x, pv[j - 1].1.clone()));
            i = j;
        }
        if let Some(t) = &best {
            self.queue.insert((t.clone(), e));
        }
        lane.next = best;
    }

    /// Handles the next batch of events unless it lies beyond `horizon`.
    /// Returns `Ok(None)` when there is nothing (more) to do.
    pub fn step(&mut self, horizon: Option<&Q>) -> Result<Option<&MachineBatch<M>>, EngineError> {
        let t = match self.queue.first() {
            None => return Ok(None),
            Some((t, _)) => t.clone(),
        };
        if t <= self.now {
            return Err(EngineError::SingularityMinusOne { time: self.now.clone() });
        }
        if horizon.is_some_and(|h| &t > h) {
            return Ok(None);
        }
        let due: Vec<EdgeId> = self
            .queue
            .iter()
            .take_while(|(u, _)| *u == t)
            .map(|(_, e)| *e)
            .collect();

        let mut arrivals: BTreeMap<VertexId, MachineSet<M>> = BTreeMap::new();
        let mut interior: Vec<(EdgeId, Q, MachineSet<M>)> = Vec::new();
        for &e in &due {
            let w = self.g.weight(e).clone();
            let lane = &mut self.lanes[e.0 as usize];
            let tracks = std::mem::take(&mut lane.tracks);
            let mut groups: BTreeMap<Q, Vec<MachineTrack<M>>> = BTreeMap::new();
            for tr in tracks {
                let x = tr.at(&t);
                if !tr.vel.is_zero() && (x.is_zero() || x == w) {
                    let v = if x.is_zero() {
                        self.g.endpoints(e).0
                    } else {
                        self.g.endpoints(e).1
                    };
                    arrivals.entry(v).or_default().insert(tr.signal);
                } else {
                    groups.entry(x).or_default().push(tr);
                }
            }
            for (x, group) in groups {
                let before: BTreeSet<Q> = group.iter().map(|tr| tr.at(&self.now)).collect();
                if before.len() >= 2 {
                    let set = group.into_iter().map(|tr| tr.signal).collect();
                    interior.push((e, x, set));
                } else {
                    lane.tracks.extend(group);
                }
            }
        }

        self.now = t.clone();
        let mut entries = Vec::new();
        let mut touched: BTreeSet<EdgeId> = due.iter().copied().collect();

        for (e, x, consumed) in interior {
            let point = Point::Edge {
                edge: e,
                offset: x.clone(),
            };
            let produced = self.m.on_edge(&consumed).map_err(|message| EngineError::Handler {
                point: point.to_string(),
                message,
            })?;
            for s in &produced {
                let speed = self.m.speed(&s.kind);
                let vel = match s.dir {
                    SemiDirection::Every if speed.is_zero() => zero(),
                    SemiDirection::Dir(d) if speed.is_positive() && d.edge == e => {
                        speed * Q::from_integer(d.sign().into())
                    }
                    _ => {
                        return Err(EngineError::HandlerDomainViolation {
                            point: point.to_string(),
                            signal: format!("{s:?}"),
                        })
                    }
                };
                self.lanes[e.0 as usize].tracks.push(Track {
                    signal: s.clone(),
                    x0: x.clone(),
                    t0: t.clone(),
                    vel,
                });
            }
            entries.push(EventEntry {
                point,
                consumed,
                produced,
            });
        }

        for (v, arrived) in arrivals {
            let point = Point::Vertex(v);
            let mut consumed = self.residents.remove(&v).unwrap_or_default();
            consumed.extend(arrived);
            let ds = dirs(self.g, &point);
            let produced = self
                .m
                .at_vertex(&ds, &consumed)
                .map_err(|message| EngineError::Handler {
                    point: point.to_string(),
                    message,
                })?;
            for s in &produced {
                let speed = self.m.speed(&s.kind);
                match s.dir {
                    SemiDirection::Every if speed.is_zero() => {
                        self.residents.entry(v).or_default().insert(s.clone());
                    }
                    SemiDirection::Dir(d) if speed.is_positive() && ds.contains(&d) => {
                        self.depart(v, s.clone(), d, speed);
                        touched.insert(d.edge);
                    }
                    _ => {
                        return Err(EngineError::HandlerDomainViolation {
                            point: point.to_string(),
                            signal: format!("{s:?}"),
                        })
                    }
                }
            }
            entries.push(EventEntry {
                point,
                consumed,
                produced,
            });
        }

        for e in touched {
            self.refresh(e);
        }
        entries.sort_by(|a, b| a.point.cmp(&b.point));
        self.batches.push(EventBatch { time: t, entries });
        Ok(self.batches.last())
    }

    /// Steps until quiescence, the horizon, or the batch budget.
    pub fn run(&mut self, limits: &Limits) -> Result<StopReason, EngineError> {
        loop {
            let horizon = limits.horizon.as_ref();
            let pending = match self.next_event() {
                None => return Ok(StopReason::Quiescent),
                Some(t) => horizon.is_none_or(|h| t <= h),
            };
            if !pending {
                return Ok(StopReason::Horizon);
            }
            if self.batches.len() >= limits.max_events {
                return Err(EngineError::EventBudgetExhausted {
                    events: self.batches.len(),
                    time: self.now.clone(),
                });
            }
            self.step(horizon)?;
        }
    }

    /// Snapshot at the current time. Signals that just left a vertex sit at that vertex.
    pub fn configuration(&self) -> Configuration<M::Kind, M::Datum> {
        self.configuration_at(&self.now)
    }

    fn configuration_at(&self, t: &Q) -> Configuration<M::Kind, M::Datum> {
        let mut c = Configuration::new();
        for (v, set) in &self.residents {
            c.extend(Point::Vertex(*v), set.iter().cloned());
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            let e = EdgeId(i as u32);
            for tr in &lane.tracks {
                c.insert(Point::on_edge(self.g, e, tr.at(t)), tr.signal.clone());
            }
        }
        c
    }
}

fn has_pending_arrival<M: Machine>(g: &Multigraph, m: &M, c: &Configuration<M::Kind, M::Datum>) -> bool {
    c.iter().any(|(p, set)| {
        p.is_vertex()
            && set.iter().any(|s| match s.dir {
                SemiDirection::Dir(d) => m.speed(&s.kind).is_positive() && dirs(g, p).contains(&d.reverse()),
                SemiDirection::Every => false,
            })
    })
}

/// Time until the next event of `c`, measured from the configuration's own instant.
pub fn next_event_time<M: Machine>(
    g: &Multigraph,
    m: &M,
    c: &Configuration<M::Kind, M::Datum>,
) -> Result<EventTime, EngineError> {
    if has_pending_arrival(g, m, c) {
        return Ok(EventTime::Zero);
    }
    let sim = Simulator::new(g, m, c, zero())?;
    Ok(match sim.next_event() {
        Some(t) => EventTime::At(t.clone()),
        None => EventTime::Infinity,
    })
}

/// Moves every signal for time `t` ignoring collisions. Arrivals land on the vertex with their
/// incoming direction.
pub fn drift<M: Machine>(
    g: &Multigraph,
    m: &M,
    c: &Configuration<M::Kind, M::Datum>,
    t: &Q,
) -> Result<Configuration<M::Kind, M::Datum>, EngineError> {
    assert!(!t.is_negative(), "drift time must be non-negative");
    if t.is_zero() {
        return Ok(c.clone());
    }
    match next_event_time(g, m, c)? {
        EventTime::Zero => {
            return Err(EngineError::OvershootsEvent {
                requested: t.clone(),
                next: zero(),
            })
        }
        EventTime::At(next) if t > &next => {
            return Err(EngineError::OvershootsEvent {
                requested: t.clone(),
                next,
            })
        }
        _ => {}
    }
    let sim = Simulator::new(g, m, c, zero())?;
    let mut out = Configuration::new();
    for (v, set) in &sim.residents {
        out.extend(Point::Vertex(*v), set.iter().cloned());
    }
    for (i, lane) in sim.lanes.iter().enumerate() {
        let e = EdgeId(i as u32);
        for tr in &lane.tracks {
            out.insert(Point::on_edge(g, e, tr.at(t)), tr.signal.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome<K: Ord, U: Ord> {
    Quiescent,
    /// The batch time is relative to the input configuration.
    Event(Configuration<K, U>, EventBatch<K, U>),
}

pub fn step<M: Machine>(
    g: &Multigraph,
    m: &M,
    c: &Configuration<M::Kind, M::Datum>,
) -> Result<StepOutcome<M::Kind, M::Datum>, EngineError> {
    if has_pending_arrival(g, m, c) {
        return Err(EngineError::SingularityMinusOne { time: zero() });
    }
    let mut sim = Simulator::new(g, m, c, zero())?;
    match sim.step(None)? {
        None => Ok(StepOutcome::Quiescent),
        Some(_) => {
            let batch = sim.batches.pop().expect("batch just recorded");
            Ok(StepOutcome::Event(sim.configuration(), batch))
        }
    }
}

pub fn run<M: Machine>(
    g: &Multigraph,
    m: &M,
    c: &Configuration<M::Kind, M::Datum>,
    limits: &Limits,
) -> Result<Trace<M::Kind, M::Datum>, EngineError> {
    if has_pending_arrival(g, m, c) {
        return Err(EngineError::SingularityMinusOne { time: zero() });
    }
    let mut sim = Simulator::new(g, m, c, zero())?;
    let stop = sim.run(limits)?;
    let final_configuration = sim.configuration();
    Ok(Trace {
        end_time: sim.now.clone(),
        batches: sim.batches,
        stop,
        final_configuration,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use std::cell::RefCell;

    /// Kinds are speeds in thirds; collisions pass through, vertices spread movers.
    #[derive(Default)]
    pub(crate) struct Ghosts {
        pub calls: RefCell<Vec<usize>>,
    }

    impl Machine for Ghosts {
        type Kind = u8;
        type Datum = u8;

        fn speed(&self, kind: &u8) -> Q {
            frac(*kind as i64, 3)
        }

        fn on_edge(&self, s: &SignalSet<u8, u8>) -> Result<SignalSet<u8, u8>, String> {
            self.calls.borrow_mut().push(s.len());
            Ok(s.clone())
        }

        fn at_vertex(&self, ds: &BTreeSet<Direction>, s: &SignalSet<u8, u8>) -> Result<SignalSet<u8, u8>, String> {
            let mut out = BTreeSet::new();
            for x in s {
                match x.dir {
                    SemiDirection::Every => {
                        out.insert(x.clone());
                    }
                    SemiDirection::Dir(d) => {
                        for &e in ds {
                            if e != d.reverse() {
                                out.insert(Signal::moving(x.kind, e, x.datum));
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
    }

    pub(crate) fn segment(len: Q) -> Multigraph {
        let mut g = Multigraph::new();
        let a = g.add_vertex("a").unwrap();
        let b = g.add_vertex("b").unwrap();
        g.add_edge("e", a, b, len).unwrap();
        g
    }

    fn at(g: &Multigraph, x: Q) -> Point {
        Point::on_edge(g, EdgeId(0), x)
    }

    const FWD: Direction = Direction {
        edge: EdgeId(0),
        forward: true,
    };

    #[test]
    fn next_event_examples() {
        let g = segment(int(4));
        let m = Ghosts::default();
        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::still(0, 0));
        assert_eq!(next_event_time(&g, &m, &c).unwrap(), EventTime::Infinity);

        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::moving(3, FWD, 0));
        c.insert(at(&g, int(3)), Signal::moving(3, FWD.reverse(), 0));
        assert_eq!(next_event_time(&g, &m, &c).unwrap(), EventTime::At(int(1)));

        let mut c = Configuration::new();
        c.insert(at(&g, frac(5, 2)), Signal::moving(3, FWD, 0));
        assert_eq!(next_event_time(&g, &m, &c).unwrap(), EventTime::At(frac(3, 2)));
    }

    #[test]
    fn drift_examples() {
        let g = segment(int(4));
        let m = Ghosts::default();
        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::moving(1, FWD, 0));
        c.insert(at(&g, int(2)), Signal::still(0, 0));
        assert_eq!(drift(&g, &m, &c, &int(0)).unwrap(), c);
        let moved = drift(&g, &m, &c, &int(3)).unwrap();
        assert!(moved.get(&at(&g, int(2))).unwrap().len() == 2);
        assert!(matches!(
            drift(&g, &m, &c, &int(4)),
            Err(EngineError::OvershootsEvent { .. })
        ));
        let a = drift(&g, &m, &drift(&g, &m, &c, &int(1)).unwrap(), &int(2)).unwrap();
        assert_eq!(a, moved);
    }

    #[test]
    fn drift_lands_on_vertex_with_incoming_direction() {
        let g = segment(int(1));
        let m = Ghosts::default();
        let mut c = Configuration::new();
        c.insert(at(&g, frac(1, 2)), Signal::moving(3, FWD, 0));
        let d = drift(&g, &m, &c, &frac(1, 2)).unwrap();
        let set = d.get(&Point::Vertex(VertexId(1))).unwrap();
        assert_eq!(set.first().unwrap().dir, SemiDirection::Dir(FWD));
        assert_eq!(next_event_time(&g, &m, &d).unwrap(), EventTime::Zero);
        assert!(matches!(step(&g, &m, &d), Err(EngineError::SingularityMinusOne { .. })));
    }

    #[test]
    fn step_examples() {
        let g = segment(int(4));
        let m = Ghosts::default();
        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::still(0, 0));
        assert_eq!(step(&g, &m, &c).unwrap(), StepOutcome::Quiescent);

        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::moving(3, FWD, 0));
        c.insert(at(&g, int(3)), Signal::moving(3, FWD.reverse(), 0));
        match step(&g, &m, &c).unwrap() {
            StepOutcome::Event(_, batch) => {
                assert_eq!(batch.time, int(1));
                assert_eq!(batch.entries.len(), 1);
                assert_eq!(batch.entries[0].point, at(&g, int(2)));
            }
            other => panic!("{other:?}"),
        }

        let m = Ghosts::default();
        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::moving(3, FWD, 0));
        c.insert(at(&g, int(2)), Signal::still(0, 0));
        c.insert(at(&g, int(3)), Signal::moving(3, FWD.reverse(), 0));
        step(&g, &m, &c).unwrap();
        assert_eq!(*m.calls.borrow(), vec![3]);
    }

    #[test]
    fn companions_do_not_collide() {
        let g = segment(int(4));
        let m = Ghosts::default();
        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::moving(3, FWD, 0));
        c.insert(at(&g, int(1)), Signal::moving(3, FWD, 1));
        c.insert(at(&g, int(1)), Signal::moving(1, FWD, 2));
        let t = run(&g, &m, &c, &Limits::default()).unwrap();
        // Only the arrivals at the far end, the fast pair together, then the slow one.
        assert_eq!(t.batches.len(), 2);
        assert!(m.calls.borrow().is_empty());
        assert_eq!(t.stop, StopReason::Quiescent);
    }

    #[test]
    fn run_examples() {
        let g = segment(int(4));
        let m = Ghosts::default();
        let t = run(&g, &m, &Configuration::new(), &Limits::default()).unwrap();
        assert!(t.batches.is_empty());
        assert_eq!(t.stop, StopReason::Quiescent);

        let mut c = Configuration::new();
        c.insert(Point::Vertex(VertexId(0)), Signal::moving(3, FWD, 0));
        c.insert(at(&g, int(3)), Signal::moving(1, FWD.reverse(), 0));
        let a = run(&g, &m, &c, &Limits::default()).unwrap();
        let b = run(&g, &m, &c, &Limits::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.batches.windows(2).all(|w| w[0].time < w[1].time));

        let limits = Limits {
            horizon: None,
            max_events: 1,
        };
        assert!(matches!(
            run(&g, &m, &c, &limits),
            Err(EngineError::EventBudgetExhausted { .. })
        ));
        let limits = Limits {
            horizon: Some(int(2)),
            max_events: 10,
        };
        let h = run(&g, &m, &c, &limits).unwrap();
        assert_eq!(h.stop, StopReason::Horizon);
        assert!(h.batches.iter().all(|b| b.time <= int(2)));
    }

    #[test]
    fn rejects_bad_configurations() {
        let g = segment(int(4));
        let m = Ghosts::default();
        let mut c = Configuration::new();
        c.insert(at(&g, int(1)), Signal::still(3, 0));
        assert!(matches!(
            Simulator::new(&g, &m, &c, zero()),
            Err(EngineError::InvalidConfiguration(_))
        ));
    }

    struct Bad;
    impl Machine for Bad {
        type Kind = u8;
        type Datum = ();
        fn speed(&self, k: &u8) -> Q {
            int(*k as i64)
        }
        fn on_edge(&self, _: &SignalSet<u8, ()>) -> Result<SignalSet<u8, ()>, String> {
            Ok(BTreeSet::new())
        }
        fn at_vertex(&self, _: &BTreeSet<Direction>, _: &SignalSet<u8, ()>) -> Result<SignalSet<u8, ()>, String> {
            // Points back along the edge it came from, which is not a direction leaving the far end.
            Ok([Signal::moving(1, FWD, ())].into())
        }
    }

    #[test]
    fn handler_domain_is_checked() {
        let g = segment(int(1));
        let mut c = Configuration::new();
        c.insert(Point::Vertex(VertexId(0)), Signal::moving(1, FWD, ()));
        assert!(matches!(
            run(&g, &Bad, &c, &Limits::default()),
            Err(EngineError::HandlerDomainViolation { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn rational(max: i64) -> impl Strategy<Value = Q> {
            (1..max, 1..12i64).prop_map(|(n, d)| frac(n, d))
        }

        type Scenario = (Q, Vec<(Q, u8, bool)>, (u32, u32), u32);

        /// A segment with signals at distinct interior points, plus a split of a legal drift.
        fn scenario() -> impl Strategy<Value = Scenario> {
            let signals = prop::collection::btree_map(1..48i64, (0..4u8, any::<bool>()), 1..6);
            (rational(6), signals, (1..=64u32, 0..=64u32), 0..=64u32).prop_map(|(len, sigs, total, cut)| {
                let placed = sigs
                    .into_iter()
                    .map(|(k, (kind, fwd))| (&len * frac(k, 48), kind, fwd))
                    .collect();
                (len, placed, total, cut)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn drift_is_additive((len, placed, (num, den), cut) in scenario()) {
                let g = segment(len);
                let m = Ghosts::default();
                let mut c = Configuration::new();
                for (x, kind, fwd) in placed {
                    let d = if fwd { FWD } else { FWD.reverse() };
                    let s = if kind == 0 { Signal::still(0, 0) } else { Signal::moving(kind, d, 0) };
                    c.insert(at(&g, x), s);
                }
                let cap = match next_event_time(&g, &m, &c).unwrap() {
                    EventTime::At(t) => t,
                    EventTime::Infinity => int(5),
                    EventTime::Zero => unreachable!("signals start at distinct points"),
                };
                let total = if den == 0 { cap.clone() } else { &cap * frac(num.min(den).into(), den.max(1).into()) };
                let first = &total * frac(cut.into(), 64);
                let second = &total - &first;
                let whole = drift(&g, &m, &c, &total).unwrap();
                let halves = drift(&g, &m, &drift(&g, &m, &c, &first).unwrap(), &second).unwrap();
                prop_assert_eq!(whole, halves);
            }
        }
    }
}
