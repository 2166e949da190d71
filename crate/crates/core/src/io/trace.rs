//! JSON trace documents.
//!
//! A document embeds the canonical graph text, so it can be checked without the original graph
//! file. Times and offsets are `num/den` strings; reading a document back gives exactly the
//! batches that were written.

use super::graph_file::{format_graph, parse_graph, ParseError};
use crate::continuum::Point;
use crate::engine::{Configuration, EventBatch, EventEntry, StopReason, Trace};
use crate::fssp::{Datum, Kind, Sig};
use crate::graph::{EdgeId, Multigraph, VertexId};
use crate::rational::{serde_q, zero, Q};
use num::Signed;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use thiserror::Error;

/// Bumped whenever the machine's rules change observable behaviour.
pub const MACHINE_VERSION: &str = "fssp-1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    Json(#[from] serde_json::Error),
    #[error("embedded graph: {0}")]
    Graph(#[from] ParseError),
    #[error("graph digest {found} does not match header {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("general {0:?} is not a vertex of the embedded graph")]
    UnknownGeneral(String),
    #[error("point {0:?} is not on the embedded graph")]
    BadPoint(PointRecord),
    #[error("event times must be non-decreasing; {0} follows a later time")]
    TimeOrder(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRecord {
    Quiescent,
    Horizon,
}

impl From<StopReason> for StopRecord {
    fn from(s: StopReason) -> Self {
        match s {
            StopReason::Quiescent => StopRecord::Quiescent,
            StopReason::Horizon => StopRecord::Horizon,
        }
    }
}

impl From<StopRecord> for StopReason {
    fn from(s: StopRecord) -> Self {
        match s {
            StopRecord::Quiescent => StopReason::Quiescent,
            StopRecord::Horizon => StopReason::Horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRecord {
    Vertex {
        vertex: VertexId,
    },
    Edge {
        edge: EdgeId,
        #[serde(with = "serde_q")]
        offset: Q,
    },
}

impl From<&Point> for PointRecord {
    fn from(p: &Point) -> Self {
        match p {
            Point::Vertex(v) => PointRecord::Vertex { vertex: *v },
            Point::Edge { edge, offset } => PointRecord::Edge {
                edge: *edge,
                offset: offset.clone(),
            },
        }
    }
}

impl PointRecord {
    /// The canonical point; offsets must lie strictly inside the edge.
    pub fn to_point(&self, g: &Multigraph) -> Result<Point, TraceError> {
        let bad = || TraceError::BadPoint(self.clone());
        match self {
            PointRecord::Vertex { vertex } if g.has_vertex(*vertex) => Ok(Point::Vertex(*vertex)),
            PointRecord::Edge { edge, offset }
                if (edge.0 as usize) < g.edge_count() && offset.is_positive() && offset < g.weight(*edge) =>
            {
                Ok(Point::Edge {
                    edge: *edge,
                    offset: offset.clone(),
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub machine: String,
    pub graph_digest: String,
    pub general: String,
    pub depth: u8,
    pub stop: StopRecord,
    #[serde(with = "serde_q")]
    pub end_time: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    #[serde(with = "serde_q")]
    pub time: Q,
    pub point: PointRecord,
    pub consumed: Vec<Sig>,
    pub produced: Vec<Sig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedSignals {
    pub point: PointRecord,
    pub signals: Vec<Sig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub header: TraceHeader,
    pub graph: String,
    pub events: Vec<EventRecord>,
    pub final_configuration: Vec<PlacedSignals>,
}

pub fn graph_digest(canonical: &str) -> String {
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

impl TraceDocument {
    pub fn new(g: &Multigraph, general: VertexId, depth: u8, trace: &Trace<Kind, Datum>) -> Self {
        let graph = format_graph(g, general);
        let events = trace
            .batches
            .iter()
            .flat_map(|b| {
                b.entries.iter().map(move |e| EventRecord {
                    time: b.time.clone(),
                    point: (&e.point).into(),
                    consumed: e.consumed.iter().cloned().collect(),
                    produced: e.produced.iter().cloned().collect(),
                })
            })
            .collect();
        let final_configuration = trace
            .final_configuration
            .iter()
            .map(|(p, s)| PlacedSignals {
                point: p.into(),
                signals: s.iter().cloned().collect(),
            })
            .collect();
        TraceDocument {
            header: TraceHeader {
                machine: MACHINE_VERSION.into(),
                graph_digest: graph_digest(&graph),
                general: g.vertex_name(general).into(),
                depth,
                stop: trace.stop.into(),
                end_time: trace.end_time.clone(),
            },
            graph,
            events,
            final_configuration,
        }
    }

    /// The embedded graph and general, after checking the digest.
    pub fn graph(&self) -> Result<(Multigraph, VertexId), TraceError> {
        let found = graph_digest(&self.graph);
        if found != self.header.graph_digest {
            return Err(TraceError::DigestMismatch {
                expected: self.header.graph_digest.clone(),
                found,
            });
        }
        let (g, _) = parse_graph(&self.graph)?;
        let general = g
            .vertex_by_name(&self.header.general)
            .ok_or_else(|| TraceError::UnknownGeneral(self.header.general.clone()))?;
        Ok((g, general))
    }

    /// Rebuilds the engine trace, regrouping events by time.
    pub fn to_trace(&self) -> Result<Trace<Kind, Datum>, TraceError> {
        let (g, _) = self.graph()?;
        let mut batches: Vec<EventBatch<Kind, Datum>> = Vec::new();
        for r in &self.events {
            let entry = EventEntry {
                point: r.point.to_point(&g)?,
                consumed: r.consumed.iter().cloned().collect(),
                produced: r.produced.iter().cloned().collect(),
            };
            match batches.last_mut() {
                Some(b) if b.time == r.time => b.entries.push(entry),
                Some(b) if b.time > r.time => return Err(TraceError::TimeOrder(crate::rational::format(&r.time))),
                _ => batches.push(EventBatch {
                    time: r.time.clone(),
                    entries: vec![entry],
                }),
            }
        }
        let mut final_configuration = Configuration::new();
        for placed in &self.final_configuration {
            let p = placed.point.to_point(&g)?;
            final_configuration.extend(p, placed.signals.iter().cloned());
        }
        Ok(Trace {
            batches,
            stop: self.header.stop.into(),
            end_time: self.header.end_time.clone(),
            final_configuration,
        })
    }

    pub fn start_time(&self) -> Q {
        self.events.first().map(|e| e.time.clone()).unwrap_or_else(zero)
    }
}

pub fn write_trace<W: Write>(doc: &TraceDocument, w: W) -> Result<(), TraceError> {
    serde_json::to_writer_pretty(w, doc)?;
    Ok(())
}

pub fn read_trace<R: Read>(r: R) -> Result<TraceDocument, TraceError> {
    Ok(serde_json::from_reader(r)?)
}
