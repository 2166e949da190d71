//! Exact-arithmetic signal machines on weighted multigraphs.
//!
//! The crate is layered bottom-up:
//!
//! - [`graph`]: weighted undirected multigraphs, paths, distances, radius and diameter.
//! - [`continuum`]: points, directions and motion on the metric realisation of a graph.
//! - [`engine`]: a generic event-driven signal machine runtime.
//! - [`fssp`]: the firing mob synchronisation machine built on the engine.
//! - [`oracle`]: closed-form predictors used to check simulated traces.
//! - [`io`]: graph files, trace documents, SVG diagrams and the verification driver.
//!
//! All times and positions are [`Q`] values, arbitrary-precision rationals kept in lowest terms.

// Errors carry exact points and times and are built only on failure paths.
#![allow(clippy::result_large_err)]

pub mod continuum;
pub mod engine;
pub mod fssp;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod rational;

pub use rational::Q;
