//! Graph files, trace documents, diagrams and trace verification.

pub mod graph_file;
pub mod svg;
pub mod trace;
pub mod verify;

pub use graph_file::{format_graph, parse_graph, ParseError};
pub use svg::{render_svg, DiagramSpec, Stroke};
pub use trace::{read_trace, write_trace, TraceDocument, TraceError};
pub use verify::{verify, Report, Status};
