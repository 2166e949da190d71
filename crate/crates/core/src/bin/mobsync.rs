use clap::{Args, Parser, Subcommand};
use mobsync::continuum::Point;
use mobsync::engine::{run, EngineError, Limits};
use mobsync::fssp::{initial_configuration, simulate, Fssp};
use mobsync::graph::{Multigraph, Path, VertexId};
use mobsync::io::svg::{render_svg, DiagramSpec};
use mobsync::io::verify::fire_events;
use mobsync::io::{parse_graph, read_trace, verify, write_trace, TraceDocument};
use mobsync::oracle::{
    class_of, default_catalog, longest_midpoint, midpoint_time, path_midpoint, sync_time, virtual_tree,
};
use mobsync::rational::{format, parse, Q};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

const PASS: u8 = 0;
const VERIFY_FAILED: u8 = 1;
const USAGE: u8 = 2;
const LIMIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "mobsync",
    version,
    about = "Firing mob synchronisation on weighted multigraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Graph file.
    graph: String,
    /// Number of divide signal types.
    #[arg(long, default_value_t = 4)]
    depth: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the machine and optionally write the trace and a diagram.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Stop after this time; defaults to the predicted synchronisation time.
        #[arg(long, value_parser = parse_q)]
        horizon: Option<Q>,
        #[arg(long, default_value_t = Limits::default().max_events)]
        max_events: usize,
        #[arg(long)]
        trace: Option<String>,
        #[arg(long)]
        svg: Option<String>,
    },
    /// Print synchronisation time, longest midpoint and midpoint times.
    Oracle {
        graph: String,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<String>,
    },
    /// Simulate and check the trace against every oracle.
    Verify {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Draw a space-time diagram of a saved trace.
    Diagram {
        trace: String,
        /// Edge names; all edges when omitted.
        #[arg(long, num_args = 1..)]
        edges: Vec<String>,
        #[arg(long, value_parser = parse_q)]
        from: Option<Q>,
        #[arg(long, value_parser = parse_q)]
        to: Option<Q>,
        #[arg(long, default_value_t = DiagramSpec::default().scale)]
        scale: u32,
        #[arg(long)]
        svg: String,
    },
}

fn parse_q(s: &str) -> Result<Q, String> {
    parse(s).map_err(|e| e.to_string())
}

/// A failure carrying its exit status.
struct Failure(u8, String);

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure(USAGE, e.to_string())
}

fn load(path: &str) -> Result<(Multigraph, VertexId), Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?;
    parse_graph(&text).map_err(|e| usage(format!("{path}: {e}")))
}

fn write_file(path: &str, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| usage(format!("{path}: {e}")))
}

fn engine_failure(e: EngineError) -> Failure {
    Failure(LIMIT, e.to_string())
}

fn point_name(g: &Multigraph, p: &Point) -> String {
    match p {
        Point::Vertex(v) => g.vertex_name(*v).to_owned(),
        Point::Edge { edge, offset } => format!("{}@{}", g.edge_name(*edge), format(offset)),
    }
}

fn path_name(g: &Multigraph, p: &Path) -> String {
    let mut s = g.vertex_name(p.source()).to_owned();
    for (e, v) in p.steps() {
        let _ = write!(s, " -{}- {}", g.edge_name(*e), g.vertex_name(*v));
    }
    s
}

fn default_horizon(g: &Multigraph, general: VertexId) -> Result<Q, Failure> {
    virtual_tree(g, general).map(|vt| vt.sync_time()).map_err(usage)
}

fn oracle_report(g: &Multigraph, general: VertexId) -> Result<String, Failure> {
    let mut out = String::new();
    let _ = writeln!(out, "general: {}", g.vertex_name(general));
    let _ = writeln!(out, "sync_time: {}", format(&sync_time(g, general).map_err(usage)?));
    if !g.is_tree() {
        let _ = writeln!(out, "virtual_tree_sync_time: {}", format(&default_horizon(g, general)?));
    }
    match longest_midpoint(g, general) {
        Ok(lm) => {
            let _ = writeln!(out, "radius: {}", format(&lm.radius));
            let _ = writeln!(out, "diameter: {}", format(&lm.diameter));
            let _ = writeln!(
                out,
                "longest_midpoint: {} at {}",
                point_name(g, &lm.point),
                format(&lm.time)
            );
        }
        Err(e) => {
            let _ = writeln!(out, "longest_midpoint: none ({e})");
        }
    }
    let _ = writeln!(out, "midpoints:");
    let classes: BTreeSet<Path> = default_catalog(g).iter().map(class_of).collect();
    for p in classes {
        let w = p.weight(g).map_err(usage)?;
        let t = midpoint_time(g, general, &p).map_err(usage)?;
        let _ = writeln!(
            out,
            "  {}  weight {}  midpoint {}  time {}",
            path_name(g, &p),
            format(&w),
            point_name(g, &path_midpoint(g, &p)),
            format(&t)
        );
    }
    Ok(out)
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate {
            run: args,
            horizon,
            max_events,
            trace,
            svg,
        } => {
            let (g, general) = load(&args.graph)?;
            let horizon = match horizon {
                Some(h) => h,
                None => default_horizon(&g, general)?,
            };
            let limits = Limits {
                horizon: Some(horizon),
                max_events,
            };
            let config = initial_configuration(&g, general, args.depth);
            let t = run(&g, &Fssp::new(args.depth), &config, &limits).map_err(engine_failure)?;
            let fires = fire_events(&t.batches);
            println!("stop: {:?} at {}", t.stop, format(&t.end_time));
            println!("events: {}", t.batches.iter().map(|b| b.entries.len()).sum::<usize>());
            match fires.iter().map(|(t, _)| t).min() {
                Some(first) => println!("fire: {} points, first at {}", fires.len(), format(first)),
                None => println!("fire: none"),
            }
            if let Some(path) = trace {
                let mut bytes = Vec::new();
                write_trace(&TraceDocument::new(&g, general, args.depth, &t), &mut bytes).map_err(usage)?;
                write_file(&path, &bytes)?;
            }
            if let Some(path) = svg {
                write_file(&path, render_svg(&g, &t, &DiagramSpec::default()).as_bytes())?;
            }
            Ok(PASS)
        }
        Command::Oracle { graph, report } => {
            let (g, general) = load(&graph)?;
            let text = oracle_report(&g, general)?;
            print!("{text}");
            if let Some(path) = report {
                write_file(&path, text.as_bytes())?;
            }
            Ok(PASS)
        }
        Command::Verify { run } => {
            let (g, general) = load(&run.graph)?;
            let horizon = default_horizon(&g, general)?;
            let t = simulate(&g, general, &Fssp::new(run.depth), Some(horizon)).map_err(engine_failure)?;
            let report = verify(&g, general, &t);
            print!("{report}");
            Ok(if report.passed() { PASS } else { VERIFY_FAILED })
        }
        Command::Diagram {
            trace,
            edges,
            from,
            to,
            scale,
            svg,
        } => {
            let file = fs::File::open(&trace).map_err(|e| usage(format!("{trace}: {e}")))?;
            let doc = read_trace(std::io::BufReader::new(file)).map_err(usage)?;
            let (g, _) = doc.graph().map_err(usage)?;
            let t = doc.to_trace().map_err(usage)?;
            let edges = if edges.is_empty() {
                None
            } else {
                Some(
                    edges
                        .iter()
                        .map(|name| {
                            g.edge_by_name(name)
                                .ok_or_else(|| usage(format!("no edge named {name:?}")))
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                )
            };
            let spec = DiagramSpec {
                edges,
                from,
                to,
                scale,
                ..DiagramSpec::default()
            };
            write_file(&svg, render_svg(&g, &t, &spec).as_bytes())?;
            Ok(PASS)
        }
    }
}

fn main_with(args: impl IntoIterator<Item = String>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { USAGE } else { PASS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            eprintln!("mobsync: {message}");
            code
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(main_with(std::env::args()))
}
