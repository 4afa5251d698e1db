//! `dtr`: realize plane triangulations as Delaunay triangulations of integer
//! point sets, and check the results.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 verification failure or
//! unknown answer, 3 invalid input graph.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dtr_core::constraints::{build_const, build_constsqu, export_system, ExportFormat, InteriorScope};
use dtr_core::exact::RatPoint;
use dtr_core::graph::PlaneTriangulation;
use dtr_core::instance::{fan_triangulation, random_instance};
use dtr_core::io::{
    certificate_points, certificate_to_json, graph_to_json, parse_graph, parse_points, plot_svg, points_to_text,
};
use dtr_core::realizer::{certify, realize, RealizeConfig, RealizeStatus};
use serde::Serialize;

use config::FileConfig;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_FAILED: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "dtr", version, about = "Delaunay realization of plane triangulations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time budget in seconds for the numeric search (default 60).
    #[arg(long, global = true)]
    budget: Option<f64>,
    /// Write the main result here instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Print progress and search attempts to standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
    /// Require the hull to match the outer face in its given direction.
    #[arg(long, global = true)]
    no_reflection: bool,
    /// Which vertices the outer-edge side constraints range over.
    #[arg(long, global = true, value_enum)]
    interior_scope: Option<Scope>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct SolverFlags {
    /// Required slack of strict inequalities in the float search.
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Descent iterations per restart.
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    /// Number of restarts from fresh initial drawings.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// First step length tried by the line search.
    #[arg(long, global = true)]
    initial_step: Option<f64>,
    /// Scale of the random perturbation applied on restarts.
    #[arg(long, global = true)]
    jitter: Option<f64>,
    /// Factor applied to the margin the search aims for.
    #[arg(long, global = true)]
    overshoot: Option<f64>,
    /// Comma-separated rounding denominators, tried in order.
    #[arg(long, global = true, value_delimiter = ',')]
    denominators: Option<Vec<u64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    AllOthers,
    OffOuterFace,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Fan,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Const,
    Constsqu,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Smt2,
}

#[derive(Subcommand)]
enum Command {
    /// Search for integer points realizing a graph and certify them.
    Realize {
        graph: PathBuf,
        /// Start the search at these points instead of a Tutte drawing.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Write the stencil systems here as SMT-LIB2 when the answer is unknown.
        #[arg(long)]
        smt2_dir: Option<PathBuf>,
        /// Also draw the certified points as SVG.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Certify a points file or certificate against a graph.
    Verify {
        graph: PathBuf,
        /// Points text, or a certificate JSON written by `realize`.
        points: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Generate a test instance.
    Gen {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        /// Coordinate range [0, bound] for random points.
        #[arg(long, default_value_t = 1000)]
        bound: i64,
        /// Where the generating points go (random only; default `<output>.points`).
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Export the constraint system of a graph.
    Emit {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "const")]
        flavor: FlavorArg,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// Use face number N (1-based, in the order `check` lists them) as the outer face.
        #[arg(long)]
        face: Option<usize>,
    },
    /// Validate a graph file.
    Check { graph: PathBuf },
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_graph(path: &Path) -> anyhow::Result<PlaneTriangulation> {
    parse_graph(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Accepts either the points text format or a certificate.
fn load_points(path: &Path) -> anyhow::Result<Vec<RatPoint>> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        certificate_points(&text)
    } else {
        parse_points(&text)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn emit(global: &Global, text: &str) -> anyhow::Result<()> {
    match &global.output {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn realize_config(global: &Global) -> anyhow::Result<RealizeConfig> {
    let mut config = RealizeConfig::default();
    if let Some(path) = &global.config {
        FileConfig::load(path)?.apply(&mut config);
    }
    let s = &global.solver;
    let solver = &mut config.solver;
    if let Some(v) = global.seed {
        solver.seed = v;
    }
    if let Some(v) = global.budget {
        solver.time_budget_secs = v;
    }
    if s.margin.is_some() {
        solver.margin = s.margin;
    }
    if let Some(v) = s.max_iterations {
        solver.max_iterations = v;
    }
    if let Some(v) = s.restarts {
        solver.restarts = v;
    }
    if let Some(v) = s.initial_step {
        solver.initial_step = v;
    }
    if let Some(v) = s.jitter {
        solver.jitter = v;
    }
    if let Some(v) = s.overshoot {
        solver.overshoot = v;
    }
    if let Some(v) = &s.denominators {
        solver.denominators = v.clone();
    }
    if global.no_reflection {
        config.allow_reflection = false;
    }
    if let Some(scope) = global.interior_scope {
        config.interior_scope = match scope {
            Scope::AllOthers => InteriorScope::AllOthers,
            Scope::OffOuterFace => InteriorScope::OffOuterFace,
        };
    }
    if let Err(e) = config.solver.validate() {
        bail!("bad solver settings: {e}");
    }
    Ok(config)
}

fn cmd_realize(
    global: &Global,
    graph: &Path,
    warm_start: Option<&Path>,
    smt2_dir: Option<&Path>,
    plot: Option<&Path>,
) -> anyhow::Result<u8> {
    let g = load_graph(graph)?;
    let mut config = realize_config(global)?;
    if let Some(path) = warm_start {
        let pts = load_points(path)?;
        if pts.len() != g.n() {
            bail!("warm start has {} points, graph has {} vertices", pts.len(), g.n());
        }
        config.warm_start = Some(pts.iter().map(RatPoint::to_f64).collect());
    }
    if let Some(dir) = smt2_dir {
        config.smt2_dir = Some(dir.to_path_buf());
    }
    let result = realize(&g, &config);
    if global.verbose {
        for a in &result.diagnostics.attempts {
            eprintln!(
                "face {:?} restart {} {:?} iterations {} margin {:.3e} -> {}",
                a.outer_face, a.restart, a.solve_status, a.iterations, a.min_margin, a.stage
            );
        }
        eprintln!("elapsed {:.2}s", result.diagnostics.elapsed_secs);
    }
    match result.status {
        RealizeStatus::Realized => {
            let cert = result.certificate.expect("realized results carry a certificate");
            emit(global, &certificate_to_json(&cert))?;
            if let Some(path) = plot {
                write(path, &plot_svg(&g, &cert.rat_points()))?;
            }
            eprintln!("REALIZED");
            Ok(EXIT_OK)
        }
        RealizeStatus::Unknown => {
            emit(global, &json(&result.diagnostics))?;
            eprintln!("UNKNOWN");
            Ok(EXIT_FAILED)
        }
        RealizeStatus::InvalidInput => {
            let report = result.validation.expect("invalid results carry a report");
            emit(global, &json(&report))?;
            for v in &report.violations {
                eprintln!("{}", serde_json::to_string(&v.rule).unwrap_or_default().trim_matches('"'));
            }
            Ok(EXIT_INVALID)
        }
    }
}

fn cmd_verify(global: &Global, graph: &Path, points: &Path, plot: Option<&Path>) -> anyhow::Result<u8> {
    let g = load_graph(graph)?;
    let pts = load_points(points)?;
    if pts.len() != g.n() {
        bail!("{} has {} points, graph has {} vertices", points.display(), pts.len(), g.n());
    }
    let allow = realize_config(global)?.allow_reflection;
    if let Some(path) = plot {
        write(path, &plot_svg(&g, &pts))?;
    }
    match certify(&g, &pts, allow) {
        Ok(cert) => {
            let mut text = cert.transcript.join("\n");
            text.push_str("\nPASS\n");
            emit(global, &text)?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            emit(global, &format!("FAIL {}\n", e.code()))?;
            eprintln!("{}: {e}", e.code());
            Ok(EXIT_FAILED)
        }
    }
}

fn cmd_gen(global: &Global, kind: Kind, n: usize, bound: i64, points: Option<&Path>) -> anyhow::Result<u8> {
    match kind {
        Kind::Fan => {
            if n < 4 {
                bail!("fans need n >= 4");
            }
            emit(global, &graph_to_json(&fan_triangulation(n)))?;
        }
        Kind::Random => {
            let inst = random_instance(n, global.seed.unwrap_or(0), bound).map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))?;
            emit(global, &graph_to_json(&inst.graph))?;
            let path = points
                .map(Path::to_path_buf)
                .or_else(|| global.output.as_ref().map(|o| o.with_extension("points")));
            if let Some(path) = path {
                write(&path, &points_to_text(&inst.rat_points()))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_emit(global: &Global, graph: &Path, flavor: FlavorArg, format: FormatArg, face: Option<usize>) -> anyhow::Result<u8> {
    let mut g = load_graph(graph)?;
    if let Some(k) = face {
        let Some(f) = k.checked_sub(1).and_then(|k| g.faces().get(k)).cloned() else {
            bail!("FACE_NOT_FOUND: face {k} out of range 1..={}", g.faces().len());
        };
        g = g.reembed_with_outer_face(&f).map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))?;
    }
    let scope = realize_config(global)?.interior_scope;
    let system = match flavor {
        FlavorArg::Const => build_const(&g, scope),
        FlavorArg::Constsqu => build_constsqu(&g, scope),
    };
    let format = match format {
        FormatArg::Json => ExportFormat::Json,
        FormatArg::Smt2 => ExportFormat::Smt2,
    };
    emit(global, &export_system(&system, format))?;
    eprintln!("variables {} constraints {}", system.var_count(), system.len());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckReport {
    ok: bool,
    violations: Vec<dtr_core::graph::Violation>,
    /// 1-based face boundaries, numbered for `emit --face`.
    faces: Vec<Vec<usize>>,
}

fn cmd_check(global: &Global, graph: &Path) -> anyhow::Result<u8> {
    let g = load_graph(graph)?;
    let report = g.validate();
    let doc = CheckReport {
        ok: report.ok,
        faces: g.faces().iter().map(|f| f.iter().map(|v| v + 1).collect()).collect(),
        violations: report.violations,
    };
    emit(global, &json(&doc))?;
    Ok(if doc.ok { EXIT_OK } else { EXIT_INVALID })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let global = &cli.global;
    match &cli.command {
        Command::Realize { graph, warm_start, smt2_dir, plot } => {
            cmd_realize(global, graph, warm_start.as_deref(), smt2_dir.as_deref(), plot.as_deref())
        }
        Command::Verify { graph, points, plot } => cmd_verify(global, graph, points, plot.as_deref()),
        Command::Gen { kind, n, bound, points } => cmd_gen(global, *kind, *n, *bound, points.as_deref()),
        Command::Emit { graph, flavor, format, face } => cmd_emit(global, graph, *flavor, *format, *face),
        Command::Check { graph } => cmd_check(global, graph),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
