//! Command line front end for the conformal transform toolkit.
//!
//! Four subcommands: `inspect` prints the geometric data of a scenario at
//! chosen support elements, `check` runs the verification battery, `geodesic`
//! integrates geodesics of the base or transformed metric, and `catalog`
//! lists the built-in geometries. Exit code 0 means every check passed or
//! was skipped, 1 means at least one check failed, 2 means the invocation
//! or configuration was unusable.

mod config;
mod output;

use std::collections::BTreeMap;
use std::process::ExitCode;

use berwald::catalog;
use berwald::conformal::{ConformalDiagnostics, FactorKind};
use berwald::geodesic::{trace, GeodesicConfig, TraceResult};
use berwald::geometry::{BerwaldFrame, MetricAtPoint, SprayAtPoint, SurfaceJets};
use berwald::jet::{Jet, JetVars};
use berwald::report::CheckReport;
use berwald::{GeometryError, SupportElement};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use config::{Format, PointSource, RunArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "berwald",
    version,
    about = "Evaluate conic pseudo-Finsler surface geometry, apply anisotropic \
             conformal transforms, and verify the transformation laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print metric, frame, spray, and transform data at support elements.
    Inspect(InspectCmd),
    /// Run verification checks; exits with 1 when any check fails.
    Check(CheckCmd),
    /// Integrate geodesics of the base or transformed metric.
    Geodesic(GeodesicCmd),
    /// List the built-in metrics, conformal factors, and scenarios.
    Catalog,
}

#[derive(Args)]
struct InspectCmd {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CheckCmd {
    #[command(flatten)]
    run: RunArgs,

    /// Check to run (repeatable; defaults to the full battery).
    #[arg(long = "check", value_name = "NAME")]
    checks: Vec<String>,
}

#[derive(Args)]
struct GeodesicCmd {
    #[command(flatten)]
    run: RunArgs,

    /// Integration step size.
    #[arg(long, value_name = "SECONDS")]
    dt: Option<f64>,

    /// Number of integration steps.
    #[arg(long, value_name = "N")]
    steps: Option<usize>,

    /// Trace the transformed metric instead of the base metric.
    #[arg(long)]
    transformed: bool,

    /// Stop a trace once |x| reaches this radius.
    #[arg(long, value_name = "RADIUS")]
    bound: Option<f64>,
}

fn main() -> ExitCode {
    let args = expand_tolerance_args(std::env::args());
    let cli = Cli::parse_from(args);
    let outcome = match &cli.command {
        Command::Inspect(cmd) => run_inspect(cmd),
        Command::Check(cmd) => run_check(cmd),
        Command::Geodesic(cmd) => run_geodesic(cmd),
        Command::Catalog => run_catalog(),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("berwald: {message}");
            ExitCode::from(2)
        }
    }
}

/// Rewrites `--tol.NAME=VALUE` and `--tol.NAME VALUE` into the `--tol
/// NAME=VALUE` form the argument parser understands. Everything else passes
/// through untouched.
fn expand_tolerance_args(args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut args = args.peekable();
    while let Some(arg) = args.next() {
        let Some(rest) = arg.strip_prefix("--tol.") else {
            out.push(arg);
            continue;
        };
        out.push("--tol".to_string());
        if rest.contains('=') {
            out.push(rest.to_string());
        } else if let Some(value) = args.next() {
            out.push(format!("{rest}={value}"));
        } else {
            // Missing value; pass the bare name through so the tolerance
            // parser reports it.
            out.push(rest.to_string());
        }
    }
    out
}

/// Resolves the point source into concrete support elements.
fn materialize_points(cfg: &RunConfig) -> Vec<SupportElement> {
    match &cfg.points {
        PointSource::Explicit(points) => points.clone(),
        PointSource::Sampled { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*count).map(|_| cfg.scenario.sample(&mut rng)).collect()
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum PointsHeader {
    Sampled {
        rng: &'static str,
        seed: u64,
        count: usize,
    },
    Explicit {
        explicit: usize,
    },
}

/// Run metadata echoed at the top of every structured output so a result
/// file is reproducible from its own header.
#[derive(Serialize)]
struct RunHeader<'a> {
    scenario: &'a str,
    metric: &'a str,
    factor: &'a str,
    order: usize,
    points: PointsHeader,
}

fn run_header(cfg: &RunConfig) -> RunHeader<'_> {
    RunHeader {
        scenario: cfg.scenario.name,
        metric: cfg.scenario.metric.name,
        factor: cfg.scenario.factor.name,
        order: cfg.order,
        points: match &cfg.points {
            PointSource::Sampled { seed, count } => PointsHeader::Sampled {
                rng: config::RNG_NAME,
                seed: *seed,
                count: *count,
            },
            PointSource::Explicit(points) => PointsHeader::Explicit {
                explicit: points.len(),
            },
        },
    }
}

#[derive(Serialize)]
struct Summary {
    passed: usize,
    failed: usize,
    skipped: usize,
}

fn summarize(reports: &[CheckReport]) -> Summary {
    Summary {
        passed: reports.iter().filter(|r| r.passed()).count(),
        failed: reports.iter().filter(|r| r.failed()).count(),
        skipped: reports.iter().filter(|r| r.skipped()).count(),
    }
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    command: &'static str,
    run: RunHeader<'a>,
    tolerances: &'a BTreeMap<String, f64>,
    checks: &'a [String],
    reports: &'a [CheckReport],
    summary: Summary,
}

fn run_check(cmd: &CheckCmd) -> Result<u8, String> {
    let cfg = config::resolve(&cmd.run, &cmd.checks)?;
    let points = materialize_points(&cfg);
    let mut reports = Vec::new();
    for u in &points {
        match cfg.scenario.analyze(u, cfg.order) {
            Ok(analysis) => {
                for name in &cfg.checks {
                    let tol = cfg.tolerances[name.as_str()];
                    if let Some(report) = analysis.run_check(name, tol) {
                        reports.push(report);
                    }
                }
            }
            Err(err) => {
                for name in &cfg.checks {
                    reports.push(
                        CheckReport::new(name, *u).skip(format!("construction failed: {err}")),
                    );
                }
            }
        }
    }
    let text = match cfg.format {
        Format::Json => output::to_canonical_json(&CheckOutput {
            command: "check",
            run: run_header(&cfg),
            tolerances: &cfg.tolerances,
            checks: &cfg.checks,
            reports: &reports,
            summary: summarize(&reports),
        }),
        Format::Csv => output::check_csv(&reports),
        Format::Table => {
            let mut table = output::check_table(&reports);
            table.push_str(&output::summary_line(&reports));
            table
        }
    };
    output::emit(cfg.output.as_ref(), &text)?;
    Ok(if reports.iter().any(|r| r.failed()) {
        1
    } else {
        0
    })
}

/// Point evaluation of one metric: the tensors and the frame and spray data.
#[derive(Serialize)]
struct GeometryBlock {
    metric: MetricAtPoint,
    frame: BerwaldFrame,
    spray: SprayAtPoint,
}

fn geometry_block(jets: &SurfaceJets) -> GeometryBlock {
    GeometryBlock {
        metric: jets.metric_at(),
        frame: jets.frame_at(),
        spray: jets.spray_at(),
    }
}

#[derive(Serialize)]
struct InspectEntry {
    point: SupportElement,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<ConformalDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base: Option<GeometryBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transformed: Option<GeometryBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform_error: Option<String>,
}

#[derive(Serialize)]
struct InspectOutput<'a> {
    command: &'static str,
    run: RunHeader<'a>,
    points: &'a [InspectEntry],
}

fn inspect_point(cfg: &RunConfig, u: &SupportElement) -> (InspectEntry, output::InspectRow) {
    let mut row = output::InspectRow {
        x1: u.x[0],
        x2: u.x[1],
        y1: u.y[0],
        y2: u.y[1],
        f: None,
        det_g: None,
        eps: None,
        main_scalar: None,
        hamel: None,
        phi: None,
        phi_v2: None,
        sigma: None,
        rho: None,
        p: None,
        q: None,
        f_bar: None,
        det_g_bar: None,
        main_scalar_bar: None,
        status: String::new(),
    };
    let analysis = match cfg.scenario.analyze(u, cfg.order) {
        Ok(analysis) => analysis,
        Err(err) => {
            row.status = format!("construction failed: {err}");
            let entry = InspectEntry {
                point: *u,
                error: Some(err.to_string()),
                diagnostics: None,
                base: None,
                transformed: None,
                transform_error: None,
            };
            return (entry, row);
        }
    };
    let diagnostics = analysis.diagnostics();
    row.f = Some(analysis.base.f.value());
    row.det_g = Some(analysis.base.det_g.value());
    row.eps = Some(analysis.base.eps);
    row.main_scalar = Some(analysis.base.main_scalar.value());
    row.hamel = Some(analysis.base.hamel.value());
    row.phi = Some(diagnostics.phi);
    row.phi_v2 = Some(diagnostics.phi_v2);
    row.sigma = Some(diagnostics.sigma);
    row.rho = diagnostics.rho;
    row.p = diagnostics.p;
    row.q = diagnostics.q;
    let (transformed, transform_error) = match analysis.transformed() {
        Ok(bar) => {
            row.f_bar = Some(bar.f.value());
            row.det_g_bar = Some(bar.det_g.value());
            row.main_scalar_bar = Some(bar.main_scalar.value());
            (Some(geometry_block(bar)), None)
        }
        Err(err) => (None, Some(err.to_string())),
    };
    row.status = match &transform_error {
        Some(err) => format!("transform failed: {err}"),
        None => "ok".to_string(),
    };
    let entry = InspectEntry {
        point: *u,
        error: None,
        diagnostics: Some(diagnostics),
        base: Some(geometry_block(&analysis.base)),
        transformed,
        transform_error,
    };
    (entry, row)
}

fn run_inspect(cmd: &InspectCmd) -> Result<u8, String> {
    let cfg = config::resolve(&cmd.run, &[])?;
    let points = materialize_points(&cfg);
    let mut entries = Vec::with_capacity(points.len());
    let mut rows = Vec::with_capacity(points.len());
    for u in &points {
        let (entry, row) = inspect_point(&cfg, u);
        entries.push(entry);
        rows.push(row);
    }
    let text = match cfg.format {
        Format::Json => output::to_canonical_json(&InspectOutput {
            command: "inspect",
            run: run_header(&cfg),
            points: &entries,
        }),
        Format::Csv => output::inspect_csv(&rows),
        Format::Table => output::inspect_table(&rows),
    };
    output::emit(cfg.output.as_ref(), &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct GeodesicOutput<'a> {
    command: &'static str,
    run: RunHeader<'a>,
    dt: f64,
    steps: usize,
    transformed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
    traces: &'a [TraceResult],
}

fn run_geodesic(cmd: &GeodesicCmd) -> Result<u8, String> {
    let mut cfg = config::resolve(&cmd.run, &[])?;
    if let Some(dt) = cmd.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err("dt must be positive and finite".to_string());
        }
        cfg.dt = dt;
    }
    if let Some(steps) = cmd.steps {
        if steps == 0 {
            return Err("steps must be at least 1".to_string());
        }
        cfg.steps = steps;
    }
    if cmd.transformed {
        cfg.transformed = true;
    }
    if let Some(bound) = cmd.bound {
        if !(bound.is_finite() && bound > 0.0) {
            return Err("bound must be positive and finite".to_string());
        }
        cfg.bound = Some(bound);
    }

    let starts = materialize_points(&cfg);
    let geo_cfg = GeodesicConfig {
        dt: cfg.dt,
        steps: cfg.steps,
    };
    let bound = cfg.bound;
    let outside = move |u: &SupportElement| match bound {
        Some(radius) => u.x[0] * u.x[0] + u.x[1] * u.x[1] >= radius * radius,
        None => false,
    };
    let metric = cfg.scenario.metric.field;
    let factor = cfg.scenario.factor.field;
    let mut traces = Vec::with_capacity(starts.len());
    for start in &starts {
        let result = if cfg.transformed {
            let bar = move |v: &JetVars| -> Result<Jet, GeometryError> {
                Ok(factor(v)?.exp()? * metric(v)?)
            };
            trace(&bar, start, &geo_cfg, outside)
        } else {
            trace(&metric, start, &geo_cfg, outside)
        };
        match result {
            Ok(tr) => traces.push(tr),
            Err(err) => {
                return Err(format!(
                    "trace from x = ({}, {}), y = ({}, {}) failed: {err}",
                    start.x[0], start.x[1], start.y[0], start.y[1]
                ));
            }
        }
    }

    let text = match cfg.format {
        Format::Json => output::to_canonical_json(&GeodesicOutput {
            command: "geodesic",
            run: run_header(&cfg),
            dt: cfg.dt,
            steps: cfg.steps,
            transformed: cfg.transformed,
            bound: cfg.bound,
            traces: &traces,
        }),
        Format::Csv => output::geodesic_csv(&traces),
        Format::Table => output::geodesic_table(&traces),
    };
    output::emit(cfg.output.as_ref(), &text)?;
    Ok(0)
}

fn kind_label(kind: FactorKind) -> &'static str {
    match kind {
        FactorKind::General => "general",
        FactorKind::XOnly => "position only",
        FactorKind::YOnly => "direction only",
        FactorKind::Homothety => "constant",
    }
}

fn run_catalog() -> Result<u8, String> {
    let mut text = String::new();
    text.push_str("metrics:\n");
    for metric in catalog::metrics() {
        text.push_str(&format!("  {}\n", metric.name));
    }
    text.push_str("\nfactors:\n");
    for factor in catalog::factors() {
        text.push_str(&format!(
            "  {:<14} {}\n",
            factor.name,
            kind_label(factor.kind)
        ));
    }
    text.push_str("\nscenarios:\n");
    for scenario in catalog::scenarios() {
        text.push_str(&format!(
            "  {:<22} {} under {}: {}\n",
            scenario.name, scenario.metric.name, scenario.factor.name, scenario.description
        ));
    }
    text.push_str("\nAny metric pairs with any factor via --metric and --factor.\n");
    output::emit(None, &text)?;
    Ok(0)
}
