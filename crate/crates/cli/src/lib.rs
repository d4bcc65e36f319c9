//! Command-line front end. `run` takes the full argument vector and returns
//! the process exit code: 0 on success, 1 on a numeric failure, 2 on a
//! usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dikin_core::afs::{self, capture_attractor, default_start, solve, SolverConfig, StopReason};
use dikin_core::dikin::{StateVector, Theta};
use dikin_core::io::{load_lp, read_xy, write_sweep_csv, write_trace_csv};
use dikin_core::orbits::{
    classify_orbit, classify_tail, feigenbaum_sweep, sweep_start, theta_grid, OrbitConfig,
    ProjectionSpec, SweepPoint, SweepValues,
};
use dikin_core::stability::{
    find_period4_threshold, fixed_point_r, logistic_superstable_theta, near_one_periodic_orbit,
    period_two_data, certify_contraction,
};
use dikin_core::svg::{render_scatter, SvgScatter};
use dikin_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dikin", version, about = "Dikin process and affine scaling laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a single orbit of the Dikin process.
    DikinOrbit(OrbitArgs),
    /// Feigenbaum sweep over a theta grid.
    DikinSweep(SweepArgs),
    /// Solve an LP with the modified affine scaling method.
    AfsSolve(SolveArgs),
    /// Classify the scaled-w tail of AFS runs over a theta grid.
    AfsSweep(AfsSweepArgs),
    /// Capture the dual trace at a chaotic theta.
    Attractor(AttractorArgs),
    /// Closed-form and bisection results.
    Analytic(AnalyticArgs),
    /// Scatter plot of two CSV columns.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct OrbitFlags {
    #[arg(long, default_value_t = 100_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 512)]
    keep: usize,
    #[arg(long, default_value_t = 64)]
    period_max: usize,
    #[arg(long, default_value_t = dikin_core::tol::ORBIT_MATCH)]
    match_tol: f64,
}

impl OrbitFlags {
    fn config(&self, seed: u64) -> OrbitConfig {
        OrbitConfig {
            burn_in: self.burn_in,
            keep: self.keep,
            period_max: self.period_max,
            match_tol: self.match_tol,
            seed,
            ..OrbitConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct OrbitArgs {
    #[arg(long)]
    theta: f64,
    /// Comma-separated start vector; a seeded random start otherwise.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed", required_unless_present = "seed")]
    start: Option<Vec<f64>>,
    #[arg(long, requires = "dim")]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    orbit: OrbitFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    theta_min: f64,
    #[arg(long)]
    theta_max: f64,
    #[arg(long)]
    steps: usize,
    /// fixed:I, sorted:I, sorted-middle or random
    #[arg(long, default_value = "fixed:0")]
    projection: ProjectionSpec,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    seeds_per_theta: usize,
    #[command(flatten)]
    orbit: OrbitFlags,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverFlags {
    #[arg(long, default_value_t = dikin_core::tol::GAP_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = dikin_core::tol::RECORD_GAP)]
    record_gap: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Fixed step length instead of `theta * alpha_max`.
    #[arg(long)]
    alpha: Option<f64>,
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.epsilon,
            record_gap_threshold: self.record_gap,
            max_iters: self.max_iters,
            step_rule: match self.alpha {
                Some(a) => afs::StepRule::Constant(a),
                None => afs::StepRule::Scaled,
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// castillo-barnes or a JSON file
    #[arg(long)]
    lp: String,
    #[arg(long)]
    theta: f64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Only write iterates with gap at or below the record threshold.
    #[arg(long)]
    recorded_only: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AfsSweepArgs {
    #[arg(long)]
    lp: String,
    #[arg(long)]
    theta_min: f64,
    #[arg(long)]
    theta_max: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 5_000)]
    max_iters: usize,
    /// Number of recorded scaled-w states passed to the classifier.
    #[arg(long, default_value_t = 128)]
    tail: usize,
    #[arg(long, default_value_t = 64)]
    period_max: usize,
    #[arg(long, default_value_t = dikin_core::tol::ORBIT_MATCH)]
    match_tol: f64,
    #[arg(long, default_value = "fixed:0")]
    projection: ProjectionSpec,
    /// Needed only for the random projection.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttractorArgs {
    #[arg(long)]
    lp: String,
    #[arg(long)]
    theta: f64,
    /// Recorded iterates to collect.
    #[arg(long, default_value_t = 600)]
    target: usize,
    /// Seed of the restart stream used when the default start fails.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_starts: usize,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Report {
    Thresholds,
    PeriodTwo,
    Logistic,
    NearOne,
}

#[derive(Debug, Args)]
struct AnalyticArgs {
    #[arg(long, value_enum)]
    report: Report,
    #[arg(long, required_if_eq_any([("report", "period-two"), ("report", "near-one")]))]
    theta: Option<f64>,
    #[arg(long, required_if_eq("report", "near-one"))]
    dim: Option<usize>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    x: String,
    /// Column name, or a prefix ending in `*` to plot several columns.
    #[arg(long)]
    y: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "")]
    title: String,
}

enum Failure {
    Usage(String),
    Numeric(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingColumn(_) => Failure::Usage(e.to_string()),
            e => Failure::Numeric(e),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line `args` (program name first), writing reports to
/// `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::DikinOrbit(a) => dikin_orbit(a, out),
        Command::DikinSweep(a) => dikin_sweep(a, out),
        Command::AfsSolve(a) => afs_solve(a, out),
        Command::AfsSweep(a) => afs_sweep(a, out),
        Command::Attractor(a) => attractor(a, out),
        Command::Analytic(a) => analytic(a, out),
        Command::Render(a) => render(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Numeric(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_NUMERIC
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn theta(v: f64) -> std::result::Result<Theta, Failure> {
    Theta::new(v).map_err(|e| usage(e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Numeric(Error::Io(format!("{}: {e}", path.display()))))
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Outcome {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Failure::Numeric(Error::from(e)))
}

fn sweep_svg(points: &[SweepPoint], title: String) -> String {
    let pts = points
        .iter()
        .filter_map(|p| p.outcome.as_ref().ok().map(|v| (p.theta, v)))
        .flat_map(|(t, v)| v.values.iter().map(move |&x| (t, x)))
        .collect();
    let mut plot = SvgScatter::new(pts);
    plot.title = title;
    plot.x_label = "theta".into();
    plot.y_label = "value".into();
    render_scatter(&plot)
}

fn dikin_orbit(a: OrbitArgs, out: &mut dyn Write) -> Outcome {
    let t = theta(a.theta)?;
    let seed = a.seed.unwrap_or(0);
    let w0 = match (&a.start, a.dim) {
        (Some(v), _) => StateVector::normalized(v.clone()).map_err(|e| usage(e.to_string()))?,
        (None, Some(n)) => sweep_start(n, seed, 0, 0).map_err(|e| usage(e.to_string()))?,
        (None, None) => return Err(usage("--dim is required with --seed")),
    };
    let cfg = a.orbit.config(seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let summary = classify_orbit(t, &w0, &cfg)?;
    let resolved = if summary.resolved { "" } else { " (unresolved)" };
    say(
        out,
        format_args!(
            "{}{} after burn-in {}",
            summary.classification, resolved, summary.burn_in
        ),
    )?;
    if let Some(path) = a.out {
        let n = w0.dim();
        let mut csv = String::from("index");
        for i in 1..=n {
            csv.push_str(&format!(",w_{i}"));
        }
        csv.push('\n');
        for (k, p) in summary.points.iter().enumerate() {
            csv.push_str(&k.to_string());
            for v in p {
                csv.push(',');
                csv.push_str(&dikin_core::io::fmt_f64(*v));
            }
            csv.push('\n');
        }
        write_file(&path, csv.as_bytes())?;
    } else {
        for p in &summary.points {
            let cells: Vec<String> = p.iter().map(|v| format!("{v:.12}")).collect();
            say(out, format_args!("{}", cells.join(" ")))?;
        }
    }
    Ok(())
}

fn dikin_sweep(a: SweepArgs, out: &mut dyn Write) -> Outcome {
    let grid = theta_grid(a.theta_min, a.theta_max, a.steps).map_err(|e| usage(e.to_string()))?;
    let projection = a
        .projection
        .resolve(a.dim, a.seed)
        .map_err(|e| usage(e.to_string()))?;
    let cfg = a.orbit.config(a.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let points = feigenbaum_sweep(a.dim, &grid, projection, &cfg, a.seeds_per_theta)
        .map_err(|e| usage(e.to_string()))?;
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &points)?;
    write_file(&a.out, &csv)?;
    if let Some(svg) = &a.svg {
        let title = format!("n = {}, {:?}", a.dim, projection);
        write_file(svg, sweep_svg(&points, title).as_bytes())?;
    }
    let failed = points.iter().filter(|p| p.outcome.is_err()).count();
    say(
        out,
        format_args!("{} rows written to {}, {failed} failed", points.len(), a.out.display()),
    )?;
    Ok(())
}

fn y_scatter<'a>(ys: impl Iterator<Item = &'a [f64]>, title: String) -> String {
    let pts = ys
        .map(|y| match y {
            [a, b, ..] => (*a, *b),
            [a] => (*a, 0.0),
            [] => (f64::NAN, f64::NAN),
        })
        .collect();
    let mut plot = SvgScatter::new(pts);
    plot.title = title;
    plot.x_label = "y_1".into();
    plot.y_label = "y_2".into();
    render_scatter(&plot)
}

fn afs_solve(a: SolveArgs, out: &mut dyn Write) -> Outcome {
    let lp = load_lp(&a.lp).map_err(|e| usage(e.to_string()))?;
    let t = theta(a.theta)?;
    let cfg = a.solver.config();
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let start = default_start(&lp)?;
    let trace = solve(&lp, &start, t, &cfg)?;
    let mut csv = Vec::new();
    write_trace_csv(&mut csv, &trace, a.recorded_only)?;
    write_file(&a.out, &csv)?;
    if let Some(svg) = &a.svg {
        let title = format!("{} at theta = {}", lp.name(), a.theta);
        write_file(svg, y_scatter(trace.recorded().map(|r| r.y.as_slice()), title).as_bytes())?;
    }
    let last = trace.last();
    let ys: Vec<String> = last.y.iter().map(|v| format!("{v:.10}")).collect();
    say(
        out,
        format_args!(
            "{} iterations, gap 1e{:.2}, y = ({})",
            last.iter,
            last.log10_gap,
            ys.join(", ")
        ),
    )?;
    match trace.stop {
        StopReason::Failed(e) => Err(Failure::Numeric(e)),
        StopReason::Converged | StopReason::RecordLimit => Ok(()),
    }
}

fn afs_sweep(a: AfsSweepArgs, out: &mut dyn Write) -> Outcome {
    let lp = load_lp(&a.lp).map_err(|e| usage(e.to_string()))?;
    let grid = theta_grid(a.theta_min, a.theta_max, a.steps).map_err(|e| usage(e.to_string()))?;
    if matches!(a.projection, ProjectionSpec::Random) && a.seed.is_none() {
        return Err(usage("--projection random needs --seed"));
    }
    let projection = a
        .projection
        .resolve(lp.n(), a.seed.unwrap_or(0))
        .map_err(|e| usage(e.to_string()))?;
    if a.tail < 2 {
        return Err(usage("--tail must be at least 2"));
    }
    let cfg = SolverConfig {
        max_iters: a.max_iters,
        stop_on_gap: false,
        ..SolverConfig::default()
    };
    let start = default_start(&lp)?;
    let mut points = Vec::with_capacity(grid.len());
    for &th in &grid {
        let outcome = (|| {
            let trace = solve(&lp, &start, theta(th).map_err(|_| Error::InvalidTheta(th))?, &cfg)?;
            let ws: Vec<Vec<f64>> = trace.recorded().map(|r| r.w_scaled.clone()).collect();
            if ws.len() < a.tail {
                return Err(trace.error().cloned().unwrap_or(Error::NoConvergence(ws.len())));
            }
            let summary = classify_tail(&ws[ws.len() - a.tail..], a.period_max, a.match_tol)?;
            Ok(SweepValues {
                classification: summary.classification,
                resolved: summary.resolved,
                values: summary.project(projection)?,
            })
        })();
        points.push(SweepPoint {
            theta: th,
            seed_index: 0,
            outcome,
        });
    }
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &points)?;
    write_file(&a.out, &csv)?;
    if let Some(svg) = &a.svg {
        let title = format!("{}, scaled w, {:?}", lp.name(), projection);
        write_file(svg, sweep_svg(&points, title).as_bytes())?;
    }
    let failed = points.iter().filter(|p| p.outcome.is_err()).count();
    say(
        out,
        format_args!("{} rows written to {}, {failed} failed", points.len(), a.out.display()),
    )?;
    Ok(())
}

fn attractor(a: AttractorArgs, out: &mut dyn Write) -> Outcome {
    let lp = load_lp(&a.lp).map_err(|e| usage(e.to_string()))?;
    let t = theta(a.theta)?;
    if a.target == 0 || a.max_starts == 0 {
        return Err(usage("--target and --max-starts must be positive"));
    }
    let cfg = SolverConfig {
        max_iters: a.max_iters,
        ..SolverConfig::default()
    };
    let (_, trace) = capture_attractor(&lp, t, &cfg, a.target, a.seed, a.max_starts)?;
    let mut csv = Vec::new();
    write_trace_csv(&mut csv, &trace, true)?;
    write_file(&a.out, &csv)?;
    if let Some(svg) = &a.svg {
        let title = format!("{} dual iterates at theta = {}", lp.name(), a.theta);
        write_file(svg, y_scatter(trace.recorded().map(|r| r.y.as_slice()), title).as_bytes())?;
    }
    let infeasible = trace
        .recorded()
        .filter(|r| !afs::dual_feasibility_check(&lp, &r.y, cfg.feas_tol))
        .count();
    say(
        out,
        format_args!(
            "{} recorded points written to {}, {infeasible} dual-infeasible",
            trace.recorded().count(),
            a.out.display()
        ),
    )?;
    Ok(())
}

fn analytic(a: AnalyticArgs, out: &mut dyn Write) -> Outcome {
    match a.report {
        Report::Thresholds => {
            let p4 = find_period4_threshold()?;
            say(out, format_args!("converged below      {:.10}  (2/3)", 2.0 / 3.0))?;
            say(
                out,
                format_args!("superstable period 2 {:.10}  ((1+sqrt 5)/4)", (1.0 + 5f64.sqrt()) / 4.0),
            )?;
            say(out, format_args!("period 4 onset       {:.10}  (bisection)", p4.value()))?;
        }
        Report::PeriodTwo => {
            let t = theta(a.theta.expect("required by clap"))?;
            let d = period_two_data(t)?;
            say(out, format_args!("r        {:.12}", fixed_point_r(t)?))?;
            say(out, format_args!("s        {:.12}", d.s))?;
            say(out, format_args!("g'(s)    {:.12}", d.g_prime_at_s))?;
            say(out, format_args!("eigen    {:.12}", dikin_core::stability::transversal_eigenvalue(t)?))?;
        }
        Report::Logistic => {
            for m in 2..=4 {
                let t = logistic_superstable_theta(m)?;
                say(out, format_args!("m = {m}  theta = {:.12}  4 theta = {:.12}", t.value(), 4.0 * t.value()))?;
            }
        }
        Report::NearOne => {
            let t = theta(a.theta.expect("required by clap"))?;
            let n = a.dim.expect("required by clap");
            let (orbit, cj) = near_one_periodic_orbit(t, n)?;
            let (poly, beta) = certify_contraction(&cj)?;
            let cyc: Vec<String> = orbit.cycle.iter().map(|v| format!("{v:.10}")).collect();
            say(out, format_args!("cycle    {}", cyc.join(" ")))?;
            let co: Vec<String> = poly.coeffs().iter().map(|v| format!("{v:.6e}")).collect();
            say(out, format_args!("charpoly {}", co.join(" ")))?;
            say(out, format_args!("beta     {beta:.12}"))?;
        }
    }
    Ok(())
}

fn render(a: RenderArgs, out: &mut dyn Write) -> Outcome {
    let file = fs::File::open(&a.input).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let pts = read_xy(file, &a.x, &a.y)?;
    let mut plot = SvgScatter::new(pts);
    plot.title = a.title;
    plot.x_label = a.x;
    plot.y_label = a.y;
    let n = plot.points.len();
    write_file(&a.out, render_scatter(&plot).as_bytes())?;
    say(out, format_args!("{n} points written to {}", a.out.display()))?;
    Ok(())
}
