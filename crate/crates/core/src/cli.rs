//! Command-line front end. Every report embeds the configuration that
//! produced it; fixed argv and seed give byte-identical output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::covering::{build_cover, guaranteed_overlap_bound, measure_overlap, DoublingModel, GreedyOrder};
use crate::criteria::{classify, theta_scan, EmbeddingQuery, ThetaScan};
use crate::doubling::{default_radii, doubling_constant, fit_exponents, measure_table, write_measure_csv, FitDirection};
use crate::error::{Error, Result};
use crate::numerics::log_grid;
use crate::poincare::{
    bump_certificate, check_pi, two_weight_pi_check, write_reports_csv, DiscreteField, TwoWeightParams,
};
use crate::scenarios::{run_scenario, ScenarioId};
use crate::space::{sample_region, BallSpec, EstimateOptions, Point, SpaceModel};

/// Environment variable giving the default worker count.
pub const THREADS_ENV: &str = "EMBEDCHECK_THREADS";

const CSV_HELP: &str = "CSV columns: theta scan -> r,theta,profile,rel_uncertainty; \
dims fit / doubling -> x0..,r,value,error,method; cover build -> x0..; \
pi check -> lhs,rhs,ratio,radius,p,q,q_prime,alpha,lambda; bump -> x0..,u,g; \
scenario run -> the first table of the report. CSV output starts with a `# config:` line.";

#[derive(Debug, Parser, Serialize)]
#[command(name = "embedcheck", version, about = "Numerical checks for Sobolev-type embeddings on metric measure spaces", after_help = CSV_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Worker threads (default from EMBEDCHECK_THREADS, else all cores).
    #[arg(long, env = THREADS_ENV, global = true)]
    #[serde(skip)]
    threads: Option<usize>,
    /// Print error details.
    #[arg(long, global = true)]
    #[serde(skip)]
    debug: bool,
    /// Relative error target for estimated ball measures.
    #[arg(long, default_value_t = 0.01, global = true)]
    target_error: f64,
    /// Monte Carlo sample budget per ball.
    #[arg(long, default_value_t = 10_000_000, global = true)]
    budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Greedy r-separated covers.
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Dimension exponent fits.
    #[command(subcommand)]
    Dims(DimsCmd),
    /// Doubling constant over balls centred in E.
    Doubling(DoublingArgs),
    /// Theta scans.
    #[command(subcommand)]
    Theta(ThetaCmd),
    /// Classify a saved Theta scan.
    Classify(ClassifyArgs),
    /// Poincaré inequality checks on grid fields.
    #[command(subcommand)]
    Pi(PiCmd),
    /// Bump-function certificate on a ball.
    Bump(BumpArgs),
    /// Worked examples.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CoverCmd {
    Build(CoverArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DimsCmd {
    Fit(FitArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ThetaCmd {
    Scan(ScanArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PiCmd {
    Check(PiArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ScenarioCmd {
    Run(ScenarioArgs),
}

#[derive(Debug, Args, Serialize)]
struct SpaceArg {
    /// Space description (JSON).
    #[arg(long)]
    space: PathBuf,
    /// Number of E points when E is sampled implicitly from the domain.
    #[arg(long, default_value_t = 32)]
    e_points: usize,
}

#[derive(Debug, Args, Serialize)]
struct RadiiArg {
    /// Log-spaced radii start:end:count, start > end.
    #[arg(long)]
    radii: Option<String>,
    /// Largest radius r0 when --radii is omitted (default diam(E)/10).
    #[arg(long)]
    r0: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct CoverArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    r: f64,
    /// Dilation for the overlap count.
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Points sampled from the domain to be covered (E points when 0).
    #[arg(long, default_value_t = 0)]
    sample: usize,
    /// Greedy scan order.
    #[arg(long, value_enum, default_value_t = Order::Lexicographic)]
    order: Order,
    /// Report the Lebesgue bound (4 lambda + 1)^n.
    #[arg(long)]
    lebesgue_bound: bool,
    /// Report the bound C^k from a doubling constant C.
    #[arg(long)]
    doubling_constant: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Order {
    Input,
    Lexicographic,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    measure: String,
    /// s, sigma or delta.
    #[arg(long)]
    direction: String,
    #[command(flatten)]
    radii: RadiiArg,
}

#[derive(Debug, Args, Serialize)]
struct DoublingArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    measure: String,
    #[command(flatten)]
    radii: RadiiArg,
}

#[derive(Debug, Args, Serialize)]
struct ScanArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    mu: String,
    #[arg(long)]
    nu: String,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// The function space admits truncation.
    #[arg(long)]
    truncation: bool,
    /// nu(B ∩ E) >= c nu(B) holds.
    #[arg(long)]
    measure_density: bool,
    #[command(flatten)]
    radii: RadiiArg,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    /// JSON written by `theta scan`.
    #[arg(long)]
    scan: PathBuf,
    /// Override the truncation flag stored with the scan.
    #[arg(long)]
    truncation: Option<bool>,
    /// Override the measure density flag stored with the scan.
    #[arg(long)]
    measure_density: Option<bool>,
}

#[derive(Debug, Args, Serialize)]
struct PiArgs {
    #[command(flatten)]
    space: SpaceArg,
    /// CSV with columns x0.., u and optionally g.
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    mu: String,
    /// Ball centre, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Vec<f64>,
    #[arg(long)]
    radius: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Two-weight check against this target measure.
    #[arg(long, requires_all = ["q", "q_prime", "theta"])]
    nu: Option<String>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    q_prime: Option<f64>,
    /// Theta at the ball radius.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    truncation: bool,
}

#[derive(Debug, Args, Serialize)]
struct BumpArgs {
    #[command(flatten)]
    space: SpaceArg,
    #[arg(long)]
    mu: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Vec<f64>,
    #[arg(long)]
    radius: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    p: f64,
    /// Grid nodes per axis for the sampled field.
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Debug, Args, Serialize)]
struct ScenarioArgs {
    /// optimal-weight, cusp, koch-trace, lipschitz-trace or hajlasz-general-measure.
    id: String,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    depth: Option<f64>,
    /// Any other parameter as key=value.
    #[arg(long = "set", value_parser = parse_kv, allow_hyphen_values = true)]
    set: Vec<(String, f64)>,
}

fn parse_kv(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Parses start:end:count into a strictly decreasing log grid.
pub fn parse_radii(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::param("radii", format!("`{spec}` is not start:end:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(start > end && end > 0.0 && start.is_finite()) || count < 2 {
        return Err(Error::param("radii", "need start > end > 0 and count >= 2 (grids are decreasing)"));
    }
    Ok(log_grid(start, end, count))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let debug = cli.global.debug;
    let pool = match cli.global.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            if debug {
                eprintln!("error: {e:#?}");
            } else {
                eprintln!("error: {e}");
            }
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

type CsvWriter = Box<dyn Fn(&mut Vec<u8>) -> Result<()>>;

/// A rendered report in each of the three formats.
struct Output {
    json: Value,
    csv: CsvWriter,
    text: String,
}

fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let opts = EstimateOptions {
        target_rel_error: g.target_error,
        seed: g.seed,
        budget: g.budget,
        force_monte_carlo: None,
    };
    if !(g.target_error > 0.0 && g.target_error < 1.0) {
        return Err(Error::param("target-error", "must lie in (0, 1)"));
    }
    let out = match &cli.command {
        Command::Cover(CoverCmd::Build(a)) => cover(a, g.seed)?,
        Command::Dims(DimsCmd::Fit(a)) => fit(a, &opts)?,
        Command::Doubling(a) => doubling(a, &opts)?,
        Command::Theta(ThetaCmd::Scan(a)) => scan(a, &opts)?,
        Command::Classify(a) => classify_cmd(a)?,
        Command::Pi(PiCmd::Check(a)) => pi(a)?,
        Command::Bump(a) => bump(a, &opts)?,
        Command::Scenario(ScenarioCmd::Run(a)) => scenario(a, g.seed)?,
    };
    let config = serde_json::to_value(cli)?;
    let mut buf = Vec::new();
    match g.format {
        Format::Json => {
            let doc = json!({ "config": config, "result": out.json });
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
        Format::Csv => {
            writeln!(buf, "# config: {}", serde_json::to_string(&config)?)?;
            (out.csv)(&mut buf)?;
        }
        Format::Text => {
            writeln!(buf, "# config: {}", serde_json::to_string(&config)?)?;
            buf.extend_from_slice(out.text.as_bytes());
        }
    }
    match &g.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn load_space(a: &SpaceArg) -> Result<(SpaceModel, Vec<Point>)> {
    let text = std::fs::read_to_string(&a.space)?;
    let space = SpaceModel::from_json_str(&text)?;
    let e = space.e_points(a.e_points)?;
    Ok((space, e))
}

fn radii_for(r: &RadiiArg, space: &SpaceModel, e: &[Point]) -> Result<Vec<f64>> {
    match (&r.radii, r.r0) {
        (Some(spec), _) => parse_radii(spec),
        (None, Some(r0)) => {
            if !(r0 > 0.0 && r0.is_finite()) {
                return Err(Error::param("r0", "must be positive"));
            }
            Ok(log_grid(r0, r0 * 1e-3, 16))
        }
        (None, None) => Ok(default_radii(e, space.metric)),
    }
}

fn text_of<T: Serialize>(v: &T) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(v)?))
}

fn cover(a: &CoverArgs, seed: u64) -> Result<Output> {
    let (space, e) = load_space(&a.space)?;
    let sample = if a.sample > 0 {
        sample_region(&space, &space.domain.clone(), a.sample, seed)?
    } else {
        e
    };
    let order = match a.order {
        Order::Input => GreedyOrder::Input,
        Order::Lexicographic => GreedyOrder::Lexicographic,
    };
    let family = build_cover(&sample, a.r, space.metric, order)?.with_dilation(a.lambda)?;
    let mut overlap = measure_overlap(&family, a.lambda, &sample)?;
    if a.lebesgue_bound {
        overlap.guaranteed_bound = Some(guaranteed_overlap_bound(DoublingModel::Lebesgue { dim: space.dim }, a.lambda)?);
    } else if let Some(c) = a.doubling_constant {
        overlap.guaranteed_bound = Some(guaranteed_overlap_bound(
            DoublingModel::Measure {
                c_mu: c,
                iterations: None,
            },
            a.lambda,
        )?);
    }
    let json = json!({ "cover": family.to_json(), "overlap": overlap });
    let text = format!(
        "{} centres at r = {}; max overlap at lambda = {}: {}{}\n",
        family.centers.len(),
        a.r,
        a.lambda,
        overlap.max_overlap,
        overlap.guaranteed_bound.map_or(String::new(), |b| format!(" (bound {b})"))
    );
    let centers = family.centers.clone();
    Ok(Output {
        json,
        text,
        csv: Box::new(move |buf| {
            let mut w = csv::Writer::from_writer(buf);
            let dim = centers.first().map_or(0, Vec::len);
            w.write_record((0..dim).map(|i| format!("x{i}")))?;
            for c in &centers {
                w.write_record(c.iter().map(|x| format!("{x:.17e}")))?;
            }
            w.flush()?;
            Ok(())
        }),
    })
}

fn fit(a: &FitArgs, opts: &EstimateOptions) -> Result<Output> {
    let (space, e) = load_space(&a.space)?;
    let direction: FitDirection = a.direction.parse()?;
    let radii = radii_for(&a.radii, &space, &e)?;
    let fit = fit_exponents(&space, &a.measure, &e, &radii, direction, opts)?;
    let rows = measure_table(&space, &a.measure, &e, &radii, opts)?;
    Ok(Output {
        json: serde_json::to_value(&fit)?,
        text: text_of(&fit)?,
        csv: Box::new(move |buf| write_measure_csv(&rows, buf)),
    })
}

fn doubling(a: &DoublingArgs, opts: &EstimateOptions) -> Result<Output> {
    let (space, e) = load_space(&a.space)?;
    let radii = radii_for(&a.radii, &space, &e)?;
    let rep = doubling_constant(&space, &a.measure, &e, &radii, opts)?;
    let rows = measure_table(&space, &a.measure, &e, &radii, opts)?;
    Ok(Output {
        json: serde_json::to_value(&rep)?,
        text: text_of(&rep)?,
        csv: Box::new(move |buf| write_measure_csv(&rows, buf)),
    })
}

fn scan(a: &ScanArgs, opts: &EstimateOptions) -> Result<Output> {
    let (space, e) = load_space(&a.space)?;
    let radii = radii_for(&a.radii, &space, &e)?;
    let query = EmbeddingQuery {
        p: a.p,
        q: a.q,
        alpha: a.alpha,
        lambda: a.lambda,
        mu: a.mu.clone(),
        nu: a.nu.clone(),
        truncation_supported: a.truncation,
        measure_density: a.measure_density,
    };
    let scan = theta_scan(&space, &query, &e, &radii, opts)?;
    let mut text = String::from("r\ttheta\n");
    for (r, t) in scan.radii.iter().zip(&scan.theta_values) {
        text.push_str(&format!("{r:.6e}\t{t:.6e}\n"));
    }
    text.push_str(&format!("fitted log-log slope {:.6}\n", scan.fitted_log_slope));
    let json = json!({ "query": query, "scan": scan });
    Ok(Output {
        json,
        text,
        csv: Box::new(move |buf| scan.write_csv(buf)),
    })
}

fn classify_cmd(a: &ClassifyArgs) -> Result<Output> {
    let text = std::fs::read_to_string(&a.scan)?;
    let doc: Value = serde_json::from_str(&text)?;
    // accept the full `theta scan` output or its `result` object
    let body = doc.get("result").unwrap_or(&doc);
    let mut query: EmbeddingQuery = serde_json::from_value(
        body.get("query")
            .cloned()
            .ok_or_else(|| Error::Schema {
                path: "result.query".into(),
                message: "missing; pass the JSON written by `theta scan`".into(),
            })?,
    )?;
    let scan: ThetaScan = serde_json::from_value(body.get("scan").cloned().ok_or_else(|| Error::Schema {
        path: "result.scan".into(),
        message: "missing; pass the JSON written by `theta scan`".into(),
    })?)?;
    if let Some(t) = a.truncation {
        query.truncation_supported = t;
    }
    if let Some(m) = a.measure_density {
        query.measure_density = m;
    }
    let verdict = classify(&scan, &query)?;
    let text = format!("{:?} ({:?}): {}\n", verdict.verdict, verdict.scope, verdict.basis);
    let row = serde_json::to_value(&verdict)?;
    Ok(Output {
        json: row.clone(),
        text,
        csv: Box::new(move |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["verdict", "scope", "bounded", "basis"])?;
            let s = |k: &str| row.get(k).map_or(String::new(), |v| v.to_string().trim_matches('"').to_string());
            w.write_record([s("verdict"), s("scope"), s("bounded"), s("basis")])?;
            w.flush()?;
            Ok(())
        }),
    })
}

fn read_field(path: &Path) -> Result<DiscreteField> {
    DiscreteField::from_csv(std::fs::File::open(path)?)
}

fn pi(a: &PiArgs) -> Result<Output> {
    let (space, _) = load_space(&a.space)?;
    let field = read_field(&a.field)?;
    if a.center.len() != space.dim {
        return Err(Error::param("center", format!("need {} coordinates", space.dim)));
    }
    let ball = BallSpec::new(a.center.clone(), a.radius);
    let rep = match &a.nu {
        None => check_pi(&field, &space, &ball, &a.mu, a.p, a.alpha, a.lambda)?,
        Some(nu) => {
            let params = TwoWeightParams {
                p: a.p,
                q_prime: a.q_prime.unwrap_or(f64::NAN),
                q: a.q.unwrap_or(f64::NAN),
                alpha: a.alpha,
                lambda: a.lambda,
                theta_at_r: a.theta.unwrap_or(f64::NAN),
                truncation: a.truncation,
            };
            two_weight_pi_check(&field, &space, &ball, None, &a.mu, nu, &params)?
        }
    };
    let reports = vec![rep.clone()];
    Ok(Output {
        json: serde_json::to_value(&rep)?,
        text: text_of(&rep)?,
        csv: Box::new(move |buf| write_reports_csv(&reports, buf)),
    })
}

fn bump(a: &BumpArgs, opts: &EstimateOptions) -> Result<Output> {
    let (space, _) = load_space(&a.space)?;
    if a.center.len() != space.dim {
        return Err(Error::param("center", format!("need {} coordinates", space.dim)));
    }
    let ball = BallSpec::new(a.center.clone(), a.radius);
    let cert = bump_certificate(&space, &a.mu, &ball, a.lambda, a.p, a.grid, opts)?;
    let field = cert.field.clone();
    Ok(Output {
        json: serde_json::to_value(&cert)?,
        text: text_of(&cert)?,
        csv: Box::new(move |buf| match &field {
            Some(f) => f.write_csv(buf),
            None => Err(Error::param("format", "no grid field for this dimension; use json")),
        }),
    })
}

fn scenario(a: &ScenarioArgs, seed: u64) -> Result<Output> {
    let id: ScenarioId = a.id.parse()?;
    let mut params: BTreeMap<String, f64> = a.set.iter().cloned().collect();
    for (k, v) in [
        ("n", a.n),
        ("p", a.p),
        ("q", a.q),
        ("alpha", a.alpha),
        ("beta", a.beta),
        ("gamma", a.gamma),
        ("depth", a.depth),
    ] {
        if let Some(v) = v {
            params.insert(k.into(), v);
        }
    }
    let rep = run_scenario(id, &params, seed)?;
    let table = rep.tables.first().cloned();
    Ok(Output {
        json: serde_json::to_value(&rep)?,
        text: rep.to_text(),
        csv: Box::new(move |buf| match &table {
            Some(t) => t.write_csv(buf),
            None => Ok(()),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_specs() {
        let r = parse_radii("1e-1:1e-6:16").unwrap();
        assert_eq!(r.len(), 16);
        assert!(r.windows(2).all(|w| w[0] > w[1]));
        assert!(parse_radii("1e-6:1e-1:16").is_err());
        assert!(parse_radii("0.1:0.01").is_err());
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run(["embedcheck", "classify"].map(OsString::from)), 1);
        assert_eq!(run(["embedcheck", "frobnicate"].map(OsString::from)), 1);
        assert_eq!(run(["embedcheck", "--help"].map(OsString::from)), 0);
    }
}
