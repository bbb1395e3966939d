//! Command-line front end. Every command writes one JSON document (or CSV
//! with a header) to stdout; identical arguments give identical bytes.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::events::{replicate_seed, EventStore};
use crate::flow::{decompose, survivor_counts, verify_flow_property, SurvivorCounts};
use crate::gwve::GwveSpec;
use crate::phase::{dust_dimension_analytic, dust_dimension_empirical, DimensionReport, PhaseReport};
use crate::rates::RateFamily;
use crate::space::{Alphabet, Geometry, SpaceConfig, Word};
use crate::stats::Summary;

pub const SCHEMA: &str = "segcoal/1";
/// Seed used when neither `--seed` nor `SEGCOAL_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_240_611;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_FLOW_VIOLATION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "segcoal", version, about = "Segregated coalescent simulation and analytics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Phase, critical time and tail data of a rate family.
    Classify(ClassifyArgs),
    /// Monte Carlo replicates of the dust and block structure at time t.
    Simulate(SimulateArgs),
    /// Branching-process analytics: means, extinction, degeneracy.
    Gwve(GwveArgs),
    /// Analytic and empirical dust dimension over a grid of times.
    Dimension(DimensionArgs),
    /// Checks the flow composition property on random samples.
    Flowcheck(FlowcheckArgs),
    /// Dumps realized events as CSV.
    Events(EventsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Model {
    #[arg(short = 'S', long = "alphabet-size", default_value_t = 2)]
    pub alphabet_size: u32,
    /// e.g. constant:1, geometric:1:0.125, harmonic:1, linear:0.5, truncated:constant:1:5
    #[arg(long)]
    pub rates: String,
}

#[derive(Args, Debug, Clone)]
pub struct Sim {
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    /// Letters per point; defaults to depth + 8.
    #[arg(long)]
    pub precision: Option<usize>,
    #[arg(long, env = "SEGCOAL_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_parser = parse_geometry, default_value = "cantor")]
    pub geometry: Geometry,
}

fn parse_geometry(s: &str) -> std::result::Result<Geometry, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: Model,
    /// Optional time at which to report ln m_n, g partial sums and dust dimension.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub trace: usize,
    /// Not used by the computation; echoed so every output carries a seed.
    #[arg(long, env = "SEGCOAL_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: Model,
    #[command(flatten)]
    pub sim: Sim,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    /// Compute full block decompositions with exact masses.
    #[arg(long)]
    pub decompose: bool,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct GwveArgs {
    #[command(flatten)]
    pub model: Model,
    #[arg(long)]
    pub t: f64,
    /// Generations reported.
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    /// Also compute the extinction limit.
    #[arg(long)]
    pub limit: bool,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub horizon: usize,
    /// Direct simulations for empirical means; 0 to skip.
    #[arg(long, default_value_t = 0)]
    pub replicates: usize,
    #[arg(long, env = "SEGCOAL_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub model: Model,
    #[arg(long, default_value_t = 25)]
    pub depth: usize,
    #[arg(long)]
    pub precision: Option<usize>,
    #[arg(long, env = "SEGCOAL_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, conflicts_with = "t_grid")]
    pub t: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Vec<f64>,
    /// Read times as multiples of the critical time.
    #[arg(long)]
    pub relative: bool,
    #[arg(long, default_value_t = 400)]
    pub replicates: usize,
    /// Emit the per-replicate (n, ln B_n) regression data instead of the summary.
    #[arg(long)]
    pub regression: bool,
    #[arg(long, value_enum, default_value_t = Output::Csv)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct FlowcheckArgs {
    #[command(flatten)]
    pub model: Model,
    #[command(flatten)]
    pub sim: Sim,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 2.0)]
    pub horizon: f64,
    /// Corrupt the event stream of the given word (use "" for the root).
    #[arg(long)]
    pub inject_fault: Option<String>,
}

#[derive(Args, Debug)]
pub struct EventsArgs {
    #[command(flatten)]
    pub model: Model,
    #[command(flatten)]
    pub sim: Sim,
    #[arg(long)]
    pub t: f64,
    /// Deepest level dumped.
    #[arg(long, default_value_t = 4)]
    pub max_level: usize,
}

/// Runs the binary: parses `std::env::args`, writes to stdout, returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidRates(_)
        | Error::MissingTail
        | Error::InconsistentTail(_)
        | Error::TrivialModel
        | Error::InvalidAlphabet(_)
        | Error::InvalidParameter(_)
        | Error::PrecisionBelowDepth { .. } => EXIT_INVALID_INPUT,
        _ => EXIT_RUNTIME,
    }
}

/// Executes a parsed command, returning the process exit code.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<i32> {
    match cli.command {
        Command::Classify(a) => classify(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Gwve(a) => gwve(a, out),
        Command::Dimension(a) => dimension(a, out),
        Command::Flowcheck(a) => flowcheck(a, out),
        Command::Events(a) => events(a, out),
    }
}

fn io(e: std::io::Error) -> Error {
    Error::InvalidParameter(format!("write failed: {e}"))
}

fn emit<W: Write>(out: &mut W, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| io(e.into()))?;
    writeln!(out).map_err(io)
}

fn parse_rates(text: &str) -> Result<RateFamily<f64>> {
    let rates: RateFamily<f64> = text.parse()?;
    rates.validate()?;
    Ok(rates)
}

fn alphabet(size: u32) -> Result<Alphabet> {
    Alphabet::new(size)
}

fn space(size: u32, geometry: Geometry, depth: usize, precision: Option<usize>) -> Result<SpaceConfig> {
    let precision = precision.unwrap_or(depth + 8);
    if precision < depth {
        return Err(Error::PrecisionBelowDepth { precision, depth });
    }
    SpaceConfig::new(alphabet(size)?, geometry, precision)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be positive and finite, got {t}")))
    }
}

fn check_replicates(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("replicates must be at least 1".into()));
    }
    Ok(())
}

fn classify<W: Write>(a: ClassifyArgs, out: &mut W) -> Result<i32> {
    let rates = parse_rates(&a.model.rates)?;
    alphabet(a.model.alphabet_size)?;
    if let Some(t) = a.t {
        check_time(t)?;
    }
    let report = PhaseReport::new(a.model.alphabet_size, &rates, a.t, a.trace)?;
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["schema"] = json!(SCHEMA);
    v["command"] = json!("classify");
    v["seed"] = json!(a.seed);
    emit(out, &v)?;
    Ok(0)
}

#[derive(Serialize)]
struct ReplicateSummary {
    replicate: usize,
    seed: u64,
    dust_empty: bool,
    dust_measure: f64,
    /// Exact dust measure, with `--decompose`.
    #[serde(skip_serializing_if = "Option::is_none")]
    dust_measure_exact: Option<String>,
    blocks: u64,
    b_counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<Value>,
}

fn simulate<W: Write>(a: SimulateArgs, out: &mut W) -> Result<i32> {
    let rates = parse_rates(&a.model.rates)?;
    check_time(a.t)?;
    check_replicates(a.replicates)?;
    let sp = space(a.model.alphabet_size, a.sim.geometry, a.sim.depth, a.sim.precision)?;
    let runs: Vec<ReplicateSummary> = (0..a.replicates)
        .into_par_iter()
        .map(|i| {
            let seed = replicate_seed(a.sim.seed, i as u64);
            let store = EventStore::from_origin(sp, rates.clone(), a.sim.depth, a.t, seed)?;
            if a.decompose {
                let d = decompose::<BigRational>(&store, a.t)?;
                Ok(ReplicateSummary {
                    replicate: i,
                    seed,
                    dust_empty: d.dust_is_empty(),
                    dust_measure: d.dust_measure.to_f64().unwrap_or(f64::NAN),
                    dust_measure_exact: Some(d.dust_measure.to_string()),
                    blocks: d.blocks.len() as u64,
                    b_counts: d.b_counts.clone(),
                    decomposition: Some(serde_json::to_value(&d).expect("decomposition serializes")),
                })
            } else {
                let c: SurvivorCounts = survivor_counts(&store, a.t)?;
                Ok(ReplicateSummary {
                    replicate: i,
                    seed,
                    dust_empty: c.dust_is_empty(),
                    dust_measure: c.dust_measure(sp.alphabet),
                    dust_measure_exact: None,
                    blocks: c.blocks,
                    b_counts: c.counts,
                    decomposition: None,
                })
            }
        })
        .collect::<Result<_>>()?;

    let empty = Summary::of(runs.iter().map(|r| f64::from(u8::from(r.dust_empty))));
    let measure = Summary::of(runs.iter().map(|r| r.dust_measure));
    let blocks = Summary::of(runs.iter().map(|r| r.blocks as f64));
    match a.output {
        Output::Json => {
            let v = json!({
                "schema": SCHEMA,
                "command": "simulate",
                "seed": a.sim.seed,
                "alphabet_size": a.model.alphabet_size,
                "rates": rates.to_string(),
                "t": a.t,
                "depth": a.sim.depth,
                "precision": sp.precision,
                "geometry": sp.geometry.to_string(),
                "replicates": a.replicates,
                "aggregate": {
                    "dust_empty_frequency": empty,
                    "dust_measure": measure,
                    "blocks": blocks,
                },
                "runs": runs,
            });
            emit(out, &v)?;
        }
        Output::Csv => {
            writeln!(out, "# schema={SCHEMA} seed={} replicates={}", a.sim.seed, a.replicates).map_err(io)?;
            writeln!(out, "replicate,seed,dust_empty,dust_measure,blocks,b_depth").map_err(io)?;
            for r in &runs {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.replicate,
                    r.seed,
                    u8::from(r.dust_empty),
                    r.dust_measure,
                    r.blocks,
                    r.b_counts.last().copied().unwrap_or(0)
                )
                .map_err(io)?;
            }
        }
    }
    Ok(0)
}

fn gwve<W: Write>(a: GwveArgs, out: &mut W) -> Result<i32> {
    let rates = parse_rates(&a.model.rates)?;
    if !(a.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let spec = GwveSpec::new(a.model.alphabet_size, rates.clone(), a.t)?;
    let means: Vec<f64> = (0..=a.depth).map(|n| spec.mean_b(n)).collect();
    let extinct: Vec<f64> = (0..=a.depth).map(|n| spec.extinct_prob_by(n)).collect();
    let limit = a.limit.then(|| spec.extinct_prob_limit(a.tol));
    let degeneracy = spec.degeneracy_test(a.horizon, a.tol)?;
    let simulated = if a.replicates > 0 {
        let runs: Vec<Vec<u64>> = (0..a.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(replicate_seed(a.seed, i as u64));
                spec.simulate(a.depth, &mut rng)
            })
            .collect::<Result<_>>()?;
        Some((0..=a.depth).map(|n| Summary::of(runs.iter().map(|r| r[n] as f64))).collect::<Vec<_>>())
    } else {
        None
    };
    match a.output {
        Output::Json => {
            let v = json!({
                "schema": SCHEMA,
                "command": "gwve",
                "seed": a.seed,
                "alphabet_size": a.model.alphabet_size,
                "rates": rates.to_string(),
                "t": a.t,
                "mean_b": means,
                "extinct_prob_by": extinct,
                "extinct_prob_limit": limit,
                "degeneracy": degeneracy,
                "simulated": simulated,
                "replicates": a.replicates,
            });
            emit(out, &v)?;
        }
        Output::Csv => {
            writeln!(out, "# schema={SCHEMA} seed={} replicates={}", a.seed, a.replicates).map_err(io)?;
            writeln!(out, "n,mean_b,extinct_prob_by,sim_mean,sim_stderr").map_err(io)?;
            for n in 0..=a.depth {
                let (m, se) = simulated
                    .as_ref()
                    .map_or((String::new(), String::new()), |s| (s[n].mean.to_string(), s[n].std_error.to_string()));
                writeln!(out, "{n},{},{},{m},{se}", means[n], extinct[n]).map_err(io)?;
            }
        }
    }
    Ok(0)
}

fn dimension<W: Write>(a: DimensionArgs, out: &mut W) -> Result<i32> {
    let rates = parse_rates(&a.model.rates)?;
    check_replicates(a.replicates)?;
    let size = a.model.alphabet_size;
    let sp = space(size, Geometry::CantorSet, a.depth, a.precision)?;
    let tail = rates.analytics(size)?;
    let mut grid: Vec<f64> = a.t.into_iter().chain(a.t_grid.iter().copied()).collect();
    if grid.is_empty() {
        return Err(Error::InvalidParameter("give --t or --t-grid".into()));
    }
    if a.relative {
        let t0 = crate::phase::critical_time(size, tail.cesaro_limsup)?;
        grid.iter_mut().for_each(|t| *t *= t0);
    }
    grid.iter().try_for_each(|&t| check_time(t))?;

    let mut reports = Vec::new();
    let mut regression = Vec::new();
    for &t in &grid {
        let counts: Vec<Vec<u64>> = (0..a.replicates)
            .into_par_iter()
            .map(|i| {
                let store = EventStore::from_origin(sp, rates.clone(), a.depth, t, replicate_seed(a.seed, i as u64))?;
                Ok(survivor_counts(&store, t)?.counts)
            })
            .collect::<Result<_>>()?;
        if a.regression {
            for (i, b) in counts.iter().enumerate().filter(|(_, b)| b[a.depth] > 0) {
                for (n, &v) in b.iter().enumerate().skip(1) {
                    regression.push((t, i, n, (v as f64).ln()));
                }
            }
        }
        let empirical = dust_dimension_empirical(size, Geometry::CantorSet, &counts)?;
        let analytic_dim = dust_dimension_analytic(size, Geometry::CantorSet, tail.cesaro_limsup, t)?;
        reports.push(DimensionReport { t, analytic_dim, empirical, conditioned_on_survival: true });
    }

    match (a.output, a.regression) {
        (Output::Csv, true) => {
            writeln!(out, "# schema={SCHEMA} seed={}", a.seed).map_err(io)?;
            writeln!(out, "t,replicate,n,log_b").map_err(io)?;
            for (t, i, n, y) in regression {
                writeln!(out, "{t},{i},{n},{y}").map_err(io)?;
            }
        }
        (Output::Csv, false) => {
            writeln!(out, "# schema={SCHEMA} seed={} replicates={}", a.seed, a.replicates).map_err(io)?;
            writeln!(out, "t,analytic,empirical,stderr,replicates_used").map_err(io)?;
            for r in &reports {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.t, r.analytic_dim, r.empirical.estimate, r.empirical.std_error, r.empirical.replicates_used
                )
                .map_err(io)?;
            }
        }
        (Output::Json, _) => {
            let v = json!({
                "schema": SCHEMA,
                "command": "dimension",
                "seed": a.seed,
                "alphabet_size": size,
                "rates": rates.to_string(),
                "depth": a.depth,
                "replicates": a.replicates,
                "reports": reports,
                "regression": a.regression.then_some(regression),
            });
            emit(out, &v)?;
        }
    }
    Ok(0)
}

fn flowcheck<W: Write>(a: FlowcheckArgs, out: &mut W) -> Result<i32> {
    let rates = parse_rates(&a.model.rates)?;
    check_time(a.horizon)?;
    let sp = space(a.model.alphabet_size, a.sim.geometry, a.sim.depth, a.sim.precision)?;
    let store = EventStore::from_origin(sp, rates.clone(), a.sim.depth, a.horizon, a.sim.seed)?;
    if let Some(w) = &a.inject_fault {
        let w: Word = w.parse()?;
        let w = Word::new(sp.alphabet, w.letters())?;
        store.inject_fault(&w);
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(replicate_seed(a.sim.seed, u64::MAX));
    let report = verify_flow_property(&store, a.samples, &mut rng)?;
    let v = json!({
        "schema": SCHEMA,
        "command": "flowcheck",
        "seed": a.sim.seed,
        "alphabet_size": a.model.alphabet_size,
        "rates": rates.to_string(),
        "depth": a.sim.depth,
        "precision": sp.precision,
        "geometry": sp.geometry.to_string(),
        "horizon": a.horizon,
        "fault": a.inject_fault,
        "report": report,
    });
    emit(out, &v)?;
    Ok(if report.passed() { 0 } else { EXIT_FLOW_VIOLATION })
}

fn events<W: Write>(a: EventsArgs, out: &mut W) -> Result<i32> {
    let rates = parse_rates(&a.model.rates)?;
    check_time(a.t)?;
    let sp = space(a.model.alphabet_size, a.sim.geometry, a.sim.depth, a.sim.precision)?;
    let store = EventStore::from_origin(sp, rates, a.sim.depth, a.t, a.sim.seed)?;
    writeln!(out, "# schema={SCHEMA} seed={}", a.sim.seed).map_err(io)?;
    store.write_csv(out, a.max_level.min(a.sim.depth))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<i32>, String) {
        let cli = Cli::try_parse_from(std::iter::once("segcoal").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let code = run(cli, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn classify_constant() {
        let (code, text) = run_args(&["classify", "-S", "2", "--rates", "constant:1"]);
        assert_eq!(code.unwrap(), 0);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["phase"], "Critical");
        assert!((v["t0"].as_f64().unwrap() - 0.693147).abs() < 1e-6);
        assert_eq!(v["schema"], SCHEMA);
    }

    #[test]
    fn missing_tail_is_invalid_input() {
        let (code, _) = run_args(&["classify", "-S", "2", "--rates", "table:1,2,3"]);
        assert_eq!(exit_code(&code.unwrap_err()), EXIT_INVALID_INPUT);
        let (code, _) = run_args(&["classify", "--rates", "bogus:1"]);
        assert_eq!(exit_code(&code.unwrap_err()), EXIT_INVALID_INPUT);
    }

    #[test]
    fn simulate_zero_rates() {
        let (code, text) = run_args(&["simulate", "--rates", "constant:0", "--t", "1", "--depth", "6", "--replicates", "5"]);
        assert_eq!(code.unwrap(), 0);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["aggregate"]["dust_empty_frequency"]["mean"], 0.0);
        assert_eq!(v["aggregate"]["dust_measure"]["mean"], 1.0);
    }

    #[test]
    fn output_is_reproducible() {
        let args = ["simulate", "--rates", "constant:1", "--t", "0.3", "--depth", "8", "--replicates", "6",
            "--seed", "9", "--decompose"];
        let (_, a) = run_args(&args);
        let (_, b) = run_args(&args);
        assert_eq!(a, b);
        assert!(a.contains("\"seed\": 9"));
    }

    #[test]
    fn flowcheck_codes() {
        let (code, _) = run_args(&["flowcheck", "--rates", "constant:1", "--depth", "8", "--samples", "100"]);
        assert_eq!(code.unwrap(), 0);
        let (code, _) = run_args(&["flowcheck", "--rates", "constant:1", "--depth", "8", "--samples", "200",
            "--inject-fault", ""]);
        assert_eq!(code.unwrap(), EXIT_FLOW_VIOLATION);
    }
}
