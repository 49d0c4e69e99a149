use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lossless::bounds::{
    bound_bounded_loss, bound_envelope, bound_subgaussian, delta_lossless_bounded, BoundReport, Corollary,
    SubgaussianProfile,
};
use lossless::discrete::{DeterministicMap, DiscreteJoint, LossMatrix};
use lossless::io::{dataset_to_csv_string, from_json_str, read_dataset_csv};
use lossless::mc::{run_plan, ExperimentPlan, Scenario};
use lossless::partition::{run_test, Bandwidth, Dataset, TestConfig};
use lossless::portfolio::{c_max_bound, growth_gap_bound, GrowthReport, MarketModel};
use lossless::select::greedy_select;
use lossless::synth::{gen_h0, gen_h1, gen_market, gen_markov_joint, horse_race_market, H0Config, H1Config, MarketSpec};
use lossless::{Error, Result};

#[derive(Parser)]
#[command(name = "lossless", version, about = "Test and quantify lossless transformations of features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args)]
struct Common {
    /// Input file; `-` or absent reads stdin where an input is required.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; absent writes to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Number of x columns expected in the input.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Number of z columns expected in the input.
    #[arg(long, global = true)]
    dprime: Option<usize>,
    #[arg(long, global = true, default_value_t = 1.5)]
    c1: f64,
    /// Exponent of the cell side schedule `h = n^-delta`.
    #[arg(long, global = true, default_value_t = 0.2)]
    delta: f64,
    /// Fixed cell side in scaled units; overrides the schedule.
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sample sizes below this are not checked against the Type I bound.
    #[arg(long, global = true, default_value_t = 1000)]
    min_n: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the partitioning test on a CSV dataset. Exit 0 accepts, 3 rejects.
    Test,
    /// Monte Carlo rejection rates across sample sizes.
    Mc {
        #[arg(long, value_enum, default_value_t = McScenario::H0)]
        scenario: McScenario,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Also write the full per-n JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Excess risk against its information-gap bound for a JSON problem.
    Bounds,
    /// Growth-rate gap against the information gap for a JSON market.
    Portfolio,
    /// Write a synthetic dataset or model.
    Gen {
        #[arg(long, value_enum)]
        scenario: GenScenario,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Generator parameters as JSON, as written alongside generated datasets.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Greedy forward search for coordinates `x_S` that the test accepts as lossless.
    Select,
}

#[derive(Clone, Copy, ValueEnum)]
enum McScenario {
    H0,
    H1,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenScenario {
    H0,
    H1,
    Markov,
    Market,
    HorseRace,
}

enum Outcome {
    Accept,
    Reject,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Accept) => ExitCode::SUCCESS,
        Ok(Outcome::Reject) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let common = cli.common;
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match cli.command {
        Command::Test => cmd_test(&common),
        Command::Mc { scenario, n_grid, reps, theta, json } => {
            cmd_mc(&common, scenario, n_grid, reps, theta, json.as_deref())
        }
        Command::Bounds => cmd_bounds(&common),
        Command::Portfolio => cmd_portfolio(&common),
        Command::Gen { scenario, n, theta, config } => cmd_gen(&common, scenario, n, theta, config.as_deref()),
        Command::Select => cmd_select(&common),
    }
}

fn test_config(common: &Common) -> Result<TestConfig> {
    let bandwidth = match common.h {
        Some(h) => Bandwidth::Fixed(h),
        None => Bandwidth::Exponent(common.delta),
    };
    TestConfig::new(common.c1, bandwidth)
}

fn read_input(common: &Common) -> Result<String> {
    let mut text = String::new();
    match common.input.as_deref() {
        Some(p) if p != Path::new("-") => text = fs::read_to_string(p)?,
        _ => {
            io::stdin().read_to_string(&mut text)?;
        }
    }
    Ok(text)
}

fn read_dataset(common: &Common) -> Result<Dataset> {
    let dims = match (common.d, common.dprime) {
        (Some(d), Some(dp)) => Some((d, dp)),
        (None, None) => None,
        _ => return Err(Error::InvalidArgument("--d and --dprime must be given together".into())),
    };
    read_dataset_csv(read_input(common)?.as_bytes(), dims)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn cmd_test(common: &Common) -> Result<Outcome> {
    let data = read_dataset(common)?;
    let outcome = run_test(&data, &test_config(common)?)?;
    emit(common.output.as_deref(), &to_json(&outcome)?)?;
    Ok(if outcome.reject { Outcome::Reject } else { Outcome::Accept })
}

fn cmd_mc(
    common: &Common,
    scenario: McScenario,
    n_grid: Vec<usize>,
    reps: usize,
    theta: f64,
    json: Option<&Path>,
) -> Result<Outcome> {
    let scenario = match scenario {
        McScenario::H0 => Scenario::H0(H0Config::default()),
        McScenario::H1 => Scenario::H1(H1Config { base: H0Config::default(), theta }),
        McScenario::File => Scenario::File(read_dataset(common)?),
    };
    let plan = ExperimentPlan {
        scenario,
        n_grid,
        reps,
        cfg: test_config(common)?,
        base_seed: common.seed.unwrap_or(0),
        min_n: common.min_n,
    };
    let result = run_plan(&plan)?;
    let csv = result.to_csv();
    let full = to_json(&result)?;
    emit(common.output.as_deref(), &csv)?;
    if let Some(p) = json {
        fs::write(p, full)?;
    }
    Ok(Outcome::Accept)
}

/// A bound problem: a joint of `(Y, X, Z)`, the map `T`, a loss, and which bound to apply.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsInput {
    joint: DiscreteJoint,
    map: DeterministicMap,
    loss: LossMatrix,
    #[serde(default = "default_corollary")]
    corollary: Corollary,
    /// Caller-asserted `sigma^2(y)`; derived from loss ranges when absent.
    #[serde(default)]
    sigma_sq: Option<Vec<f64>>,
    #[serde(default)]
    envelope: Option<Vec<f64>>,
    /// With `c`, also report whether `T` is `delta`-lossless for `||l||_inf <= c`.
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    c: Option<f64>,
}

fn default_corollary() -> Corollary {
    Corollary::Cor1
}

#[derive(Serialize)]
struct BoundsOutput {
    #[serde(flatten)]
    report: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_lossless: Option<bool>,
}

fn cmd_bounds(common: &Common) -> Result<Outcome> {
    let input: BoundsInput = from_json_str(&read_input(common)?)?;
    input.joint.check_map(&input.map)?;
    let report = match input.corollary {
        Corollary::Cor1 => bound_bounded_loss(&input.joint, &input.map, &input.loss)?,
        Corollary::Cor2 => {
            let profile = match input.sigma_sq {
                Some(s) => SubgaussianProfile::asserted(s, &input.joint.marginal_y())?,
                None => SubgaussianProfile::hoeffding(&input.joint, &input.loss)?,
            };
            bound_subgaussian(&input.joint, &input.map, &input.loss, &profile)?
        }
        Corollary::Cor2a => {
            let envelope = input
                .envelope
                .ok_or_else(|| Error::Schema { path: "envelope".into(), message: "required for cor2a".into() })?;
            bound_envelope(&input.joint, &input.map, &input.loss, &envelope)?
        }
    };
    let delta_lossless = match (input.delta, input.c) {
        (Some(delta), Some(c)) => Some(delta_lossless_bounded(&input.joint, &input.map, delta, c)?),
        (None, None) => None,
        _ => return Err(Error::Schema { path: "delta".into(), message: "delta and c must be given together".into() }),
    };
    emit(common.output.as_deref(), &to_json(&BoundsOutput { report, delta_lossless })?)?;
    Ok(Outcome::Accept)
}

#[derive(Serialize)]
struct PortfolioOutput {
    #[serde(flatten)]
    report: GrowthReport,
    c_max: f64,
    c_max_bound: f64,
}

fn cmd_portfolio(common: &Common) -> Result<Outcome> {
    let market: MarketModel = from_json_str(&read_input(common)?)?;
    let report = growth_gap_bound(&market)?;
    let out = PortfolioOutput {
        c_max: market.c_max(),
        c_max_bound: c_max_bound(&market, report.mi_gap),
        report,
    };
    emit(common.output.as_deref(), &to_json(&out)?)?;
    Ok(Outcome::Accept)
}

#[derive(Serialize)]
struct BoundsProblem<'a> {
    joint: &'a DiscreteJoint,
    map: &'a DeterministicMap,
    loss: &'a LossMatrix,
}

fn cmd_gen(
    common: &Common,
    scenario: GenScenario,
    n: Option<usize>,
    theta: f64,
    config: Option<&Path>,
) -> Result<Outcome> {
    let seed = common.seed;
    let text = match config {
        Some(p) => Some(fs::read_to_string(p)?),
        None => None,
    };
    let (body, config_json) = match scenario {
        GenScenario::H0 => {
            let mut cfg: H0Config = match &text {
                Some(t) => from_json_str(t)?,
                None => H0Config::default(),
            };
            cfg.n = n.unwrap_or(cfg.n);
            cfg.seed = seed.unwrap_or(cfg.seed);
            (dataset_to_csv_string(&gen_h0(&cfg)?), Some(to_json(&cfg)?))
        }
        GenScenario::H1 => {
            let mut cfg: H1Config = match &text {
                Some(t) => from_json_str(t)?,
                None => H1Config { base: H0Config::default(), theta },
            };
            cfg.base.n = n.unwrap_or(cfg.base.n);
            cfg.base.seed = seed.unwrap_or(cfg.base.seed);
            (dataset_to_csv_string(&gen_h1(&cfg)?), Some(to_json(&cfg)?))
        }
        GenScenario::Markov => {
            let (joint, map) = gen_markov_joint([3, 4, 2], seed.unwrap_or(0))?;
            let loss = LossMatrix::zero_one(joint.ny())?;
            (to_json(&BoundsProblem { joint: &joint, map: &map, loss: &loss })?, None)
        }
        GenScenario::Market => {
            let spec: MarketSpec = match &text {
                Some(t) => from_json_str(t)?,
                None => MarketSpec::default(),
            };
            (to_json(&gen_market(&spec, seed.unwrap_or(0))?)?, None)
        }
        GenScenario::HorseRace => (to_json(&horse_race_market())?, None),
    };
    match (&common.output, config_json) {
        (Some(out), Some(cfg)) => {
            let mut side = out.clone().into_os_string();
            side.push(".config.json");
            fs::write(out, body)?;
            fs::write(side, cfg)?;
        }
        (out, _) => emit(out.as_deref(), &body)?,
    }
    Ok(Outcome::Accept)
}

fn cmd_select(common: &Common) -> Result<Outcome> {
    let data = read_dataset(common)?;
    let selection = greedy_select(&data, &test_config(common)?)?;
    if let Some(w) = &selection.warning {
        eprintln!("warning: {w}");
    }
    emit(common.output.as_deref(), &to_json(&selection)?)?;
    Ok(Outcome::Accept)
}
