//! Command-line front end: kernel constants, estimation from CSV files,
//! path simulation and the Monte-Carlo experiment grid.

mod format;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;

use format::{human, human_opt, json_num, json_opt, object};
use jumpact::estimator::default_alpha;
use jumpact::experiment::{emit, run_grid, ExperimentGrid, Method, QUICK_REPS};
use jumpact::simulate::{Scaling, DEFAULT_N, DEFAULT_NOISE_SD};
use jumpact::{
    aj_estimate, estimate, make_constants, simulate_path, AjConfig, EstimatorConfig, LogPricePath,
    SimulationModel,
};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ncommit: ",
    env!("JUMPACT_COMMIT"),
    "\ntarget: ",
    env!("JUMPACT_TARGET"),
    "\nprofile: ",
    env!("JUMPACT_PROFILE"),
);

#[derive(Parser)]
#[command(name = "jumpact", version, long_version = LONG_VERSION, about = "Jump activity estimation for high-frequency log-prices")]
struct Cli {
    /// TOML file with one table per subcommand; keys mirror the flags, and
    /// flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the kernel constants at (beta, rho).
    Constants(ConstantsArgs),
    /// Estimate the jump activity index of a log-price series.
    Estimate(EstimateArgs),
    /// Simulate one path of the test model.
    Simulate(SimulateArgs),
    /// Run the Monte-Carlo grid and write CSV tables.
    Experiment(ExperimentArgs),
}

#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ConstantsArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Multiscale,
    Aj,
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScalingArg {
    Integral,
    Level,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Integral => Scaling::Integral,
            ScalingArg::Level => Scaling::Level,
        }
    }
}

#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct EstimateArgs {
    /// CSV file with a header row, one observation per line in time order.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Column holding the log-prices [default: logprice]
    #[arg(long)]
    column: Option<String>,
    /// [default: multiscale]
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Number of time-scales [default: 3]
    #[arg(long)]
    m: Option<usize>,
    /// Threshold constant in tau = c n^alpha [default: 0.05]
    #[arg(long)]
    c: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    rho: Option<f64>,
    /// Threshold rate [default: m / (2(m+1)), or 1/5 for aj]
    #[arg(long)]
    alpha: Option<f64>,
    /// Confidence level [default: 0.95]
    #[arg(long)]
    gamma: Option<f64>,
    /// Multiply every log-price by this factor before estimating [default: 1]
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    json: bool,
}

#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct SimulateArgs {
    #[arg(long)]
    beta: Option<f64>,
    /// Probability that a step carries a jump above 0.2
    #[arg(long)]
    p: Option<f64>,
    /// Number of observations [default: 23400]
    #[arg(long)]
    n: Option<usize>,
    /// Standard deviation of the observation noise [default: 0.01]
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replication index within the seed [default: 0]
    #[arg(long)]
    replication: Option<u64>,
    /// How the activity profile enters the jump part [default: integral]
    #[arg(long, value_enum)]
    scaling: Option<ScalingArg>,
    /// Observed (noisy) path
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Noise-free path
    #[arg(long, value_name = "FILE")]
    clean_out: Option<PathBuf>,
}

#[derive(Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ExperimentArgs {
    /// [default: 0.4,0.8,1.2,1.6]
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// [default: 0.005,0.01,0.02]
    #[arg(long, value_delimiter = ',')]
    ps: Option<Vec<f64>>,
    /// Replications per cell [default: 10000]
    #[arg(long, conflicts_with = "quick")]
    reps: Option<usize>,
    /// Use 2000 replications per cell
    #[arg(long)]
    #[serde(default)]
    quick: bool,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long, env = "JUMPACT_THREADS")]
    threads: Option<usize>,
    /// Observations per path [default: 23400]
    #[arg(long)]
    n: Option<usize>,
    /// [default: 0.01]
    #[arg(long)]
    noise_sd: Option<f64>,
    /// [default: integral]
    #[arg(long, value_enum)]
    scaling: Option<ScalingArg>,
    /// Exclude failed replications instead of aborting
    #[arg(long)]
    #[serde(default)]
    lenient: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    constants: ConstantsArgs,
    #[serde(default)]
    estimate: EstimateArgs,
    #[serde(default)]
    simulate: SimulateArgs,
    #[serde(default)]
    experiment: ExperimentArgs,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<jumpact::Error> for Failure {
    fn from(e: jumpact::Error) -> Self {
        match e {
            jumpact::Error::Domain {
                name,
                value,
                expected,
            } => Failure::Usage(format!(
                "invalid value {value} for --{}: expected {expected}",
                name.replace('_', "-")
            )),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| Failure::Usage(format!("missing required flag --{flag}")))
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("JSON values serialize")
    );
}

fn constants(args: ConstantsArgs, file: ConstantsArgs) -> CliResult<()> {
    let beta = required(args.beta.or(file.beta), "beta")?;
    let rho = required(args.rho.or(file.rho), "rho")?;
    let k = make_constants(beta, rho)?;
    let fields = [
        ("beta", k.beta),
        ("rho", k.rho),
        ("k_beta", k.k_beta),
        ("k_beta_rho", k.k_beta_rho),
        ("kbar_beta_rho", k.kbar_beta_rho),
        ("kbar_beta_1", k.kbar_beta_1),
        ("c_beta_rho", k.c_beta_rho),
        ("c_beta", k.c_beta),
    ];
    if args.json || file.json {
        print_json(&object(fields.map(|(name, x)| (name, json_num(x)))));
    } else {
        for (name, x) in fields {
            println!("{name:<14} {}", human(x));
        }
    }
    Ok(())
}

fn estimate_cmd(args: EstimateArgs, file: EstimateArgs) -> CliResult<()> {
    let input = required(args.input.or(file.input), "input")?;
    let column = args
        .column
        .or(file.column)
        .unwrap_or_else(|| "logprice".into());
    let method = args.method.or(file.method).unwrap_or(MethodArg::Multiscale);
    let m = args.m.or(file.m).unwrap_or(3);
    let c = args.c.or(file.c).unwrap_or(0.05);
    let rho = args.rho.or(file.rho).unwrap_or(2.0);
    let gamma = args.gamma.or(file.gamma).unwrap_or(0.95);
    let scale = args.scale.or(file.scale).unwrap_or(1.0);
    let alpha = args.alpha.or(file.alpha).unwrap_or(match method {
        MethodArg::Multiscale => default_alpha(m),
        MethodArg::Aj => AjConfig::default().alpha,
    });
    let json = args.json || file.json;

    // check every flag before touching the input
    let config = EstimatorConfig {
        m,
        rho,
        c,
        alpha,
        gamma_levels: vec![gamma],
        ..EstimatorConfig::with_scales(m)
    };
    let aj = AjConfig { c, rho, alpha };
    match method {
        MethodArg::Multiscale => config.validate()?,
        MethodArg::Aj => {
            aj.validate()?;
            jumpact::interval::two_sided_quantile(gamma)?;
        }
    }
    if !(scale.is_finite() && scale != 0.0) {
        return Err(Failure::Usage(format!(
            "invalid value {scale} for --scale: expected a finite non-zero factor"
        )));
    }

    let mut path = LogPricePath::from_csv_file(&input, &column)?;
    if scale != 1.0 {
        path = path.scaled(scale)?;
    }

    let report = match method {
        MethodArg::Multiscale => {
            let e = estimate(&path, &config)?;
            let ci = e.confidence_interval(gamma)?;
            EstimateReport {
                method: Method::Multiscale,
                beta: e.beta_hat,
                sigma_hat: e.sigma_hat,
                tau_n: e.tau_n,
                a_tau: e.a_tau,
                a_rho_tau: e.a_rho_tau,
                n: e.n,
                ci,
                flags: vec![
                    ("clipped_low", e.clipped_low),
                    ("clipped_high", e.clipped_high),
                    ("counts_clipped", e.counts_clipped),
                    ("degenerate_ratio", e.degenerate_ratio),
                ],
            }
        }
        MethodArg::Aj => {
            let e = aj_estimate(&path, &aj)?;
            let ci = e.confidence_interval(gamma)?;
            EstimateReport {
                method: Method::Aj,
                beta: e.beta_tilde,
                sigma_hat: None,
                tau_n: e.tau_n,
                a_tau: e.count_tau as f64,
                a_rho_tau: e.count_rho_tau as f64,
                n: path.len(),
                ci,
                flags: vec![("clipped", e.clipped)],
            }
        }
    };
    if json {
        print_json(&report.json());
    } else {
        print!("{}", report.human());
    }
    Ok(())
}

struct EstimateReport {
    method: Method,
    beta: f64,
    sigma_hat: Option<f64>,
    tau_n: f64,
    a_tau: f64,
    a_rho_tau: f64,
    n: usize,
    ci: jumpact::ConfidenceInterval,
    flags: Vec<(&'static str, bool)>,
}

impl EstimateReport {
    fn json(&self) -> Value {
        let flags = Value::Object(
            self.flags
                .iter()
                .map(|&(k, v)| (k.to_string(), Value::Bool(v)))
                .collect(),
        );
        object([
            ("method", Value::String(self.method.tag().into())),
            ("n", Value::from(self.n)),
            ("beta_hat", json_num(self.beta)),
            ("sigma_hat", json_opt(self.sigma_hat)),
            ("tau_n", json_num(self.tau_n)),
            ("a_tau", json_num(self.a_tau)),
            ("a_rho_tau", json_num(self.a_rho_tau)),
            (
                "ci",
                object([
                    ("gamma", json_num(self.ci.gamma)),
                    ("lo", json_opt(self.ci.lo())),
                    ("hi", json_opt(self.ci.hi())),
                    ("empty", Value::Bool(self.ci.is_empty())),
                ]),
            ),
            ("flags", flags),
        ])
    }

    fn human(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method     {}", self.method);
        let _ = writeln!(s, "n          {}", self.n);
        let _ = writeln!(s, "estimate   {}", human(self.beta));
        let _ = writeln!(s, "sigma_hat  {}", human_opt(self.sigma_hat));
        let _ = writeln!(s, "tau_n      {}", human(self.tau_n));
        let _ = writeln!(s, "a_tau      {}", human(self.a_tau));
        let _ = writeln!(s, "a_rho_tau  {}", human(self.a_rho_tau));
        let level = human(self.ci.gamma);
        match (self.ci.lo(), self.ci.hi()) {
            (Some(lo), Some(hi)) => {
                let _ = writeln!(
                    s,
                    "interval   [{}, {}] at level {level}",
                    human(lo),
                    human(hi)
                );
            }
            _ => {
                let _ = writeln!(s, "interval   empty at level {level}");
            }
        }
        let raised: Vec<&str> = self.flags.iter().filter(|f| f.1).map(|f| f.0).collect();
        if !raised.is_empty() {
            let _ = writeln!(s, "flags      {}", raised.join(", "));
        }
        s
    }
}

fn simulate_cmd(args: SimulateArgs, file: SimulateArgs) -> CliResult<()> {
    let beta = required(args.beta.or(file.beta), "beta")?;
    let p = required(args.p.or(file.p), "p")?;
    let seed = required(args.seed.or(file.seed), "seed")?;
    let out = required(args.out.or(file.out), "out")?;
    let clean_out = args.clean_out.or(file.clean_out);
    let n = args.n.or(file.n).unwrap_or(DEFAULT_N);
    let noise_sd = args.noise_sd.or(file.noise_sd).unwrap_or(DEFAULT_NOISE_SD);
    let replication = args.replication.or(file.replication).unwrap_or(0);
    let scaling = args
        .scaling
        .or(file.scaling)
        .map_or(Scaling::default(), Scaling::from);

    let mut model = SimulationModel::new(beta, p, n, noise_sd, seed)?;
    model.scaling = scaling;
    let sim = simulate_path(&model, replication)?;
    sim.observed.write_csv_file(&out)?;
    if let Some(clean) = clean_out {
        sim.clean.write_csv_file(&clean)?;
    }
    Ok(())
}

fn experiment_cmd(args: ExperimentArgs, file: ExperimentArgs) -> CliResult<()> {
    let out = required(args.out.or(file.out), "out")?;
    let quick = args.quick || (args.reps.is_none() && file.quick);
    let defaults = ExperimentGrid::default();
    let reps = if quick {
        QUICK_REPS
    } else {
        args.reps.or(file.reps).unwrap_or(defaults.reps)
    };
    let grid = ExperimentGrid {
        betas: args.betas.or(file.betas).unwrap_or(defaults.betas),
        ps: args.ps.or(file.ps).unwrap_or(defaults.ps),
        reps,
        n: args.n.or(file.n).unwrap_or(defaults.n),
        noise_sd: args.noise_sd.or(file.noise_sd).unwrap_or(defaults.noise_sd),
        scaling: args
            .scaling
            .or(file.scaling)
            .map_or(defaults.scaling, Scaling::from),
        base_seed: args.seed.or(file.seed).unwrap_or(defaults.base_seed),
        strict: !(args.lenient || file.lenient),
        ..defaults
    };
    let threads = args.threads.or(file.threads).unwrap_or(0);
    grid.validate()?;

    let table = run_grid(&grid, threads)?;
    emit(&table, &out)?;
    println!(
        "{:<6} {:<7} {:<11} {:>9} {:>9} {:>9} {:>9} {:>6}",
        "beta", "p", "method", "mean", "std", "coverage", "rmse", "reps"
    );
    for c in &table.cells {
        println!(
            "{:<6} {:<7} {:<11} {:>9} {:>9} {:>9} {:>9} {:>6}",
            c.beta_true,
            c.p,
            c.method.tag(),
            human(c.mean),
            human(c.std_dev),
            human(c.coverage),
            human(c.rmse),
            c.reps_effective
        );
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let file = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Constants(a) => constants(a, file.constants),
        Command::Estimate(a) => estimate_cmd(a, file.estimate),
        Command::Simulate(a) => simulate_cmd(a, file.simulate),
        Command::Experiment(a) => experiment_cmd(a, file.experiment),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
