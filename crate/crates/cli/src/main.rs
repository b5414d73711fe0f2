mod output;
mod reproduce;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dwellcert::certifier::certify;
use dwellcert::family::{classify, commutator_norms, find_m_rho, spectral_radii, DerivedParams};
use dwellcert::simulator::{self, oracle_check_certificate, MonteCarloParams};
use dwellcert::switching::periodic_signal;
use dwellcert::{Config, Error, SignalClass, SwitchedFamily, SwitchingSignal};

/// Dwell-time stability certificates for discrete-time switched linear
/// systems.
#[derive(Parser)]
#[command(name = "dwellcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stable/unstable partition, norms, m and rho.
    Classify(ConfigArg),
    /// Certify the family and print the certificate.
    Certify {
        #[command(flatten)]
        config: ConfigArg,
        /// Decay rate to test; the largest feasible rate is searched when absent.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Simulate random or periodic switching and write one CSV per run.
    Simulate(SimulateArgs),
    /// Check a certificate against every admissible product up to a length.
    Oracle {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 15)]
        max_len: usize,
    },
    /// Recompute the reference examples and compare with published values.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    num_signals: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Repeat a fixed pattern instead of drawing random signals, e.g. "1:3,2:3".
    #[arg(long)]
    periodic: Option<String>,
    /// Initial state for --periodic, e.g. "-1,1". Drawn from the seed otherwise.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Draw from all dwell-admissible signals rather than the restricted class.
    #[arg(long)]
    unrestricted: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also print summary.json to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Ex1,
    Ex2,
    Ex3,
    All,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum, default_value_t = Which::All)]
    which: Which,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    num_signals: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Write trajectory CSVs and summaries here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print rows as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Failures that end the program, with their exit codes.
#[derive(Debug)]
enum Failure {
    /// Bad input or an unmet assumption: 2.
    Input(String),
    /// Filesystem trouble: 3.
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify(c) => cmd_classify(&c.config),
        Command::Certify { config, lambda } => cmd_certify(&config.config, lambda),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Oracle {
            config,
            lambda,
            max_len,
        } => cmd_oracle(&config.config, lambda, max_len),
        Command::Reproduce(args) => cmd_reproduce(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(path: &Path) -> Result<Config, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    Ok(Config::from_json(&text)?)
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values always serialize")
    );
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

fn cmd_classify(path: &Path) -> Outcome {
    let config = load_config(path)?;
    let fam = config.family()?;
    let part = classify(&fam)?;
    let norms = fam
        .matrices()
        .iter()
        .map(|a| a.spectral_norm())
        .collect::<dwellcert::Result<Vec<_>>>()?;
    let mut power_norms = Vec::new();
    for &j in &part.stable {
        let mut rows = Vec::new();
        for n in fam.min_dwell()..=fam.max_dwell() {
            rows.push(json!({"n": n, "norm": fam.matrix(j).pow(n).spectral_norm()?}));
        }
        power_norms.push(json!({"subsystem": j + 1, "norms": rows}));
    }
    let commutators: Vec<Value> = commutator_norms(&fam, &part)?
        .iter()
        .map(
            |c| json!({"i": c.unstable + 1, "j": c.stable + 1, "p": c.p, "q": c.q, "norm": c.norm}),
        )
        .collect();
    let mut out = json!({
        "dimension": fam.dim(),
        "num_subsystems": fam.len(),
        "delta": fam.min_dwell(),
        "Delta": fam.max_dwell(),
        "spectral_radii": spectral_radii(&fam)?,
        "norms": norms,
        "M": fam.max_norm()?,
        "P_S": one_based(&part.stable),
        "P_U": one_based(&part.unstable),
        "stable_power_norms": power_norms,
        "commutators": commutators,
    });
    let code = match find_m_rho(&fam, &part) {
        Ok((m, rho)) => {
            out["m"] = json!(m);
            out["rho"] = json!(rho);
            0
        }
        Err(Error::AssumptionViolated(msg)) => {
            out["assumption_violated"] = json!(msg);
            2
        }
        Err(e) => return Err(e.into()),
    };
    print_json(&out);
    Ok(code)
}

fn cmd_certify(path: &Path, lambda: Option<f64>) -> Outcome {
    let config = load_config(path)?;
    let fam = config.family()?;
    let part = classify(&fam)?;
    let dp = match DerivedParams::derive(&fam, &part) {
        Ok(dp) => dp,
        Err(Error::AssumptionViolated(msg)) => {
            print_json(&json!({"verdict": "AssumptionViolated", "failure": msg}));
            return Ok(2);
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(l) = lambda {
        if !(l.is_finite() && l > 0.0) {
            return Err(Failure::Input(format!(
                "--lambda must be positive, got {l}"
            )));
        }
    }
    let cert = certify(&fam, &part, &dp, lambda.or(config.lambda))?;
    print_json(&serde_json::to_value(&cert).expect("certificates serialize"));
    Ok(if cert.is_certified() { 0 } else { 1 })
}

fn signal_class(fam: &SwitchedFamily, unrestricted: bool) -> Result<SignalClass, Failure> {
    let part = classify(fam)?;
    if unrestricted {
        return Ok(SignalClass::unrestricted(fam, &part));
    }
    let dp = DerivedParams::derive(fam, &part)?;
    Ok(SignalClass::restricted(fam, &part, &dp))
}

fn parse_x0(spec: &str, dim: usize) -> Result<Vec<f64>, Failure> {
    let x0 = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Input(format!("--x0 {spec:?}: {e}")))?;
    if x0.len() != dim || x0.iter().any(|v| !v.is_finite()) {
        return Err(Failure::Input(format!(
            "--x0 needs {dim} finite comma-separated values, got {spec:?}"
        )));
    }
    Ok(x0)
}

/// Repeats `pattern` until it covers `horizon` steps, then cuts it there.
fn periodic_to_horizon(spec: &str, horizon: usize) -> Result<SwitchingSignal, Failure> {
    let pattern = SwitchingSignal::parse_pattern(spec)?;
    let period: usize = pattern.iter().map(|s| s.dwell as usize).sum();
    let reps = horizon.div_ceil(period).max(1);
    Ok(periodic_signal(&pattern, reps)?.truncated(horizon))
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let config = load_config(&args.config.config)?;
    let fam = config.family()?;
    let params = MonteCarloParams {
        num_signals: args.num_signals.unwrap_or(config.num_signals),
        horizon: args.horizon.unwrap_or(config.horizon),
        x0_box: config.x0_box,
        seed: args.seed.unwrap_or(config.seed),
    };
    let class_name = if args.unrestricted {
        "unrestricted"
    } else {
        "restricted"
    };
    let (mode, runs) = match &args.periodic {
        Some(spec) => {
            let signal = periodic_to_horizon(spec, params.horizon)?;
            if let Some(s) = signal.segments.iter().find(|s| s.index >= fam.len()) {
                return Err(Failure::Input(format!(
                    "--periodic names subsystem {} but the family has {}",
                    s.index + 1,
                    fam.len()
                )));
            }
            let x0 = match &args.x0 {
                Some(spec) => parse_x0(spec, fam.dim())?,
                None => output::draw_x0(params.seed, fam.dim(), params.x0_box),
            };
            let run = simulator::score_run(&fam, 0, signal, x0, params.horizon)?;
            ("periodic", vec![run])
        }
        None => {
            if args.x0.is_some() {
                return Err(Failure::Input("--x0 applies only with --periodic".into()));
            }
            let class = signal_class(&fam, args.unrestricted)?;
            let report = simulator::monte_carlo(&fam, &class, params)?;
            ("monte_carlo", report.runs)
        }
    };
    let summary = output::write_simulation(&args.out, mode, class_name, &params, &runs)?;
    if args.json {
        print_json(&summary);
    } else {
        let s = simulator::summarize(&runs);
        println!(
            "{} run(s), {} divergent, wrote {}",
            s.num_runs,
            s.divergent_runs,
            args.out.display()
        );
    }
    Ok(0)
}

fn cmd_oracle(path: &Path, lambda: Option<f64>, max_len: usize) -> Outcome {
    let config = load_config(path)?;
    let fam = config.family()?;
    let part = classify(&fam)?;
    let dp = DerivedParams::derive(&fam, &part)?;
    let cert = certify(&fam, &part, &dp, lambda.or(config.lambda))?;
    let class = SignalClass::restricted(&fam, &part, &dp);
    let report = match oracle_check_certificate(&fam, &class, &cert, max_len) {
        Ok(r) => r,
        Err(e @ Error::NotCertified(_)) => {
            eprintln!("{e}");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    print_json(&json!({
        "verdict": cert.verdict.as_str(),
        "report": serde_json::to_value(&report).expect("reports serialize"),
    }));
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_reproduce(args: &ReproduceArgs) -> Outcome {
    let which: &[Which] = match args.which {
        Which::All => &[Which::Ex1, Which::Ex2, Which::Ex3],
        Which::Ex1 => &[Which::Ex1],
        Which::Ex2 => &[Which::Ex2],
        Which::Ex3 => &[Which::Ex3],
    };
    let opts = reproduce::Options {
        seed: args.seed,
        num_signals: args.num_signals,
        horizon: args.horizon,
        out: args.out.clone(),
    };
    let mut sections = Vec::new();
    for w in which {
        let (name, rows) = match w {
            Which::Ex1 => ("ex1", reproduce::ex1(&opts)?),
            Which::Ex2 => ("ex2", reproduce::ex2(&opts)?),
            Which::Ex3 => ("ex3", reproduce::ex3(&opts)?),
            Which::All => unreachable!(),
        };
        sections.push((name, rows));
    }
    let all_pass = sections
        .iter()
        .all(|(_, rows)| rows.iter().all(|r| r.passed() != Some(false)));
    if args.json {
        let value: Vec<Value> = sections
            .iter()
            .map(|(name, rows)| json!({"example": name, "rows": rows.iter().map(|r| r.to_json()).collect::<Vec<_>>()}))
            .collect();
        print_json(&Value::Array(value));
    } else {
        for (name, rows) in &sections {
            println!("[{name}]");
            for r in rows {
                println!("  {r}");
            }
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}
