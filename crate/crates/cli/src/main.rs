use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use starnet_core::encoding::generate_table;
use starnet_core::export::{self, RunManifest};
use starnet_core::lhv::{self, DEFAULT_MAX_STATES};
use starnet_core::network::{self, EvaluationReport, ScenarioConfig};
use starnet_core::optimize::{self, SeesawOptions, SweepResult};
use starnet_core::sos;
use starnet_core::Error;

const EXIT_CHECK: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_USAGE: u8 = 4;
const EXIT_RUNTIME: u8 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "starnet",
    version,
    about = "n-locality inequalities for star networks"
)]
struct Cli {
    /// Worker threads (STARNET_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Classical bound, quantum optimum and their ratio over a range of m.
    Bounds {
        #[arg(long, default_value_t = 2)]
        m_min: usize,
        #[arg(long, default_value_t = 50)]
        m_max: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimal strategy, SOS tightness and classical attainment.
    Verify {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate the optimal (or a random) quantum strategy.
    Quantum {
        #[command(flatten)]
        sc: ScenarioArgs,
        /// Werner visibility on every link.
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        #[command(flatten)]
        rand: RandomArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exhaustive maximum over deterministic strategies.
    LhvBrute {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sum-of-squares certificate for the optimal (or a random) strategy.
    SosCheck {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[command(flatten)]
        rand: RandomArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Delta of the optimal strategy against Werner visibility.
    Sweep {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[arg(long, default_value_t = 0.0)]
        v_min: f64,
        #[arg(long, default_value_t = 1.0)]
        v_max: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Alternating optimization from several random starts.
    Seesaw {
        #[command(flatten)]
        sc: ScenarioArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Single pair against multiple pairs per link at visibility v.
    Activate {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long)]
        v: f64,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Convert a JSON evaluation or sweep report.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Bell pairs per link (default ⌊m/2⌋).
    #[arg(long)]
    copies: Option<usize>,
}

impl ScenarioArgs {
    fn config(&self) -> starnet_core::Result<ScenarioConfig> {
        match self.copies {
            Some(c) => ScenarioConfig::with_copies(self.n, self.m, c),
            None => ScenarioConfig::new(self.n, self.m),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct RandomArgs {
    /// Use random involutions instead of the optimal construction.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SearchArgs {
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of restarts.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutArgs {
    /// Output file; a manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Check(String),
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Capacity(_) => EXIT_CAPACITY,
        Error::InvalidScenario(_)
        | Error::Domain(_)
        | Error::Index { .. }
        | Error::Dimension(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

struct Emitter {
    command: &'static str,
    params: serde_json::Value,
    seed: Option<u64>,
    out: OutArgs,
}

impl Emitter {
    fn format(&self, default: Format) -> Format {
        self.out.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Outcome {
        match &self.out.out {
            Some(path) => {
                let mut manifest = RunManifest::new(self.command, self.params.clone(), self.seed);
                let mpath = export::write_with_manifest(path, text, &mut manifest)?;
                info!("wrote {} and {}", path.display(), mpath.display());
                Ok(())
            }
            None => {
                print!("{text}");
                if !text.ends_with('\n') {
                    println!();
                }
                Ok(())
            }
        }
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Outcome {
        let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        self.emit(&text)
    }

    fn csv_unsupported(&self) -> Outcome {
        if self.out.format == Some(Format::Csv) {
            return Err(Failure::Usage(format!("{} has no CSV form", self.command)));
        }
        Ok(())
    }
}

/// Summary lines go to stderr when stdout carries the JSON report.
fn summary(to_stderr: bool, line: String) {
    if to_stderr {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

fn cmd_bounds(m_min: usize, m_max: usize, e: &Emitter) -> Outcome {
    let rows = network::bounds_table(m_min..=m_max)?;
    match e.format(Format::Csv) {
        Format::Csv => e.emit(&export::bounds_csv(&rows)?),
        Format::Json => e.emit_json(&rows),
    }
}

fn cmd_verify(sc: &ScenarioArgs, max_states: u64, e: &Emitter) -> Outcome {
    e.csv_unsupported()?;
    let cfg = sc.config()?;
    let table = generate_table(cfg.m)?;
    let strat = network::build_optimal_strategy(&cfg)?;
    let report = network::evaluate_quantum(&cfg, &table, &strat)?;
    let cert = sos::certificate(&cfg, &table, &strat)?;
    let bound = lhv::classical_bound(cfg.m)?;
    let brute = match lhv::exhaustive_strategy_max(&cfg, max_states) {
        Ok(r) => r.alpha_strategy_max,
        Err(err) if err.is_capacity() => None,
        Err(err) => return Err(err.into()),
    };

    let json_on_stdout = e.out.out.is_none() && e.out.format == Some(Format::Json);
    let check = |ok: bool, name: &str, detail: String| {
        summary(
            json_on_stdout,
            format!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" }),
        );
        ok
    };
    summary(
        json_on_stdout,
        format!(
            "verify n={} m={} copies={}",
            cfg.n, cfg.m, cfg.copies_per_link
        ),
    );
    let qopt = network::quantum_optimum_formula(cfg.m);
    let mut failed = Vec::new();
    if !check(
        (report.delta - qopt).abs() < 1e-8,
        "optimal delta",
        format!(
            "{} (expected {})",
            export::fmt_sig(report.delta),
            export::fmt_sig(qopt)
        ),
    ) {
        failed.push("optimal delta");
    }
    if !check(
        cert.tight && cert.slack_ok,
        "sos tightness",
        format!("gamma = {:.3e}", cert.gamma),
    ) {
        failed.push("sos tightness");
    }
    let attained = bound.agree && brute.is_none_or(|b| b == bound.alpha_closed);
    let brute_text = match brute {
        Some(b) => b.to_string(),
        None => "skipped".into(),
    };
    if !check(
        attained,
        "classical attainment",
        format!(
            "closed {} / enumerated {} / exhaustive {brute_text}",
            bound.alpha_closed, bound.alpha_enumerated
        ),
    ) {
        failed.push("classical attainment");
    }

    let json = json!({
        "n": cfg.n,
        "m": cfg.m,
        "copies": cfg.copies_per_link,
        "delta": report.delta,
        "qopt": qopt,
        "alpha": bound.alpha_closed,
        "alpha_enumerated": bound.alpha_enumerated,
        "alpha_exhaustive": brute,
        "gamma": cert.gamma,
        "tight": cert.tight,
        "passed": failed.is_empty(),
        "failed_checks": failed,
    });
    if e.out.out.is_some() || e.out.format == Some(Format::Json) {
        e.emit_json(&json)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed.join(", ")))
    }
}

fn build_strategy(
    cfg: &ScenarioConfig,
    rand: &RandomArgs,
) -> starnet_core::Result<network::QuantumStrategy> {
    if rand.random {
        network::random_strategy(cfg, &mut ChaCha8Rng::seed_from_u64(rand.seed))
    } else {
        network::build_optimal_strategy(cfg)
    }
}

fn cmd_quantum(sc: &ScenarioArgs, v: f64, rand: &RandomArgs, e: &Emitter) -> Outcome {
    let cfg = sc.config()?;
    let table = generate_table(cfg.m)?;
    let strat = build_strategy(&cfg, rand)?;
    let strat = if v < 1.0 {
        optimize::with_werner_links(&strat, cfg.copies_per_link, v)?
    } else {
        strat
    };
    let report = network::evaluate_quantum(&cfg, &table, &strat)?;
    match e.format(Format::Csv) {
        Format::Csv => e.emit(&export::evaluation_csv(&report)?),
        Format::Json => e.emit_json(&report),
    }
}

fn cmd_lhv_brute(sc: &ScenarioArgs, max_states: u64, e: &Emitter) -> Outcome {
    e.csv_unsupported()?;
    let cfg = sc.config()?;
    let r = lhv::exhaustive_strategy_max(&cfg, max_states)?;
    e.emit_json(&r)?;
    if r.agree {
        Ok(())
    } else {
        Err(Failure::Check(
            "exhaustive maximum differs from the closed form".into(),
        ))
    }
}

fn cmd_sos_check(sc: &ScenarioArgs, rand: &RandomArgs, e: &Emitter) -> Outcome {
    e.csv_unsupported()?;
    let cfg = sc.config()?;
    let table = generate_table(cfg.m)?;
    let strat = build_strategy(&cfg, rand)?;
    let r = sos::certificate(&cfg, &table, &strat)?;
    e.emit_json(&r)?;
    if !r.slack_ok {
        return Err(Failure::Check(format!("negative gamma {:.3e}", r.gamma)));
    }
    if !rand.random && !r.tight {
        return Err(Failure::Check(format!(
            "optimal strategy not tight, gamma {:.3e}",
            r.gamma
        )));
    }
    Ok(())
}

fn cmd_sweep(sc: &ScenarioArgs, v_min: f64, v_max: f64, steps: usize, e: &Emitter) -> Outcome {
    if steps == 0 {
        return Err(Failure::Usage("--steps must be positive".into()));
    }
    let cfg = sc.config()?;
    let table = generate_table(cfg.m)?;
    let base = network::build_optimal_strategy(&cfg)?;
    let grid = optimize::linear_grid(v_min, v_max, steps);
    let r = optimize::visibility_sweep(
        &cfg,
        &table,
        |v| optimize::with_werner_links(&base, cfg.copies_per_link, v),
        &grid,
    )?;
    if let Some(v) = r.critical_v {
        info!("critical visibility {}", export::fmt_sig(v));
    }
    match e.format(Format::Csv) {
        Format::Csv => e.emit(&export::sweep_csv(&r)?),
        Format::Json => e.emit_json(&r),
    }
}

#[derive(Serialize)]
struct SeesawOutput {
    n: usize,
    m: usize,
    copies: usize,
    v: f64,
    best_seed: u64,
    best_delta: f64,
    alpha: f64,
    qopt: f64,
    iterations: usize,
    converged: bool,
    per_seed: Vec<(u64, f64)>,
}

fn cmd_seesaw(sc: &ScenarioArgs, search: &SearchArgs, v: f64, e: &Emitter) -> Outcome {
    e.csv_unsupported()?;
    let cfg = sc.config()?;
    let opts = SeesawOptions {
        max_iters: search.max_iters,
        visibility: v,
        ..SeesawOptions::default()
    };
    let seeds = optimize::seed_range(search.seed, search.seeds);
    let s = optimize::seesaw_best(&cfg, &seeds, &opts)?;
    e.emit_json(&SeesawOutput {
        n: cfg.n,
        m: cfg.m,
        copies: cfg.copies_per_link,
        v,
        best_seed: s.best.seed,
        best_delta: s.best.delta,
        alpha: lhv::alpha_closed_form(cfg.m)? as f64,
        qopt: network::quantum_optimum_formula(cfg.m),
        iterations: s.best.iterations,
        converged: s.best.converged,
        per_seed: s.per_seed,
    })
}

fn cmd_activate(n: usize, m: usize, v: f64, search: &SearchArgs, e: &Emitter) -> Outcome {
    e.csv_unsupported()?;
    let seeds = optimize::seed_range(search.seed, search.seeds);
    let r = optimize::activation_experiment(n, m, v, &seeds, search.max_iters)?;
    e.emit_json(&json!({
        "result": r,
        "activated": r.activated(),
    }))
}

fn cmd_export(input: &Path, e: &Emitter) -> Outcome {
    let text = std::fs::read_to_string(input).map_err(|err| Error::io(input, err))?;
    if let Ok(report) = serde_json::from_str::<EvaluationReport>(&text) {
        return match e.format(Format::Csv) {
            Format::Csv => e.emit(&export::evaluation_csv(&report)?),
            Format::Json => e.emit_json(&report),
        };
    }
    if let Ok(sweep) = serde_json::from_str::<SweepResult>(&text) {
        return match e.format(Format::Csv) {
            Format::Csv => e.emit(&export::sweep_csv(&sweep)?),
            Format::Json => e.emit_json(&sweep),
        };
    }
    Err(Failure::Usage(format!(
        "{} is neither an evaluation nor a sweep report",
        input.display()
    )))
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match std::env::var("STARNET_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Failure::Usage(format!("STARNET_THREADS={v:?} is not a number")))?,
        ),
        Err(_) => flag,
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|err| Failure::Usage(format!("thread pool: {err}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads(cli.threads)?;
    let params = serde_json::to_value(&cli.command).map_err(Error::from)?;
    let emitter = |command: &'static str, out: &OutArgs, seed: Option<u64>| Emitter {
        command,
        params: params.clone(),
        seed,
        out: out.clone(),
    };
    match &cli.command {
        Command::Bounds { m_min, m_max, out } => {
            cmd_bounds(*m_min, *m_max, &emitter("bounds", out, None))
        }
        Command::Verify {
            sc,
            max_states,
            out,
        } => cmd_verify(sc, *max_states, &emitter("verify", out, None)),
        Command::Quantum { sc, v, rand, out } => {
            let seed = rand.random.then_some(rand.seed);
            cmd_quantum(sc, *v, rand, &emitter("quantum", out, seed))
        }
        Command::LhvBrute {
            sc,
            max_states,
            out,
        } => cmd_lhv_brute(sc, *max_states, &emitter("lhv-brute", out, None)),
        Command::SosCheck { sc, rand, out } => {
            let seed = rand.random.then_some(rand.seed);
            cmd_sos_check(sc, rand, &emitter("sos-check", out, seed))
        }
        Command::Sweep {
            sc,
            v_min,
            v_max,
            steps,
            out,
        } => cmd_sweep(sc, *v_min, *v_max, *steps, &emitter("sweep", out, None)),
        Command::Seesaw { sc, search, v, out } => {
            cmd_seesaw(sc, search, *v, &emitter("seesaw", out, Some(search.seed)))
        }
        Command::Activate {
            n,
            m,
            v,
            search,
            out,
        } => cmd_activate(
            *n,
            *m,
            *v,
            search,
            &emitter("activate", out, Some(search.seed)),
        ),
        Command::Export { input, out } => cmd_export(input, &emitter("export", out, None)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
