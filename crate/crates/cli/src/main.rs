//! `skycache`: train predictors, run the simulator, sweep parameters and
//! check the cross-module invariants.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use skycache::cesn::{decode_model, encode_model};
use skycache::scenario::{load_config_over, parse_config_over, ConfigError, ScenarioConfig};
use skycache::sim::output::{run_artifacts, sweep_csv, to_json, train_csv};
use skycache::sim::{
    check_models, run, sweep, train_models, Baseline, Predictor, SimError, SweepParam, UserModels, World,
};
use skycache::verify::verify;

#[derive(Debug, Parser)]
#[command(name = "skycache", version, about = "Cache-enabled UAV base station simulator")]
struct Cli {
    /// More log output on stderr; twice prints one line per slot.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one content and one mobility model per user.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Run the slot-by-slot simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train`.
        #[arg(long, conflicts_with = "oracle", required_unless_present = "oracle")]
        models: Option<PathBuf>,
        /// Use the generator's ground truth instead of trained models.
        #[arg(long)]
        oracle: bool,
        /// no_uav, no_cache, random_cache or fixed_placement.
        #[arg(long)]
        baseline: Option<Baseline>,
    },
    /// One oracle-mode run per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// users, uavs or cache.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, required = true, value_delimiter = ',')]
        values: Vec<usize>,
        #[arg(long)]
        baseline: Option<Baseline>,
    },
    /// Run the invariant suite and report pass or fail per property.
    Verify {
        /// JSON config; deliberately invalid values are checked, not rejected.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        paper_scale: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config layered over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "SKYCACHE_OUT", default_value = "skycache-out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Full-scale defaults instead of the reduced desk scale.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::ModelMismatch(_) | SimError::Sweep(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn read_config(
    path: Option<&Path>,
    paper_scale: bool,
    seed: Option<u64>,
    check: bool,
) -> Result<ScenarioConfig, Failure> {
    let base = if paper_scale { ScenarioConfig::default() } else { ScenarioConfig::desk() };
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| io_failure(p, e))?,
        None => String::new(),
    };
    let mut cfg = if check { load_config_over(&text, &base)? } else { parse_config_over(&text, &base)? };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    }
    fs::write(&path, contents).map_err(|e| io_failure(&path, e))
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    status: &'static str,
    code_version: &'static str,
    seed: u64,
    config: ScenarioConfig,
    /// Relative to the manifest.
    outputs: Vec<String>,
    wall_clock_s: Option<f64>,
    error: Option<String>,
}

/// Wraps a command that writes into `out`: the manifest is written first
/// with status "running" and rewritten with the outcome.
fn with_manifest(
    out: &Path,
    command: &str,
    cfg: &ScenarioConfig,
    body: impl FnOnce() -> Result<Vec<String>, Failure>,
) -> Result<(), Failure> {
    let mut m = Manifest {
        command: command.into(),
        status: "running",
        code_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg.clone(),
        outputs: Vec::new(),
        wall_clock_s: None,
        error: None,
    };
    write(out, "manifest.json", to_json(&m))?;
    let start = Instant::now();
    let result = body();
    m.wall_clock_s = Some(start.elapsed().as_secs_f64());
    match &result {
        Ok(outputs) => {
            m.status = "ok";
            m.outputs = outputs.clone();
        }
        Err(f) => {
            m.status = "failed";
            m.error = Some(f.message().to_string());
        }
    }
    write(out, "manifest.json", to_json(&m))?;
    result.map(|_| ())
}

fn model_paths(u: usize) -> (String, String) {
    (format!("models/content-{u:04}.esn"), format!("models/mobility-{u:04}.esn"))
}

fn cmd_train(common: &Common, verbose: u8) -> Result<(), Failure> {
    let cfg = read_config(common.config.as_deref(), common.paper_scale, common.seed, true)?;
    with_manifest(&common.out, "train", &cfg, || {
        let world = World::generate(&cfg);
        if verbose > 0 {
            eprintln!("training {} users", cfg.num_users);
        }
        let (models, rows) = train_models(&world)?;
        let mut outputs = Vec::with_capacity(2 * models.len() + 1);
        for (u, m) in models.iter().enumerate() {
            let (c, p) = model_paths(u);
            write(&common.out, &c, encode_model(&m.content))?;
            write(&common.out, &p, encode_model(&m.mobility))?;
            outputs.extend([c, p]);
        }
        write(&common.out, "train_report.csv", train_csv(&rows))?;
        outputs.push("train_report.csv".into());
        Ok(outputs)
    })
}

fn load_models(dir: &Path, cfg: &ScenarioConfig) -> Result<Vec<UserModels>, Failure> {
    let read = |name: &str| {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| io_failure(&path, e))?;
        decode_model(&bytes).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    };
    let models = (0..cfg.num_users)
        .map(|u| {
            let (c, p) = model_paths(u);
            Ok(UserModels { content: read(&c)?, mobility: read(&p)? })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    check_models(&models, cfg)?;
    Ok(models)
}

fn cmd_simulate(
    common: &Common,
    models: Option<&Path>,
    baseline: Option<Baseline>,
    verbose: u8,
) -> Result<(), Failure> {
    let cfg = read_config(common.config.as_deref(), common.paper_scale, common.seed, true)?;
    let trained = models.map(|dir| load_models(dir, &cfg)).transpose()?;
    with_manifest(&common.out, "simulate", &cfg, || {
        let predictor = trained.as_deref().map_or(Predictor::Oracle, Predictor::Esn);
        let out = run(&cfg, predictor, baseline)?;
        if verbose >= 2 {
            for l in &out.logs {
                eprintln!("{}", l.line());
            }
        }
        if verbose > 0 {
            let s = &out.summary;
            eprintln!(
                "{} slots, total UAV power {:.3} W, satisfied {:.3}",
                s.slots, s.total_uav_power_w, s.satisfied_fraction
            );
        }
        let mut outputs = Vec::new();
        for (name, text) in run_artifacts(&out) {
            write(&common.out, name, text)?;
            outputs.push(name.to_string());
        }
        Ok(outputs)
    })
}

fn cmd_sweep(
    common: &Common,
    param: SweepParam,
    values: &[usize],
    baseline: Option<Baseline>,
    verbose: u8,
) -> Result<(), Failure> {
    let cfg = read_config(common.config.as_deref(), common.paper_scale, common.seed, true)?;
    if values.is_empty() {
        return Err(Failure::Usage("--values must list at least one value".into()));
    }
    with_manifest(&common.out, "sweep", &cfg, || {
        let rows = sweep(&cfg, param, values, baseline)?;
        if verbose > 0 {
            for r in &rows {
                eprintln!("{}={}: mean UAV power {:.4} W", r.param, r.value, r.summary.mean_uav_power_w);
            }
        }
        write(&common.out, "sweep.csv", sweep_csv(&rows))?;
        Ok(vec!["sweep.csv".into()])
    })
}

fn cmd_verify(config: Option<&Path>, paper_scale: bool, seed: Option<u64>) -> Result<(), Failure> {
    let cfg = read_config(config, paper_scale, seed, false)?;
    let report = verify(&cfg);
    // A closed pipe only loses the report, not the exit status.
    let mut stdout = std::io::stdout().lock();
    for p in &report.properties {
        let _ = writeln!(stdout, "{}", p.line());
    }
    let failed = report.properties.iter().filter(|p| !p.passed).count();
    if failed == 0 {
        let _ = writeln!(stdout, "all {} properties passed", report.properties.len());
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{failed} of {} properties failed", report.properties.len())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let v = cli.verbose;
    let result = match &cli.command {
        Command::Train { common } => cmd_train(common, v),
        Command::Simulate { common, models, oracle: _, baseline } => {
            cmd_simulate(common, models.as_deref(), *baseline, v)
        }
        Command::Sweep { common, param, values, baseline } => cmd_sweep(common, *param, values, *baseline, v),
        Command::Verify { config, paper_scale, seed } => cmd_verify(config.as_deref(), *paper_scale, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
