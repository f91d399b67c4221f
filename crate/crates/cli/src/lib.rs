//! Command-line front end for `nlbandit`.
//!
//! `run` executes a replicated experiment from a config file or a bundled
//! preset; `advise` drives a season-by-season session backed by a state file.
//! Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use nlbandit::harness::output::write_outputs;
use nlbandit::{
    aggregate, run_experiment, ArmGrid, EconomicParams, ExperimentConfig, ModelKind, ParamVector, PolicyConfig,
    PolicyKind,
};

pub mod session;

use session::SessionState;

pub const WELL_SPECIFIED: &str = include_str!("../presets/well_specified.cfg");
pub const MISSPECIFIED: &str = include_str!("../presets/misspecified.cfg");

/// Bundled preset by file name, with or without the `.cfg` extension.
pub fn preset(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".cfg") {
        "well_specified" => Some(WELL_SPECIFIED),
        "misspecified" => Some(MISSPECIFIED),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<nlbandit::Error> for CliError {
    fn from(e: nlbandit::Error) -> Self {
        use nlbandit::Error as E;
        match e {
            E::Config(_)
            | E::UnknownKey(_)
            | E::InvalidPolicy(_)
            | E::InvalidParams { .. }
            | E::InvalidGrid(_)
            | E::InvalidEconomics(_)
            | E::InvalidDomain { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.into()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nlbandit", version, about = "Model-based bandits for fertilizer-rate decisions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a replicated simulation experiment.
    Run(RunArgs),
    /// Season-by-season recommendations from a persistent session.
    Advise(AdviseArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file, or the name of a bundled preset (`well_specified.cfg`, `misspecified.cfg`).
    pub config: String,
    /// Override a config key, e.g. `--set T=1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed; replicate r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run replicates on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    /// Session state file.
    #[arg(long, global = true, default_value = "nlbandit-session.json")]
    pub state: PathBuf,
    #[command(subcommand)]
    pub command: AdviseCommand,
}

#[derive(Debug, Subcommand)]
pub enum AdviseCommand {
    /// Start a new session.
    Init(InitArgs),
    /// Print the rate to apply next season.
    Next,
    /// Record the yield harvested under the pending recommendation.
    Observe(ObserveArgs),
    /// Print the history, the current estimate and its optimal rate.
    Status,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Fitted response family.
    #[arg(long, default_value = "quadratic_plateau")]
    pub model: String,
    /// eps_greedy, model_ucb, violin, linucb or knn_ucb.
    #[arg(long, default_value = "model_ucb")]
    pub policy: String,
    /// Candidate rates, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,50,100,150,200,250")]
    pub grid: Vec<f64>,
    /// Grain price ($/bu).
    #[arg(long, default_value_t = 5.0)]
    pub p_y: f64,
    /// Fertilizer price ($/lb N).
    #[arg(long)]
    pub p_x: f64,
    /// Starting parameter values, comma separated; defaults to the family's reference values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta_init: Option<Vec<f64>>,
    /// Seed for exploration and burn-in order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// UCB width [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Exponent `a` of the exploration probability t^-a [default: 1.5].
    #[arg(long)]
    pub epsilon_exponent: Option<f64>,
    /// ViOlin slope penalty [default: 2].
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// ViOlin curvature penalty [default: 640].
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Neighbour count for knn_ucb [default: 3].
    #[arg(long)]
    pub k: Option<usize>,
    /// Replace an existing state file.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ObserveArgs {
    /// Harvested yield (bu/ac).
    #[arg(allow_hyphen_values = true)]
    pub yield_: f64,
    /// Estimated slope of the yield curve at the applied rate (ViOlin).
    #[arg(long, requires = "hess", allow_hyphen_values = true)]
    pub grad: Option<f64>,
    /// Estimated curvature of the yield curve at the applied rate (ViOlin).
    #[arg(long, requires = "grad", allow_hyphen_values = true)]
    pub hess: Option<f64>,
}

/// Parses `args` and executes the command, writing human output to `out`.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, out).map(|_| ()),
        Command::Advise(a) => cmd_advise(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            e.exit_code()
        }
    }
}

/// Reads `config` from disk, falling back to a bundled preset of that name.
pub fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut overrides = args
        .set
        .iter()
        .map(|s| ExperimentConfig::parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(out) = &args.out {
        overrides.push(("out".into(), format!("{:?}", out.display().to_string())));
    }
    if let Some(seed) = args.seed {
        overrides.push(("base_seed".into(), seed.to_string()));
    }
    if args.serial {
        overrides.push(("parallel".into(), "false".into()));
    }
    let path = Path::new(&args.config);
    if path.exists() {
        return Ok(ExperimentConfig::from_path(path, &overrides)?);
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    match preset(name) {
        Some(doc) => Ok(ExperimentConfig::from_toml_str(doc, &overrides)?),
        None => Err(CliError::Usage(format!(
            "config `{}` not found and is not a bundled preset (well_specified.cfg, misspecified.cfg)",
            args.config
        ))),
    }
}

/// One row of the `run` summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLine {
    pub policy: String,
    pub p_x: f64,
    pub mean_regret: f64,
    pub mean_profit: f64,
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<Vec<CellLine>, CliError> {
    let config = load_config(args)?;
    let records = run_experiment(&config)?;
    let summary = aggregate(&records, &config.grid)?;
    let written = write_outputs(&summary, &records, &config.grid, &config.out)?;

    let horizon = config.horizon;
    let mut lines = Vec::new();
    for spec in &config.policies {
        for &p_x in &config.prices {
            let cell: Vec<_> = records.iter().filter(|r| r.policy == spec.label && r.p_x == p_x).collect();
            let n = cell.len() as f64;
            lines.push(CellLine {
                policy: spec.label.clone(),
                p_x,
                mean_regret: cell.iter().map(|r| r.final_regret()).sum::<f64>() / n,
                mean_profit: cell.iter().map(|r| r.average_profit(horizon)).sum::<f64>() / n,
            });
        }
    }

    let io = |e: std::io::Error| CliError::Runtime(e.into());
    writeln!(
        out,
        "{} scenario, T = {}, R = {}, base seed {}",
        config.scenario, horizon, config.replicates, config.base_seed
    )
    .map_err(io)?;
    writeln!(out, "{:<32} {:>6} {:>16} {:>16}", "policy", "p_x", "mean cum regret", "mean avg profit").map_err(io)?;
    for l in &lines {
        writeln!(out, "{:<32} {:>6} {:>16.2} {:>16.2}", l.policy, l.p_x, l.mean_regret, l.mean_profit).map_err(io)?;
    }
    writeln!(out, "wrote {} files to {}", written.len(), config.out.display()).map_err(io)?;
    Ok(lines)
}

fn init_session(a: &InitArgs) -> Result<SessionState, CliError> {
    let model: ModelKind = a.model.parse()?;
    let kind: PolicyKind = a.policy.parse()?;
    let mut policy = PolicyConfig::new(kind, model);
    if let Some(t) = &a.theta_init {
        policy.theta_init = ParamVector::from(t.clone());
    }
    policy.alpha = a.alpha.unwrap_or(policy.alpha);
    policy.epsilon_exponent = a.epsilon_exponent.unwrap_or(policy.epsilon_exponent);
    policy.alpha1 = a.alpha1.unwrap_or(policy.alpha1);
    policy.alpha2 = a.alpha2.unwrap_or(policy.alpha2);
    policy.k = a.k.unwrap_or(policy.k);
    policy.validate()?;
    let econ = EconomicParams::new(a.p_y, a.p_x)?;
    let grid = ArmGrid::new(a.grid.clone())?;
    SessionState::new(a.seed, policy, econ, grid).map_err(|e| CliError::Usage(format!("{e:#}")))
}

fn fmt_theta(names: &[&str], theta: &[f64]) -> String {
    names
        .iter()
        .zip(theta)
        .map(|(n, v)| format!("{n} = {v:.6}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_advise(args: &AdviseArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = &args.state;
    let io = |e: std::io::Error| CliError::Runtime(e.into());
    match &args.command {
        AdviseCommand::Init(a) => {
            if path.exists() && !a.force {
                return Err(CliError::Usage(format!(
                    "{} already exists; pass --force to replace it",
                    path.display()
                )));
            }
            let s = init_session(a)?;
            s.save(path)?;
            writeln!(
                out,
                "started {} session ({}) with {} candidate rates; state in {}",
                s.policy.kind,
                s.policy.fitted_model,
                s.grid.len(),
                path.display()
            )
            .map_err(io)?;
        }
        AdviseCommand::Next => {
            let mut s = SessionState::load(path)?;
            let alpha = s.policy.alpha;
            let rec = s.recommend()?.clone();
            s.save(path)?;
            let why = if rec.fallback {
                " (fallback: the fit failed)"
            } else if rec.explored {
                " (exploration)"
            } else {
                ""
            };
            writeln!(out, "season {}: apply {} lb N/ac{why}", rec.round, rec.arm).map_err(io)?;
            if !rec.scores.is_empty() {
                writeln!(out, "{:>8} {:>12} {:>12} {:>12}", "rate", "est. profit", "uncertainty", "score").map_err(io)?;
                for sc in &rec.scores {
                    writeln!(out, "{:>8} {:>12.2} {:>12.4} {:>12.2}", sc.arm, sc.profit, sc.uncertainty, sc.score)
                        .map_err(io)?;
                }
                writeln!(out, "score = est. profit + alpha x uncertainty, alpha = {alpha}").map_err(io)?;
            }
        }
        AdviseCommand::Observe(o) => {
            let mut s = SessionState::load(path)?;
            let curvature = o.grad.zip(o.hess);
            let obs = s.observe(o.yield_, curvature)?;
            s.save(path)?;
            writeln!(
                out,
                "season {}: {} lb N/ac yielded {} bu/ac, profit {:.2} $/ac",
                s.history.len(),
                obs.arm,
                obs.yield_,
                obs.profit
            )
            .map_err(io)?;
        }
        AdviseCommand::Status => {
            let s = SessionState::load(path)?;
            writeln!(
                out,
                "policy {} ({}), p_y = {}, p_x = {}, seed {}",
                s.policy.kind, s.policy.fitted_model, s.p_y, s.p_x, s.seed
            )
            .map_err(io)?;
            writeln!(out, "{:>6} {:>8} {:>10} {:>10}", "season", "rate", "yield", "profit").map_err(io)?;
            for (i, o) in s.history.iter().enumerate() {
                writeln!(out, "{:>6} {:>8} {:>10.3} {:>10.2}", i + 1, o.arm, o.yield_, o.profit).map_err(io)?;
            }
            match s.current_fit()? {
                Some(fit) => {
                    writeln!(
                        out,
                        "estimate ({:?}): {}",
                        fit.status,
                        fmt_theta(fit.kind.param_names(), &fit.theta_hat)
                    )
                    .map_err(io)?;
                    writeln!(out, "profit-maximizing rate: {:.2} lb N/ac", s.continuous_optimum(&fit)?).map_err(io)?;
                }
                None => writeln!(out, "estimate: none yet").map_err(io)?,
            }
            match &s.pending {
                Some(r) => writeln!(out, "pending: {} lb N/ac for season {}", r.arm, r.round).map_err(io)?,
                None => writeln!(out, "pending: none").map_err(io)?,
            }
        }
    }
    Ok(())
}
