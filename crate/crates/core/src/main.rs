use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use cvarloc::instance::{generate_instance, serialize_instance, GeneratorParams};
use cvarloc::runner::{
    compare_files, emit_plot_data, reevaluate, run_experiment, InstanceSource, Method, Reference, RiskLevel,
    RunConfig, DEFAULT_TIME_LIMIT,
};
use cvarloc::{Error, Result};

#[derive(Parser)]
#[command(name = "cvarloc", version, about = "Bi-objective risk-averse facility location experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Generate {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        scenarios: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a frontier and write a run directory.
    Run {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        risk: RiskArgs,
        /// e, bb or mat.
        #[arg(long)]
        method: String,
        /// ma, mb or mb-bar.
        #[arg(long)]
        model: String,
        /// Total time limit in seconds.
        #[arg(long, default_value_t = DEFAULT_TIME_LIMIT as f64)]
        tl: f64,
        /// Time limit per frontier point in seconds.
        #[arg(long)]
        tl_point: Option<f64>,
        /// Matheuristic neighbourhood radius.
        #[arg(long, default_value_t = 2)]
        kappa: usize,
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace frontier risks by their exact values.
    Reevaluate {
        frontier: PathBuf,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        risk: RiskArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hypervolume gap and epsilon indicator of frontier files.
    Compare {
        #[arg(required = true)]
        frontiers: Vec<PathBuf>,
        /// `union` or a frontier file.
        #[arg(long, default_value = "union")]
        reference: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concatenate frontiers into a series,cost,risk table.
    PlotData {
        #[arg(required = true)]
        frontiers: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file.
    #[arg(long, conflicts_with_all = ["nodes", "scenarios"])]
    instance: Option<PathBuf>,
    /// Generate an instance with this many nodes.
    #[arg(long, requires = "scenarios")]
    nodes: Option<usize>,
    #[arg(long, requires = "nodes")]
    scenarios: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceArgs {
    fn source(&self) -> Result<InstanceSource> {
        match (&self.instance, self.nodes, self.scenarios) {
            (Some(p), _, _) => Ok(InstanceSource::File(p.clone())),
            (None, Some(nodes), Some(scenarios)) => Ok(InstanceSource::Generated { nodes, scenarios }),
            _ => Err(Error::Usage("give --instance or --nodes with --scenarios".into())),
        }
    }
}

#[derive(Args)]
struct RiskArgs {
    /// Confidence level; k = round(N (1 - alpha)).
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of scenarios in the tail.
    #[arg(long)]
    k: Option<usize>,
}

fn seconds(s: f64, flag: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| Error::Usage(format!("--{flag} must be a nonnegative number of seconds")))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { nodes, scenarios, seed, out } => {
            let (inst, scen) = generate_instance(seed, nodes, scenarios, &GeneratorParams::default())?;
            let text = serialize_instance(&inst, &scen)?;
            output(&out)?.write_all(text.as_bytes())?;
        }
        Command::Run { instance, risk, method, model, tl, tl_point, kappa, out } => {
            let config = RunConfig {
                instance: instance.source()?,
                method: method.parse::<Method>()?,
                model: model.parse()?,
                risk: RiskLevel::from_flags(risk.alpha, risk.k)?,
                time_limit_total: Some(seconds(tl, "tl")?),
                time_limit_per_point: tl_point.map(|t| seconds(t, "tl-point")).transpose()?,
                kappa,
                seed: instance.seed,
                out,
            };
            let record = run_experiment(&config)?;
            println!(
                "{} {}-{} k={} points={} {:.3}s {}",
                record.instance, record.method, record.model, record.k, record.n_ndp, record.runtime_s, record.status
            );
        }
        Command::Reevaluate { frontier, instance, risk, out } => {
            let source = instance.source()?;
            let level = RiskLevel::from_flags(risk.alpha, risk.k)?;
            reevaluate(&frontier, &source, instance.seed, level, &out)?;
        }
        Command::Compare { frontiers, reference, out } => {
            let reference =
                if reference == "union" { Reference::Union } else { Reference::File(PathBuf::from(reference)) };
            compare_files(&frontiers, &reference, &mut output(&out)?)?;
        }
        Command::PlotData { frontiers, out } => emit_plot_data(&frontiers, &mut output(&out)?)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
