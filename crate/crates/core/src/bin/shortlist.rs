use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shortlist_secretary::baselines::{brute_force_opt, greedy_offline};
use shortlist_secretary::harness::{run_experiment, run_single, ExperimentConfig, OutputFormat};
use shortlist_secretary::{gen_instance, Error, Execution, InstanceSpec, Result, ValueOracle};

#[derive(Parser)]
#[command(
    name = "shortlist",
    version,
    about = "k-secretary selection with shortlists"
)]
struct Cli {
    /// Master seed; overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Row format for `experiment`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Greedy,
    Brute,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from an instance spec (or an experiment config's `instance`).
    Gen,
    /// Run the configured mode once and print the result as JSON.
    Run,
    /// Run all trials and write one row per trial.
    Experiment,
    /// Solve an instance file offline.
    Baseline {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "greedy")]
        method: Method,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn config_path(cli: &Cli) -> Result<&Path> {
    cli.config.as_deref().ok_or_else(|| Error::Validation {
        field: "config".into(),
        message: "--config is required".into(),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn instance_spec(path: &Path) -> Result<InstanceSpec> {
    let text = read(path)?;
    let context = path.display().to_string();
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Format {
        context: context.clone(),
        message: e.to_string(),
    })?;
    let spec = match value.get("instance") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(spec).map_err(|e| Error::Format {
        context,
        message: e.to_string(),
    })
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Gen => {
            let spec = instance_spec(config_path(cli)?)?;
            spec.validate()?;
            let oracle = gen_instance(&spec, cli.seed.unwrap_or(0))?;
            emit(out, &(oracle.to_json() + "\n"))
        }
        Command::Run => {
            let config = ExperimentConfig::load(config_path(cli)?)?;
            let params = config.resolve()?;
            let seed = cli.seed.unwrap_or(config.seed);
            let (_, result) = run_single(&config, params, seed, Execution::default())?;
            emit(out, &(result.to_json() + "\n"))
        }
        Command::Experiment => {
            let mut config = ExperimentConfig::load(config_path(cli)?)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let format = match cli.format {
                Some(Format::Csv) => OutputFormat::Csv,
                Some(Format::Jsonl) => OutputFormat::Jsonl,
                None => config.output.as_ref().map(|o| o.format).unwrap_or_default(),
            };
            let out = out
                .map(Path::to_path_buf)
                .or_else(|| config.output.as_ref().and_then(|o| o.path.clone()));
            let report = run_experiment(&config)?;
            let mut rows = Vec::new();
            report.write_rows(format, &mut rows)?;
            let summary = report.summary_json() + "\n";
            match out {
                Some(path) => {
                    std::fs::write(&path, rows)?;
                    let mut name = path.into_os_string();
                    name.push(".summary.json");
                    std::fs::write(name, summary)?;
                }
                None => {
                    std::io::stdout().lock().write_all(&rows)?;
                    std::io::stderr().lock().write_all(summary.as_bytes())?;
                }
            }
            Ok(())
        }
        Command::Baseline {
            instance,
            k,
            method,
        } => {
            let oracle = ValueOracle::load(instance)?;
            let result = match method {
                Method::Greedy => greedy_offline(&oracle, *k)?,
                Method::Brute => brute_force_opt(&oracle, *k)?,
            };
            let text = serde_json::to_string_pretty(&result).expect("results always serialize");
            emit(out, &(text + "\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}
