//! Batched trials and empirical competitive ratios.
//!
//! A trial derives its own master seed from the batch seed and the trial index, builds the
//! instance, arrival order and window layout from separate streams of that seed, runs the
//! selected mode and the baselines, and yields one [`TrialRow`]. Rows come back in trial
//! order whatever the worker count; every field except `wall_time` is deterministic.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{brute_force_opt_with, greedy_offline, BaselineMethod, DEFAULT_SUBSET_CAP};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::instance::{
    gen_instance, sample_arrival, stream_rng, trial_seed, InstanceSpec, LAYOUT_STREAM,
};
use crate::secretary::{derive_params, run_with_layout, RunParams, RunResult};
use crate::streaming::run_streaming_with_layout;
use crate::windows::sample_layout;

pub const CSV_HEADER: &str = "trial,f_alg,f_greedy,f_opt,ratio_vs_greedy,ratio_vs_opt,shortlist_size,astar_size,oracle_calls,peak_buffer,wall_time";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    InMemory,
    Streaming,
    CaptureAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(Error::validation(
                "format",
                format!("unknown format `{other}` (expected csv or jsonl)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn one() -> usize {
    1
}

fn default_cap() -> u64 {
    DEFAULT_SUBSET_CAP as u64
}

/// Experiment description, read from JSON.
///
/// Exactly one of `delta` and `epsilon` must be given. With `epsilon`, `δ = ε/2` and
/// `α`, `β` come from the theory settings unless `alpha`/`beta` are supplied together with
/// `override_theory_params: true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub override_theory_params: bool,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// The greedy baseline always runs; list `brute_force` here to also compute OPT.
    #[serde(default)]
    pub baselines: Vec<BaselineMethod>,
    #[serde(default = "default_cap")]
    pub opt_subset_cap: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            context: context.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Validates the config and settles `α`, `β`, `δ`.
    pub fn resolve(&self) -> Result<RunParams> {
        self.instance.validate()?;
        if self.trials == 0 {
            return Err(Error::validation("trials", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::validation("k", "must be at least 1"));
        }
        let (alpha, beta, delta) = match (self.delta, self.epsilon) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::validation(
                    "delta",
                    "exactly one of `delta` and `epsilon` must be given",
                ))
            }
            (Some(delta), None) => (self.alpha.unwrap_or(1), self.beta.unwrap_or(1), delta),
            (None, Some(epsilon)) => {
                let theory = derive_params(epsilon)
                    .map_err(|e| Error::validation("epsilon", e.to_string()))?;
                match (self.alpha, self.beta, self.override_theory_params) {
                    (Some(a), Some(b), true) => (a, b, theory.delta),
                    (None, None, _) => {
                        if (self.k as u128) < theory.min_k {
                            return Err(Error::validation(
                                "k",
                                format!(
                                    "epsilon = {epsilon} needs alpha = {}, beta = {} and k >= {}; \
                                     supply desk-scale alpha/beta with override_theory_params",
                                    theory.alpha, theory.beta, theory.min_k
                                ),
                            ));
                        }
                        (theory.alpha as usize, theory.beta as usize, theory.delta)
                    }
                    _ => {
                        return Err(Error::validation(
                            "override_theory_params",
                            "alpha and beta may only replace the epsilon-derived values \
                             when both are given and override_theory_params is true",
                        ))
                    }
                }
            }
        };
        if alpha == 0 || !self.k.is_multiple_of(alpha) {
            return Err(Error::validation(
                "alpha",
                format!(
                    "k = {} must be a positive multiple of alpha = {alpha}",
                    self.k
                ),
            ));
        }
        if beta == 0 {
            return Err(Error::validation("beta", "must be at least 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::validation(
                "delta",
                format!("{delta} is outside (0, 1]"),
            ));
        }
        Ok(RunParams {
            k: self.k,
            alpha,
            beta,
            delta,
            capture_all: self.mode == Mode::CaptureAll,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub f_alg: f64,
    pub f_greedy: f64,
    pub f_opt: Option<f64>,
    pub ratio_vs_greedy: f64,
    pub ratio_vs_opt: Option<f64>,
    pub shortlist_size: usize,
    pub astar_size: usize,
    pub oracle_calls: u64,
    pub peak_buffer: usize,
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TrialRow {
    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.f_alg,
            self.f_greedy,
            opt(self.f_opt),
            self.ratio_vs_greedy,
            opt(self.ratio_vs_opt),
            self.shortlist_size,
            self.astar_size,
            self.oracle_calls,
            self.peak_buffer,
            self.wall_time
        )
    }
}

/// Aggregates over the rows of one experiment. Standard deviations use the `n - 1`
/// denominator (0 for a single row).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub n: usize,
    pub mean_ratio_vs_greedy: f64,
    pub std_ratio_vs_greedy: f64,
    pub min_ratio_vs_greedy: f64,
    pub mean_ratio_vs_opt: Option<f64>,
    pub std_ratio_vs_opt: Option<f64>,
    pub min_ratio_vs_opt: Option<f64>,
    pub max_shortlist_size: usize,
    pub mean_evals_per_item: f64,
}

fn mean_std_min(values: &[f64]) -> (f64, f64, f64) {
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, std, min)
}

impl Summary {
    /// Recomputes the summary from rows; `n` is the instance size.
    pub fn from_rows(rows: &[TrialRow], n: usize) -> Self {
        let greedy: Vec<f64> = rows.iter().map(|r| r.ratio_vs_greedy).collect();
        let (mean_g, std_g, min_g) = mean_std_min(&greedy);
        let opt: Vec<f64> = rows.iter().filter_map(|r| r.ratio_vs_opt).collect();
        let opt_stats = (!opt.is_empty()).then(|| mean_std_min(&opt));
        let evals: Vec<f64> = rows
            .iter()
            .map(|r| r.oracle_calls as f64 / n as f64)
            .collect();
        Summary {
            trials: rows.len(),
            n,
            mean_ratio_vs_greedy: mean_g,
            std_ratio_vs_greedy: std_g,
            min_ratio_vs_greedy: min_g,
            mean_ratio_vs_opt: opt_stats.map(|s| s.0),
            std_ratio_vs_opt: opt_stats.map(|s| s.1),
            min_ratio_vs_opt: opt_stats.map(|s| s.2),
            max_shortlist_size: rows.iter().map(|r| r.shortlist_size).max().unwrap_or(0),
            mean_evals_per_item: evals.iter().sum::<f64>() / evals.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn write_rows<W: Write>(&self, format: OutputFormat, out: &mut W) -> std::io::Result<()> {
        match format {
            OutputFormat::Csv => {
                writeln!(out, "{CSV_HEADER}")?;
                for row in &self.rows {
                    writeln!(out, "{}", row.to_csv())?;
                }
            }
            OutputFormat::Jsonl => {
                for row in &self.rows {
                    let line = serde_json::to_string(row).expect("rows always serialize");
                    writeln!(out, "{line}")?;
                }
            }
        }
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summaries always serialize")
    }
}

fn ratio(alg: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        alg / reference
    } else {
        1.0
    }
}

/// Runs the configured mode once with every random choice drawn from `seed`.
pub fn run_single(
    config: &ExperimentConfig,
    params: RunParams,
    seed: u64,
    exec: Execution,
) -> Result<(crate::oracle::ValueOracle, RunResult)> {
    let oracle = gen_instance(&config.instance, seed)?;
    let n = oracle.ground_size();
    let arrival = sample_arrival(n, seed)?;
    let mut layout_rng = stream_rng(seed, LAYOUT_STREAM);
    let layout = sample_layout(n, params.k, params.alpha, params.beta, &mut layout_rng)?;
    let result = match config.mode {
        Mode::InMemory | Mode::CaptureAll => {
            run_with_layout(&oracle, &arrival, &layout, params, exec)?
        }
        Mode::Streaming => run_streaming_with_layout(&oracle, &arrival, &layout, params, exec)?.0,
    };
    Ok((oracle, result))
}

fn run_trial(
    config: &ExperimentConfig,
    params: RunParams,
    index: usize,
    exec: Execution,
) -> Result<(TrialRow, usize)> {
    let started = Instant::now();
    let seed = trial_seed(config.seed, index as u64);
    let (oracle, result) = run_single(config, params, seed, exec)?;
    let mut warnings = Vec::new();

    let greedy = greedy_offline(&oracle, params.k)?;
    let f_opt = if config.baselines.contains(&BaselineMethod::BruteForce) {
        match brute_force_opt_with(&oracle, params.k, u128::from(config.opt_subset_cap), exec) {
            Ok(b) => Some(b.value),
            Err(e @ Error::EnumerationCap { .. }) => {
                warnings.push(e.to_string());
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    if !params.capture_all && result.shortlist.len() as u128 > params.structural_cap() {
        warnings.push(format!(
            "shortlist of {} exceeds structural cap {}",
            result.shortlist.len(),
            params.structural_cap()
        ));
    }

    let f_alg = result.f_final;
    let row = TrialRow {
        trial: index,
        f_alg,
        f_greedy: greedy.value,
        f_opt,
        ratio_vs_greedy: ratio(f_alg, greedy.value),
        ratio_vs_opt: f_opt.map(|opt| ratio(f_alg, opt)),
        shortlist_size: result.shortlist.len(),
        astar_size: result.final_set.len(),
        oracle_calls: result.counters.oracle_calls,
        peak_buffer: result.counters.peak_buffer_items,
        wall_time: started.elapsed().as_secs_f64(),
        warnings,
    };
    Ok((row, oracle.ground_size()))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(config, Execution::default())
}

/// Runs all trials. `exec` controls both trial-level and within-trial parallelism.
pub fn run_experiment_with(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    let params = config.resolve()?;
    let results = exec.map_range(config.trials, |i| run_trial(config, params, i, exec));
    let mut rows = Vec::with_capacity(results.len());
    let mut n = 0;
    for r in results {
        let (row, size) = r?;
        n = size;
        rows.push(row);
    }
    let summary = Summary::from_rows(&rows, n);
    Ok(ExperimentReport { rows, summary })
}
