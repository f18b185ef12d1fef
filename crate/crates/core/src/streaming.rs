//! Bounded-buffer execution.
//!
//! Same trackers as the in-memory run, but an item that no tracker shortlists is dropped
//! as soon as the trackers have seen it. Greedy subsequences, `R_w` and `S_w` are then
//! computed over the shortlisted items of the window (plus `R_{1..w-1}`), so the buffer
//! never holds more than the shortlist and the item in flight.

use rand::Rng;

use crate::error::Result;
use crate::exec::Execution;
use crate::instance::ArrivalOrder;
use crate::oracle::ValueOracle;
use crate::secretary::{binomial, execute, Retention, RunParams, RunResult};
use crate::windows::{sample_layout, WindowLayout};

pub use crate::secretary::MemoryStats;

/// Samples a layout from `rng` and runs in streaming mode.
pub fn run_streaming<R: Rng + ?Sized>(
    oracle: &ValueOracle,
    arrival: &ArrivalOrder,
    params: RunParams,
    rng: &mut R,
) -> Result<(RunResult, MemoryStats)> {
    params.validate()?;
    let layout = sample_layout(arrival.len(), params.k, params.alpha, params.beta, rng)?;
    run_streaming_with_layout(oracle, arrival, &layout, params, Execution::default())
}

pub fn run_streaming_with_layout(
    oracle: &ValueOracle,
    arrival: &ArrivalOrder,
    layout: &WindowLayout,
    params: RunParams,
    exec: Execution,
) -> Result<(RunResult, MemoryStats)> {
    let (mut result, stats) = execute(oracle, arrival, layout, params, exec, Retention::Captured)?;
    result.memory = Some(stats.clone());
    Ok((result, stats))
}

/// Largest number of trackers any single item is shown: `Σ_{t<α} C(αβ-1, t)`.
pub fn max_trackers_per_item(alpha: usize, beta: usize) -> u128 {
    let last = (alpha * beta - 1) as u64;
    (0..alpha as u64).map(|t| binomial(last, t)).sum()
}

/// Upper bound on the evaluations of a streaming run, from its own instrumentation.
///
/// Per item: one gain per tracker it is shown, at most `n·T_max`. Per window: one
/// evaluation of `f(S_prev)`, and for each of the `Σ_{t=1}^{α} C(αβ, t)` non-empty
/// subsequences of length at most `α`, a tracker (dummy scan over `R_prev`) plus a
/// greedy extension (scan over `R_prev` and one slot's candidates, then one evaluation
/// of the extended set).
pub fn eval_budget(n: usize, params: &RunParams, stats: &MemoryStats) -> u128 {
    let ab = (params.alpha * params.beta) as u64;
    let per_item = n as u128 * max_trackers_per_item(params.alpha, params.beta);
    let prefixes: u128 = (1..=params.alpha as u64).map(|t| binomial(ab, t)).sum();
    let per_window: u128 = stats
        .tracked_at_open
        .iter()
        .zip(&stats.max_slot_candidates)
        .map(|(&r, &h)| 1 + (prefixes + 1) * r as u128 + prefixes * (r as u128 + h as u128 + 1))
        .sum();
    per_item + per_window
}
