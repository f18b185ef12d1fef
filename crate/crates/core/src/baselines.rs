//! Offline reference solvers: the classic greedy and exhaustive search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::oracle::{ItemId, ValueOracle};
use crate::secretary::binomial;

pub const DEFAULT_SUBSET_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Greedy,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineResult {
    /// Sorted by id.
    pub chosen: Vec<ItemId>,
    pub value: f64,
    pub method: BaselineMethod,
}

/// Adds the item with the largest marginal gain (smallest id on ties) `k` times, stopping
/// early once no item adds value.
pub fn greedy_offline(oracle: &ValueOracle, k: usize) -> Result<BaselineResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut base = oracle.base(&[])?;
    for _ in 0..k.min(oracle.ground_size()) {
        let mut best: Option<(ItemId, f64)> = None;
        for i in (0..oracle.ground_size()).map(ItemId) {
            if base.contains(i) {
                continue;
            }
            let gain = base.gain(i);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        match best {
            Some((i, gain)) if gain > 0.0 => base = base.with(i),
            _ => break,
        }
    }
    Ok(BaselineResult {
        chosen: base.members().to_vec(),
        value: base.value(),
        method: BaselineMethod::Greedy,
    })
}

/// Exact `max_{|S| ≤ k} f(S)`, searching subsets of size `min(k, n)` (enough for monotone
/// `f`). Ties go to the lexicographically smallest subset.
pub fn brute_force_opt(oracle: &ValueOracle, k: usize) -> Result<BaselineResult> {
    brute_force_opt_with(oracle, k, DEFAULT_SUBSET_CAP, Execution::default())
}

pub fn brute_force_opt_with(
    oracle: &ValueOracle,
    k: usize,
    cap: u128,
    exec: Execution,
) -> Result<BaselineResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = oracle.ground_size();
    let size = k.min(n);
    let subsets = binomial(n as u64, size as u64);
    if subsets > cap {
        return Err(Error::EnumerationCap {
            n,
            k: size,
            subsets,
            cap,
        });
    }
    // One work unit per leading element; each enumerates its subsets in lexicographic
    // order, and units are reduced in leading-element order.
    let leads = n - size + 1;
    let partial = exec.map_range(leads, |first| best_with_lead(oracle, n, size, first));
    let mut best: Option<(Vec<ItemId>, f64)> = None;
    for candidate in partial {
        let Some((set, value)) = candidate? else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((set, value));
        }
    }
    let (chosen, value) = best.unwrap_or((Vec::new(), 0.0));
    Ok(BaselineResult {
        chosen,
        value,
        method: BaselineMethod::BruteForce,
    })
}

fn best_with_lead(
    oracle: &ValueOracle,
    n: usize,
    size: usize,
    first: usize,
) -> Result<Option<(Vec<ItemId>, f64)>> {
    if size == 0 {
        return Ok(Some((Vec::new(), oracle.eval(&[])?)));
    }
    let rest = size - 1;
    let pool = n - first - 1;
    let mut idx: Vec<usize> = (0..rest).collect();
    let mut best: Option<(Vec<ItemId>, f64)> = None;
    let mut set = Vec::with_capacity(size);
    loop {
        set.clear();
        set.push(ItemId(first));
        set.extend(idx.iter().map(|&i| ItemId(first + 1 + i)));
        let value = oracle.eval(&set)?;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((set.clone(), value));
        }
        let Some(i) = (0..rest).rev().find(|&i| idx[i] != i + pool - rest) else {
            return Ok(best);
        };
        idx[i] += 1;
        for j in i + 1..rest {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
