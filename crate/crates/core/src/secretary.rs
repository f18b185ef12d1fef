//! Submodular k-secretary with shortlists.
//!
//! The arrival sequence is cut into (α, β) windows. Inside a window, for every slot `s_j`
//! and every subsequence `τ` of earlier slots with `|τ| < α`, an online max tracker
//! watches the marginal gains `Δ(x | S_prev ∪ γ(τ))` of the slot's items, after first
//! being fed a dummy value: the best gain available from previously tracked items `R_prev`.
//! Whatever the trackers pick joins the shortlist `A`. When the window closes, the greedy
//! subsequences `γ(τ)` of all `α`-length slot subsequences are computed; their union is
//! `R_w`, the best one is `S_w`, and `S_w ∩ A` is added to the final answer `A*`.
//!
//! Greedy steps scan `R_prev` candidates first (ascending id) and then slot items (arrival
//! order), keeping the first maximum. Together with the tracker's strict comparison and the
//! dummy being fed first, the offline greedy choice is exactly the item the tracker would
//! capture when it sees every prefix maximum.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::instance::ArrivalOrder;
use crate::online_max::{shortlist_capacity, MaxTracker};
use crate::oracle::{Base, ItemId, ValueOracle};
use crate::windows::{check_shape, sample_layout, WindowLayout};

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(u128::from(n - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Parameter settings that make the asymptotic guarantee hold for a target `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryParams {
    pub epsilon: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub beta: u64,
    pub alpha: u64,
    /// The guarantee needs `k ≥ αβ`.
    pub min_k: u128,
}

/// `δ = ε/2`, `δ' = ε/4`, `β = ⌈8/δ'²⌉`, `α = ⌈8β² ln(1/δ')⌉`.
pub fn derive_params(epsilon: f64) -> Result<TheoryParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!(
            "epsilon {epsilon} is outside (0, 1)"
        )));
    }
    let delta_prime = epsilon / 4.0;
    let beta = (8.0 / (delta_prime * delta_prime)).ceil() as u64;
    let alpha = (8.0 * (beta as f64).powi(2) * (1.0 / delta_prime).ln()).ceil() as u64;
    Ok(TheoryParams {
        epsilon,
        delta: epsilon / 2.0,
        delta_prime,
        beta,
        alpha,
        min_k: u128::from(alpha) * u128::from(beta),
    })
}

/// Shortlist ceiling `(k/α)·αβ·C(αβ, α)·⌈4 ln(2/δ)⌉`.
pub fn structural_cap(k: usize, alpha: usize, beta: usize, delta: f64) -> u128 {
    let ab = (alpha * beta) as u64;
    let windows = (k / alpha) as u128;
    windows
        .saturating_mul(u128::from(ab))
        .saturating_mul(binomial(ab, alpha as u64))
        .saturating_mul(shortlist_capacity(delta) as u128)
}

/// Number of trackers started for 1-based slot `j` of a window: `Σ_{t<α} C(j-1, t)`.
pub fn trackers_for_slot(j: usize, alpha: usize) -> u128 {
    (0..alpha as u64).map(|t| binomial(j as u64 - 1, t)).sum()
}

/// All subsequences of `{0..upto-1}` shorter than `max_len`, in lexicographic order
/// (the empty one first).
pub fn subsequences_below(upto: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if max_len == 0 {
        return out;
    }
    // Pre-order depth-first search with ascending children is lexicographic.
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(seq) = stack.pop() {
        out.push(seq.clone());
        if seq.len() + 1 < max_len {
            let from = seq.last().map_or(0, |l| l + 1);
            for next in (from..upto).rev() {
                let mut child = seq.clone();
                child.push(next);
                stack.push(child);
            }
        }
    }
    out
}

/// All `len`-element subsequences of `{0..upto-1}` in lexicographic order.
pub fn combinations(upto: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if len > upto {
        return out;
    }
    let mut idx: Vec<usize> = (0..len).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..len).rev().find(|&i| idx[i] != i + upto - len) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..len {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A subsequence `τ` of the slots of one window. Both `window` and `slots` are 0-based;
/// `slots` are offsets within the window.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SlotSubsequence {
    pub window: usize,
    pub slots: Vec<usize>,
}

/// The greedy subsequence `γ(τ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyTrace {
    pub tau: SlotSubsequence,
    pub picks: Vec<ItemId>,
    pub gains: Vec<f64>,
    /// `f(S_prev ∪ γ(τ))`.
    pub value: f64,
}

/// One greedy step: the first candidate with the largest gain over `base`, scanning
/// `tracked` (ascending id) and then `slot` (arrival order). Members of `base` are skipped.
fn greedy_step(base: &Base<'_>, tracked: &[ItemId], slot: &[ItemId]) -> Option<(ItemId, f64)> {
    let mut best: Option<(ItemId, f64)> = None;
    for &item in tracked.iter().chain(slot) {
        if base.contains(item) {
            continue;
        }
        let gain = base.gain(item);
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((item, gain));
        }
    }
    best
}

fn sorted_ids(items: &[ItemId]) -> Vec<ItemId> {
    let mut v = items.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Computes `γ(τ)`. `slot_items[m]` lists the candidates of slot `tau.slots[m]` in arrival
/// order. A step whose candidate set is empty makes no pick.
pub fn compute_gamma(
    oracle: &ValueOracle,
    tau: &SlotSubsequence,
    slot_items: &[&[ItemId]],
    tracked_prev: &[ItemId],
    selected_prev: &[ItemId],
) -> Result<GreedyTrace> {
    if slot_items.len() != tau.slots.len() {
        return Err(Error::invalid(format!(
            "{} candidate lists supplied for a subsequence of {} slots",
            slot_items.len(),
            tau.slots.len()
        )));
    }
    let tracked = sorted_ids(tracked_prev);
    let mut base = oracle.base(selected_prev)?;
    let mut picks = Vec::new();
    let mut gains = Vec::new();
    for slot in slot_items {
        if let Some((item, gain)) = greedy_step(&base, &tracked, slot) {
            picks.push(item);
            gains.push(gain);
            base = base.with(item);
        }
    }
    Ok(GreedyTrace {
        tau: tau.clone(),
        picks,
        gains,
        value: base.value(),
    })
}

/// `R_w` and `S_w` for one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowOutcome {
    /// Union of `γ(τ)` over all `α`-length `τ`, sorted by id.
    pub tracked: Vec<ItemId>,
    /// `γ(τ*)` for the subsequence with the largest increment (first in lexicographic order on ties).
    pub best: GreedyTrace,
    pub increment: f64,
}

/// Closes window `window` (0-based) given the candidates of each of its `αβ` slots.
pub fn window_finalize(
    oracle: &ValueOracle,
    window: usize,
    window_items: &[&[ItemId]],
    alpha: usize,
    tracked_prev: &[ItemId],
    selected_prev: &[ItemId],
) -> Result<WindowOutcome> {
    if alpha == 0 || alpha > window_items.len() {
        return Err(Error::invalid(format!(
            "alpha = {alpha} does not fit a window of {} slots",
            window_items.len()
        )));
    }
    let f_prev = oracle.eval(selected_prev)?;
    let mut tracked = BTreeSet::new();
    let mut best: Option<(GreedyTrace, f64)> = None;
    for slots in combinations(window_items.len(), alpha) {
        let lists: Vec<&[ItemId]> = slots.iter().map(|&s| window_items[s]).collect();
        let tau = SlotSubsequence { window, slots };
        let trace = compute_gamma(oracle, &tau, &lists, tracked_prev, selected_prev)?;
        tracked.extend(trace.picks.iter().copied());
        let inc = trace.value - f_prev;
        if best.as_ref().is_none_or(|(_, b)| inc > *b) {
            best = Some((trace, inc));
        }
    }
    let (best, increment) = best.expect("at least one subsequence");
    Ok(WindowOutcome {
        tracked: tracked.into_iter().collect(),
        best,
        increment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub k: usize,
    pub alpha: usize,
    pub beta: usize,
    pub delta: f64,
    /// Trackers without warm-up or capacity: every strict prefix maximum is shortlisted.
    pub capture_all: bool,
}

impl RunParams {
    pub fn new(k: usize, alpha: usize, beta: usize, delta: f64) -> Self {
        RunParams {
            k,
            alpha,
            beta,
            delta,
            capture_all: false,
        }
    }

    pub fn capture_all(k: usize, alpha: usize, beta: usize) -> Self {
        RunParams {
            k,
            alpha,
            beta,
            delta: 1.0,
            capture_all: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_shape(self.k, self.alpha, self.beta)?;
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!(
                "delta {} is outside (0, 1]",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn structural_cap(&self) -> u128 {
        structural_cap(self.k, self.alpha, self.beta, self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortlistEntry {
    pub item: ItemId,
    /// 1-based arrival round.
    pub pos: usize,
    /// 1-based window.
    pub window: usize,
    /// 1-based global slot.
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    #[serde(rename = "R")]
    pub tracked: Vec<ItemId>,
    /// In greedy pick order.
    #[serde(rename = "S")]
    pub selected: Vec<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counters {
    pub oracle_calls: u64,
    pub tracker_count: u64,
    pub max_tracker_picks: usize,
    pub peak_buffer_items: usize,
}

/// Memory and evaluation accounting of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryStats {
    pub peak_items: usize,
    pub total_evals: u64,
    pub evals_per_item: f64,
    /// `|R_{1..w-1}|` when window `w` opens.
    pub tracked_at_open: Vec<usize>,
    /// Largest candidate list of any slot in window `w`.
    pub max_slot_candidates: Vec<usize>,
    /// `|H_w|`: items of window `w` that were shortlisted.
    pub captured: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    #[serde(rename = "A")]
    pub shortlist: Vec<ShortlistEntry>,
    #[serde(rename = "A_star")]
    pub final_set: Vec<ItemId>,
    #[serde(rename = "f_A_star")]
    pub f_final: f64,
    /// `f(S_1 ∪ … ∪ S_W)`.
    #[serde(rename = "f_S")]
    pub f_selected: f64,
    pub per_window: Vec<WindowRecord>,
    pub counters: Counters,
    pub layout: WindowLayout,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory: Option<MemoryStats>,
}

impl RunResult {
    pub fn shortlist_ids(&self) -> Vec<ItemId> {
        self.shortlist.iter().map(|e| e.item).collect()
    }

    /// `S_1 ∪ … ∪ S_W`, sorted.
    pub fn selected_union(&self) -> Vec<ItemId> {
        let all: Vec<ItemId> = self
            .per_window
            .iter()
            .flat_map(|w| w.selected.iter().copied())
            .collect();
        sorted_ids(&all)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run results always serialize")
    }
}

/// Which candidates the window close-out and the greedy prefixes may look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Retention {
    /// Every item of the window stays in memory.
    Full,
    /// Only shortlisted items are kept.
    Captured,
}

/// Samples a layout from `rng` and runs the in-memory algorithm.
pub fn run<R: Rng + ?Sized>(
    oracle: &ValueOracle,
    arrival: &ArrivalOrder,
    params: RunParams,
    rng: &mut R,
) -> Result<RunResult> {
    params.validate()?;
    let layout = sample_layout(arrival.len(), params.k, params.alpha, params.beta, rng)?;
    run_with_layout(oracle, arrival, &layout, params, Execution::default())
}

/// In-memory run on a fixed layout.
pub fn run_with_layout(
    oracle: &ValueOracle,
    arrival: &ArrivalOrder,
    layout: &WindowLayout,
    params: RunParams,
    exec: Execution,
) -> Result<RunResult> {
    execute(oracle, arrival, layout, params, exec, Retention::Full).map(|(r, _)| r)
}

struct GammaNode<'a> {
    picks: Vec<ItemId>,
    gains: Vec<f64>,
    base: Base<'a>,
}

struct TrackerOutcome {
    /// Offsets into the slot of captured items.
    captured: Vec<usize>,
    picks: usize,
}

fn run_tracker(
    node: &GammaNode<'_>,
    tracked_prev: &[ItemId],
    slot: &[ItemId],
    params: &RunParams,
) -> Result<TrackerOutcome> {
    let base = &node.base;
    let dummy = tracked_prev
        .iter()
        .filter(|x| !base.contains(**x))
        .map(|&x| base.gain(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let len = slot.len() + 1;
    let mut tracker = if params.capture_all {
        MaxTracker::capture_all(len)?
    } else {
        MaxTracker::new(len, params.delta)?
    };
    tracker.observe(dummy, None)?;
    for (offset, &item) in slot.iter().enumerate() {
        tracker.observe(base.gain(item), Some(offset))?;
    }
    let (picks, _) = tracker.finalize();
    Ok(TrackerOutcome {
        captured: picks.iter().filter_map(|p| p.tag).collect(),
        picks: picks.len(),
    })
}

pub(crate) fn execute(
    oracle: &ValueOracle,
    arrival: &ArrivalOrder,
    layout: &WindowLayout,
    params: RunParams,
    exec: Execution,
    retention: Retention,
) -> Result<(RunResult, MemoryStats)> {
    params.validate()?;
    let n = arrival.len();
    if n != oracle.ground_size() {
        return Err(Error::invalid(format!(
            "arrival order has {n} items but the ground set has {}",
            oracle.ground_size()
        )));
    }
    if layout.n != n
        || layout.k != params.k
        || layout.alpha != params.alpha
        || layout.beta != params.beta
    {
        return Err(Error::invalid(
            "window layout does not match the run parameters",
        ));
    }

    let meter = AtomicU64::new(0);
    let alpha = params.alpha;
    let per_window = layout.slots_per_window();
    let items = arrival.items();

    let mut shortlist: Vec<ShortlistEntry> = Vec::new();
    let mut in_shortlist = vec![false; n];
    let mut tracked_prev: Vec<ItemId> = Vec::new();
    let mut selected_prev: Vec<ItemId> = Vec::new();
    let mut final_set: BTreeSet<ItemId> = BTreeSet::new();
    let mut windows = Vec::with_capacity(layout.num_windows());
    let mut tracker_count = 0u64;
    let mut max_tracker_picks = 0usize;
    let mut peak = 0usize;
    let mut tracked_at_open = Vec::new();
    let mut max_slot_candidates = Vec::new();
    let mut captured_per_window = Vec::new();

    for w in 0..layout.num_windows() {
        let slots = layout.window_slots(w);
        let prev_base = oracle.base_metered(&selected_prev, &meter)?;
        let mut gamma: BTreeMap<Vec<usize>, GammaNode<'_>> = BTreeMap::new();
        gamma.insert(
            Vec::new(),
            GammaNode {
                picks: Vec::new(),
                gains: Vec::new(),
                base: prev_base.clone(),
            },
        );
        let mut candidates: Vec<Vec<ItemId>> = Vec::with_capacity(per_window);
        let mut captured_here = 0usize;
        tracked_at_open.push(tracked_prev.len());
        if retention == Retention::Full {
            peak = peak.max(tracked_prev.len() + layout.window_range(w).len());
        }

        for (j, global_slot) in slots.clone().enumerate() {
            for tau in subsequences_below(j, alpha) {
                if gamma.contains_key(&tau) {
                    continue;
                }
                let (last, parent) = tau.split_last().expect("non-empty");
                let node = extend(&gamma[parent], &tracked_prev, &candidates[*last]);
                gamma.insert(tau, node);
            }
            let taus = subsequences_below(j, alpha);
            debug_assert_eq!(taus.len() as u128, trackers_for_slot(j + 1, alpha));
            tracker_count += taus.len() as u64;

            let range = layout.slot_range(global_slot);
            let slot_items = &items[range.clone()];
            let outcomes = exec.map_slice(&taus, |tau| {
                run_tracker(&gamma[tau], &tracked_prev, slot_items, &params)
            });
            let mut hit = vec![false; slot_items.len()];
            for outcome in outcomes {
                let outcome = outcome?;
                max_tracker_picks = max_tracker_picks.max(outcome.picks);
                for off in outcome.captured {
                    hit[off] = true;
                }
            }

            if retention == Retention::Captured {
                // Timeline: before each arrival the buffer holds R_prev plus this
                // window's captured items; the arriving item is one more.
                let mut held = tracked_prev.len() + captured_here;
                for &h in &hit {
                    peak = peak.max(held + 1);
                    held += usize::from(h);
                }
                peak = peak.max(held);
            }

            let mut kept = Vec::new();
            for (off, &item) in slot_items.iter().enumerate() {
                if !hit[off] {
                    continue;
                }
                kept.push(item);
                if !in_shortlist[item.0] {
                    in_shortlist[item.0] = true;
                    shortlist.push(ShortlistEntry {
                        item,
                        pos: range.start + off + 1,
                        window: w + 1,
                        slot: global_slot + 1,
                    });
                }
            }
            captured_here += kept.len();
            candidates.push(match retention {
                Retention::Full => slot_items.to_vec(),
                Retention::Captured => kept,
            });
        }

        // Close the window: γ(τ) for every α-length τ, extending cached prefixes.
        let mut tracked_w = BTreeSet::new();
        let mut best: Option<(Vec<ItemId>, f64)> = None;
        for tau in combinations(per_window, alpha) {
            let (last, parent) = tau.split_last().expect("alpha >= 1");
            let node = extend(&gamma[parent], &tracked_prev, &candidates[*last]);
            tracked_w.extend(node.picks.iter().copied());
            let inc = node.base.value() - prev_base.value();
            if best.as_ref().is_none_or(|(_, b)| inc > *b) {
                best = Some((node.picks, inc));
            }
        }
        let (selected_w, _) = best.expect("at least one subsequence");

        for item in &selected_w {
            if in_shortlist[item.0] {
                final_set.insert(*item);
            }
        }
        max_slot_candidates.push(candidates.iter().map(Vec::len).max().unwrap_or(0));
        captured_per_window.push(captured_here);
        tracked_prev = sorted_ids(&[tracked_prev, tracked_w.iter().copied().collect()].concat());
        selected_prev = sorted_ids(&[selected_prev, selected_w.clone()].concat());
        windows.push(WindowRecord {
            tracked: tracked_w.into_iter().collect(),
            selected: selected_w,
        });
    }

    let oracle_calls = meter.load(Ordering::Relaxed);
    let final_set: Vec<ItemId> = final_set.into_iter().collect();
    let f_final = oracle.eval(&final_set)?;
    let f_selected = oracle.eval(&selected_prev)?;
    let memory = MemoryStats {
        peak_items: peak,
        total_evals: oracle_calls,
        evals_per_item: oracle_calls as f64 / n as f64,
        tracked_at_open,
        max_slot_candidates,
        captured: captured_per_window,
    };
    let result = RunResult {
        shortlist,
        final_set,
        f_final,
        f_selected,
        per_window: windows,
        counters: Counters {
            oracle_calls,
            tracker_count,
            max_tracker_picks,
            peak_buffer_items: peak,
        },
        layout: layout.clone(),
        memory: None,
    };
    Ok((result, memory))
}

fn extend<'a>(parent: &GammaNode<'a>, tracked_prev: &[ItemId], slot: &[ItemId]) -> GammaNode<'a> {
    match greedy_step(&parent.base, tracked_prev, slot) {
        Some((item, gain)) => {
            let mut picks = parent.picks.clone();
            let mut gains = parent.gains.clone();
            picks.push(item);
            gains.push(gain);
            GammaNode {
                picks,
                gains,
                base: parent.base.with(item),
            }
        }
        None => GammaNode {
            picks: parent.picks.clone(),
            gains: parent.gains.clone(),
            base: parent.base.clone(),
        },
    }
}
