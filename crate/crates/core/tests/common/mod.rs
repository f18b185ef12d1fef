#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shortlist_secretary::secretary::RunResult;
use shortlist_secretary::{
    gen_instance, sample_arrival, sample_layout, ArrivalOrder, InstanceSpec, ItemId, RunParams,
    ValueOracle, WindowLayout,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RefEntry {
    pub item: ItemId,
    pub pos: usize,
    pub window: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefResult {
    pub shortlist: Vec<RefEntry>,
    pub final_set: Vec<ItemId>,
    pub tracked: Vec<Vec<ItemId>>,
    pub selected: Vec<Vec<ItemId>>,
    pub f_final: f64,
    pub f_selected: f64,
}

fn union(a: &[ItemId], b: &[ItemId]) -> Vec<ItemId> {
    let mut v: Vec<ItemId> = a.iter().chain(b).copied().collect();
    v.sort();
    v.dedup();
    v
}

/// Greedy picks for the slots listed in `tau`, recomputing every gain from scratch.
fn greedy(
    f: &ValueOracle,
    tau: &[usize],
    slots: &[Vec<ItemId>],
    tracked: &[ItemId],
    selected: &[ItemId],
) -> Vec<ItemId> {
    let mut picks = Vec::new();
    for &s in tau {
        let current = union(selected, &picks);
        let mut best: Option<(ItemId, f64)> = None;
        for &x in tracked.iter().chain(&slots[s]) {
            if current.contains(&x) {
                continue;
            }
            let g = f.marginal(x, &current).unwrap();
            match best {
                Some((_, bg)) if g <= bg => {}
                _ => best = Some((x, g)),
            }
        }
        if let Some((x, _)) = best {
            picks.push(x);
        }
    }
    picks
}

/// Subsets of `0..m` given as sorted index lists, filtered by size, in lexicographic order.
fn subsets(m: usize, keep: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << m)
        .filter(|mask| keep(mask.count_ones() as usize))
        .map(|mask| (0..m).filter(|b| mask >> b & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

/// Straight-line version of the selection algorithm on a fixed layout.
pub fn reference_run(
    f: &ValueOracle,
    arrival: &[ItemId],
    slot_sizes: &[usize],
    params: &RunParams,
) -> RefResult {
    let (k, alpha, beta, delta) = (params.k, params.alpha, params.beta, params.delta);
    let per = alpha * beta;
    let windows = k / alpha;
    assert_eq!(slot_sizes.len(), k * beta);

    let mut slot_items = Vec::new();
    let mut slot_first_pos = Vec::new();
    let mut next = 0;
    for &size in slot_sizes {
        slot_first_pos.push(next + 1);
        slot_items.push(arrival[next..next + size].to_vec());
        next += size;
    }

    let mut shortlist: Vec<RefEntry> = Vec::new();
    let mut tracked_prev: Vec<ItemId> = Vec::new();
    let mut selected_prev: Vec<ItemId> = Vec::new();
    let mut final_set: Vec<ItemId> = Vec::new();
    let mut tracked_out = Vec::new();
    let mut selected_out = Vec::new();

    for w in 0..windows {
        let slots: Vec<Vec<ItemId>> = slot_items[w * per..(w + 1) * per].to_vec();
        for j in 0..per {
            for tau in subsets(j, |c| c < alpha) {
                let g = greedy(f, &tau, &slots, &tracked_prev, &selected_prev);
                let base = union(&selected_prev, &g);
                let mut stream = vec![tracked_prev
                    .iter()
                    .filter(|x| !base.contains(x))
                    .map(|&x| f.marginal(x, &base).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max)];
                for &x in &slots[j] {
                    stream.push(f.marginal(x, &base).unwrap());
                }
                let len = stream.len();
                let (warm, cap) = if params.capture_all {
                    (1, usize::MAX)
                } else {
                    let u = ((len as f64) * delta / 2.0).ceil().max(1.0) as usize;
                    (u, (4.0 * (2.0 / delta).ln()).ceil() as usize)
                };
                let mut best = f64::NEG_INFINITY;
                let mut taken = 0;
                for (idx, &v) in stream.iter().enumerate() {
                    let pos = idx + 1;
                    if v > best && pos >= warm && taken < cap {
                        taken += 1;
                        if pos >= 2 {
                            let item = slots[j][pos - 2];
                            if !shortlist.iter().any(|e| e.item == item) {
                                shortlist.push(RefEntry {
                                    item,
                                    pos: slot_first_pos[w * per + j] + pos - 2,
                                    window: w + 1,
                                    slot: w * per + j + 1,
                                });
                            }
                        }
                    }
                    if v > best {
                        best = v;
                    }
                }
            }
        }

        let f_prev = f.eval(&selected_prev).unwrap();
        let mut tracked_w: Vec<ItemId> = Vec::new();
        let mut best: Option<(Vec<ItemId>, f64)> = None;
        for tau in subsets(per, |c| c == alpha) {
            let g = greedy(f, &tau, &slots, &tracked_prev, &selected_prev);
            tracked_w = union(&tracked_w, &g);
            let inc = f.eval(&union(&selected_prev, &g)).unwrap() - f_prev;
            if best.as_ref().is_none_or(|(_, b)| inc > *b) {
                best = Some((g, inc));
            }
        }
        let selected_w = best.unwrap().0;
        for x in &selected_w {
            if shortlist.iter().any(|e| e.item == *x) {
                final_set = union(&final_set, &[*x]);
            }
        }
        tracked_prev = union(&tracked_prev, &tracked_w);
        selected_prev = union(&selected_prev, &selected_w);
        tracked_out.push(tracked_w);
        selected_out.push(selected_w);
    }

    shortlist.sort_by_key(|e| e.pos);
    RefResult {
        f_final: f.eval(&final_set).unwrap(),
        f_selected: f.eval(&selected_prev).unwrap(),
        shortlist,
        final_set,
        tracked: tracked_out,
        selected: selected_out,
    }
}

/// Field-by-field comparison; returns a description of the first mismatch.
pub fn compare(run: &RunResult, reference: &RefResult) -> Result<(), String> {
    let shortlist: Vec<RefEntry> = run
        .shortlist
        .iter()
        .map(|e| RefEntry {
            item: e.item,
            pos: e.pos,
            window: e.window,
            slot: e.slot,
        })
        .collect();
    if shortlist != reference.shortlist {
        return Err(format!(
            "shortlist {:?} vs reference {:?}",
            shortlist, reference.shortlist
        ));
    }
    if run.final_set != reference.final_set {
        return Err(format!(
            "final set {:?} vs reference {:?}",
            run.final_set, reference.final_set
        ));
    }
    let tracked: Vec<Vec<ItemId>> = run.per_window.iter().map(|w| w.tracked.clone()).collect();
    let selected: Vec<Vec<ItemId>> = run.per_window.iter().map(|w| w.selected.clone()).collect();
    if tracked != reference.tracked || selected != reference.selected {
        return Err(format!(
            "windows R={tracked:?} S={selected:?} vs reference R={:?} S={:?}",
            reference.tracked, reference.selected
        ));
    }
    if run.f_final != reference.f_final || run.f_selected != reference.f_selected {
        return Err(format!(
            "values ({}, {}) vs reference ({}, {})",
            run.f_final, run.f_selected, reference.f_final, reference.f_selected
        ));
    }
    Ok(())
}

/// A small random case: instance, arrival, layout and parameters.
pub struct Case {
    pub oracle: ValueOracle,
    pub arrival: ArrivalOrder,
    pub layout: WindowLayout,
    pub params: RunParams,
}

pub fn small_case(seed: u64, capture_all: bool) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = rng.random_range(1..=2usize);
    let beta = rng.random_range(1..=2usize);
    let k = alpha * rng.random_range(1..=4 / alpha);
    let n = rng.random_range(1..=60usize);
    let delta = [0.25, 0.5, 1.0][rng.random_range(0..3)];
    let spec = if rng.random_bool(0.7) {
        InstanceSpec::Coverage {
            n,
            universe: rng.random_range(5..=40),
            density: rng.random_range(0.05..0.4),
            weight_min: 1.0,
            weight_max: if rng.random_bool(0.5) { 1.0 } else { 5.0 },
        }
    } else {
        InstanceSpec::Modular {
            n,
            weights: None,
            weight_min: 0.0,
            weight_max: 10.0,
        }
    };
    let oracle = gen_instance(&spec, seed).unwrap();
    let arrival = sample_arrival(n, seed).unwrap();
    let layout = sample_layout(n, k, alpha, beta, &mut rng).unwrap();
    let params = if capture_all {
        RunParams::capture_all(k, alpha, beta)
    } else {
        RunParams::new(k, alpha, beta, delta)
    };
    Case {
        oracle,
        arrival,
        layout,
        params,
    }
}

/// Upper-tail chi-square statistic check at the given significance.
pub fn chi_square_passes(counts: &[u64], expected: f64, significance: f64) -> (f64, f64, bool) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((counts.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(1.0 - significance);
    (stat, critical, stat <= critical)
}

/// One point of the randomized sweep over α ∈ {1,2}, β ∈ {1,2,3}, δ ∈ {0.25,0.5,1},
/// k ∈ {2,4,8}, n ∈ 50..=2000.
pub fn sweep_case(index: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index);
    let alpha = [1usize, 2][rng.random_range(0..2)];
    let beta = rng.random_range(1..=3usize);
    let delta = [0.25, 0.5, 1.0][rng.random_range(0..3)];
    let k = [2usize, 4, 8][rng.random_range(0..3)];
    let n = rng.random_range(50..=2000usize);
    let spec = if index.is_multiple_of(3) {
        InstanceSpec::Modular {
            n,
            weights: None,
            weight_min: 0.0,
            weight_max: 100.0,
        }
    } else {
        InstanceSpec::Coverage {
            n,
            universe: rng.random_range(50..=300),
            density: rng.random_range(0.005..0.05),
            weight_min: 1.0,
            weight_max: 10.0,
        }
    };
    let oracle = gen_instance(&spec, index).unwrap();
    let arrival = sample_arrival(n, index).unwrap();
    let layout = sample_layout(n, k, alpha, beta, &mut rng).unwrap();
    Case {
        oracle,
        arrival,
        layout,
        params: RunParams::new(k, alpha, beta, delta),
    }
}
