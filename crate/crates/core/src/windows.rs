//! (α, β) windows: `kβ` slots whose sizes are balls-in-bins occupancy counts, grouped
//! into `k/α` windows of `αβ` consecutive slots.
//!
//! Arrival positions are 1-based. Slot and window indices returned by [`WindowLayout::slot_of`]
//! are 1-based as well; the `*_range` helpers work on 0-based indices into the arrival order.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowLayout {
    pub n: usize,
    pub k: usize,
    pub alpha: usize,
    pub beta: usize,
    pub slot_sizes: Vec<usize>,
    #[serde(skip)]
    slot_starts: Vec<usize>,
}

/// Location of an arrival position, both indices 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRef {
    pub window: usize,
    pub slot: usize,
}

pub(crate) fn check_shape(k: usize, alpha: usize, beta: usize) -> Result<()> {
    if k == 0 || alpha == 0 || beta == 0 {
        return Err(Error::invalid("k, alpha and beta must all be at least 1"));
    }
    if !k.is_multiple_of(alpha) {
        return Err(Error::invalid(format!(
            "k/alpha must be an integer (k = {k}, alpha = {alpha})"
        )));
    }
    Ok(())
}

impl WindowLayout {
    /// Builds a layout from explicit slot sizes (there must be `kβ` of them).
    pub fn from_sizes(k: usize, alpha: usize, beta: usize, slot_sizes: Vec<usize>) -> Result<Self> {
        check_shape(k, alpha, beta)?;
        if slot_sizes.len() != k * beta {
            return Err(Error::invalid(format!(
                "expected {} slot sizes, found {}",
                k * beta,
                slot_sizes.len()
            )));
        }
        let mut slot_starts = Vec::with_capacity(slot_sizes.len() + 1);
        let mut acc = 0;
        slot_starts.push(0);
        for s in &slot_sizes {
            acc += s;
            slot_starts.push(acc);
        }
        Ok(WindowLayout {
            n: acc,
            k,
            alpha,
            beta,
            slot_sizes,
            slot_starts,
        })
    }

    /// Restores the prefix sums after deserialization.
    pub fn rebuild(self) -> Result<Self> {
        Self::from_sizes(self.k, self.alpha, self.beta, self.slot_sizes)
    }

    pub fn num_slots(&self) -> usize {
        self.k * self.beta
    }

    pub fn num_windows(&self) -> usize {
        self.k / self.alpha
    }

    pub fn slots_per_window(&self) -> usize {
        self.alpha * self.beta
    }

    /// 0-based range into the arrival order covered by 0-based slot `slot`.
    pub fn slot_range(&self, slot: usize) -> Range<usize> {
        self.slot_starts[slot]..self.slot_starts[slot + 1]
    }

    /// 0-based global slot indices of 0-based window `window`.
    pub fn window_slots(&self, window: usize) -> Range<usize> {
        let per = self.slots_per_window();
        window * per..(window + 1) * per
    }

    pub fn window_range(&self, window: usize) -> Range<usize> {
        let slots = self.window_slots(window);
        self.slot_starts[slots.start]..self.slot_starts[slots.end]
    }

    /// Slot and window containing the 1-based arrival `position`.
    pub fn slot_of(&self, position: usize) -> Result<SlotRef> {
        if position == 0 || position > self.n {
            return Err(Error::invalid(format!(
                "position {position} outside 1..={}",
                self.n
            )));
        }
        // First slot whose end reaches the position; empty slots have start == end and
        // are skipped.
        let slot = self.slot_starts[1..].partition_point(|&end| end < position);
        Ok(SlotRef {
            window: slot / self.slots_per_window() + 1,
            slot: slot + 1,
        })
    }
}

/// Throws `n` balls into `kβ` bins uniformly at random and uses the occupancy counts as
/// slot sizes.
pub fn sample_layout<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    alpha: usize,
    beta: usize,
    rng: &mut R,
) -> Result<WindowLayout> {
    check_shape(k, alpha, beta)?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let bins = k * beta;
    let mut sizes = vec![0usize; bins];
    for _ in 0..n {
        sizes[rng.random_range(0..bins)] += 1;
    }
    WindowLayout::from_sizes(k, alpha, beta, sizes)
}
