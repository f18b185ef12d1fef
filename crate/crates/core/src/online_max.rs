//! Online max-finding with a shortlist.
//!
//! The tracker watches a stream of `N` values, records nothing during a warm-up of
//! `u = max(1, ⌈Nδ/2⌉)` rounds, and afterwards shortlists every strict new running
//! maximum until `L = ⌈4 ln(2/δ)⌉` picks have been made. Under a uniformly random order
//! the true maximum ends up on the shortlist with probability at least `1 - δ`.

use crate::error::{Error, Result};

/// `⌈4 ln(2/δ)⌉`.
pub fn shortlist_capacity(delta: f64) -> usize {
    (4.0 * (2.0 / delta).ln()).ceil() as usize
}

/// `max(1, ⌈Nδ/2⌉)`.
pub fn warmup_threshold(stream_len: usize, delta: f64) -> usize {
    ((stream_len as f64 * delta / 2.0).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Added,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pick<T> {
    /// 1-based round in which the value arrived.
    pub position: usize,
    pub value: f64,
    pub tag: T,
}

#[derive(Debug, Clone)]
pub struct MaxTracker<T> {
    stream_len: usize,
    warmup: usize,
    capacity: Option<usize>,
    max: f64,
    picks: Vec<Pick<T>>,
    next_position: usize,
}

impl<T> MaxTracker<T> {
    pub fn new(stream_len: usize, delta: f64) -> Result<Self> {
        if stream_len == 0 {
            return Err(Error::invalid("tracker stream length must be at least 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("delta {delta} is outside (0, 1]")));
        }
        Ok(MaxTracker {
            stream_len,
            warmup: warmup_threshold(stream_len, delta),
            capacity: Some(shortlist_capacity(delta)),
            max: f64::NEG_INFINITY,
            picks: Vec::new(),
            next_position: 1,
        })
    }

    /// No warm-up and no capacity limit: every strict prefix maximum is picked.
    pub fn capture_all(stream_len: usize) -> Result<Self> {
        if stream_len == 0 {
            return Err(Error::invalid("tracker stream length must be at least 1"));
        }
        Ok(MaxTracker {
            stream_len,
            warmup: 1,
            capacity: None,
            max: f64::NEG_INFINITY,
            picks: Vec::new(),
            next_position: 1,
        })
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    /// `None` in capture-all mode.
    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn running_max(&self) -> f64 {
        self.max
    }

    pub fn picks(&self) -> &[Pick<T>] {
        &self.picks
    }

    pub fn observed(&self) -> usize {
        self.next_position - 1
    }

    pub fn observe(&mut self, value: f64, tag: T) -> Result<Decision> {
        if self.next_position > self.stream_len {
            return Err(Error::State(format!(
                "tracker declared for {} values received another",
                self.stream_len
            )));
        }
        let position = self.next_position;
        self.next_position += 1;
        if value > self.max {
            self.max = value;
            let room = self.capacity.is_none_or(|cap| self.picks.len() < cap);
            if position >= self.warmup && room {
                self.picks.push(Pick {
                    position,
                    value,
                    tag,
                });
                return Ok(Decision::Added);
            }
        }
        Ok(Decision::Skipped)
    }

    /// Returns the shortlist and its best pick (the last one, since picks increase).
    pub fn finalize(self) -> (Vec<Pick<T>>, Option<Pick<T>>)
    where
        T: Clone,
    {
        let best = self.picks.last().cloned();
        (self.picks, best)
    }
}
