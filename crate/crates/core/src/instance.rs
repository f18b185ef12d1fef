//! Instance generation, arrival orders and seed derivation.
//!
//! Every random quantity in a trial is drawn from its own ChaCha8 stream. A stream seed is
//! `master ^ fnv1a64(label)`, with the labels `"instance"`, `"arrival"` and `"layout"`, so
//! changing how one stream is consumed never perturbs another. Trials in a batch get
//! their master seed from [`trial_seed`].

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{ItemId, ValueOracle};

pub const INSTANCE_STREAM: &str = "instance";
pub const ARRIVAL_STREAM: &str = "arrival";
pub const LAYOUT_STREAM: &str = "layout";

/// 64-bit FNV-1a.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn stream_seed(master: u64, label: &str) -> u64 {
    master ^ label_hash(label)
}

pub fn stream_rng(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, label))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Master seed for trial `index` of a batch seeded with `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ label_hash("trial").wrapping_add(index))
}

fn default_weight() -> f64 {
    1.0
}

/// How to obtain a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Random weighted coverage: each item covers each universe element independently
    /// with probability `density`; element weights are uniform in `[weight_min, weight_max]`.
    Coverage {
        n: usize,
        universe: usize,
        density: f64,
        #[serde(default = "default_weight")]
        weight_min: f64,
        #[serde(default = "default_weight")]
        weight_max: f64,
    },
    /// Modular weights, either fixed or uniform in `[weight_min, weight_max]`.
    Modular {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default = "default_weight")]
        weight_min: f64,
        #[serde(default = "default_weight")]
        weight_max: f64,
    },
    File {
        path: PathBuf,
    },
}

fn check_range(min: f64, max: f64) -> Result<()> {
    if !(min.is_finite() && max.is_finite() && 0.0 <= min && min <= max) {
        return Err(Error::validation(
            "instance.weight_min",
            format!("weight range [{min}, {max}] must satisfy 0 <= min <= max"),
        ));
    }
    Ok(())
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            InstanceSpec::Coverage {
                n,
                universe,
                density,
                weight_min,
                weight_max,
            } => {
                if *n == 0 {
                    return Err(Error::validation("instance.n", "must be at least 1"));
                }
                if *universe == 0 {
                    return Err(Error::validation("instance.universe", "must be at least 1"));
                }
                if !(*density > 0.0 && *density <= 1.0) {
                    return Err(Error::validation(
                        "instance.density",
                        format!("{density} is outside (0, 1]"),
                    ));
                }
                check_range(*weight_min, *weight_max)
            }
            InstanceSpec::Modular {
                n,
                weights,
                weight_min,
                weight_max,
            } => {
                if *n == 0 {
                    return Err(Error::validation("instance.n", "must be at least 1"));
                }
                if let Some(w) = weights {
                    if w.len() != *n {
                        return Err(Error::validation(
                            "instance.weights",
                            format!("expected {n} weights, found {}", w.len()),
                        ));
                    }
                }
                check_range(*weight_min, *weight_max)
            }
            InstanceSpec::File { .. } => Ok(()),
        }
    }
}

fn uniform_weight<R: Rng>(rng: &mut R, min: f64, max: f64) -> f64 {
    if min == max {
        min
    } else {
        rng.random_range(min..=max)
    }
}

/// Builds the oracle described by `spec`; a deterministic function of `(spec, seed)`.
pub fn gen_instance(spec: &InstanceSpec, seed: u64) -> Result<ValueOracle> {
    spec.validate()?;
    let mut rng = stream_rng(seed, INSTANCE_STREAM);
    match spec {
        InstanceSpec::Coverage {
            n,
            universe,
            density,
            weight_min,
            weight_max,
        } => {
            let weights = (0..*universe)
                .map(|_| uniform_weight(&mut rng, *weight_min, *weight_max))
                .collect();
            let covers = (0..*n)
                .map(|_| {
                    (0..*universe)
                        .filter(|_| rng.random_bool(*density))
                        .collect()
                })
                .collect();
            ValueOracle::coverage(weights, covers)
        }
        InstanceSpec::Modular {
            n,
            weights,
            weight_min,
            weight_max,
        } => match weights {
            Some(w) => ValueOracle::modular(w.clone()),
            None => ValueOracle::modular(
                (0..*n)
                    .map(|_| uniform_weight(&mut rng, *weight_min, *weight_max))
                    .collect(),
            ),
        },
        InstanceSpec::File { path } => ValueOracle::load(path),
    }
}

/// A permutation of the ground set: `order[p]` arrives in round `p + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ArrivalOrder(Vec<ItemId>);

impl ArrivalOrder {
    /// Validates that `order` is a bijection on `{0..order.len()-1}`.
    pub fn new(order: Vec<ItemId>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for id in &order {
            match seen.get_mut(id.0) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Error::invalid(format!(
                        "arrival order is not a permutation (item {id})"
                    )))
                }
            }
        }
        Ok(ArrivalOrder(order))
    }

    pub fn identity(n: usize) -> Self {
        ArrivalOrder((0..n).map(ItemId).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    /// Item arriving in 1-based round `position`.
    pub fn at(&self, position: usize) -> Option<ItemId> {
        position.checked_sub(1).and_then(|p| self.0.get(p).copied())
    }
}

/// Uniformly random arrival order (Fisher–Yates) from the `"arrival"` stream of `seed`.
pub fn sample_arrival(n: usize, seed: u64) -> Result<ArrivalOrder> {
    if n == 0 {
        return Err(Error::invalid("arrival order needs n >= 1"));
    }
    let mut rng = stream_rng(seed, ARRIVAL_STREAM);
    let mut order: Vec<ItemId> = (0..n).map(ItemId).collect();
    order.shuffle(&mut rng);
    Ok(ArrivalOrder(order))
}
