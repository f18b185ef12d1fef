//! Value oracles for monotone submodular set functions.
//!
//! Every oracle is normalized (`f(∅) = 0`) and counts the function values it computes.
//! A set value is always computed the same way, as a sum of non-negative weights taken in
//! ascending key order, so `f(S ∪ {i}) - f(S)` is never negative and identical sets give
//! bit-identical values no matter which route produced them.

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an item in the ground set `{0..n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub usize);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Coverage,
    Modular,
}

#[derive(Debug, Clone, PartialEq)]
struct Coverage {
    universe: usize,
    weights: Vec<f64>,
    covers: Vec<Vec<usize>>,
    masks: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Coverage(Coverage),
    Modular(Vec<f64>),
}

/// A monotone submodular function over `ground_size` items with an evaluation counter.
///
/// The payload is immutable; the counter is atomic, so one oracle can be shared by
/// concurrent workers and the final count is exact.
#[derive(Debug)]
pub struct ValueOracle {
    ground_size: usize,
    payload: Payload,
    evals: AtomicU64,
}

impl Clone for ValueOracle {
    fn clone(&self) -> Self {
        ValueOracle {
            ground_size: self.ground_size,
            payload: self.payload.clone(),
            evals: AtomicU64::new(self.eval_count()),
        }
    }
}

/// Two oracles are equal when they describe the same function; counters are ignored.
impl PartialEq for ValueOracle {
    fn eq(&self, other: &Self) -> bool {
        self.ground_size == other.ground_size && self.payload == other.payload
    }
}

fn check_weights(weights: &[f64], what: &str) -> Result<()> {
    match weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        Some(i) => Err(Error::invalid(format!(
            "{what} weight {i} is {} (must be finite and non-negative)",
            weights[i]
        ))),
        None => Ok(()),
    }
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

impl ValueOracle {
    /// Weighted coverage: item `i` covers the universe elements `covers[i]` and
    /// `f(S)` is the total weight of elements covered by `S`.
    pub fn coverage(weights: Vec<f64>, covers: Vec<Vec<usize>>) -> Result<Self> {
        check_weights(&weights, "universe")?;
        Self::coverage_unvalidated(weights, covers)
    }

    /// Like [`ValueOracle::coverage`] but accepts negative weights, which break
    /// monotonicity. Intended for exercising [`check_monotone_submodular`].
    pub fn coverage_unvalidated(weights: Vec<f64>, covers: Vec<Vec<usize>>) -> Result<Self> {
        let universe = weights.len();
        let words = words_for(universe);
        let mut sorted_covers = Vec::with_capacity(covers.len());
        let mut masks = Vec::with_capacity(covers.len());
        for (i, mut cover) in covers.into_iter().enumerate() {
            if let Some(&e) = cover.iter().find(|&&e| e >= universe) {
                return Err(Error::invalid(format!(
                    "item {i} covers element {e} outside universe of size {universe}"
                )));
            }
            cover.sort_unstable();
            cover.dedup();
            let mut mask = vec![0u64; words];
            for &e in &cover {
                mask[e / 64] |= 1 << (e % 64);
            }
            sorted_covers.push(cover);
            masks.push(mask);
        }
        Ok(ValueOracle {
            ground_size: sorted_covers.len(),
            payload: Payload::Coverage(Coverage {
                universe,
                weights,
                covers: sorted_covers,
                masks,
            }),
            evals: AtomicU64::new(0),
        })
    }

    /// Additive function `f(S) = Σ_{i∈S} weights[i]`.
    pub fn modular(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, "item")?;
        Ok(Self::modular_unvalidated(weights))
    }

    /// Modular oracle without the non-negativity check.
    pub fn modular_unvalidated(weights: Vec<f64>) -> Self {
        ValueOracle {
            ground_size: weights.len(),
            payload: Payload::Modular(weights),
            evals: AtomicU64::new(0),
        }
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn kind(&self) -> OracleKind {
        match self.payload {
            Payload::Coverage(_) => OracleKind::Coverage,
            Payload::Modular(_) => OracleKind::Modular,
        }
    }

    /// Number of function values computed so far.
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    #[inline]
    fn tick(&self) {
        self.evals.fetch_add(1, Ordering::Relaxed);
    }

    fn check_item(&self, i: ItemId) -> Result<()> {
        if i.0 < self.ground_size {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "item {i} out of range for ground set of size {}",
                self.ground_size
            )))
        }
    }

    /// `f(S)`. Duplicates in `set` are ignored and the presentation order does not matter.
    pub fn eval(&self, set: &[ItemId]) -> Result<f64> {
        Ok(self.base(set)?.value())
    }

    /// `Δ(i | S) = f(S ∪ {i}) - f(S)`, computed from two function values.
    pub fn marginal(&self, item: ItemId, set: &[ItemId]) -> Result<f64> {
        self.check_item(item)?;
        let base = self.base(set)?;
        Ok(base.gain(item))
    }

    /// Evaluates `f(S)` once and keeps enough state to answer `f(S ∪ {i})` queries,
    /// each of which is one more counted evaluation.
    pub fn base(&self, set: &[ItemId]) -> Result<Base<'_>> {
        self.base_inner(set, None)
    }

    /// Like [`ValueOracle::base`], but every evaluation made through the returned base
    /// (and bases derived from it) is also added to `meter`.
    pub fn base_metered<'a>(&'a self, set: &[ItemId], meter: &'a AtomicU64) -> Result<Base<'a>> {
        self.base_inner(set, Some(meter))
    }

    fn base_inner<'a>(&'a self, set: &[ItemId], meter: Option<&'a AtomicU64>) -> Result<Base<'a>> {
        for &i in set {
            self.check_item(i)?;
        }
        let mut members = set.to_vec();
        members.sort_unstable();
        members.dedup();
        Ok(Base::build(self, members, meter))
    }

    /// `f({i})` for every item, in id order.
    pub fn singleton_values(&self) -> Vec<f64> {
        let empty = Base::build(self, Vec::new(), None);
        (0..self.ground_size)
            .map(|i| empty.gain(ItemId(i)))
            .collect()
    }

    pub fn to_doc(&self) -> InstanceDoc {
        match &self.payload {
            Payload::Coverage(c) => InstanceDoc::Coverage(CoverageDoc {
                n: self.ground_size,
                universe: c.universe,
                weights: c.weights.clone(),
                covers: c.covers.clone(),
            }),
            Payload::Modular(w) => InstanceDoc::Modular(ModularDoc {
                n: self.ground_size,
                weights: w.clone(),
            }),
        }
    }

    pub fn from_doc(doc: InstanceDoc) -> Result<Self> {
        match doc {
            InstanceDoc::Coverage(c) => {
                if c.covers.len() != c.n {
                    return Err(Error::validation(
                        "covers",
                        format!("expected {} cover lists, found {}", c.n, c.covers.len()),
                    ));
                }
                if c.weights.len() != c.universe {
                    return Err(Error::validation(
                        "weights",
                        format!("expected {} weights, found {}", c.universe, c.weights.len()),
                    ));
                }
                Self::coverage(c.weights, c.covers)
            }
            InstanceDoc::Modular(m) => {
                if m.weights.len() != m.n {
                    return Err(Error::validation(
                        "weights",
                        format!("expected {} weights, found {}", m.n, m.weights.len()),
                    ));
                }
                Self::modular(m.weights)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("instance documents always serialize")
    }

    /// Parses an instance document. `context` names the source in error messages.
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Format {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        let is_coverage = value.get("covers").is_some() || value.get("universe").is_some();
        let parsed = if is_coverage {
            serde_json::from_value(value).map(InstanceDoc::Coverage)
        } else {
            serde_json::from_value(value).map(InstanceDoc::Modular)
        };
        let doc = parsed.map_err(|e| Error::Format {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// On-disk instance formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceDoc {
    Coverage(CoverageDoc),
    Modular(ModularDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageDoc {
    pub n: usize,
    pub universe: usize,
    pub weights: Vec<f64>,
    pub covers: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModularDoc {
    pub n: usize,
    pub weights: Vec<f64>,
}

/// A set `S` whose value has been computed, ready for `f(S ∪ {i})` queries.
#[derive(Debug, Clone)]
pub struct Base<'a> {
    oracle: &'a ValueOracle,
    meter: Option<&'a AtomicU64>,
    members: Vec<ItemId>,
    covered: Vec<u64>,
    value: f64,
}

impl<'a> Base<'a> {
    fn build(oracle: &'a ValueOracle, members: Vec<ItemId>, meter: Option<&'a AtomicU64>) -> Self {
        oracle.tick();
        if let Some(m) = meter {
            m.fetch_add(1, Ordering::Relaxed);
        }
        match &oracle.payload {
            Payload::Coverage(c) => {
                let mut covered = vec![0u64; words_for(c.universe)];
                for m in &members {
                    for (w, bits) in covered.iter_mut().zip(&c.masks[m.0]) {
                        *w |= bits;
                    }
                }
                let value = coverage_sum(&c.weights, &covered, None);
                Base {
                    oracle,
                    meter,
                    members,
                    covered,
                    value,
                }
            }
            Payload::Modular(w) => {
                let value = members.iter().map(|m| w[m.0]).sum();
                Base {
                    oracle,
                    meter,
                    members,
                    covered: Vec::new(),
                    value,
                }
            }
        }
    }

    /// `f(S)`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Sorted, deduplicated members of `S`.
    pub fn members(&self) -> &[ItemId] {
        &self.members
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.members.binary_search(&item).is_ok()
    }

    /// `f(S ∪ {i})`; one counted evaluation.
    ///
    /// # Panics
    ///
    /// If `item` is outside the ground set.
    pub fn value_with(&self, item: ItemId) -> f64 {
        self.oracle.tick();
        if let Some(m) = self.meter {
            m.fetch_add(1, Ordering::Relaxed);
        }
        if self.contains(item) {
            return self.value;
        }
        match &self.oracle.payload {
            Payload::Coverage(c) => coverage_sum(&c.weights, &self.covered, Some(&c.masks[item.0])),
            Payload::Modular(w) => {
                let pos = self.members.partition_point(|m| *m < item);
                let (lo, hi) = self.members.split_at(pos);
                lo.iter()
                    .map(|m| w[m.0])
                    .chain(std::iter::once(w[item.0]))
                    .chain(hi.iter().map(|m| w[m.0]))
                    .sum()
            }
        }
    }

    /// `Δ(i | S)`; one counted evaluation.
    pub fn gain(&self, item: ItemId) -> f64 {
        self.value_with(item) - self.value
    }

    /// The base for `S ∪ {i}`; one counted evaluation.
    pub fn with(&self, item: ItemId) -> Base<'a> {
        let mut members = self.members.clone();
        if let Err(pos) = members.binary_search(&item) {
            members.insert(pos, item);
        }
        Base::build(self.oracle, members, self.meter)
    }
}

fn coverage_sum(weights: &[f64], covered: &[u64], extra: Option<&[u64]>) -> f64 {
    let mut total = 0.0;
    for (wi, &word) in covered.iter().enumerate() {
        let mut bits = word | extra.map_or(0, |x| x[wi]);
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            total += weights[wi * 64 + b];
            bits &= bits - 1;
        }
    }
    total
}

/// A counterexample found by [`check_monotone_submodular`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Violation {
    Normalization {
        value: f64,
    },
    Monotonicity {
        subset: Vec<ItemId>,
        superset: Vec<ItemId>,
        f_subset: f64,
        f_superset: f64,
    },
    Submodularity {
        subset: Vec<ItemId>,
        superset: Vec<ItemId>,
        item: ItemId,
        gain_subset: f64,
        gain_superset: f64,
    },
    /// `f(A ∪ B) - f(B) > Σ_{a∈A\B} Δ(a | B)`.
    MarginalSum {
        a: Vec<ItemId>,
        b: Vec<ItemId>,
        joint_gain: f64,
        summed_gains: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub trials: usize,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

const CHECK_TOLERANCE: f64 = 1e-9;

fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + CHECK_TOLERANCE * (1.0 + lhs.abs().max(rhs.abs()))
}

fn random_subset<R: Rng + ?Sized>(rng: &mut R, from: &[ItemId], p: f64) -> Vec<ItemId> {
    from.iter()
        .copied()
        .filter(|_| rng.random_bool(p))
        .collect()
}

/// Samples random chains `S ⊆ T`, items `i ∉ T` and pairs `(A, B)` and reports every
/// violation of monotonicity, diminishing returns or the marginal-sum bound
/// `f(A ∪ B) - f(B) ≤ Σ_{a∈A\B} Δ(a | B)`.
pub fn check_monotone_submodular<R: Rng + ?Sized>(
    oracle: &ValueOracle,
    trials: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let n = oracle.ground_size();
    let all: Vec<ItemId> = (0..n).map(ItemId).collect();
    let mut violations = Vec::new();

    let empty = oracle.eval(&[])?;
    if empty != 0.0 {
        violations.push(Violation::Normalization { value: empty });
    }

    for _ in 0..trials {
        let density = rng.random::<f64>();
        let superset = random_subset(rng, &all, density);
        let subset = random_subset(rng, &superset, 0.5);
        let big = oracle.base(&superset)?;
        let small = oracle.base(&subset)?;
        if exceeds(small.value(), big.value()) {
            violations.push(Violation::Monotonicity {
                subset: subset.clone(),
                superset: superset.clone(),
                f_subset: small.value(),
                f_superset: big.value(),
            });
        }
        let outside: Vec<ItemId> = all.iter().copied().filter(|i| !big.contains(*i)).collect();
        if !outside.is_empty() {
            let item = outside[rng.random_range(0..outside.len())];
            let gain_subset = small.gain(item);
            let gain_superset = big.gain(item);
            if exceeds(gain_superset, gain_subset) {
                violations.push(Violation::Submodularity {
                    subset: subset.clone(),
                    superset: superset.clone(),
                    item,
                    gain_subset,
                    gain_superset,
                });
            }
            if exceeds(0.0, gain_superset) {
                violations.push(Violation::Monotonicity {
                    subset: superset.clone(),
                    superset: big.members().iter().copied().chain([item]).collect(),
                    f_subset: big.value(),
                    f_superset: big.value_with(item),
                });
            }
        }

        let density = rng.random::<f64>();
        let a = random_subset(rng, &all, density);
        let density = rng.random::<f64>();
        let b = random_subset(rng, &all, density);
        let base_b = oracle.base(&b)?;
        let union: Vec<ItemId> = a.iter().chain(&b).copied().collect();
        let joint_gain = oracle.eval(&union)? - base_b.value();
        let summed_gains: f64 = a
            .iter()
            .filter(|i| !base_b.contains(**i))
            .map(|&i| base_b.gain(i))
            .sum();
        if exceeds(joint_gain, summed_gains) {
            violations.push(Violation::MarginalSum {
                a,
                b,
                joint_gain,
                summed_gains,
            });
        }
    }
    Ok(CheckReport { trials, violations })
}
