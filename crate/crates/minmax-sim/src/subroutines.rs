//! The two subroutines the evaluator loop calls, in three backends each,
//! plus the interval range check and the modeled quantum cost schedule.
//!
//! `find_pivot` returns a uniformly random leaf index whose value lies
//! strictly inside the current interval, or `None` when the interior is
//! empty. `decide_ge` decides whether the tree value is at least a given
//! leaf's value by evaluating the Boolean threshold tree: gates become
//! AND/OR and leaf `k` becomes the bit `[x_k >= x_v]`, read lazily with one
//! comparison query per visited leaf (short-circuit gate evaluation). The
//! range check decomposes into two independent threshold decisions, one per
//! real interval end; sentinel ends are answered true without a call.
//!
//! Cost model: each `find_pivot` call charges `ceil(sqrt(N))` modeled
//! search units and each `decide_ge` call charges
//! `ceil(N^exponent * log2(N+1)^polylog) * amplification_reps` modeled
//! AND-OR units, independent of backend. The stochastic backend corrupts
//! answers with a per-call probability, and the grover backend replaces the
//! ideal pivot draw with a real statevector search whose oracle calls are
//! charged as comparison queries (two per call, one comparison per interval
//! end).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grover::{grover_search, SearchInstance};
use crate::oracle::{ExtIndex, OracleHandle, OracleMode};
use crate::trees::{eval_threshold_with, LeafIndex, MinMaxTree};
use crate::{Error, Result};

/// Subroutine backend selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Ideal,
    Stochastic,
    Grover,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Ideal => write!(f, "ideal"),
            Backend::Stochastic => write!(f, "stochastic"),
            Backend::Grover => write!(f, "grover"),
        }
    }
}

/// Backend and cost-model configuration for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub backend: Backend,
    /// Per-call error probability of the stochastic backend, in [0, 0.5).
    pub epsilon: f64,
    /// Exponent of the modeled AND-OR cost `W(N) = ceil(N^e * log2(N+1)^p)`.
    pub andor_cost_exponent: f64,
    /// Polylog power `p` of the modeled AND-OR cost.
    pub andor_polylog_power: u32,
    /// Odd majority-vote repetition count; multiplies the modeled AND-OR
    /// cost and sharpens the stochastic decision error.
    pub amplification_reps: u32,
    /// Seed for all randomness of the trial this config drives.
    pub seed: u64,
}

impl BackendConfig {
    pub fn ideal(seed: u64) -> Self {
        BackendConfig {
            backend: Backend::Ideal,
            epsilon: 0.0,
            andor_cost_exponent: 0.5,
            andor_polylog_power: 0,
            amplification_reps: 1,
            seed,
        }
    }

    pub fn stochastic(epsilon: f64, seed: u64) -> Self {
        BackendConfig {
            backend: Backend::Stochastic,
            epsilon,
            ..BackendConfig::ideal(seed)
        }
    }

    pub fn grover(seed: u64) -> Self {
        BackendConfig {
            backend: Backend::Grover,
            ..BackendConfig::ideal(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon {} must lie in [0, 0.5)",
                self.epsilon
            )));
        }
        if self.epsilon > 0.0 && self.backend != Backend::Stochastic {
            return Err(Error::Config(
                "epsilon is only meaningful for the stochastic backend".into(),
            ));
        }
        if self.amplification_reps.is_multiple_of(2) || self.amplification_reps == 0 {
            return Err(Error::Config(format!(
                "amplification_reps {} must be odd",
                self.amplification_reps
            )));
        }
        if self.andor_cost_exponent < 0.0 {
            return Err(Error::Config("andor_cost_exponent must be >= 0".into()));
        }
        Ok(())
    }

    /// Worst-case probability that at least one subroutine call errs during
    /// a single evaluator iteration (one pivot search, one refining
    /// decision, two range-check decisions).
    pub fn per_iteration_error(&self) -> f64 {
        match self.backend {
            Backend::Stochastic => {
                let decide_eps = crate::stats::majority_error(self.epsilon, self.amplification_reps);
                1.0 - (1.0 - self.epsilon) * (1.0 - decide_eps).powi(3)
            }
            _ => 0.0,
        }
    }
}

/// Current search range over leaf indices: the tree value is bracketed as
/// `x_lo <= value < x_hi`, with the sentinels marking unbounded ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: ExtIndex,
    pub hi: ExtIndex,
}

impl Interval {
    pub fn unbounded() -> Self {
        Interval {
            lo: ExtIndex::Bot,
            hi: ExtIndex::Top,
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Which modeled unit schedule to price.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    Search,
    AndOr,
}

/// Deterministic modeled query units charged per subroutine call.
pub fn modeled_cost(kind: CostKind, n: usize, cfg: &BackendConfig) -> u64 {
    // Guard against float noise pushing an exact integer over its ceiling.
    fn ceil_guarded(x: f64) -> u64 {
        (x - 1e-9).ceil().max(1.0) as u64
    }
    let nf = n as f64;
    match kind {
        CostKind::Search => ceil_guarded(nf.sqrt()),
        CostKind::AndOr => {
            let polylog = ((nf + 1.0).log2()).powi(cfg.andor_polylog_power as i32);
            ceil_guarded(nf.powf(cfg.andor_cost_exponent) * polylog)
                * cfg.amplification_reps as u64
        }
    }
}

/// Leaf indices whose values lie strictly inside the interval.
fn interior(tree: &MinMaxTree, h: &OracleHandle<'_>, iv: Interval) -> Vec<LeafIndex> {
    (1..=tree.leaf_count())
        .filter(|&j| {
            h.compare_unbilled(iv.lo, ExtIndex::Leaf(j))
                && h.compare_unbilled(ExtIndex::Leaf(j), iv.hi)
        })
        .collect()
}

/// Finds a random pivot index `j` with `x_lo < x_j < x_hi`, or `None` when
/// no value lies strictly inside the interval. Charges modeled search units
/// on every call. The ideal and stochastic backends stand in for the
/// quantum search and inspect the interior through the unbilled window; the
/// grover backend runs the statevector search and charges real comparison
/// queries per oracle call.
pub fn find_pivot(
    tree: &MinMaxTree,
    h: &mut OracleHandle<'_>,
    iv: Interval,
    cfg: &BackendConfig,
    rng: &mut ChaCha8Rng,
) -> Option<LeafIndex> {
    h.count_pivot_search();
    h.charge_search_units(modeled_cost(CostKind::Search, tree.leaf_count(), cfg));
    match cfg.backend {
        Backend::Ideal => ideal_pivot(tree, h, iv, rng),
        Backend::Stochastic => {
            if rng.gen_bool(cfg.epsilon) {
                corrupted_pivot(tree, h, iv, rng)
            } else {
                ideal_pivot(tree, h, iv, rng)
            }
        }
        Backend::Grover => grover_pivot(tree, h, iv, rng),
    }
}

fn ideal_pivot(
    tree: &MinMaxTree,
    h: &OracleHandle<'_>,
    iv: Interval,
    rng: &mut ChaCha8Rng,
) -> Option<LeafIndex> {
    let inside = interior(tree, h, iv);
    if inside.is_empty() {
        None
    } else {
        Some(inside[rng.gen_range(0..inside.len())])
    }
}

/// Adversarial corruption: either a uniform index from outside the
/// interior, or a false "nothing found"; drawn uniformly over whichever of
/// the two corruptions exist for this interval.
fn corrupted_pivot(
    tree: &MinMaxTree,
    h: &OracleHandle<'_>,
    iv: Interval,
    rng: &mut ChaCha8Rng,
) -> Option<LeafIndex> {
    let inside = interior(tree, h, iv);
    let outside: Vec<LeafIndex> = (1..=tree.leaf_count())
        .filter(|j| !inside.contains(j))
        .collect();
    let mut options: Vec<u8> = Vec::with_capacity(2);
    if !outside.is_empty() {
        options.push(0); // wrong index
    }
    if !inside.is_empty() {
        options.push(1); // false none
    }
    match options[rng.gen_range(0..options.len())] {
        0 => Some(outside[rng.gen_range(0..outside.len())]),
        _ => None,
    }
}

fn grover_pivot(
    tree: &MinMaxTree,
    h: &mut OracleHandle<'_>,
    iv: Interval,
    rng: &mut ChaCha8Rng,
) -> Option<LeafIndex> {
    let n = tree.leaf_count();
    // Pad to a power of two with never-marked dummy indices.
    let n_pad = n.next_power_of_two();
    let instance_rng = ChaCha8Rng::seed_from_u64(rng.gen());
    let outcome = {
        let predicate = |i: usize| {
            i < n
                && h.compare_unbilled(iv.lo, ExtIndex::Leaf(i + 1))
                && h.compare_unbilled(ExtIndex::Leaf(i + 1), iv.hi)
        };
        let mut inst = SearchInstance::with_rng(n_pad, predicate, instance_rng)
            .expect("padded size is a valid power of two");
        grover_search(&mut inst)
    };
    // Each oracle call evaluates the interior predicate once, which costs
    // one comparison per interval end.
    h.charge_grover_calls(outcome.oracle_calls);
    h.charge_comparisons(2 * outcome.oracle_calls);
    outcome.found.map(|i| i + 1)
}

/// Decides `[value(tree) >= x_v]` through the threshold reduction, reading
/// each visited leaf's bit with one comparison query (or one value read per
/// leaf plus one for the pivot in the input-value model). Charges modeled
/// AND-OR units on every call; the stochastic backend flips the answer with
/// the majority-vote error of `amplification_reps` independent coins.
pub fn decide_ge(
    tree: &MinMaxTree,
    h: &mut OracleHandle<'_>,
    v_index: LeafIndex,
    cfg: &BackendConfig,
    rng: &mut ChaCha8Rng,
) -> bool {
    h.count_threshold_decision();
    h.charge_andor_units(modeled_cost(CostKind::AndOr, tree.leaf_count(), cfg));
    let truth = match h.mode() {
        OracleMode::Comparison => eval_threshold_with(tree, &mut |k| {
            // x_k >= x_v  <=>  not (x_k < x_v)
            !h.compare(ExtIndex::Leaf(k), ExtIndex::Leaf(v_index))
                .expect("leaf indices validated by tree construction")
        }),
        OracleMode::InputValue => {
            let v = h
                .read_value(v_index)
                .expect("input-value mode established by caller");
            eval_threshold_with(tree, &mut |k| {
                h.read_value(k).expect("valid leaf index") >= v
            })
        }
    };
    if cfg.backend == Backend::Stochastic {
        let wrongs = (0..cfg.amplification_reps)
            .filter(|_| rng.gen_bool(cfg.epsilon))
            .count() as u32;
        if wrongs * 2 > cfg.amplification_reps {
            return !truth;
        }
    }
    truth
}

/// Checks `x_lo <= value(tree) < x_hi`. Sentinel ends hold by convention
/// and cost nothing; each real end is one independent `decide_ge` call.
pub fn range_check(
    tree: &MinMaxTree,
    h: &mut OracleHandle<'_>,
    iv: Interval,
    cfg: &BackendConfig,
    rng: &mut ChaCha8Rng,
) -> bool {
    let lower = match iv.lo {
        ExtIndex::Bot => true,
        ExtIndex::Leaf(g) => decide_ge(tree, h, g, cfg, rng),
        ExtIndex::Top => false,
    };
    if !lower {
        return false;
    }
    match iv.hi {
        ExtIndex::Top => true,
        ExtIndex::Leaf(d) => !decide_ge(tree, h, d, cfg, rng),
        ExtIndex::Bot => false,
    }
}
