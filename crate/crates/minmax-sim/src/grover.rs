//! Statevector simulation of Grover search with an unknown number of
//! marked items.
//!
//! The state starts in the uniform superposition over `n` basis states
//! (`n` a power of two). One Grover iteration flips the sign of every
//! marked amplitude (the oracle) and then reflects all amplitudes about
//! their mean (diffusion). Starting from angle `theta = asin(sqrt(m/n))`,
//! `k` iterations leave `sin^2((2k+1) * theta)` of the probability mass on
//! the marked subspace.
//!
//! Since the number of marked items is unknown to the caller, the search
//! uses the exponential schedule: run a uniformly random number of
//! iterations below a bound that grows by a factor of 6/5 per stage,
//! measure, and verify the outcome with one extra oracle call. Measurement
//! of the simulated state returns each marked item with equal probability,
//! which downstream code relies on. The search gives up once it has spent
//! `ceil(budget_factor * sqrt(n))` oracle calls, so an empty marked set
//! costs O(sqrt(n)) and is reported as `found: None`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Statevector size cap; one trial stays well under a second below this.
pub const MAX_SEARCH_SPACE: usize = 1 << 20;

/// Default oracle-call budget factor (`budget = ceil(factor * sqrt(n))`),
/// sized so that an exhausted budget is a reliable "nothing marked" signal.
pub const DEFAULT_BUDGET_FACTOR: f64 = 9.0;

/// Empirical failure ceiling contracted for searches over a non-empty
/// marked set at the default budget.
pub const FAILURE_FLOOR: f64 = 0.1;

/// Growth factor of the iteration-bound schedule.
const SCHEDULE_GROWTH: f64 = 6.0 / 5.0;

/// Real amplitude vector over the search space. Grover dynamics keep the
/// amplitudes real, so no complex storage is needed.
#[derive(Clone, Debug)]
pub struct Statevector {
    amps: Vec<f64>,
}

impl Statevector {
    /// Uniform superposition over `n` basis states.
    pub fn uniform(n: usize) -> Self {
        let amp = 1.0 / (n as f64).sqrt();
        Statevector {
            amps: vec![amp; n],
        }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// One Grover iteration: oracle sign flip on `marked`, then reflection
    /// about the amplitude mean.
    pub fn grover_iterate(&mut self, marked: &[bool]) {
        debug_assert_eq!(marked.len(), self.amps.len());
        for (a, &m) in self.amps.iter_mut().zip(marked) {
            if m {
                *a = -*a;
            }
        }
        let mean = self.amps.iter().sum::<f64>() / self.amps.len() as f64;
        for a in &mut self.amps {
            *a = 2.0 * mean - *a;
        }
    }

    /// Probability mass on the marked subspace.
    pub fn marked_mass(&self, marked: &[bool]) -> f64 {
        self.amps
            .iter()
            .zip(marked)
            .filter(|(_, &m)| m)
            .map(|(a, _)| a * a)
            .sum()
    }

    /// L2 norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Samples a basis state from the Born distribution.
    pub fn measure(&self, rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = self.amps.iter().map(|a| a * a).sum();
        let mut r = rng.gen::<f64>() * total;
        for (i, a) in self.amps.iter().enumerate() {
            r -= a * a;
            if r <= 0.0 {
                return i;
            }
        }
        self.amps.len() - 1
    }
}

/// Analytic probability that measuring after `k` Grover iterations over a
/// space of size `n` with `m` marked items yields a marked item.
pub fn grover_success_prob(n: usize, m: usize, k: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::Contract("search space must be non-empty".into()));
    }
    if m > n {
        return Err(Error::Contract(format!(
            "marked count {m} exceeds search space {n}"
        )));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let theta = (m as f64 / n as f64).sqrt().asin();
    Ok(((2.0 * k as f64 + 1.0) * theta).sin().powi(2))
}

/// A search problem: space size (power of two), a pure black-box predicate
/// marking the sought items, and the RNG driving iteration choices and
/// measurements.
pub struct SearchInstance<'a> {
    n: usize,
    predicate: Box<dyn FnMut(usize) -> bool + 'a>,
    rng: ChaCha8Rng,
    budget_factor: f64,
}

impl<'a> SearchInstance<'a> {
    pub fn new<F>(n: usize, predicate: F, seed: u64) -> Result<Self>
    where
        F: FnMut(usize) -> bool + 'a,
    {
        Self::with_rng(n, predicate, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng<F>(n: usize, predicate: F, rng: ChaCha8Rng) -> Result<Self>
    where
        F: FnMut(usize) -> bool + 'a,
    {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Contract(format!(
                "search space size {n} must be a power of two"
            )));
        }
        if n > MAX_SEARCH_SPACE {
            return Err(Error::Capacity(format!(
                "search space {n} exceeds the simulable cap {MAX_SEARCH_SPACE}"
            )));
        }
        Ok(SearchInstance {
            n,
            predicate: Box::new(predicate),
            rng,
            budget_factor: DEFAULT_BUDGET_FACTOR,
        })
    }

    pub fn with_budget_factor(mut self, factor: f64) -> Self {
        self.budget_factor = factor;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Result of one search run. `oracle_calls` counts oracle uses the quantum
/// algorithm would be charged for: one per Grover iteration plus one per
/// classical verification of a measured candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub found: Option<usize>,
    pub oracle_calls: u64,
    pub grover_iterations: u64,
}

/// Runs the unknown-marked-count search. If anything is marked, the result
/// is a verified marked index, uniform over the marked set, found after an
/// expected O(sqrt(n/m)) oracle calls; with nothing marked the budget is
/// exhausted and `found` is `None`.
pub fn grover_search(inst: &mut SearchInstance<'_>) -> SearchOutcome {
    let n = inst.n;
    // The simulation needs the marked set up front to apply the oracle to
    // the full statevector; these bookkeeping evaluations are not charged.
    let marked: Vec<bool> = (0..n).map(|i| (inst.predicate)(i)).collect();
    let budget = (inst.budget_factor * (n as f64).sqrt()).ceil() as u64;

    let mut oracle_calls = 0u64;
    let mut grover_iterations = 0u64;
    let mut bound = 1.0f64;
    let sqrt_n = (n as f64).sqrt();

    while oracle_calls < budget {
        // Reserve one call for verification; clamp the stage to the budget.
        let remaining = budget - oracle_calls - 1;
        let k = inst
            .rng
            .gen_range(0..bound.ceil() as u64)
            .min(remaining);
        let mut state = Statevector::uniform(n);
        for _ in 0..k {
            state.grover_iterate(&marked);
        }
        oracle_calls += k;
        grover_iterations += k;

        let candidate = state.measure(&mut inst.rng);
        oracle_calls += 1;
        if marked[candidate] {
            return SearchOutcome {
                found: Some(candidate),
                oracle_calls,
                grover_iterations,
            };
        }
        bound = (bound * SCHEDULE_GROWTH).min(sqrt_n);
    }

    SearchOutcome {
        found: None,
        oracle_calls,
        grover_iterations,
    }
}
