//! The main evaluation loop: interval narrowing by random pivots, with a
//! stack of verified intervals for error recovery.
//!
//! Each iteration (a) searches for a pivot strictly inside the current
//! interval, (b) if one is found, decides which side of the pivot the tree
//! value lies on and moves that interval end to the pivot, and (c) runs a
//! range check on the updated interval: on success the interval is pushed
//! onto the stack, on failure the interval is discarded and replaced by the
//! popped top of the stack (or reset to the unbounded interval when the
//! stack is empty). After a fixed budget of `ceil(c_factor * log2(N+1))`
//! iterations the lower interval end is returned as the answer index.
//!
//! With error-free subroutines the interval always brackets the tree value
//! and the loop converges once the interior is empty, at which point the
//! lower end attains the tree value. With noisy subroutines the stack
//! discipline makes each iteration a step of a biased random walk, so a
//! constant per-iteration error rate below 1/2 still leaves the final lower
//! end correct with constant probability.
//!
//! Traced runs annotate every step against the classical ground-truth value
//! (a test-only privilege; the production path never touches it), enabling
//! the correct/incorrect step statistics of [`drift_statistics`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{CallCounts, ExtIndex, OracleHandle, OracleMode, QueryLedger};
use crate::subroutines::{decide_ge, find_pivot, range_check, Backend, BackendConfig, Interval};
use crate::trees::{eval_minmax, LeafAssignment, LeafIndex, MinMaxTree};
use crate::{Error, Result};

/// Default iteration-budget factor, calibrated on the noise experiment
/// (N = 256 balanced binary, per-call error 0.05, 2000 trials per cell).
/// The success rate collapses at c = 1 (0.24), clears the 2/3 bar thinly at
/// c = 2 (0.78), and from c = 3 onward sits on its ~0.91 plateau, so the
/// Wilson 95% lower bound passes with wide margin from c = 3. The default
/// doubles that knee: c = 6 keeps the noisy-run margin and gives
/// fixed-budget zero-error runs at least twice the worst
/// iterations-to-convergence observed over 10^4 seeded runs at every
/// N <= 1024 (27 at N = 1024 against a budget of 61).
pub const DEFAULT_C_FACTOR: f64 = 6.0;

/// Evaluation configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvaluatorConfig {
    /// Iteration budget factor: the loop runs `ceil(c_factor * log2(N+1))`
    /// iterations.
    pub c_factor: f64,
    pub backend: BackendConfig,
    /// Stop as soon as an iteration finds no pivot and passes its range
    /// check (the loop has converged). Off by default: extra iterations are
    /// harmless and the fixed budget keeps runs comparable.
    pub early_stop: bool,
    /// Record a [`StepRecord`] per iteration, annotated against ground
    /// truth.
    pub trace: bool,
    pub oracle_mode: OracleMode,
}

impl EvaluatorConfig {
    pub fn new(backend: BackendConfig) -> Self {
        EvaluatorConfig {
            c_factor: DEFAULT_C_FACTOR,
            backend,
            early_stop: false,
            trace: false,
            oracle_mode: OracleMode::Comparison,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.backend.validate()?;
        if !self.c_factor.is_finite() || self.c_factor <= 0.0 {
            return Err(Error::Config(format!(
                "c_factor {} must be a positive finite number",
                self.c_factor
            )));
        }
        if self.backend.backend == Backend::Grover && self.oracle_mode == OracleMode::InputValue {
            return Err(Error::Config(
                "the grover backend runs in comparison mode only".into(),
            ));
        }
        Ok(())
    }

    /// Iteration budget for a tree with `n` leaves.
    pub fn iteration_budget(&self, n: usize) -> usize {
        ((self.c_factor * ((n as f64) + 1.0).log2()).ceil() as usize).max(1)
    }
}

/// Direction a found pivot moved the interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefineDir {
    /// Tree value is at least the pivot value: lower end moved up.
    Lo,
    /// Tree value is below the pivot value: upper end moved down.
    Hi,
}

/// What the range-check branch did to the stack. Exactly one per iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StackAction {
    Push,
    Pop,
    Reset,
}

/// Ground-truth annotations of one step, available on traced runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTruth {
    /// The interval before the step was good (`x_lo` equals the tree value).
    pub pre_good: bool,
    /// The interval after the step is good.
    pub good: bool,
    /// The interval after the step brackets the tree value.
    pub valid: bool,
    /// Push: the pushed pair is good. Pop: the popped pair is good.
    /// Reset: the discarded interval was good.
    pub moved_pair_good: bool,
}

/// One iteration of the loop, as recorded on traced runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub pivot: Option<LeafIndex>,
    pub refine: Option<RefineDir>,
    pub stack_action: StackAction,
    pub interval_after: Interval,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<StepTruth>,
}

struct TraceBuffer {
    truth_value: i64,
    records: Vec<StepRecord>,
}

/// Full mutable state of one evaluation.
pub struct EvalState {
    pub interval: Interval,
    pub stack: Vec<Interval>,
    pub iteration: usize,
    trace: Option<TraceBuffer>,
}

impl EvalState {
    pub fn new() -> Self {
        EvalState {
            interval: Interval::unbounded(),
            stack: Vec::new(),
            iteration: 0,
            trace: None,
        }
    }

    /// State that records per-step ground-truth annotations against the
    /// given tree value.
    pub fn traced(truth_value: i64) -> Self {
        EvalState {
            trace: Some(TraceBuffer {
                truth_value,
                records: Vec::new(),
            }),
            ..EvalState::new()
        }
    }

    pub fn records(&self) -> Option<&[StepRecord]> {
        self.trace.as_ref().map(|t| t.records.as_slice())
    }
}

impl Default for EvalState {
    fn default() -> Self {
        EvalState::new()
    }
}

/// What one iteration observed; `evaluate` uses this for early stopping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub pivot: Option<LeafIndex>,
    pub in_range: bool,
}

fn pair_good(h: &OracleHandle<'_>, pair: Interval, truth_value: i64) -> bool {
    matches!(pair.lo, ExtIndex::Leaf(g) if h.read_unbilled(g) == truth_value)
}

fn pair_valid(h: &OracleHandle<'_>, pair: Interval, truth_value: i64) -> bool {
    let lower = match pair.lo {
        ExtIndex::Bot => true,
        ExtIndex::Leaf(g) => h.read_unbilled(g) <= truth_value,
        ExtIndex::Top => false,
    };
    let upper = match pair.hi {
        ExtIndex::Top => true,
        ExtIndex::Leaf(d) => truth_value < h.read_unbilled(d),
        ExtIndex::Bot => false,
    };
    lower && upper
}

/// Executes exactly one iteration: pivot search, optional refinement, range
/// check with push/pop/reset.
pub fn step(
    tree: &MinMaxTree,
    h: &mut OracleHandle<'_>,
    state: &mut EvalState,
    cfg: &EvaluatorConfig,
    rng: &mut ChaCha8Rng,
) -> StepOutcome {
    let pre_interval = state.interval;
    let pivot = find_pivot(tree, h, state.interval, &cfg.backend, rng);
    let mut refine = None;
    if let Some(j) = pivot {
        if decide_ge(tree, h, j, &cfg.backend, rng) {
            state.interval.lo = ExtIndex::Leaf(j);
            refine = Some(RefineDir::Lo);
        } else {
            state.interval.hi = ExtIndex::Leaf(j);
            refine = Some(RefineDir::Hi);
        }
    }
    let in_range = range_check(tree, h, state.interval, &cfg.backend, rng);
    let (stack_action, moved_pair) = if in_range {
        state.stack.push(state.interval);
        (StackAction::Push, state.interval)
    } else if let Some(previous) = state.stack.pop() {
        // The failing pair is discarded, replaced by the popped one.
        state.interval = previous;
        (StackAction::Pop, previous)
    } else {
        let discarded = state.interval;
        state.interval = Interval::unbounded();
        (StackAction::Reset, discarded)
    };
    state.iteration += 1;

    if let Some(buffer) = &mut state.trace {
        let v = buffer.truth_value;
        let truth = StepTruth {
            pre_good: pair_good(h, pre_interval, v),
            good: pair_good(h, state.interval, v),
            valid: pair_valid(h, state.interval, v),
            moved_pair_good: pair_good(h, moved_pair, v),
        };
        buffer.records.push(StepRecord {
            iteration: state.iteration,
            pivot,
            refine,
            stack_action,
            interval_after: state.interval,
            truth: Some(truth),
        });
    }

    StepOutcome { pivot, in_range }
}

/// Result of one evaluation. `succeeded` records only that a real index was
/// returned; whether its value equals the tree value is checked externally
/// by the harness, since the evaluation itself has no ground-truth access.
#[derive(Clone, Debug, Serialize)]
pub struct EvalResult {
    pub answer: ExtIndex,
    pub succeeded: bool,
    pub iterations: usize,
    pub converged: bool,
    pub final_stack_depth: usize,
    pub pivot_calls: u64,
    pub decide_calls: u64,
    pub ledger: QueryLedger,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StepRecord>>,
}

/// Runs the full loop and returns the lower interval end as the answer.
pub fn evaluate(
    tree: &MinMaxTree,
    values: &LeafAssignment,
    cfg: &EvaluatorConfig,
) -> Result<EvalResult> {
    cfg.validate()?;
    if values.len() != tree.leaf_count() {
        return Err(Error::Contract(format!(
            "assignment has {} values for a tree with {} leaves",
            values.len(),
            tree.leaf_count()
        )));
    }
    let mut h = OracleHandle::new(values, cfg.oracle_mode);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.backend.seed);
    let mut state = if cfg.trace {
        let (truth_value, _) = eval_minmax(tree, values)?;
        EvalState::traced(truth_value)
    } else {
        EvalState::new()
    };
    let budget = cfg.iteration_budget(tree.leaf_count());
    let mut converged = false;
    for _ in 0..budget {
        let outcome = step(tree, &mut h, &mut state, cfg, &mut rng);
        if cfg.early_stop && outcome.pivot.is_none() && outcome.in_range {
            converged = true;
            break;
        }
    }
    let answer = state.interval.lo;
    let CallCounts {
        pivot_searches,
        threshold_decisions,
    } = h.call_counts();
    Ok(EvalResult {
        answer,
        succeeded: answer.is_real(),
        iterations: state.iteration,
        converged,
        final_stack_depth: state.stack.len(),
        pivot_calls: pivot_searches,
        decide_calls: threshold_decisions,
        ledger: h.ledger_report(),
        trace: state.trace.map(|t| t.records),
    })
}

/// Correct/incorrect step counts of a traced run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DriftStats {
    pub correct: u64,
    pub incorrect: u64,
    pub net: i64,
}

/// Classifies every traced step as correct or incorrect against the run's
/// ground truth and returns the counts and their difference.
///
/// Below a good state a step is incorrect exactly when it leaves the tree
/// value outside the search interval; narrowing and backtracking steps are
/// correct. At a good state (lower end attains the tree value) the stack of
/// good pairs is the progress measure: pushing a good pair is correct, and
/// popping one, discarding one on reset, or pushing a pair that lost
/// goodness is incorrect.
pub fn drift_statistics(trace: &[StepRecord]) -> Result<DriftStats> {
    let mut stats = DriftStats::default();
    for record in trace {
        let truth = record.truth.as_ref().ok_or_else(|| {
            Error::Contract("trace record lacks ground-truth annotations".into())
        })?;
        let correct = if truth.pre_good {
            match record.stack_action {
                StackAction::Push => truth.moved_pair_good,
                StackAction::Pop | StackAction::Reset => !truth.moved_pair_good,
            }
        } else {
            truth.valid
        };
        if correct {
            stats.correct += 1;
        } else {
            stats.incorrect += 1;
        }
    }
    stats.net = stats.correct as i64 - stats.incorrect as i64;
    Ok(stats)
}
