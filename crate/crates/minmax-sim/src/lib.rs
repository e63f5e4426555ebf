//! Simulation library for evaluating MIN-MAX trees with comparison queries
//! and modeled quantum subroutines.
//!
//! A MIN-MAX tree has minimum and maximum gates at alternating internal
//! levels and ordered values at its `N` leaves; its value is the recursive
//! min/max evaluation of the root. In the *comparison* query model the leaf
//! values are hidden and the only access is through queries of the form
//! `[x_j < x_k]`; the answer to the evaluation problem is an index whose
//! value equals the tree value.
//!
//! The evaluator in this crate narrows a search interval `(lo, hi)` over
//! leaf indices by repeatedly picking a *random pivot* strictly inside the
//! interval (by value), deciding which side of the pivot the tree value
//! falls on via a threshold reduction to an AND-OR tree, and verifying the
//! interval with a range check backed by a stack of previously verified
//! intervals. Failed range checks backtrack by popping the stack, which
//! makes the loop robust to a constant fraction of subroutine errors.
//!
//! The two subroutines (pivot search and threshold decision) come in three
//! backends:
//!
//! - `ideal`: exact answers, charged at modeled quantum query costs;
//! - `stochastic`: exact answers flipped/corrupted with a configurable
//!   per-call error probability, for noise-resilience experiments;
//! - `grover`: the pivot search runs a real statevector simulation of
//!   Grover search with unknown marked-item count.
//!
//! Every leaf access flows through an [`oracle::OracleHandle`], which keeps
//! a [`oracle::QueryLedger`] of physical comparison/value queries and
//! modeled quantum query units. The [`harness`] module runs seeded Monte
//! Carlo experiments (convergence, success probability under noise, query
//! scaling) and the `minmax-sim` binary exposes everything on the command
//! line.

pub mod cli;
pub mod evaluator;
pub mod grover;
pub mod harness;
pub mod oracle;
pub mod stats;
pub mod subroutines;
pub mod trees;

pub use evaluator::{evaluate, EvalResult, EvaluatorConfig};
pub use oracle::{ExtIndex, OracleHandle, OracleMode, QueryLedger};
pub use subroutines::{Backend, BackendConfig, Interval};
pub use trees::{eval_minmax, eval_threshold, gen_tree, LeafAssignment, MinMaxTree};

/// Errors produced by tree construction, oracle access, and configuration.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated an operation's contract (bad index, mismatched
    /// lengths, unmet precondition).
    #[error("contract violation: {0}")]
    Contract(String),
    /// Invalid configuration (shape parameters, backend flags).
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called in the wrong oracle mode.
    #[error("mode violation: {0}")]
    Mode(String),
    /// A simulation exceeded its size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
