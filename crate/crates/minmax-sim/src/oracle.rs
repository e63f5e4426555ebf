//! Query-counted access to the hidden leaf values.
//!
//! An [`OracleHandle`] is the only sanctioned path to the values: strict
//! comparisons `[x_j < x_k]` in the comparison model, plus direct reads in
//! the input-value model. Every access is tallied in a [`QueryLedger`].
//! Comparisons against the virtual sentinels `bot`/`top` (below and above
//! every real value) are bookkeeping fictions and are answered for free.
//!
//! A handle is confined to a single trial; run parallel trials with one
//! handle each over a shared [`LeafAssignment`].

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::trees::{LeafAssignment, LeafIndex};
use crate::{Error, Result};

/// Leaf index extended with the sentinel endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtIndex {
    /// Below every real value.
    Bot,
    Leaf(LeafIndex),
    /// Above every real value.
    Top,
}

impl ExtIndex {
    pub fn is_real(self) -> bool {
        matches!(self, ExtIndex::Leaf(_))
    }

    pub fn leaf(self) -> Option<LeafIndex> {
        match self {
            ExtIndex::Leaf(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for ExtIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtIndex::Bot => write!(f, "bot"),
            ExtIndex::Top => write!(f, "top"),
            ExtIndex::Leaf(k) => write!(f, "{k}"),
        }
    }
}

// Wire form: "bot" | "top" | <leaf index>.
impl Serialize for ExtIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtIndex::Bot => serializer.serialize_str("bot"),
            ExtIndex::Top => serializer.serialize_str("top"),
            ExtIndex::Leaf(k) => serializer.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for ExtIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExtIndexVisitor;
        impl<'de> Visitor<'de> for ExtIndexVisitor {
            type Value = ExtIndex;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "\"bot\", \"top\", or a leaf index")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtIndex, E> {
                Ok(ExtIndex::Leaf(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtIndex, E> {
                match v {
                    "bot" => Ok(ExtIndex::Bot),
                    "top" => Ok(ExtIndex::Top),
                    other => Err(E::custom(format!("unknown extended index {other:?}"))),
                }
            }
        }
        deserializer.deserialize_any(ExtIndexVisitor)
    }
}

/// Which query model the handle enforces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    /// Only `[x_j < x_k]` comparisons; raw values are never exposed.
    Comparison,
    /// Direct leaf reads are also allowed.
    InputValue,
}

/// Per-category query counters. `comparison_queries` and `value_queries`
/// count physical oracle accesses made by the simulation; the modeled
/// categories count the query units the simulated quantum subroutines are
/// charged with. All counters are monotone non-decreasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub comparison_queries: u64,
    pub value_queries: u64,
    pub modeled_search_units: u64,
    pub modeled_andor_units: u64,
    pub grover_oracle_calls: u64,
}

impl QueryLedger {
    /// Sum over all categories.
    pub fn total(&self) -> u64 {
        self.comparison_queries
            + self.value_queries
            + self.modeled_search_units
            + self.modeled_andor_units
            + self.grover_oracle_calls
    }
}

/// Counts of subroutine invocations, kept separate from the ledger so cost
/// charging can be audited against per-call unit prices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub pivot_searches: u64,
    pub threshold_decisions: u64,
}

/// Handle over a hidden leaf assignment. In comparison mode the public API
/// returns only booleans and counters; `read_value` is a mode violation.
pub struct OracleHandle<'a> {
    values: &'a LeafAssignment,
    mode: OracleMode,
    ledger: QueryLedger,
    calls: CallCounts,
}

impl<'a> OracleHandle<'a> {
    pub fn new(values: &'a LeafAssignment, mode: OracleMode) -> Self {
        OracleHandle {
            values,
            mode,
            ledger: QueryLedger::default(),
            calls: CallCounts::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    fn check_index(&self, which: &str, index: ExtIndex) -> Result<()> {
        if let ExtIndex::Leaf(k) = index {
            if k < 1 || k > self.n() {
                return Err(Error::Contract(format!(
                    "{which} index {k} out of range 1..={}",
                    self.n()
                )));
            }
        }
        Ok(())
    }

    /// Answers `[x_j < x_k]` under the sentinel convention
    /// `x_bot < x_i < x_top` for every real index `i`. Charges one
    /// comparison query iff both indices are real; sentinel comparisons are
    /// free.
    pub fn compare(&mut self, j: ExtIndex, k: ExtIndex) -> Result<bool> {
        self.check_index("left", j)?;
        self.check_index("right", k)?;
        if let (ExtIndex::Leaf(_), ExtIndex::Leaf(_)) = (j, k) {
            self.ledger.comparison_queries += 1;
        }
        Ok(self.compare_unbilled(j, k))
    }

    /// Same comparison without charging. This is the simulator's private
    /// window used where a modeled quantum subroutine would act in
    /// superposition; it is not part of the query model.
    pub(crate) fn compare_unbilled(&self, j: ExtIndex, k: ExtIndex) -> bool {
        match (j, k) {
            (ExtIndex::Bot, ExtIndex::Bot) | (ExtIndex::Top, ExtIndex::Top) => false,
            (ExtIndex::Bot, _) => true,
            (_, ExtIndex::Bot) => false,
            (_, ExtIndex::Top) => true,
            (ExtIndex::Top, _) => false,
            (ExtIndex::Leaf(a), ExtIndex::Leaf(b)) => self.values.value(a) < self.values.value(b),
        }
    }

    /// Reads `x_j` directly. Only available in input-value mode.
    pub fn read_value(&mut self, j: LeafIndex) -> Result<i64> {
        if self.mode != OracleMode::InputValue {
            return Err(Error::Mode(
                "read_value is not available in comparison mode".into(),
            ));
        }
        self.check_index("read", ExtIndex::Leaf(j))?;
        self.ledger.value_queries += 1;
        Ok(self.values.value(j))
    }

    /// Unbilled read used for ground-truth trace annotations (test-only
    /// privilege; the production evaluation path never calls this).
    pub(crate) fn read_unbilled(&self, j: LeafIndex) -> i64 {
        self.values.value(j)
    }

    /// Consistent point-in-time snapshot of the counters.
    pub fn ledger_report(&self) -> QueryLedger {
        self.ledger.clone()
    }

    pub fn call_counts(&self) -> CallCounts {
        self.calls
    }

    pub(crate) fn charge_comparisons(&mut self, n: u64) {
        self.ledger.comparison_queries += n;
    }

    pub(crate) fn charge_search_units(&mut self, n: u64) {
        self.ledger.modeled_search_units += n;
    }

    pub(crate) fn charge_andor_units(&mut self, n: u64) {
        self.ledger.modeled_andor_units += n;
    }

    pub(crate) fn charge_grover_calls(&mut self, n: u64) {
        self.ledger.grover_oracle_calls += n;
    }

    pub(crate) fn count_pivot_search(&mut self) {
        self.calls.pivot_searches += 1;
    }

    pub(crate) fn count_threshold_decision(&mut self) {
        self.calls.threshold_decisions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn handle(values: Vec<i64>, mode: OracleMode) -> (LeafAssignment, OracleMode) {
        (LeafAssignment::new(values), mode)
    }

    #[test]
    fn compare_counts_real_queries_only() {
        let (values, mode) = handle(vec![3, 7, 2, 5], OracleMode::Comparison);
        let mut h = OracleHandle::new(&values, mode);
        assert!(h.compare(ExtIndex::Leaf(1), ExtIndex::Leaf(2)).unwrap()); // 3 < 7
        assert!(!h.compare(ExtIndex::Leaf(2), ExtIndex::Leaf(1)).unwrap());
        assert!(!h.compare(ExtIndex::Leaf(3), ExtIndex::Leaf(3)).unwrap()); // irreflexive
        assert_eq!(h.ledger_report().comparison_queries, 3);

        // Sentinel comparisons are answered for free.
        assert!(h.compare(ExtIndex::Bot, ExtIndex::Leaf(1)).unwrap());
        assert!(h.compare(ExtIndex::Leaf(4), ExtIndex::Top).unwrap());
        assert!(h.compare(ExtIndex::Bot, ExtIndex::Top).unwrap());
        assert!(!h.compare(ExtIndex::Top, ExtIndex::Leaf(2)).unwrap());
        assert_eq!(h.ledger_report().comparison_queries, 3);
    }

    #[test]
    fn compare_rejects_out_of_range_indices() {
        let (values, mode) = handle(vec![1, 2], OracleMode::Comparison);
        let mut h = OracleHandle::new(&values, mode);
        assert!(matches!(
            h.compare(ExtIndex::Leaf(0), ExtIndex::Leaf(1)),
            Err(crate::Error::Contract(_))
        ));
        assert!(matches!(
            h.compare(ExtIndex::Leaf(1), ExtIndex::Leaf(3)),
            Err(crate::Error::Contract(_))
        ));
        assert_eq!(h.ledger_report().comparison_queries, 0);
    }

    #[test]
    fn read_value_reads_and_counts() {
        let (values, mode) = handle(vec![3, 7, 2, 5], OracleMode::InputValue);
        let mut h = OracleHandle::new(&values, mode);
        assert_eq!(h.read_value(2).unwrap(), 7);
        assert_eq!(h.read_value(2).unwrap(), 7);
        assert_eq!(h.ledger_report().value_queries, 2);
    }

    #[test]
    fn read_value_is_a_mode_violation_in_comparison_mode() {
        // The comparison-mode API surface exposes only booleans and
        // counters; the raw-value path is rejected at runtime.
        let (values, mode) = handle(vec![3, 7, 2, 5], OracleMode::Comparison);
        let mut h = OracleHandle::new(&values, mode);
        assert!(matches!(h.read_value(1), Err(crate::Error::Mode(_))));
        assert_eq!(h.ledger_report().value_queries, 0);
    }

    #[test]
    fn fresh_ledger_is_all_zeros_and_snapshots_do_not_mutate() {
        let (values, mode) = handle(vec![1], OracleMode::Comparison);
        let h = OracleHandle::new(&values, mode);
        let snap = h.ledger_report();
        assert_eq!(snap, QueryLedger::default());
        assert_eq!(snap.total(), 0);
        let again = h.ledger_report();
        assert_eq!(snap, again);
    }

    #[test]
    fn ledger_json_has_the_five_counter_fields() {
        let ledger = QueryLedger {
            comparison_queries: 1,
            value_queries: 2,
            modeled_search_units: 3,
            modeled_andor_units: 4,
            grover_oracle_calls: 5,
        };
        let json = serde_json::to_string(&ledger).unwrap();
        assert_eq!(
            json,
            "{\"comparison_queries\":1,\"value_queries\":2,\"modeled_search_units\":3,\
             \"modeled_andor_units\":4,\"grover_oracle_calls\":5}"
        );
        assert_eq!(ledger.total(), 15);
    }

    #[test]
    fn ext_index_wire_form() {
        let json = serde_json::to_string(&vec![ExtIndex::Bot, ExtIndex::Leaf(4), ExtIndex::Top])
            .unwrap();
        assert_eq!(json, "[\"bot\",4,\"top\"]");
        let back: Vec<ExtIndex> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![ExtIndex::Bot, ExtIndex::Leaf(4), ExtIndex::Top]);
    }

    proptest! {
        #[test]
        fn comparisons_form_a_strict_order(values in proptest::collection::vec(-3i64..=3, 1..12)) {
            let assignment = LeafAssignment::new(values);
            let mut h = OracleHandle::new(&assignment, OracleMode::Comparison);
            let n = h.n();
            let extended: Vec<ExtIndex> = (1..=n)
                .map(ExtIndex::Leaf)
                .chain([ExtIndex::Bot, ExtIndex::Top])
                .collect();
            for &j in &extended {
                for &k in &extended {
                    let jk = h.compare(j, k).unwrap();
                    let kj = h.compare(k, j).unwrap();
                    prop_assert!(!(jk && kj), "compare({j}, {k}) and its reverse both true");
                    if j == k {
                        prop_assert!(!jk);
                    }
                }
            }
        }
    }
}
