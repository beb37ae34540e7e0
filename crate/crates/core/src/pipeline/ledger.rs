use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::exact::serde_rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Reduce,
    Hypotheses,
    Iteration,
    Descent,
    HStage,
    Final,
    Growth,
}

/// What a recorded choice selected. Values are element codes unless noted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceKind {
    /// The fixed suffix of the power-of-two reduction.
    ReduceSuffix,
    /// The prefix `x` whose fiber `R_x` restricts `S`.
    IntersectorPrefix,
    /// The prefix `y` whose fiber replaces `S` on descent.
    DescentPrefix,
    /// The common suffix `z` defining `H'`.
    CommonSuffix,
    /// `[|X|, |Y|, n]`: both sides are cut to their first `n` elements.
    Truncation,
    /// The small-doubling subset returned by the extractor.
    SigmaSubset,
    /// The suffix `w` defining `A'`.
    SuffixVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReassignTarget {
    /// Prefixes completing the fixed reduction suffix.
    Reduced,
    /// `{ yz in S : z in R_x }`.
    Restricted,
    /// The fiber `R_y` of a descent.
    Fiber,
    /// `H''` after a drop in the sum-image.
    PopularSums,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// Replace `S` by a fiber and restart the iteration.
    Descend,
    /// No fiber qualifies; go on to the `H` stage.
    Advance,
    /// Replace `S` by `H''` and restart the iteration.
    ReassignH,
    /// The sum-image did not drop; go on to the final leg.
    FinalLeg,
    /// A halving reassignment was due but would take `k` below the floor.
    FloorBlocked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Check { certificate: Certificate },
    Choice { choice: ChoiceKind, value: Vec<i64> },
    Reassign {
        target: ReassignTarget,
        size: usize,
        k: usize,
        #[serde(with = "serde_rational")]
        delta: BigRational,
    },
    Branch { decision: Decision },
    Halt { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: usize,
    pub stage: Stage,
    /// `k` and `delta` in force when the entry was written.
    pub k: usize,
    #[serde(with = "serde_rational")]
    pub delta: BigRational,
    pub event: Event,
}

/// Append-only record of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ledger {
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, stage: Stage, k: usize, delta: &BigRational, event: Event) {
        let seq = self.entries.len();
        self.entries.push(LedgerEntry { seq, stage, k, delta: delta.clone(), event });
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.entries.iter().filter_map(|e| match &e.event {
            Event::Check { certificate } => Some(certificate),
            _ => None,
        })
    }

    pub fn halt_reason(&self) -> Option<&str> {
        self.entries.iter().find_map(|e| match &e.event {
            Event::Halt { reason } => Some(reason.as_str()),
            _ => None,
        })
    }

    /// Canonical JSON bytes; identical runs give identical bytes.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("ledger serialization is infallible")
    }
}
