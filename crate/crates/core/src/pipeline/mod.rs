//! The extraction pipeline: reduce to a power-of-two length, iterate fiber
//! restrictions and descents, pass through the `H` stages, and finish with
//! the small-doubling extraction and growth table. Every inequality the
//! argument asserts is measured and written to the ledger.

mod ledger;
mod params;
mod stages;

pub use ledger::{ChoiceKind, Decision, Event, Ledger, LedgerEntry, ReassignTarget, Stage};
pub use params::PipelineParams;
pub use stages::{
    check_hypotheses, descent_check, final_extraction, h_stage, iteration_step, run_pipeline, FinalOutcome,
    GrowthRow, HContext, HOutcome, HypothesisReport, Intersector, PipelineResult, PipelineState, Status, StepOutcome,
};

#[cfg(test)]
mod tests;
