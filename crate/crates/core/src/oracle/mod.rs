//! Independent brute-force recomputation of every measured quantity, an
//! exhaustive optimal-subset search, and a replay audit for pipeline runs.
//! Nothing here calls the fast paths; the group and set types are used only
//! as containers.

mod arith;
mod audit;
mod bound;
mod brute;
mod limits;
mod subset;

pub use audit::{audit_run, AuditMismatch, AuditReport};
pub use brute::{
    brute_difference_set, brute_energy, brute_fiber, brute_iterated_sumset, brute_left_fiber, brute_restricted_sumset,
    brute_rows, brute_sigma, brute_sumset, Rows,
};
pub use limits::{OracleLimits, SUBSET_GROUND_CAP};
pub use bound::OBound;
pub use subset::{best_subset_growth, SubsetGrowth};
