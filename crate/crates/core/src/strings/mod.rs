//! Sets of strings over an ambient set, their sum-images and fibers.

mod graph;
mod reduce;
mod set;

pub use graph::{graph_restricted_sumset, ssv_bound_check, BipartiteGraph, SsvReport};
pub use reduce::{largest_power_of_two, reduce_to_power_of_two, Reduction, ReductionSummary};
pub use set::{sigma_string, AString, StringRepr, StringSet, DEFAULT_DENSITY_THRESHOLD};
