//! Finite abelian groups, element sets, and set-level arithmetic.

mod bitmap;
mod ops;
mod set;
mod spec;

pub use ops::{
    additive_energy, difference_set, doubling_certificate, iterated_sumset, plunnecke_check,
    representation_counts, ruzsa_triangle_check, sumset, GrowthLine, PlunneckeReport, RuzsaReport,
};
pub use set::{ElemSet, Representation};
pub use spec::{GroupElem, GroupSpec};
