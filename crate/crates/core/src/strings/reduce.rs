use serde::{Deserialize, Serialize};

use crate::certificate::{CheckId, Certificate};
use crate::error::Result;
use crate::exact::{int, PowerBound, Relation};

use super::set::{AString, StringSet};

#[derive(Clone, Debug)]
pub struct Reduction {
    /// Prefixes `x` of length `k'` with `xy` in `S` for the chosen suffix `y`.
    pub reduced: StringSet,
    pub suffix: AString,
    /// `|L_y|` for the chosen suffix, i.e. `|reduced|`.
    pub fiber: usize,
    pub certificates: Vec<Certificate>,
}

/// Summary of a reduction for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionSummary {
    pub k: usize,
    pub k_reduced: usize,
    pub suffix: AString,
    pub fiber: usize,
}

impl Reduction {
    pub fn summary(&self, k: usize) -> ReductionSummary {
        ReductionSummary { k, k_reduced: self.reduced.k(), suffix: self.suffix.clone(), fiber: self.fiber }
    }
}

/// Largest power of two not exceeding `k` (`k >= 1`).
pub fn largest_power_of_two(k: usize) -> usize {
    1 << (usize::BITS - 1 - k.leading_zeros())
}

/// Fixes the most popular suffix of length `k - k'` so that the remaining
/// prefixes have power-of-two length `k'`.
///
/// Ties go to the least suffix in canonical (lexicographic) order.
pub fn reduce_to_power_of_two(s: &StringSet) -> Result<Reduction> {
    let k = s.k();
    let k2 = largest_power_of_two(k);
    let sigma = s.sigma()?.len();
    let (reduced, suffix, reduced_sigma) = if k2 == k {
        (s.clone(), AString::new(Vec::new()), sigma)
    } else {
        let m = k - k2;
        let counts = s.suffix_counts(m)?;
        let (best, _) = counts
            .iter()
            .enumerate()
            .fold((0usize, 0u64), |(bi, bc), (i, &c)| if c > bc { (i, c) } else { (bi, bc) });
        let suffix = s.decode(best as u64, m);
        let prefixes = s.left_fiber_codes(m, best as u64)?;
        let reduced = s.with_codes(k2, prefixes)?;
        let tail = s.code_sum(best as u64, m)?;
        let shifted = reduced.sigma()?.translate(tail)?;
        (reduced, suffix, shifted.len())
    };
    let fiber = reduced.len();
    let pigeonhole = PowerBound::count(s.len() as u128).times_power(int(s.radix()), int(-((k - k2) as i64)));
    let certificates = vec![
        Certificate::assertion(CheckId::ReducePigeonhole, fiber as u128, Relation::Ge, &pigeonhole)?
            .with_tiebreak("canonical-least suffix"),
        Certificate::assertion(CheckId::ReduceSigma, reduced_sigma as u128, Relation::Le, &PowerBound::count(sigma as u128))?,
    ];
    Ok(Reduction { reduced, suffix, fiber, certificates })
}
