use serde::{Deserialize, Serialize};

use super::arith::OGroup;
use super::brute::{codes, pairwise, to_set};
use super::limits::OracleLimits;
use crate::error::{Error, Result};
use crate::group::ElemSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetGrowth {
    pub subset: ElemSet,
    /// `|l subset|`.
    pub size: usize,
    pub subsets_searched: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// The subset of size at least `min_size` with the smallest `l`-fold sumset.
///
/// Growing a set never shrinks its sumsets, so only subsets of exactly
/// `min_size` elements are searched. Ties go to the lexicographically least
/// subset.
pub fn best_subset_growth(a: &ElemSet, ell: u32, min_size: usize, lim: &OracleLimits) -> Result<SubsetGrowth> {
    if ell == 0 {
        return Err(Error::InvalidParameter("iterated sumset order must be at least 1".into()));
    }
    if min_size == 0 || min_size > a.len() {
        return Err(Error::InvalidParameter(format!("min_size {min_size} outside 1..={}", a.len())));
    }
    lim.subset_ground(a.len())?;
    let total = binomial(a.len() as u64, min_size as u64);
    lim.enumeration("subset search", &[total])?;

    let g = OGroup::of(a.spec());
    let elems = codes(a);
    let m = min_size;
    let mut idx: Vec<usize> = (0..m).collect();
    let mut best: Option<(usize, Vec<i64>)> = None;
    let mut searched = 0u64;
    loop {
        let pick: Vec<i64> = idx.iter().map(|&i| elems[i]).collect();
        let mut acc = pick.clone();
        for _ in 1..ell {
            acc = pairwise(g, &acc, &pick, false)?.into_iter().collect();
        }
        searched += 1;
        if best.as_ref().is_none_or(|(s, _)| acc.len() < *s) {
            best = Some((acc.len(), pick));
        }
        // Next combination in lexicographic order.
        let Some(pos) = (0..m).rev().find(|&i| idx[i] != i + a.len() - m) else { break };
        idx[pos] += 1;
        for j in pos + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
    let (size, pick) = best.expect("at least one subset");
    Ok(SubsetGrowth { subset: to_set(a.spec(), pick)?, size, subsets_searched: searched })
}
