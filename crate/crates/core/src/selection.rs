//! Pigeonhole and popularity selections. Every selector is a deterministic
//! exact scan; ties go to the least index or the least string in canonical
//! order.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::certificate::{CheckId, Certificate, Role};
use crate::error::{Error, Result};
use crate::exact::{int, rat, PowerBound, Relation};
use crate::group::{ElemSet, GroupElem};
use crate::strings::{AString, StringSet};

/// Subsets `U_1, ..., U_r` of a universe `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyOfSubsets {
    n: u64,
    members: Vec<Vec<u64>>,
}

impl FamilyOfSubsets {
    pub fn new(n: u64, mut members: Vec<Vec<u64>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyInput);
        }
        for m in &mut members {
            m.sort_unstable();
            m.dedup();
            if let Some(&bad) = m.last().filter(|&&v| v >= n) {
                return Err(Error::IndexOutOfRange { index: bad as usize, size: n as usize });
            }
        }
        Ok(FamilyOfSubsets { n, members })
    }

    /// The right fibers `R_y` of `S` over all prefixes `y` of length `k/2`,
    /// as subsets of `A^{k/2}`.
    pub fn right_fibers(s: &StringSet) -> Result<Self> {
        let half = s.k() / 2;
        let space = s.ambient().len() as u64;
        let n = space.pow(half as u32);
        let members = (0..n).map(|y| s.right_fiber_codes(half, y)).collect::<Result<Vec<_>>>()?;
        Ok(FamilyOfSubsets { n, members })
    }

    pub fn universe_size(&self) -> u64 {
        self.n
    }

    pub fn members(&self) -> &[Vec<u64>] {
        &self.members
    }

    pub fn total(&self) -> u64 {
        self.members.iter().map(|m| m.len() as u64).sum()
    }

    /// `sum_i |U_i cap U_j|` for every `j`, via `sum_{v in U_j} deg(v)`.
    pub fn intersection_scores(&self) -> Vec<u64> {
        let mut degree: HashMap<u64, u64> = HashMap::new();
        for m in &self.members {
            for &v in m {
                *degree.entry(v).or_default() += 1;
            }
        }
        self.members.iter().map(|m| m.iter().map(|v| degree[v]).sum()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCert {
    /// Index of the chosen member, counting from zero.
    pub chosen: usize,
    pub total: u64,
    pub measured: u64,
    /// `sum_i |U_i| >= r n^{1-delta}`.
    pub precondition: Certificate,
    /// `sum_i |U_i cap U_j| >= r n^{1-2 delta}`.
    pub threshold: Certificate,
    pub pass: bool,
}

/// Chooses `j` maximising `sum_i |U_i cap U_j|` (least index on ties).
pub fn select_popular_intersector(family: &FamilyOfSubsets, delta: &BigRational) -> Result<SelectionCert> {
    let scores = family.intersection_scores();
    let (chosen, measured) = scores
        .iter()
        .enumerate()
        .fold((0usize, 0u64), |(bj, bs), (j, &s)| if s > bs { (j, s) } else { (bj, bs) });
    let r = family.members.len() as u128;
    let n = family.n as u128;
    let one = BigRational::one();
    let pre_bound = PowerBound::count(r).times_power(int(n), one.clone() - delta);
    let post_bound = PowerBound::count(r).times_power(int(n), one - delta * int(2));
    let total = family.total();
    let precondition = Certificate::evaluate(CheckId::IntersectorPrecondition, Role::Branch, total as u128, Relation::Ge, &pre_bound)?;
    let threshold = Certificate::assertion(CheckId::IntersectorThreshold, measured as u128, Relation::Ge, &post_bound)?
        .with_tiebreak("least index");
    let pass = threshold.pass;
    Ok(SelectionCert { chosen, total, measured, precondition, threshold, pass })
}

#[derive(Clone, Debug)]
pub struct DensePrefix {
    /// Prefixes `h` of length `k/2` with `|R_h| >= ceil(theta)`.
    pub h: StringSet,
    pub fiber_threshold: u64,
    /// `|H| > theta`.
    pub certificate: Certificate,
}

/// `H = { h : |R_h| >= theta }` over prefixes of length `k/2`.
pub fn dense_prefix_set(s: &StringSet, theta: &PowerBound) -> Result<DensePrefix> {
    if !s.k().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("k = {} is odd", s.k())));
    }
    let half = s.k() / 2;
    let fiber_threshold = u64::try_from(theta.ceil()?).unwrap_or(u64::MAX);
    let space = (s.ambient().len() as u64).pow(half as u32);
    let mut codes = Vec::new();
    for h in 0..space {
        if s.right_fiber_size_code(half, h)? >= fiber_threshold {
            codes.push(h);
        }
    }
    let h = StringSet::from_codes(s.ambient(), half, codes)?;
    let certificate = Certificate::assertion(CheckId::DensePrefixCount, h.len() as u128, Relation::Gt, theta)?;
    Ok(DensePrefix { h, fiber_threshold, certificate })
}

#[derive(Clone, Debug)]
pub struct CommonSuffix {
    pub z: AString,
    /// `{ h in H : hz in S }`.
    pub h_prime: StringSet,
    /// `|H'| >= ratio_bound` then `|H'| >= size_bound`.
    pub certificates: Vec<Certificate>,
}

/// Chooses `z` in `R_x` maximising `|{ h in H : hz in S }|`, least `z` on ties.
pub fn select_common_suffix(
    h: &StringSet,
    s: &StringSet,
    r_x: &StringSet,
    ratio_bound: &PowerBound,
    size_bound: &PowerBound,
) -> Result<CommonSuffix> {
    if r_x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if h.k() + r_x.k() != s.k() {
        return Err(Error::LengthMismatch { expected: s.k() - h.k(), got: r_x.k() });
    }
    let half = h.k();
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for hc in h.codes() {
        for z in s.right_fiber_codes(half, hc)? {
            if r_x.contains_code(z) {
                *counts.entry(z).or_default() += 1;
            }
        }
    }
    let mut best = (0u64, 0u64);
    for (i, z) in r_x.codes().enumerate() {
        let c = counts.get(&z).copied().unwrap_or(0);
        if i == 0 || c > best.1 {
            best = (z, c);
        }
    }
    let z_code = best.0;
    let space = (s.ambient().len() as u64).pow(r_x.k() as u32);
    let kept: Vec<u64> = h.codes().filter(|&hc| s.contains_code(hc * space + z_code)).collect();
    let h_prime = StringSet::from_codes(s.ambient(), half, kept)?;
    let z = r_x.decode(z_code, r_x.k());
    let n = h_prime.len() as u128;
    let certificates = vec![
        Certificate::assertion(CheckId::CommonSuffixRatio, n, Relation::Ge, ratio_bound)?
            .with_tiebreak("canonical-least suffix"),
        Certificate::assertion(CheckId::CommonSuffixSize, n, Relation::Ge, size_bound)?,
    ];
    Ok(CommonSuffix { z, h_prime, certificates })
}

#[derive(Clone, Debug)]
pub struct PopularFilter {
    pub h_pp: StringSet,
    /// `|Sigma(H')|`.
    pub sigma_size: usize,
    /// Required number of other strings sharing the sum, `|H'| / (2|Sigma(H')|)`.
    pub threshold: BigRational,
    /// `|H''| >= |H'|/2`.
    pub certificate: Certificate,
}

/// Keeps the `h` in `H'` with at least `|H'|/(2|Sigma(H')|)` *other* strings
/// of the same sum.
pub fn popular_sum_filter(h_prime: &StringSet) -> Result<PopularFilter> {
    if h_prime.is_empty() {
        return Err(Error::EmptyInput);
    }
    let len = h_prime.k();
    let sums = h_prime.codes().map(|c| Ok((c, h_prime.code_sum(c, len)?))).collect::<Result<Vec<_>>>()?;
    let mut class: HashMap<GroupElem, u64> = HashMap::new();
    for (_, s) in &sums {
        *class.entry(*s).or_default() += 1;
    }
    let sigma_size = class.len();
    let n = h_prime.len() as u64;
    // others >= n / (2 |Sigma|)  <=>  2 (m - 1) |Sigma| >= n
    let kept: Vec<u64> = sums
        .iter()
        .filter(|(_, s)| 2 * (class[s] - 1) * sigma_size as u64 >= n)
        .map(|(c, _)| *c)
        .collect();
    let h_pp = StringSet::from_codes(h_prime.ambient(), len, kept)?;
    let half = PowerBound::count(n as u128).times(rat(1, 2));
    let certificate = Certificate::assertion(CheckId::PopularHalf, h_pp.len() as u128, Relation::Ge, &half)?;
    let threshold = BigRational::new((n as i64).into(), (2 * sigma_size as i64).into());
    Ok(PopularFilter { h_pp, sigma_size, threshold, certificate })
}

#[derive(Clone, Debug)]
pub struct SuffixExtract {
    /// The last `len - 1` coordinates shared by the most strings.
    pub w: AString,
    pub a_prime: ElemSet,
    /// `|A'| |A|^{len-1} >= |H'''|`, then `|A'| >= lower_bound`.
    pub certificates: Vec<Certificate>,
}

/// Chooses the suffix `w` of length `len - 1` with the most completions
/// `a w` in `H'''` (least `w` on ties) and returns those `a`.
pub fn popular_suffix_extract(h3: &StringSet, lower_bound: &PowerBound) -> Result<SuffixExtract> {
    let len = h3.k();
    if len < 2 {
        return Err(Error::LengthOutOfRange { len, k: 2 });
    }
    if h3.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = len - 1;
    let counts = h3.suffix_counts(m)?;
    let (best, _) = counts
        .iter()
        .enumerate()
        .fold((0usize, 0u64), |(bi, bc), (i, &c)| if c > bc { (i, c) } else { (bi, bc) });
    let w = h3.decode(best as u64, m);
    let firsts = h3.left_fiber_codes(m, best as u64)?;
    let elems: Vec<GroupElem> = firsts.iter().map(|&c| h3.decode(c, 1).coords[0]).collect();
    let a_prime = ElemSet::new(h3.spec(), elems)?;
    let radix = h3.ambient().len() as u128;
    let pigeonhole = PowerBound::count(h3.len() as u128).times_power(int(radix), int(-(m as i64)));
    let size = a_prime.len() as u128;
    let certificates = vec![
        Certificate::assertion(CheckId::SuffixPigeonhole, size, Relation::Ge, &pigeonhole)?
            .with_tiebreak("canonical-least suffix"),
        Certificate::assertion(CheckId::SuffixLower, size, Relation::Ge, lower_bound)?,
    ];
    Ok(SuffixExtract { w, a_prime, certificates })
}
