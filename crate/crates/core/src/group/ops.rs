//! Sumsets, difference sets, additive energy and the two growth verifiers.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::set::ElemSet;
use super::spec::{GroupElem, GroupSpec};
use crate::certificate::{Certificate, CheckId};
use crate::error::{Error, Result};
use crate::exact::{int, PowerBound, Relation};

fn same_spec(x: &ElemSet, y: &ElemSet) -> Result<GroupSpec> {
    if x.spec() != y.spec() {
        return Err(Error::SpecMismatch { left: x.spec(), right: y.spec() });
    }
    Ok(x.spec())
}

#[derive(Clone, Copy)]
enum Combine {
    Add,
    Sub,
}

/// Range check for windows: the extreme sums are attained, so checking them
/// checks every sum.
fn check_window_extremes(spec: GroupSpec, x: &ElemSet, y: &ElemSet, op: Combine) -> Result<()> {
    if let GroupSpec::Window { lo, hi } = spec {
        let (x_lo, x_hi) = (x.min().unwrap().0 as i128, x.max().unwrap().0 as i128);
        let (y_lo, y_hi) = (y.min().unwrap().0 as i128, y.max().unwrap().0 as i128);
        let (lo_sum, hi_sum) = match op {
            Combine::Add => (x_lo + y_lo, x_hi + y_hi),
            Combine::Sub => (x_lo - y_hi, x_hi - y_lo),
        };
        for v in [lo_sum, hi_sum] {
            if v < lo as i128 || v > hi as i128 {
                return Err(Error::WindowOverflow { lo, hi, value: v });
            }
        }
    }
    Ok(())
}

fn combine(x: &ElemSet, y: &ElemSet, op: Combine) -> Result<ElemSet> {
    let spec = same_spec(x, y)?;
    if x.is_empty() || y.is_empty() {
        return Ok(ElemSet::empty(spec));
    }
    check_window_extremes(spec, x, y, op)?;

    if let (true, Some(bx), Some(by)) = (spec.is_integral(), x.bitmap(), y.bitmap()) {
        let raw = match op {
            Combine::Add => bx.convolve(by),
            Combine::Sub => bx.convolve(&by.negated()),
        };
        return Ok(match spec {
            GroupSpec::Cyclic { modulus } => {
                let mut folded: Vec<i64> = raw.values().map(|v| v.rem_euclid(modulus as i64)).collect();
                folded.sort_unstable();
                folded.dedup();
                ElemSet::from_sorted_codes(spec, folded)
            }
            _ => ElemSet::from_bitmap(spec, raw),
        });
    }

    let ys = y.to_vec();
    let mut out = Vec::with_capacity(x.len() * ys.len());
    for a in x.iter() {
        for &b in &ys {
            let v = match op {
                Combine::Add => spec.add(a, b)?,
                Combine::Sub => spec.sub(a, b)?,
            };
            out.push(v.0);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(ElemSet::from_sorted_codes(spec, out))
}

/// `X + Y = { x + y }`.
pub fn sumset(x: &ElemSet, y: &ElemSet) -> Result<ElemSet> {
    combine(x, y, Combine::Add)
}

/// `X - Y = { x - y }`.
pub fn difference_set(x: &ElemSet, y: &ElemSet) -> Result<ElemSet> {
    combine(x, y, Combine::Sub)
}

/// The `ell`-fold sumset `X + ... + X`.
pub fn iterated_sumset(x: &ElemSet, ell: u32) -> Result<ElemSet> {
    if ell == 0 {
        return Err(Error::InvalidParameter("iterated sumset order must be at least 1".into()));
    }
    let mut acc = x.clone();
    for _ in 1..ell {
        acc = sumset(&acc, x)?;
    }
    Ok(acc)
}

/// Number of `(x1, y1, x2, y2)` with `x1 + y1 = x2 + y2`, computed as the sum
/// of squared representation counts.
pub fn additive_energy(x: &ElemSet, y: &ElemSet) -> Result<u128> {
    let spec = same_spec(x, y)?;
    if x.is_empty() || y.is_empty() {
        return Ok(0);
    }
    check_window_extremes(spec, x, y, Combine::Add)?;

    if let (true, Some(bx), Some(by)) = (spec.is_integral(), x.bitmap(), y.bitmap()) {
        let counts = bx.sum_counts(by);
        return Ok(match spec {
            GroupSpec::Cyclic { modulus } => {
                let base = bx.offset + by.offset;
                let mut folded: HashMap<i64, u64> = HashMap::new();
                for (i, &c) in counts.iter().enumerate().filter(|(_, c)| **c > 0) {
                    *folded.entry((base + i as i64).rem_euclid(modulus as i64)).or_default() += c;
                }
                folded.values().map(|&c| (c as u128) * (c as u128)).sum()
            }
            _ => counts.iter().map(|&c| (c as u128) * (c as u128)).sum(),
        });
    }

    Ok(representation_counts(x, y)?.values().map(|&c| (c as u128) * (c as u128)).sum())
}

/// `r(s) = #{ (x, y) in X x Y : x + y = s }` for every attained `s`.
pub fn representation_counts(x: &ElemSet, y: &ElemSet) -> Result<HashMap<GroupElem, u64>> {
    let spec = same_spec(x, y)?;
    let ys = y.to_vec();
    let mut counts: HashMap<GroupElem, u64> = HashMap::with_capacity(x.len() + ys.len());
    for a in x.iter() {
        for &b in &ys {
            *counts.entry(spec.add(a, b)?).or_default() += 1;
        }
    }
    Ok(counts)
}

/// `|X + X| / |X|` as an exact fraction.
pub fn doubling_certificate(x: &ElemSet) -> Result<BigRational> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let doubled = sumset(x, x)?;
    Ok(BigRational::new(BigInt::from(doubled.len()), BigInt::from(x.len())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthLine {
    pub ell: u32,
    pub size: usize,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlunneckeReport {
    pub size: usize,
    pub doubled: usize,
    #[serde(with = "crate::exact::serde_rational")]
    pub doubling: BigRational,
    pub lines: Vec<GrowthLine>,
    pub pass: bool,
}

/// Measures `|lX|` for `2 <= l <= ell_max` against `C^l |X|` with
/// `C = |X+X|/|X|`.
pub fn plunnecke_check(x: &ElemSet, ell_max: u32) -> Result<PlunneckeReport> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if ell_max < 2 {
        return Err(Error::InvalidParameter(format!("ell_max {ell_max} < 2")));
    }
    let doubling = doubling_certificate(x)?;
    let mut lines = Vec::new();
    let mut acc = x.clone();
    let mut doubled = 0;
    for ell in 2..=ell_max {
        acc = sumset(&acc, x)?;
        if ell == 2 {
            doubled = acc.len();
        }
        let bound = PowerBound::count(x.len() as u128).times_power(doubling.clone(), int(ell));
        let cert = Certificate::assertion(CheckId::Plunnecke, acc.len() as u128, Relation::Le, &bound)?.with_ell(ell);
        lines.push(GrowthLine { ell, size: acc.len(), certificate: cert });
    }
    let pass = lines.iter().all(|l| l.certificate.pass);
    Ok(PlunneckeReport { size: x.len(), doubled, doubling, lines, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuzsaReport {
    pub x_minus_z: usize,
    pub y_size: usize,
    pub x_minus_y: usize,
    pub y_minus_z: usize,
    pub certificate: Certificate,
}

/// `|X - Z| |Y| <= |X - Y| |Y - Z|`.
pub fn ruzsa_triangle_check(x: &ElemSet, y: &ElemSet, z: &ElemSet) -> Result<RuzsaReport> {
    same_spec(x, y)?;
    same_spec(y, z)?;
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let xz = difference_set(x, z)?.len();
    let xy = difference_set(x, y)?.len();
    let yz = difference_set(y, z)?.len();
    let lhs = xz as u128 * y.len() as u128;
    let bound = PowerBound::count(xy as u128 * yz as u128);
    let certificate = Certificate::assertion(CheckId::RuzsaTriangle, lhs, Relation::Le, &bound)?;
    Ok(RuzsaReport { x_minus_z: xz, y_size: y.len(), x_minus_y: xy, y_minus_z: yz, certificate })
}
