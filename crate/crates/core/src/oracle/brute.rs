//! Direct enumeration of every measured quantity. No histograms, no
//! convolutions, no code shared with the fast paths.

use std::collections::BTreeSet;

use super::arith::OGroup;
use super::limits::OracleLimits;
use crate::error::{Error, Result};
use crate::group::{ElemSet, GroupSpec};
use crate::strings::{AString, BipartiteGraph, StringSet};

/// Strings as plain code vectors, in lexicographic order.
pub type Rows = BTreeSet<Vec<i64>>;

pub(crate) fn codes(x: &ElemSet) -> Vec<i64> {
    x.iter().map(|e| e.0).collect()
}

pub(crate) fn to_set(spec: GroupSpec, values: impl IntoIterator<Item = i64>) -> Result<ElemSet> {
    ElemSet::from_codes(spec, values)
}

pub(crate) fn pairwise(g: OGroup, xs: &[i64], ys: &[i64], subtract: bool) -> Result<BTreeSet<i64>> {
    let mut out = BTreeSet::new();
    for &x in xs {
        for &y in ys {
            out.insert(if subtract { g.sub(x, y)? } else { g.add(x, y)? });
        }
    }
    Ok(out)
}

pub fn brute_sumset(x: &ElemSet, y: &ElemSet, lim: &OracleLimits) -> Result<ElemSet> {
    same_spec(x, y)?;
    lim.enumeration("sumset", &[x.len() as u64, y.len() as u64])?;
    to_set(x.spec(), pairwise(OGroup::of(x.spec()), &codes(x), &codes(y), false)?)
}

pub fn brute_difference_set(x: &ElemSet, y: &ElemSet, lim: &OracleLimits) -> Result<ElemSet> {
    same_spec(x, y)?;
    lim.enumeration("difference set", &[x.len() as u64, y.len() as u64])?;
    to_set(x.spec(), pairwise(OGroup::of(x.spec()), &codes(x), &codes(y), true)?)
}

/// `X + ... + X` by repeated pairwise sums.
pub fn brute_iterated_sumset(x: &ElemSet, ell: u32, lim: &OracleLimits) -> Result<ElemSet> {
    to_set(x.spec(), iterate(OGroup::of(x.spec()), &codes(x), ell, lim)?)
}

pub(crate) fn iterate(g: OGroup, base: &[i64], ell: u32, lim: &OracleLimits) -> Result<Vec<i64>> {
    if ell == 0 {
        return Err(Error::InvalidParameter("iterated sumset order must be at least 1".into()));
    }
    let mut acc = base.to_vec();
    for _ in 1..ell {
        lim.enumeration("iterated sumset", &[acc.len() as u64, base.len() as u64])?;
        acc = pairwise(g, &acc, base, false)?.into_iter().collect();
    }
    Ok(acc)
}

pub(crate) fn iterate_len(g: OGroup, base: &[i64], ell: u32, lim: &OracleLimits) -> Result<usize> {
    Ok(iterate(g, base, ell, lim)?.len())
}

/// Counts quadruples `(x1, y1, x2, y2)` with `x1 + y1 = x2 + y2` one by one.
pub fn brute_energy(x: &ElemSet, y: &ElemSet, lim: &OracleLimits) -> Result<u128> {
    same_spec(x, y)?;
    quadruples(OGroup::of(x.spec()), &codes(x), &codes(y), lim)
}

pub(crate) fn quadruples(g: OGroup, x: &[i64], y: &[i64], lim: &OracleLimits) -> Result<u128> {
    let (nx, ny) = (x.len() as u64, y.len() as u64);
    lim.enumeration("energy", &[nx, ny, nx, ny])?;
    let mut count = 0u128;
    for &x1 in x {
        for &y1 in y {
            let s = g.add(x1, y1)?;
            for &x2 in x {
                for &y2 in y {
                    if g.add(x2, y2)? == s {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Every string of `S`, found by testing each word of `A^k`.
pub fn brute_rows(s: &StringSet, lim: &OracleLimits) -> Result<Rows> {
    let ambient = codes(s.ambient());
    lim.ambient(ambient.len())?;
    lim.length(s.k())?;
    let mut rows = Rows::new();
    for w in words(&ambient, s.k(), lim)? {
        if s.contains(&AString::from_codes(&w)) {
            rows.insert(w);
        }
    }
    Ok(rows)
}

pub(crate) fn sigma_rows<'a>(g: OGroup, rows: impl IntoIterator<Item = &'a Vec<i64>>) -> Result<BTreeSet<i64>> {
    rows.into_iter().map(|r| g.sum(r)).collect()
}

pub fn brute_sigma(s: &StringSet, lim: &OracleLimits) -> Result<ElemSet> {
    let rows = brute_rows(s, lim)?;
    to_set(s.spec(), sigma_rows(OGroup::of(s.spec()), &rows)?)
}

/// `R_x`: suffixes `z` with `xz` in `S`.
pub fn brute_fiber(s: &StringSet, x: &AString, lim: &OracleLimits) -> Result<Rows> {
    let x = x.codes();
    if x.len() > s.k() {
        return Err(Error::LengthOutOfRange { len: x.len(), k: s.k() });
    }
    Ok(brute_rows(s, lim)?.into_iter().filter(|r| r[..x.len()] == x[..]).map(|r| r[x.len()..].to_vec()).collect())
}

/// `L_y`: prefixes `x` with `xy` in `S`.
pub fn brute_left_fiber(s: &StringSet, y: &AString, lim: &OracleLimits) -> Result<Rows> {
    let y = y.codes();
    if y.len() > s.k() {
        return Err(Error::LengthOutOfRange { len: y.len(), k: s.k() });
    }
    let cut = s.k() - y.len();
    Ok(brute_rows(s, lim)?.into_iter().filter(|r| r[cut..] == y[..]).map(|r| r[..cut].to_vec()).collect())
}

/// `{ a_i + b_j : (i, j) in G }` with indices into the sorted sets.
pub fn brute_restricted_sumset(a: &ElemSet, b: &ElemSet, g: &BipartiteGraph, lim: &OracleLimits) -> Result<ElemSet> {
    same_spec(a, b)?;
    lim.enumeration("restricted sumset", &[g.edges().len() as u64])?;
    let (xs, ys) = (codes(a), codes(b));
    let grp = OGroup::of(a.spec());
    let mut out = BTreeSet::new();
    for &(i, j) in g.edges() {
        let (&x, &y) = xs
            .get(i)
            .zip(ys.get(j))
            .ok_or(Error::IndexOutOfRange { index: i.max(j), size: xs.len().min(ys.len()) })?;
        out.insert(grp.add(x, y)?);
    }
    to_set(a.spec(), out)
}

/// All words of length `m` over `ambient`, lexicographically.
pub(crate) fn words(ambient: &[i64], m: usize, lim: &OracleLimits) -> Result<Vec<Vec<i64>>> {
    lim.enumeration("words", &vec![ambient.len() as u64; m])?;
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|w| {
                ambient.iter().map(move |&a| {
                    let mut v = w.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    Ok(out)
}

fn same_spec(x: &ElemSet, y: &ElemSet) -> Result<()> {
    if x.spec() != y.spec() {
        return Err(Error::SpecMismatch { left: x.spec(), right: y.spec() });
    }
    Ok(())
}
