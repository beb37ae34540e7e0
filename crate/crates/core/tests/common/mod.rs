#![allow(dead_code)]

use hbsg::group::{ElemSet, GroupSpec};
use hbsg::strings::{StringRepr, StringSet};
use proptest::prelude::*;
use proptest::sample::subsequence;

/// A group together with a pool of canonical codes to draw from.
pub fn group() -> impl Strategy<Value = (GroupSpec, Vec<i64>)> {
    prop_oneof![
        Just((GroupSpec::integers(), (-20..=20).collect())),
        (2u64..=30).prop_map(|m| (GroupSpec::Cyclic { modulus: m }, (0..m as i64).collect())),
        (prop_oneof![Just(2u64), Just(3)], 1u32..=3)
            .prop_map(|(p, d)| (GroupSpec::Vector { prime: p, dim: d }, (0..p.pow(d) as i64).collect())),
        Just((GroupSpec::Window { lo: -6, hi: 6 }, (-3..=3).collect())),
    ]
}

pub fn subset(pool: Vec<i64>, lo: usize, hi: usize) -> impl Strategy<Value = Vec<i64>> {
    let hi = hi.min(pool.len());
    subsequence(pool, lo.min(hi)..=hi)
}

/// `(X, Y)` with `|X|, |Y| <= 12` in a common group.
pub fn pair() -> impl Strategy<Value = (ElemSet, ElemSet)> {
    group().prop_flat_map(|(spec, pool)| {
        (subset(pool.clone(), 0, 12), subset(pool, 0, 12)).prop_map(move |(x, y)| {
            (ElemSet::from_codes(spec, x).unwrap(), ElemSet::from_codes(spec, y).unwrap())
        })
    })
}

/// `S ⊆ A^k` with `|A| <= 8`, `k <= 4`, as a random code subset in a random representation.
pub fn string_set() -> impl Strategy<Value = StringSet> {
    group()
        .prop_flat_map(|(spec, pool)| (Just(spec), subset(pool, 1, 8), 1usize..=4))
        .prop_flat_map(|(spec, a, k)| {
            let universe = (a.len() as u64).pow(k as u32);
            (Just(spec), Just(a), Just(k), subsequence((0..universe).collect::<Vec<_>>(), 0..=universe as usize), any::<bool>())
        })
        .prop_filter_map("window sums must fit", |(spec, a, k, codes, complement)| {
            let ambient = ElemSet::from_codes(spec, a).unwrap();
            let s = StringSet::from_codes(&ambient, k, codes).ok()?;
            s.sigma().ok()?;
            let repr = if complement { StringRepr::Complement } else { StringRepr::Explicit };
            Some(s.with_repr(repr))
        })
}

/// `A^k` with `floor(fraction |A|^k)` strings removed, chosen by a seeded RNG.
pub fn deleted(a: &ElemSet, k: usize, fraction: f64, seed: u64) -> StringSet {
    use rand::SeedableRng;
    let full = StringSet::full(a, k).unwrap();
    let total = full.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let gone = rand::seq::index::sample(&mut rng, total, (total as f64 * fraction) as usize);
    StringSet::complement_of(a, k, gone.iter().map(|c| full.decode(c as u64, k))).unwrap()
}

pub fn ap(n: usize) -> ElemSet {
    ElemSet::interval(GroupSpec::integers(), 0, n).unwrap()
}
