use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{ElemSet, GroupElem, GroupSpec};

/// Below this fraction of `|A|^k` a set is stored explicitly; at or above it,
/// as `A^k` minus a deletion list.
pub const DEFAULT_DENSITY_THRESHOLD: f64 = 0.5;

/// A string over the ambient set, i.e. a tuple of group elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AString {
    pub coords: Vec<GroupElem>,
}

impl AString {
    pub fn new(coords: Vec<GroupElem>) -> Self {
        AString { coords }
    }

    pub fn from_codes(codes: &[i64]) -> Self {
        AString { coords: codes.iter().map(|&c| GroupElem(c)).collect() }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn codes(&self) -> Vec<i64> {
        self.coords.iter().map(|e| e.0).collect()
    }

    pub fn concat(&self, other: &AString) -> AString {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        AString { coords }
    }

    pub fn to_json(&self, spec: GroupSpec) -> Value {
        Value::from(self.coords.iter().map(|&e| spec.to_json(e)).collect::<Vec<_>>())
    }

    pub fn from_json(spec: GroupSpec, v: &Value) -> Result<Self> {
        let coords = v.as_array().ok_or_else(|| Error::Malformed(format!("expected a string array, got {v}")))?;
        Ok(AString { coords: coords.iter().map(|c| spec.from_json(c)).collect::<Result<_>>()? })
    }
}

/// Sum of the coordinates of a single string.
pub fn sigma_string(spec: GroupSpec, x: &AString) -> Result<GroupElem> {
    spec.sum(x.coords.iter().copied())
}

#[derive(Debug)]
pub(crate) struct Ambient {
    pub set: ElemSet,
    pub elems: Vec<GroupElem>,
}

impl Ambient {
    fn index_of(&self, e: GroupElem) -> Result<usize> {
        self.elems.binary_search(&e).map_err(|_| Error::NotInAmbient)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StringRepr {
    Explicit,
    Complement,
}

#[derive(Clone, Debug)]
enum Members {
    /// Sorted member codes.
    Explicit(Vec<u64>),
    /// Sorted codes of `A^k` that are *not* members.
    Complement(Vec<u64>),
}

/// Fibers of a set split after the first `prefix_len` coordinates.
#[derive(Debug)]
struct PrefixIndex {
    suffix_space: u64,
    groups: Vec<(u64, Range<usize>)>,
}

impl PrefixIndex {
    fn range(&self, prefix: u64) -> Option<Range<usize>> {
        self.groups
            .binary_search_by_key(&prefix, |(p, _)| *p)
            .ok()
            .map(|i| self.groups[i].1.clone())
    }
}

/// A set `S` of length-`k` strings over an ambient set `A`.
///
/// Strings are stored as mixed-radix codes: the index of each coordinate in
/// `A` (in canonical order) is a base-`|A|` digit, first coordinate most
/// significant. Numeric order on codes is therefore lexicographic order on
/// strings, and prefixes/suffixes are quotients/remainders.
#[derive(Clone)]
pub struct StringSet {
    ambient: Arc<Ambient>,
    k: usize,
    members: Members,
    index_cache: Arc<Mutex<HashMap<usize, Arc<PrefixIndex>>>>,
}

fn checked_power(base: u64, exp: usize) -> Result<u64> {
    let exp32 = u32::try_from(exp).map_err(|_| Error::RepresentationLimit(format!("{base}^{exp}")))?;
    base.checked_pow(exp32)
        .filter(|v| *v < (1u64 << 63))
        .ok_or_else(|| Error::RepresentationLimit(format!("|A|^k = {base}^{exp} does not fit in 63 bits")))
}

impl StringSet {
    fn build(ambient: Arc<Ambient>, k: usize, members: Members) -> Result<Self> {
        if k == 0 {
            return Err(Error::LengthOutOfRange { len: 0, k: 0 });
        }
        checked_power(ambient.elems.len() as u64, k)?;
        let set = StringSet { ambient, k, members, index_cache: Default::default() };
        Ok(set.rebalanced(DEFAULT_DENSITY_THRESHOLD))
    }

    fn ambient_arc(ambient: &ElemSet) -> Arc<Ambient> {
        Arc::new(Ambient { set: ambient.clone(), elems: ambient.to_vec() })
    }

    /// `A^k`.
    pub fn full(ambient: &ElemSet, k: usize) -> Result<Self> {
        Self::build(Self::ambient_arc(ambient), k, Members::Complement(Vec::new()))
    }

    pub fn empty(ambient: &ElemSet, k: usize) -> Result<Self> {
        Self::build(Self::ambient_arc(ambient), k, Members::Explicit(Vec::new()))
    }

    pub fn from_strings<I: IntoIterator<Item = AString>>(ambient: &ElemSet, k: usize, strings: I) -> Result<Self> {
        let arc = Self::ambient_arc(ambient);
        let mut codes = strings
            .into_iter()
            .map(|s| encode_with(&arc, k, &s))
            .collect::<Result<Vec<_>>>()?;
        codes.sort_unstable();
        codes.dedup();
        Self::build(arc, k, Members::Explicit(codes))
    }

    /// `A^k` minus the given strings.
    pub fn complement_of<I: IntoIterator<Item = AString>>(ambient: &ElemSet, k: usize, deleted: I) -> Result<Self> {
        let arc = Self::ambient_arc(ambient);
        let mut codes = deleted
            .into_iter()
            .map(|s| encode_with(&arc, k, &s))
            .collect::<Result<Vec<_>>>()?;
        codes.sort_unstable();
        codes.dedup();
        Self::build(arc, k, Members::Complement(codes))
    }

    /// A set over the same ambient with length `k` and sorted member codes.
    pub(crate) fn with_codes(&self, k: usize, codes: Vec<u64>) -> Result<Self> {
        Self::build(self.ambient.clone(), k, Members::Explicit(codes))
    }

    /// Builds from member codes over an ambient of the given radix.
    pub fn from_codes(ambient: &ElemSet, k: usize, mut codes: Vec<u64>) -> Result<Self> {
        codes.sort_unstable();
        codes.dedup();
        let n = checked_power(ambient.len() as u64, k)?;
        if codes.last().is_some_and(|&c| c >= n) {
            return Err(Error::IndexOutOfRange { index: *codes.last().unwrap() as usize, size: n as usize });
        }
        Self::build(Self::ambient_arc(ambient), k, Members::Explicit(codes))
    }

    /// Same members, stored in whichever form the density threshold selects.
    pub fn rebalanced(self, threshold: f64) -> Self {
        let n = self.universe_size();
        let dense = n > 0 && (self.len() as f64) >= threshold * n as f64;
        self.with_repr(if dense { StringRepr::Complement } else { StringRepr::Explicit })
    }

    pub fn with_repr(self, repr: StringRepr) -> Self {
        let n = self.universe_size();
        let members = match (repr, &self.members) {
            (StringRepr::Explicit, Members::Complement(_)) => Members::Explicit(self.codes().collect()),
            (StringRepr::Complement, Members::Explicit(present)) => {
                Members::Complement(complement_codes(n, present))
            }
            _ => return self,
        };
        StringSet { ambient: self.ambient, k: self.k, members, index_cache: Default::default() }
    }

    pub fn repr(&self) -> StringRepr {
        match self.members {
            Members::Explicit(_) => StringRepr::Explicit,
            Members::Complement(_) => StringRepr::Complement,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ambient(&self) -> &ElemSet {
        &self.ambient.set
    }

    pub fn spec(&self) -> GroupSpec {
        self.ambient.set.spec()
    }

    pub(crate) fn radix(&self) -> u64 {
        self.ambient.elems.len() as u64
    }

    /// `|A|^k`.
    pub fn universe_size(&self) -> u64 {
        self.radix().pow(self.k as u32)
    }

    pub(crate) fn space(&self, len: usize) -> u64 {
        self.radix().pow(len as u32)
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Explicit(v) => v.len(),
            Members::Complement(d) => (self.universe_size() - d.len() as u64) as usize,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, s: &AString) -> Result<u64> {
        encode_with(&self.ambient, s.len(), s)
    }

    pub fn decode(&self, code: u64, len: usize) -> AString {
        let radix = self.radix();
        let mut coords = vec![GroupElem(0); len];
        let mut rest = code;
        for slot in coords.iter_mut().rev() {
            *slot = self.ambient.elems[(rest % radix) as usize];
            rest /= radix;
        }
        AString { coords }
    }

    pub fn contains_code(&self, code: u64) -> bool {
        match &self.members {
            Members::Explicit(v) => v.binary_search(&code).is_ok(),
            Members::Complement(d) => code < self.universe_size() && d.binary_search(&code).is_err(),
        }
    }

    pub fn contains(&self, s: &AString) -> bool {
        s.len() == self.k && self.encode(s).is_ok_and(|c| self.contains_code(c))
    }

    /// Member codes in ascending order.
    pub fn codes(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.members {
            Members::Explicit(v) => Box::new(v.iter().copied()),
            Members::Complement(d) => {
                let n = self.universe_size();
                let mut skip = d.iter().copied().peekable();
                Box::new((0..n).filter(move |c| {
                    while skip.peek().is_some_and(|s| s < c) {
                        skip.next();
                    }
                    if skip.peek() == Some(c) {
                        skip.next();
                        false
                    } else {
                        true
                    }
                }))
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = AString> + '_ {
        self.codes().map(move |c| self.decode(c, self.k))
    }

    /// Sum of the coordinates of the string with the given code.
    pub fn code_sum(&self, code: u64, len: usize) -> Result<GroupElem> {
        let radix = self.radix();
        let mut rest = code;
        let spec = self.spec();
        let digits = (0..len).map(|_| {
            let e = self.ambient.elems[(rest % radix) as usize];
            rest /= radix;
            e
        });
        spec.sum(digits)
    }

    /// The sum-image `{ a_1 + ... + a_k }`.
    pub fn sigma(&self) -> Result<ElemSet> {
        let spec = self.spec();
        match &self.members {
            Members::Explicit(codes) => {
                let sums = codes.iter().map(|&c| self.code_sum(c, self.k)).collect::<Result<Vec<_>>>()?;
                ElemSet::new(spec, sums)
            }
            Members::Complement(deleted) => {
                // Multiplicities of each sum over all of A^k, minus the deletions.
                let mut counts: HashMap<i128, u128> = HashMap::from([(0, 1)]);
                for _ in 0..self.k {
                    let mut next: HashMap<i128, u128> = HashMap::with_capacity(counts.len() * 2);
                    for (&s, &c) in &counts {
                        for &a in &self.ambient.elems {
                            *next.entry(raw_step(spec, s, a)).or_default() += c;
                        }
                    }
                    counts = next;
                }
                for &d in deleted {
                    // Unchecked, so a deleted string may overflow a window.
                    let key = self.decode(d, self.k).coords.iter().fold(0, |acc, &a| raw_step(spec, acc, a));
                    if let Some(c) = counts.get_mut(&key) {
                        *c -= 1;
                    }
                }
                let sums = counts
                    .into_iter()
                    .filter(|&(_, c)| c > 0)
                    .map(|(s, _)| finish_raw(spec, s))
                    .collect::<Result<Vec<_>>>()?;
                ElemSet::new(spec, sums)
            }
        }
    }

    fn prefix_index(&self, prefix_len: usize) -> Arc<PrefixIndex> {
        let mut cache = self.index_cache.lock().expect("fiber cache poisoned");
        cache
            .entry(prefix_len)
            .or_insert_with(|| {
                let suffix_space = self.space(self.k - prefix_len);
                let codes = match &self.members {
                    Members::Explicit(v) => v,
                    Members::Complement(d) => d,
                };
                let mut groups: Vec<(u64, Range<usize>)> = Vec::new();
                for (i, &c) in codes.iter().enumerate() {
                    let p = c / suffix_space;
                    match groups.last_mut() {
                        Some((last, r)) if *last == p => r.end = i + 1,
                        _ => groups.push((p, i..i + 1)),
                    }
                }
                Arc::new(PrefixIndex { suffix_space, groups })
            })
            .clone()
    }

    fn check_split(&self, len: usize) -> Result<()> {
        if len == 0 || len >= self.k {
            return Err(Error::LengthOutOfRange { len, k: self.k });
        }
        Ok(())
    }

    /// `|R_x|` for the prefix with the given code.
    pub fn right_fiber_size_code(&self, prefix_len: usize, prefix: u64) -> Result<u64> {
        self.check_split(prefix_len)?;
        let index = self.prefix_index(prefix_len);
        let hits = index.range(prefix).map_or(0, |r| r.len() as u64);
        Ok(match self.members {
            Members::Explicit(_) => hits,
            Members::Complement(_) => index.suffix_space - hits,
        })
    }

    /// Codes of `R_x = { y : xy in S }` for the prefix with the given code.
    pub fn right_fiber_codes(&self, prefix_len: usize, prefix: u64) -> Result<Vec<u64>> {
        self.check_split(prefix_len)?;
        let index = self.prefix_index(prefix_len);
        let space = index.suffix_space;
        let base = prefix * space;
        let hit: Vec<u64> = match index.range(prefix) {
            Some(r) => {
                let codes = match &self.members {
                    Members::Explicit(v) => v,
                    Members::Complement(d) => d,
                };
                codes[r].iter().map(|c| c - base).collect()
            }
            None => Vec::new(),
        };
        Ok(match self.members {
            Members::Explicit(_) => hit,
            Members::Complement(_) => complement_codes(space, &hit),
        })
    }

    pub fn right_fiber_code(&self, prefix_len: usize, prefix: u64) -> Result<StringSet> {
        let codes = self.right_fiber_codes(prefix_len, prefix)?;
        self.with_codes(self.k - prefix_len, codes)
    }

    /// `R_x`: the suffixes completing `x` to a member.
    pub fn right_fiber(&self, x: &AString) -> Result<StringSet> {
        self.check_split(x.len())?;
        let prefix = self.encode(x)?;
        self.right_fiber_code(x.len(), prefix)
    }

    /// Codes of `L_y = { x : xy in S }` for the suffix with the given code.
    pub fn left_fiber_codes(&self, suffix_len: usize, suffix: u64) -> Result<Vec<u64>> {
        self.check_split(suffix_len)?;
        let space = self.space(suffix_len);
        Ok(self.codes().filter(|c| c % space == suffix).map(|c| c / space).collect())
    }

    /// `L_y`: the prefixes completing `y` to a member.
    pub fn left_fiber(&self, y: &AString) -> Result<StringSet> {
        self.check_split(y.len())?;
        let suffix = self.encode(y)?;
        let codes = self.left_fiber_codes(y.len(), suffix)?;
        self.with_codes(self.k - y.len(), codes)
    }

    /// `|L_z|` for every suffix `z` of the given length, indexed by suffix code.
    pub fn suffix_counts(&self, suffix_len: usize) -> Result<Vec<u64>> {
        self.check_split(suffix_len)?;
        let space = self.space(suffix_len);
        let mut counts = vec![0u64; space as usize];
        match &self.members {
            Members::Explicit(v) => {
                for &c in v {
                    counts[(c % space) as usize] += 1;
                }
            }
            Members::Complement(d) => {
                counts.fill(self.space(self.k - suffix_len));
                for &c in d {
                    counts[(c % space) as usize] -= 1;
                }
            }
        }
        Ok(counts)
    }

    /// `{ yz in S : z in R }` for a set `R` of suffixes.
    pub fn restrict_by_right(&self, r: &StringSet) -> Result<StringSet> {
        if r.k >= self.k {
            return Err(Error::LengthMismatch { expected: self.k / 2, got: r.k });
        }
        if r.ambient.set != self.ambient.set {
            return Err(Error::NotSubset("restriction set has a different ambient".into()));
        }
        let space = self.space(r.k);
        let kept: Vec<u64> = self.codes().filter(|c| r.contains_code(c % space)).collect();
        self.with_codes(self.k, kept)
    }

    pub fn to_json(&self) -> Value {
        let spec = self.spec();
        let render = |codes: &mut dyn Iterator<Item = u64>| -> Vec<Value> {
            codes.map(|c| self.decode(c, self.k).to_json(spec)).collect()
        };
        match &self.members {
            Members::Explicit(v) => json!({ "k": self.k, "strings": render(&mut v.iter().copied()) }),
            Members::Complement(d) => json!({ "k": self.k, "deleted": render(&mut d.iter().copied()) }),
        }
    }

    pub fn from_json(ambient: &ElemSet, v: &Value) -> Result<Self> {
        let k = v
            .get("k")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("string set needs an integer \"k\"".into()))? as usize;
        let spec = ambient.spec();
        let parse = |list: &Value| -> Result<Vec<AString>> {
            let items = list.as_array().ok_or_else(|| Error::Malformed("expected an array of strings".into()))?;
            items
                .iter()
                .map(|s| {
                    let s = AString::from_json(spec, s)?;
                    if s.len() != k {
                        return Err(Error::LengthMismatch { expected: k, got: s.len() });
                    }
                    Ok(s)
                })
                .collect()
        };
        match (v.get("strings"), v.get("deleted")) {
            (Some(list), None) => Self::from_strings(ambient, k, parse(list)?),
            (None, Some(list)) => Self::complement_of(ambient, k, parse(list)?),
            _ => Err(Error::Malformed("string set needs exactly one of \"strings\" or \"deleted\"".into())),
        }
    }
}

fn encode_with(ambient: &Ambient, k: usize, s: &AString) -> Result<u64> {
    if s.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: s.len() });
    }
    let radix = ambient.elems.len() as u64;
    let mut code = 0u64;
    for &e in &s.coords {
        code = code * radix + ambient.index_of(e)? as u64;
    }
    Ok(code)
}

fn complement_codes(space: u64, present: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity((space as usize).saturating_sub(present.len()));
    let mut it = present.iter().peekable();
    for c in 0..space {
        if it.peek() == Some(&&c) {
            it.next();
        } else {
            out.push(c);
        }
    }
    out
}

/// Partial sums are tracked as raw integers for windows (only the total has
/// to stay inside) and canonically otherwise.
fn raw_step(spec: GroupSpec, acc: i128, a: GroupElem) -> i128 {
    match spec {
        GroupSpec::Window { .. } => acc + a.0 as i128,
        GroupSpec::Cyclic { modulus } => (acc + a.0 as i128) % modulus as i128,
        GroupSpec::Vector { .. } => spec.add(GroupElem(acc as i64), a).expect("vector addition is total").0 as i128,
    }
}

fn finish_raw(spec: GroupSpec, raw: i128) -> Result<GroupElem> {
    match spec {
        GroupSpec::Window { lo, hi } => {
            if raw < lo as i128 || raw > hi as i128 {
                Err(Error::WindowOverflow { lo, hi, value: raw })
            } else {
                Ok(GroupElem(raw as i64))
            }
        }
        _ => Ok(GroupElem(raw as i64)),
    }
}

impl PartialEq for StringSet {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.ambient.set == other.ambient.set
            && self.len() == other.len()
            && self.codes().eq(other.codes())
    }
}

impl Eq for StringSet {}

impl fmt::Debug for StringSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StringSet")
            .field("k", &self.k)
            .field("ambient", &self.ambient.set)
            .field("len", &self.len())
            .field("repr", &self.repr())
            .finish()
    }
}
