use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::bitmap::Bitmap;
use super::spec::{GroupElem, GroupSpec};
use crate::error::{Error, Result};

/// Minimum size for which the dense representation is considered.
const DENSE_MIN_LEN: usize = 32;
/// Dense when the code span is at most this many times the size.
const DENSE_MAX_SPREAD: u128 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Sparse,
    Dense,
}

#[derive(Clone, Debug)]
enum Repr {
    Sparse(Vec<i64>),
    Dense { bits: Bitmap, len: usize },
}

/// A finite set of canonical group elements, iterated in sorted code order
/// whatever the internal representation.
#[derive(Clone)]
pub struct ElemSet {
    spec: GroupSpec,
    repr: Repr,
}

impl ElemSet {
    pub fn empty(spec: GroupSpec) -> Self {
        ElemSet { spec, repr: Repr::Sparse(Vec::new()) }
    }

    pub fn new<I: IntoIterator<Item = GroupElem>>(spec: GroupSpec, items: I) -> Result<Self> {
        spec.validate()?;
        let mut codes: Vec<i64> = items.into_iter().map(|e| e.0).collect();
        codes.sort_unstable();
        codes.dedup();
        if let Some(&bad) = codes.iter().find(|&&c| !spec.is_canonical(c)) {
            return Err(Error::NotCanonical { spec, value: bad as i128 });
        }
        Ok(Self::from_sorted_codes(spec, codes))
    }

    pub fn from_codes<I: IntoIterator<Item = i64>>(spec: GroupSpec, codes: I) -> Result<Self> {
        Self::new(spec, codes.into_iter().map(GroupElem))
    }

    /// Interval `{start, start + 1, ..., start + n - 1}` in a window or cyclic group.
    pub fn interval(spec: GroupSpec, start: i64, n: usize) -> Result<Self> {
        let codes = (0..n as i64).map(|i| spec.reduce_raw(start as i128 + i as i128).map(|e| e.0));
        Self::from_codes(spec, codes.collect::<Result<Vec<_>>>()?)
    }

    /// Callers guarantee sorted, deduplicated, canonical codes.
    pub(crate) fn from_sorted_codes(spec: GroupSpec, codes: Vec<i64>) -> Self {
        let mut set = ElemSet { spec, repr: Repr::Sparse(codes) };
        if set.prefers_dense() {
            set = set.with_representation(Representation::Dense);
        }
        set
    }

    pub(crate) fn from_bitmap(spec: GroupSpec, bits: Bitmap) -> Self {
        let len = bits.len();
        let set = ElemSet { spec, repr: Repr::Dense { bits, len } };
        if set.prefers_dense() {
            set
        } else {
            set.with_representation(Representation::Sparse)
        }
    }

    fn prefers_dense(&self) -> bool {
        let len = self.len();
        match (self.min(), self.max()) {
            (Some(lo), Some(hi)) if len >= DENSE_MIN_LEN => {
                let span = (hi.0 as i128 - lo.0 as i128 + 1) as u128;
                span <= DENSE_MAX_SPREAD * len as u128
            }
            _ => false,
        }
    }

    pub fn representation(&self) -> Representation {
        match self.repr {
            Repr::Sparse(_) => Representation::Sparse,
            Repr::Dense { .. } => Representation::Dense,
        }
    }

    /// Same set, forced into the given representation.
    pub fn with_representation(self, r: Representation) -> Self {
        let spec = self.spec;
        match (r, self.repr) {
            (Representation::Dense, Repr::Sparse(codes)) => {
                let bits = Bitmap::from_sorted(&codes);
                ElemSet { spec, repr: Repr::Dense { bits, len: codes.len() } }
            }
            (Representation::Sparse, Repr::Dense { bits, .. }) => {
                ElemSet { spec, repr: Repr::Sparse(bits.values().collect()) }
            }
            (_, repr) => ElemSet { spec, repr },
        }
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Sparse(v) => v.len(),
            Repr::Dense { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = GroupElem> + '_> {
        match &self.repr {
            Repr::Sparse(v) => Box::new(v.iter().map(|&c| GroupElem(c))),
            Repr::Dense { bits, .. } => Box::new(bits.values().map(GroupElem)),
        }
    }

    pub fn to_vec(&self) -> Vec<GroupElem> {
        self.iter().collect()
    }

    pub(crate) fn codes(&self) -> Vec<i64> {
        self.iter().map(|e| e.0).collect()
    }

    pub(crate) fn bitmap(&self) -> Option<&Bitmap> {
        match &self.repr {
            Repr::Dense { bits, .. } => Some(bits),
            Repr::Sparse(_) => None,
        }
    }

    pub fn contains(&self, e: GroupElem) -> bool {
        match &self.repr {
            Repr::Sparse(v) => v.binary_search(&e.0).is_ok(),
            Repr::Dense { bits, .. } => bits.contains(e.0),
        }
    }

    pub fn min(&self) -> Option<GroupElem> {
        self.iter().next()
    }

    pub fn max(&self) -> Option<GroupElem> {
        match &self.repr {
            Repr::Sparse(v) => v.last().map(|&c| GroupElem(c)),
            Repr::Dense { bits, .. } => bits.values().last().map(GroupElem),
        }
    }

    pub fn is_subset(&self, other: &ElemSet) -> bool {
        self.spec == other.spec && self.iter().all(|e| other.contains(e))
    }

    /// The first `n` elements in canonical order.
    pub fn truncated(&self, n: usize) -> ElemSet {
        Self::from_sorted_codes(self.spec, self.iter().take(n).map(|e| e.0).collect())
    }

    pub fn filter(&self, mut keep: impl FnMut(GroupElem) -> bool) -> ElemSet {
        Self::from_sorted_codes(self.spec, self.iter().filter(|&e| keep(e)).map(|e| e.0).collect())
    }

    /// `self + t`, element-wise.
    pub fn translate(&self, t: GroupElem) -> Result<ElemSet> {
        let items = self.iter().map(|e| self.spec.add(e, t)).collect::<Result<Vec<_>>>()?;
        ElemSet::new(self.spec, items)
    }

    pub fn to_json(&self) -> Value {
        let elements: Vec<Value> = self.iter().map(|e| self.spec.to_json(e)).collect();
        json!({ "spec": self.spec, "elements": elements })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let spec: GroupSpec = serde_json::from_value(v.get("spec").cloned().unwrap_or(Value::Null))
            .map_err(|e| Error::Malformed(format!("bad spec: {e}")))?;
        spec.validate()?;
        let elements = v
            .get("elements")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("missing elements array".into()))?;
        let items = elements.iter().map(|e| spec.from_json(e)).collect::<Result<Vec<_>>>()?;
        ElemSet::new(spec, items)
    }
}

impl PartialEq for ElemSet {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.len() == other.len() && self.iter().eq(other.iter())
    }
}

impl Eq for ElemSet {}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ElemSet")
            .field("spec", &self.spec)
            .field("elements", &self.codes())
            .finish()
    }
}

impl Serialize for ElemSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ElemSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        ElemSet::from_json(&v).map_err(D::Error::custom)
    }
}
