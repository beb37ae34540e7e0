//! Certificates: one measured inequality each, with the exact rounded bound
//! it was compared against.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::{PowerBound, Relation, Rounding};

/// Which inequality a certificate measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    // Set-level verifiers.
    Plunnecke,
    RuzsaTriangle,
    SsvEdgeDensity,
    SsvRestrictedSum,
    SsvLeftSize,
    SsvRightSize,
    SsvSumset,
    IntersectorPrecondition,
    IntersectorThreshold,

    // Pipeline stages, in the order they are visited.
    AmbientSize,
    ReducePigeonhole,
    ReduceSigma,
    HypothesisDensity,
    HypothesisSigma,
    DimensionFloor,
    IntersectorTotal,
    RestrictIdentity,
    DescentFiber,
    DescentSigma,
    DensePrefixCount,
    CommonSuffixRatio,
    CommonSuffixSize,
    PopularHalf,
    PopularSize,
    SigmaFilterMonotone,
    SigmaSuffixBound,
    SigmaDrop,
    SigmaPlateau,
    EnergyLower,
    BsgSize,
    BsgDoubling,
    SigmaLarge,
    SmallDoubling,
    TripleChain,
    TripleSize,
    SuffixPigeonhole,
    SuffixLower,
    SubsetLower,
    Containment,
    GrowthBound,
    GrowthPrerescaled,
    GrowthViaSigma,
    PlunneckeSigma,
}

/// How a certificate participates in the terminal status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// An inequality the argument asserts; a failure downgrades the run.
    Assertion,
    /// A branch condition; either outcome is legitimate.
    Branch,
    /// Measured and reported, outside the literal scope of the argument.
    OutOfScope,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub op: CheckId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    pub role: Role,
    #[serde(with = "wide")]
    pub lhs: u128,
    pub relation: Relation,
    /// The bound after rounding, as a decimal integer (it may exceed `u128`).
    pub rhs: String,
    pub rhs_expr: String,
    pub rhs_approx: f64,
    pub rounding: Rounding,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiebreak: Option<String>,
}

impl Certificate {
    pub fn evaluate(op: CheckId, role: Role, lhs: u128, relation: Relation, bound: &PowerBound) -> Result<Self> {
        let rounding = relation.rounding();
        let lhs_big = BigUint::from(lhs);
        let (rhs, pass) = match bound.round(rounding)? {
            Some(rounded) => {
                let pass = relation.holds(&lhs_big, &rounded);
                (rounded.to_string(), pass)
            }
            // Equality against a non-integer bound can never hold.
            None => (bound.floor()?.to_string() + "+", false),
        };
        Ok(Certificate {
            op,
            ell: None,
            role,
            lhs,
            relation,
            rhs,
            rhs_expr: bound.to_string(),
            rhs_approx: bound.approx(),
            rounding,
            pass,
            tiebreak: None,
        })
    }

    pub fn assertion(op: CheckId, lhs: u128, relation: Relation, bound: &PowerBound) -> Result<Self> {
        Self::evaluate(op, Role::Assertion, lhs, relation, bound)
    }

    pub fn with_ell(mut self, ell: u32) -> Self {
        self.ell = Some(ell);
        self
    }

    pub fn with_tiebreak(mut self, rule: &str) -> Self {
        self.tiebreak = Some(rule.to_string());
        self
    }

    /// Whether this certificate counts against a proved-at-scale status.
    pub fn is_failed_assertion(&self) -> bool {
        self.role == Role::Assertion && !self.pass
    }
}

/// `u128` as a JSON number when it fits `u64`, else as a decimal string.
/// Tagged enums buffer their fields, and the buffer has no `u128`.
mod wide {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        match u64::try_from(*v) {
            Ok(small) => s.serialize_u64(small),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wide {
        Small(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        match Wide::deserialize(d)? {
            Wide::Small(v) => Ok(v as u128),
            Wide::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}
