use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::certificate::{CheckId, Certificate, Role};
use crate::error::{Error, Result};
use crate::exact::{int, PowerBound, Relation};
use crate::group::{sumset, ElemSet};

/// A bipartite graph between index sets `0..left` and `0..right`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph")]
pub struct BipartiteGraph {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawGraph {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawGraph> for BipartiteGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        BipartiteGraph::new(raw.left, raw.right, raw.edges)
    }
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &edges {
            if i >= left {
                return Err(Error::IndexOutOfRange { index: i, size: left });
            }
            if j >= right {
                return Err(Error::IndexOutOfRange { index: j, size: right });
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(BipartiteGraph { left, right, edges })
    }

    pub fn complete(left: usize, right: usize) -> Self {
        let edges = (0..left).flat_map(|i| (0..right).map(move |j| (i, j))).collect();
        BipartiteGraph { left, right, edges }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// `A +_G B = { a_i + b_j : (i, j) in E }`, indices in canonical order.
pub fn graph_restricted_sumset(a: &ElemSet, b: &ElemSet, g: &BipartiteGraph) -> Result<ElemSet> {
    if a.spec() != b.spec() {
        return Err(Error::SpecMismatch { left: a.spec(), right: b.spec() });
    }
    if g.left != a.len() {
        return Err(Error::SizeMismatch { left: g.left, right: a.len() });
    }
    if g.right != b.len() {
        return Err(Error::SizeMismatch { left: g.right, right: b.len() });
    }
    let spec = a.spec();
    let (xs, ys) = (a.to_vec(), b.to_vec());
    let sums = g.edges.iter().map(|&(i, j)| spec.add(xs[i], ys[j])).collect::<Result<Vec<_>>>()?;
    ElemSet::new(spec, sums)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsvReport {
    pub n: usize,
    pub edges: usize,
    pub restricted_sum: usize,
    pub sumset: usize,
    /// `|E| >= n^2/K` and `|A +_G B| <= Cn`, the conditions `K` and `C` describe.
    pub hypotheses: Vec<Certificate>,
    /// `|A'| >= n/16K^2`, `|B'| >= n/4K`, `|A'+B'| <= 2^12 C^3 K^5 n`.
    pub conclusions: Vec<Certificate>,
    pub pass: bool,
}

/// Checks a candidate `(A', B')` against the conclusion of the graph
/// Balog-Szemeredi-Gowers bound for parameters `K` and `C`.
pub fn ssv_bound_check(
    a: &ElemSet,
    b: &ElemSet,
    g: &BipartiteGraph,
    a_prime: &ElemSet,
    b_prime: &ElemSet,
    k: &BigRational,
    c: &BigRational,
) -> Result<SsvReport> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    if !a_prime.is_subset(a) {
        return Err(Error::NotSubset("A' is not a subset of A".into()));
    }
    if !b_prime.is_subset(b) {
        return Err(Error::NotSubset("B' is not a subset of B".into()));
    }
    let n = a.len();
    let n_big = int(n);
    let restricted = graph_restricted_sumset(a, b, g)?.len();
    let sum = sumset(a_prime, b_prime)?.len();

    let density = PowerBound::constant(int(n * n)).times_power(k.clone(), int(-1));
    let small = PowerBound::constant(n_big.clone()).times(c.clone());
    let hypotheses = vec![
        Certificate::evaluate(CheckId::SsvEdgeDensity, Role::Branch, g.edge_count() as u128, Relation::Ge, &density)?,
        Certificate::evaluate(CheckId::SsvRestrictedSum, Role::Branch, restricted as u128, Relation::Le, &small)?,
    ];

    let left = PowerBound::constant(n_big.clone() / int(16)).times_power(k.clone(), int(-2));
    let right = PowerBound::constant(n_big.clone() / int(4)).times_power(k.clone(), int(-1));
    let sum_bound = PowerBound::constant(n_big * int(4096))
        .times_power(c.clone(), int(3))
        .times_power(k.clone(), int(5));
    let conclusions = vec![
        Certificate::assertion(CheckId::SsvLeftSize, a_prime.len() as u128, Relation::Ge, &left)?,
        Certificate::assertion(CheckId::SsvRightSize, b_prime.len() as u128, Relation::Ge, &right)?,
        Certificate::assertion(CheckId::SsvSumset, sum as u128, Relation::Le, &sum_bound)?,
    ];
    let pass = conclusions.iter().all(|c| c.pass);
    Ok(SsvReport { n, edges: g.edge_count(), restricted_sum: restricted, sumset: sum, hypotheses, conclusions, pass })
}
