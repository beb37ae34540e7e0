//! A constructive Balog-Szemeredi-Gowers extraction: from a pair `X, Y` with
//! many additive quadruples, find `X' ⊆ X` that is large and has small
//! doubling. Every claimed bound is measured and flagged, never assumed.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::certificate::{CheckId, Certificate};
use crate::error::{Error, Result};
use crate::exact::{int, rat, serde_rational, PowerBound, Relation};
use crate::group::{additive_energy, representation_counts, sumset, ElemSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsgConfig {
    /// Exponent in the size bound `C^kappa n` and doubling bound `C^-kappa n`.
    #[serde(with = "serde_rational")]
    pub kappa: BigRational,
    /// A sum is popular when it has at least this fraction of `Cn` representations.
    #[serde(with = "serde_rational")]
    pub popular_fraction: BigRational,
    /// A pair `x, x'` is well connected when it has at least this fraction of
    /// `C^2 n` common neighbours in the popular-sum graph.
    #[serde(with = "serde_rational")]
    pub codegree_fraction: BigRational,
    /// Number of halvings of the degree threshold `Cn/2` to try.
    pub schedule_len: u32,
}

impl Default for BsgConfig {
    fn default() -> Self {
        BsgConfig { kappa: int(20), popular_fraction: rat(1, 2), codegree_fraction: rat(1, 4), schedule_len: 8 }
    }
}

impl BsgConfig {
    pub fn validate(&self) -> Result<()> {
        let zero = int(0);
        if self.kappa <= zero {
            return Err(Error::InvalidParameter("kappa must be positive".into()));
        }
        if self.popular_fraction <= zero || self.codegree_fraction <= zero {
            return Err(Error::InvalidParameter("fractions must be positive".into()));
        }
        if self.schedule_len == 0 {
            return Err(Error::InvalidParameter("schedule_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsgResult {
    pub x_prime: ElemSet,
    pub n: usize,
    pub energy: u128,
    /// `C = E(X, Y) / n^3`.
    #[serde(with = "serde_rational")]
    pub density: BigRational,
    pub doubled: usize,
    /// Schedule step that produced `X'`; `None` when `X` itself was kept.
    pub step: Option<u32>,
    /// `|X'| >= C^kappa n`.
    pub size: Certificate,
    /// `|X' + X'| <= C^-kappa n`.
    pub doubling: Certificate,
    pub pass: bool,
}

/// `E(X, Y) / n^3` for `|X| = |Y| = n`.
pub fn energy_density(x: &ElemSet, y: &ElemSet) -> Result<BigRational> {
    check_sizes(x, y)?;
    let n = x.len() as i64;
    Ok(BigRational::new(BigInt::from(additive_energy(x, y)?), BigInt::from(n).pow(3)))
}

fn check_sizes(x: &ElemSet, y: &ElemSet) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Bit rows over `Y`, one per `x`.
struct Neighbourhoods {
    rows: Vec<Vec<u64>>,
}

impl Neighbourhoods {
    fn degree(&self, i: usize) -> u64 {
        self.rows[i].iter().map(|w| w.count_ones() as u64).sum()
    }

    fn codegree(&self, i: usize, j: usize) -> u64 {
        self.rows[i].iter().zip(&self.rows[j]).map(|(a, b)| (a & b).count_ones() as u64).sum()
    }

    fn adjacent(&self, i: usize, y: usize) -> bool {
        self.rows[i][y / 64] & (1 << (y % 64)) != 0
    }
}

pub fn bsg_extract(x: &ElemSet, y: &ElemSet, cfg: &BsgConfig) -> Result<BsgResult> {
    check_sizes(x, y)?;
    cfg.validate()?;
    let n = x.len();
    let energy = additive_energy(x, y)?;
    let density = BigRational::new(BigInt::from(energy), BigInt::from(n as i64).pow(3));
    let size_bound = PowerBound::count(n as u128).times_power(density.clone(), cfg.kappa.clone());
    let doubling_bound = PowerBound::count(n as u128).times_power(density.clone(), -cfg.kappa.clone());

    let finish = |x_prime: ElemSet, step: Option<u32>| -> Result<BsgResult> {
        let doubled = sumset(&x_prime, &x_prime)?.len();
        let size = Certificate::assertion(CheckId::BsgSize, x_prime.len() as u128, Relation::Ge, &size_bound)?;
        let doubling = Certificate::assertion(CheckId::BsgDoubling, doubled as u128, Relation::Le, &doubling_bound)?;
        let pass = size.pass && doubling.pass;
        Ok(BsgResult { x_prime, n, energy, density: density.clone(), doubled, step, size, doubling, pass })
    };

    let whole = finish(x.clone(), None)?;
    if whole.pass {
        return Ok(whole);
    }

    // Popular-sum graph: x ~ y when r(x + y) >= popular_fraction * C n.
    let spec = x.spec();
    let counts = representation_counts(x, y)?;
    let cn = &density * int(n as i64);
    let popular_min = &cfg.popular_fraction * &cn;
    let (xs, ys) = (x.to_vec(), y.to_vec());
    let words = n.div_ceil(64);
    let mut rows = vec![vec![0u64; words]; n];
    for (i, &a) in xs.iter().enumerate() {
        for (j, &b) in ys.iter().enumerate() {
            let s = spec.add(a, b)?;
            if int(counts[&s] as i64) >= popular_min {
                rows[i][j / 64] |= 1 << (j % 64);
            }
        }
    }
    let graph = Neighbourhoods { rows };
    let codegree_min = &cfg.codegree_fraction * &density * &cn;

    let size_min = size_bound.ceil()?;
    let mut best: Option<(ElemSet, u32)> = None;
    for step in 0..cfg.schedule_len {
        // Vertices of degree at least Cn / 2^{step+1}.
        let threshold = &cn / int(1i64 << (step + 1));
        let heavy: Vec<usize> = (0..n).filter(|&i| int(graph.degree(i) as i64) >= threshold).collect();
        if heavy.is_empty() {
            continue;
        }
        let candidate = anchored_candidate(&graph, &heavy, n, &codegree_min);
        let elems = candidate.iter().map(|&i| xs[i]);
        let x_prime = ElemSet::new(spec, elems)?;
        if BigUint::from(x_prime.len()) >= size_min {
            return finish(x_prime, Some(step));
        }
        if best.as_ref().is_none_or(|(b, _)| x_prime.len() > b.len()) {
            best = Some((x_prime, step));
        }
    }
    match best {
        Some((x_prime, step)) => finish(x_prime, Some(step)),
        None => Ok(whole),
    }
}

/// For the anchor `y` giving the largest result: take the heavy neighbours of
/// `y`, then drop every vertex poorly connected (by paths of length two) to
/// more than half of the others.
fn anchored_candidate(graph: &Neighbourhoods, heavy: &[usize], n: usize, codegree_min: &BigRational) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    for anchor in 0..n {
        let around: Vec<usize> = heavy.iter().copied().filter(|&i| graph.adjacent(i, anchor)).collect();
        if around.len() <= best.len() {
            continue;
        }
        let kept: Vec<usize> = around
            .iter()
            .copied()
            .filter(|&i| {
                let poor = around
                    .iter()
                    .filter(|&&j| j != i && int(graph.codegree(i, j) as i64) < *codegree_min)
                    .count();
                2 * poor <= around.len()
            })
            .collect();
        if kept.len() > best.len() {
            best = kept;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    fn set(codes: impl IntoIterator<Item = i64>) -> ElemSet {
        ElemSet::from_codes(GroupSpec::integers(), codes).unwrap()
    }

    #[test]
    fn densities() {
        let two = set([0, 1]);
        assert_eq!(energy_density(&two, &two).unwrap(), rat(3, 4));
        let one = set([5]);
        assert_eq!(energy_density(&one, &one).unwrap(), rat(1, 1));
        let ap = set(0..8);
        assert_eq!(energy_density(&ap, &ap).unwrap(), rat(344, 512));
        assert!(energy_density(&ap, &two).is_err());
    }

    #[test]
    fn progressions_are_kept_whole() {
        for n in [8, 16, 32] {
            let ap = set(0..n);
            let r = bsg_extract(&ap, &ap, &BsgConfig::default()).unwrap();
            assert_eq!(r.x_prime, ap);
            assert_eq!(r.step, None);
            assert_eq!(r.doubled, 2 * n as usize - 1);
            assert!(r.pass);
        }
        let one = set([3]);
        let r = bsg_extract(&one, &one, &BsgConfig::default()).unwrap();
        assert_eq!((r.x_prime.len(), r.doubled), (1, 1));
    }

    #[test]
    fn small_kappa_forces_extraction() {
        // With kappa tiny the doubling bound is about n, so a noisy set must shrink.
        let x = set((0..16).chain([1000, 2017, 3301, 4999, 6007, 7919, 9001, 12345]));
        let cfg = BsgConfig { kappa: rat(1, 100), ..BsgConfig::default() };
        let r = bsg_extract(&x, &x, &cfg).unwrap();
        assert!(r.x_prime.is_subset(&x));
        assert!(r.step.is_some());
        assert_eq!(r.doubled, sumset(&r.x_prime, &r.x_prime).unwrap().len());
        assert_eq!(r.pass, r.size.pass && r.doubling.pass);
    }
}
