//! Instance descriptions and their deterministic realization as `(A, S)`.

use std::collections::BTreeSet;

use hbsg::exact::{serde_rational, PowerBound};
use hbsg::group::{ElemSet, GroupElem, GroupSpec};
use hbsg::pipeline::PipelineParams;
use hbsg::strings::StringSet;
use num_rational::BigRational;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Refuse to materialize `A^k` beyond this many strings.
pub const MAX_UNIVERSE: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AmbientGen {
    /// `start, start + step, ..., start + (n-1) step`.
    Ap { start: i64, step: i64, n: usize },
    /// `{0, ..., n_ap - 1}` plus `n_noise` distinct codes drawn from `window`.
    ApPlusNoise {
        n_ap: usize,
        n_noise: usize,
        window: [i64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// `n` distinct codes drawn uniformly from `window`.
    Random {
        n: usize,
        window: [i64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit { elements: Vec<Value> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StringGen {
    FullProduct,
    /// Deletes `floor(fraction |A|^k)` strings of `A^k` chosen by a seeded RNG.
    RandomDeletion {
        #[serde(with = "serde_rational")]
        fraction: BigRational,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Every string whose coordinate sum lies in `targets`.
    SumConstrained { targets: Vec<Value> },
    /// `{"strings": [...]}` or `{"deleted": [...]}` in the string-set schema.
    Explicit { set: Value },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub id: String,
    #[serde(default = "GroupSpec::integers")]
    pub group: GroupSpec,
    pub ambient: AmbientGen,
    pub strings: StringGen,
    pub k: usize,
    #[serde(default)]
    pub params: PipelineParams,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub a: ElemSet,
    pub s: StringSet,
}

impl InstanceSpec {
    fn infeasible(&self, reason: impl Into<String>) -> CliError {
        CliError::Infeasible { id: self.id.clone(), reason: reason.into() }
    }

    /// Fills every unset generator seed with `seed`, so the echo replays alone.
    pub fn resolve_seeds(&mut self, seed: u64) {
        match &mut self.ambient {
            AmbientGen::ApPlusNoise { seed: s, .. } | AmbientGen::Random { seed: s, .. } => {
                s.get_or_insert(seed);
            }
            _ => {}
        }
        if let StringGen::RandomDeletion { seed: s, .. } = &mut self.strings {
            s.get_or_insert(seed);
        }
    }
}

fn draw(spec: &InstanceSpec, g: GroupSpec, n: usize, window: [i64; 2], seed: Option<u64>, skip: &BTreeSet<i64>) -> Result<Vec<i64>> {
    let [lo, hi] = window;
    let pool: Vec<i64> = (lo..=hi).filter(|&c| g.is_canonical(c) && !skip.contains(&c)).collect();
    if lo > hi || pool.len() < n {
        return Err(spec.infeasible(format!("window [{lo}, {hi}] has fewer than {n} usable codes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let mut picked: Vec<i64> = sample(&mut rng, pool.len(), n).iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    Ok(picked)
}

fn ambient(spec: &InstanceSpec) -> Result<ElemSet> {
    let g = spec.group;
    g.validate()?;
    let codes: Vec<i64> = match &spec.ambient {
        AmbientGen::Ap { start, step, n } => {
            let (start, step) = (g.elem(*start)?, g.elem(*step)?);
            let mut out = Vec::with_capacity(*n);
            let mut cur = start;
            for i in 0..*n {
                if i > 0 {
                    cur = g.add(cur, step)?;
                }
                out.push(cur.0);
            }
            out
        }
        AmbientGen::ApPlusNoise { n_ap, n_noise, window, seed } => {
            let base: BTreeSet<i64> = (0..*n_ap as i64).map(|c| g.elem(c).map(|e| e.0)).collect::<hbsg::Result<_>>()?;
            let noise = draw(spec, g, *n_noise, *window, *seed, &base)?;
            base.into_iter().chain(noise).collect()
        }
        AmbientGen::Random { n, window, seed } => draw(spec, g, *n, *window, *seed, &BTreeSet::new())?,
        AmbientGen::Explicit { elements } => {
            elements.iter().map(|v| g.from_json(v).map(|e| e.0)).collect::<hbsg::Result<_>>()?
        }
    };
    let declared = codes.len();
    let a = ElemSet::from_codes(g, codes)?;
    if a.len() != declared {
        return Err(spec.infeasible(format!("ambient has repeated elements ({} distinct of {declared})", a.len())));
    }
    if a.is_empty() {
        return Err(spec.infeasible("empty ambient set"));
    }
    Ok(a)
}

/// `|A|^k`, refusing universes too large to enumerate.
fn universe(spec: &InstanceSpec, a: &ElemSet) -> Result<u64> {
    (a.len() as u64)
        .checked_pow(spec.k as u32)
        .filter(|&u| u <= MAX_UNIVERSE)
        .ok_or_else(|| spec.infeasible(format!("|A|^k = {}^{} exceeds {MAX_UNIVERSE}", a.len(), spec.k)))
}

/// Realizes the spec. Random deletion is refused when the surviving count
/// falls below `|A|^{k - delta}`.
pub fn generate_instance(spec: &InstanceSpec) -> Result<Instance> {
    if spec.k == 0 {
        return Err(spec.infeasible("k must be positive"));
    }
    let a = ambient(spec)?;
    let total = universe(spec, &a)?;
    let s = match &spec.strings {
        StringGen::FullProduct => StringSet::full(&a, spec.k)?,
        StringGen::RandomDeletion { fraction, seed } => {
            let zero = BigRational::from_integer(0.into());
            if *fraction < zero || *fraction >= BigRational::from_integer(1.into()) {
                return Err(spec.infeasible("deletion fraction must lie in [0, 1)"));
            }
            let gone = (fraction * BigRational::from_integer(total.into())).floor().to_integer();
            let gone: u64 = gone.try_into().map_err(|_| spec.infeasible("deletion count"))?;
            let floor = PowerBound::power(a.len() as u128, BigRational::from_integer(spec.k.into()) - &spec.params.delta);
            if num_bigint::BigUint::from(total - gone) < floor.ceil()? {
                return Err(spec.infeasible(format!(
                    "deleting {gone} of {total} strings leaves fewer than |A|^(k - delta) = {}",
                    floor.approx()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
            let codes = sample(&mut rng, total as usize, gone as usize);
            let full = StringSet::full(&a, spec.k)?;
            StringSet::complement_of(&a, spec.k, codes.iter().map(|c| full.decode(c as u64, spec.k)))?
        }
        StringGen::SumConstrained { targets } => {
            let g = spec.group;
            let targets: BTreeSet<GroupElem> = targets.iter().map(|v| g.from_json(v)).collect::<hbsg::Result<_>>()?;
            let full = StringSet::full(&a, spec.k)?;
            let mut kept = Vec::new();
            for code in 0..total {
                if targets.contains(&full.code_sum(code, spec.k)?) {
                    kept.push(code);
                }
            }
            StringSet::from_codes(&a, spec.k, kept)?
        }
        StringGen::Explicit { set } => {
            let s = StringSet::from_json(&a, set)?;
            if s.k() != spec.k {
                return Err(spec.infeasible(format!("explicit set has k = {}, spec says {}", s.k(), spec.k)));
            }
            s
        }
    };
    Ok(Instance { a, s })
}
