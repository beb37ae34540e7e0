//! Experiment configuration: one JSON document listing instances and sweeps.

use std::collections::BTreeSet;
use std::path::Path;

use hbsg::exact::{format_rational, serde_rational};
use hbsg::oracle::OracleLimits;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{io, CliError, Result};
use crate::instance::InstanceSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    On,
    #[default]
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Q(#[serde(with = "serde_rational")] pub BigRational);

/// Cartesian product of parameter values over a base instance. An empty
/// axis keeps the base value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub base: InstanceSpec,
    #[serde(default)]
    pub delta: Vec<Q>,
    #[serde(default)]
    pub epsilon: Vec<Q>,
    #[serde(default)]
    pub c: Vec<Q>,
    #[serde(default)]
    pub k: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    /// Seed for every generator that does not carry its own.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracle: OracleMode,
    /// Replaces each instance's `ell_list` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<u32>,
    #[serde(default)]
    pub limits: OracleLimits,
    /// Instances with `|A|` at most this get the optimal-subset comparison.
    #[serde(default = "default_subset_ground")]
    pub subset_search_max: usize,
    #[serde(default)]
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub sweeps: Vec<Sweep>,
}

fn default_subset_ground() -> usize {
    12
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub oracle: Option<OracleMode>,
    pub ell: Option<Vec<u32>>,
    pub max_iters: Option<u32>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = io(path, std::fs::read_to_string(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.oracle {
            self.oracle = m;
        }
        if let Some(e) = &o.ell {
            self.ell = Some(e.clone());
        }
        if let Some(m) = o.max_iters {
            self.max_iters = Some(m);
        }
    }

    /// Every instance to run, with sweeps unrolled, seeds resolved and
    /// overrides folded into the parameters. Ids are unique.
    pub fn expand(&self) -> Result<Vec<InstanceSpec>> {
        self.limits.validate()?;
        let mut out: Vec<InstanceSpec> = self.instances.clone();
        for sw in &self.sweeps {
            out.extend(unroll(sw));
        }
        if out.is_empty() {
            return Err(CliError::Config("no instances".into()));
        }
        let mut seen = BTreeSet::new();
        for spec in &mut out {
            spec.resolve_seeds(self.seed);
            if let Some(e) = &self.ell {
                spec.params.ell_list = e.clone();
            }
            if let Some(m) = self.max_iters {
                spec.params.max_iterations = m;
            }
            spec.params.validate()?;
            if !seen.insert(file_stem(&spec.id)) {
                return Err(CliError::Config(format!("duplicate instance id {:?}", spec.id)));
            }
        }
        Ok(out)
    }
}

fn unroll(sw: &Sweep) -> Vec<InstanceSpec> {
    fn axis<T: Clone>(v: &[T]) -> Vec<Option<T>> {
        if v.is_empty() {
            vec![None]
        } else {
            v.iter().cloned().map(Some).collect()
        }
    }
    let mut out = Vec::new();
    for d in axis(&sw.delta) {
        for e in axis(&sw.epsilon) {
            for c in axis(&sw.c) {
                for k in axis(&sw.k) {
                    let mut spec = sw.base.clone();
                    let mut id = spec.id.clone();
                    if let Some(Q(d)) = &d {
                        id += &format!("-delta={}", format_rational(d));
                        spec.params.delta = d.clone();
                    }
                    if let Some(Q(e)) = &e {
                        id += &format!("-eps={}", format_rational(e));
                        spec.params.epsilon = e.clone();
                    }
                    if let Some(Q(c)) = &c {
                        id += &format!("-c={}", format_rational(c));
                        spec.params.c = c.clone();
                    }
                    if let Some(k) = k {
                        id += &format!("-k={k}");
                        spec.k = k;
                    }
                    spec.id = id;
                    out.push(spec);
                }
            }
        }
    }
    out
}

/// A file-name-safe form of an instance id.
pub fn file_stem(id: &str) -> String {
    id.chars().map(|ch| if ch.is_ascii_alphanumeric() || "-_=.".contains(ch) { ch } else { '_' }).collect()
}
