use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::bsg::BsgConfig;
use crate::error::{Error, Result};
use crate::exact::{int, rat, serde_rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    #[serde(with = "serde_rational")]
    pub epsilon: BigRational,
    #[serde(with = "serde_rational")]
    pub c: BigRational,
    /// Initial `delta`; the run doubles or quintuples it on reassignment.
    #[serde(with = "serde_rational")]
    pub delta: BigRational,
    /// Upper bound on iteration steps before a diagnostic halt.
    pub max_iterations: u32,
    /// Runs on `|A|` below this halt immediately.
    pub min_ambient_size: usize,
    /// Halving reassignments that would take `k` below this are refused.
    /// The final leg needs `k >= 4` to split off a suffix `w`.
    pub min_k: usize,
    pub ell_list: Vec<u32>,
    pub bsg: BsgConfig,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            epsilon: rat(1, 5),
            c: rat(3, 2),
            delta: rat(1, 20),
            max_iterations: 64,
            min_ambient_size: 2,
            min_k: 4,
            ell_list: vec![2, 4],
            bsg: BsgConfig::default(),
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        let zero = int(0);
        if self.epsilon <= zero || self.epsilon >= rat(1, 2) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1/2)".into()));
        }
        if self.c <= int(1) {
            return Err(Error::InvalidParameter("c must exceed 1".into()));
        }
        if self.delta <= zero {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if self.min_k < 4 {
            return Err(Error::InvalidParameter("min_k must be at least 4".into()));
        }
        if self.ell_list.contains(&0) {
            return Err(Error::InvalidParameter("ell must be positive".into()));
        }
        self.bsg.validate()
    }

    /// `epsilon / 400c`, the per-step exponent saving.
    pub fn saving(&self) -> BigRational {
        &self.epsilon / (int(400) * &self.c)
    }

    /// `epsilon / 2c`.
    pub fn half_ratio(&self) -> BigRational {
        &self.epsilon / (int(2) * &self.c)
    }
}
