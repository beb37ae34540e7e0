use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard ceilings for brute-force work.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleLimits {
    pub max_ambient: usize,
    pub max_k: usize,
    /// Largest number of tuples, pairs or subsets any single scan may visit.
    pub max_enumeration: u64,
    pub max_subset_ground: usize,
}

/// Subset search never goes past this ground-set size.
pub const SUBSET_GROUND_CAP: usize = 20;

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_ambient: 64, max_k: 16, max_enumeration: 100_000_000, max_subset_ground: SUBSET_GROUND_CAP }
    }
}

impl OracleLimits {
    pub fn validate(&self) -> Result<()> {
        if self.max_ambient == 0 || self.max_k == 0 || self.max_enumeration == 0 || self.max_subset_ground == 0 {
            return Err(Error::InvalidParameter("oracle limits must be positive".into()));
        }
        if self.max_subset_ground > SUBSET_GROUND_CAP {
            return Err(Error::InvalidParameter(format!("subset search is capped at {SUBSET_GROUND_CAP} elements")));
        }
        Ok(())
    }

    pub(crate) fn ambient(&self, n: usize) -> Result<()> {
        if n > self.max_ambient {
            return Err(Error::BudgetExceeded(format!("ambient size {n} > {}", self.max_ambient)));
        }
        Ok(())
    }

    pub(crate) fn length(&self, k: usize) -> Result<()> {
        if k > self.max_k {
            return Err(Error::BudgetExceeded(format!("string length {k} > {}", self.max_k)));
        }
        Ok(())
    }

    /// Fails unless `prod factors` fits the enumeration budget.
    pub(crate) fn enumeration(&self, what: &str, factors: &[u64]) -> Result<u64> {
        let mut total: u64 = 1;
        for &f in factors {
            total = total.saturating_mul(f);
        }
        if total > self.max_enumeration {
            return Err(Error::BudgetExceeded(format!("{what}: {total} steps > {}", self.max_enumeration)));
        }
        Ok(total)
    }

    pub(crate) fn subset_ground(&self, n: usize) -> Result<()> {
        if n > self.max_subset_ground.min(SUBSET_GROUND_CAP) {
            return Err(Error::BudgetExceeded(format!("subset search over {n} elements")));
        }
        Ok(())
    }
}
