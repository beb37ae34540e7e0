//! Per-instance reports and the CSV summary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use hbsg::exact::{format_rational, Relation};
use hbsg::group::ElemSet;
use hbsg::oracle::{AuditReport, OracleLimits};
use hbsg::pipeline::{PipelineResult, Status};
use serde::{Deserialize, Serialize};

use crate::config::file_stem;
use crate::error::{io, CliError, Result};
use crate::instance::InstanceSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sizes {
    pub ambient: usize,
    pub strings: usize,
    pub universe: u64,
}

/// `|l A'|` and its bound, computed by the pipeline and again by the oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub ell: u32,
    pub pipeline_size: usize,
    pub oracle_size: usize,
    pub pipeline_rhs: String,
    pub oracle_rhs: String,
    pub pipeline_pass: bool,
    pub oracle_pass: bool,
    pub agree: bool,
}

/// The smallest `|l B|` over `B ⊆ A` with `|B| >= |A'|`, against the pipeline's `|l A'|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetGap {
    pub ell: u32,
    pub min_size: usize,
    pub pipeline_size: usize,
    pub optimum: usize,
    /// `pipeline_size - optimum`, never negative.
    pub gap: usize,
    pub optimal_subset: ElemSet,
    pub subsets_searched: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_skipped: Option<String>,
    pub growth: Vec<GrowthCheck>,
    pub best_subset: Vec<SubsetGap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_skipped: Option<String>,
}

impl OracleSection {
    /// Audit clean (or skipped for budget) and every growth row agrees.
    pub fn pass(&self) -> bool {
        self.audit.as_ref().is_none_or(|a| a.pass) && self.growth.iter().all(|g| g.agree)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_ms: Option<f64>,
}

/// Everything about one run. `instance` alone regenerates the input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub instance: InstanceSpec,
    pub limits: OracleLimits,
    pub sizes: Sizes,
    pub result: PipelineResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    /// Not covered by the replay guarantee.
    pub timing: Timing,
}

impl Report {
    pub fn file_name(&self) -> String {
        format!("{}.json", file_stem(&self.instance.id))
    }

    /// The report as JSON with `timing` removed.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        let text = serde_json::to_string_pretty(self).expect("reports serialize");
        io(&path, std::fs::write(&path, text + "\n"))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io(path, std::fs::read_to_string(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }
}

/// Reads every `*.json` under `dir` in file-name order.
pub fn load_dir(dir: &Path) -> Result<Vec<Report>> {
    let mut paths: Vec<PathBuf> = io(dir, std::fs::read_dir(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Report::load(p)).collect()
}

pub fn summary_header(ells: &[u32]) -> Vec<String> {
    let mut h: Vec<String> = ["id", "ambient_size", "k", "delta", "epsilon", "c", "sigma_size", "iterations", "a_prime_size"]
        .map(String::from)
        .to_vec();
    for l in ells {
        h.extend([format!("ell{l}_size"), format!("ell{l}_bound"), format!("ell{l}_pass")]);
    }
    h.extend(["status", "wall_ms"].map(String::from));
    h
}

pub fn summary_row(r: &Report, ells: &[u32]) -> Vec<String> {
    let p = &r.instance.params;
    let res = &r.result;
    let mut row = vec![
        r.instance.id.clone(),
        r.sizes.ambient.to_string(),
        r.instance.k.to_string(),
        format_rational(&p.delta),
        format_rational(&p.epsilon),
        format_rational(&p.c),
        res.initial_sigma_size.to_string(),
        res.iterations.to_string(),
        res.a_prime.as_ref().map(|a| a.len().to_string()).unwrap_or_default(),
    ];
    for l in ells {
        match res.growth.iter().find(|g| g.ell == *l) {
            Some(g) => row.extend([g.size.to_string(), g.bound.rhs.clone(), g.bound.pass.to_string()]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
    }
    row.push(res.status.as_str().to_string());
    row.push(format!("{:.3}", r.timing.wall_ms));
    row
}

/// Every `ell` any report asked for, ascending.
pub fn ell_columns(reports: &[Report]) -> Vec<u32> {
    let set: BTreeSet<u32> = reports.iter().flat_map(|r| r.instance.params.ell_list.iter().copied()).collect();
    set.into_iter().collect()
}

pub fn write_summary(path: &Path, reports: &[Report]) -> Result<()> {
    let ells = ell_columns(reports);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(summary_header(&ells))?;
    for r in reports {
        w.write_record(summary_row(r, &ells))?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

/// The most severe status, for the process exit code.
pub fn worst_status(reports: &[Report]) -> Option<Status> {
    let rank = |s: Status| match s {
        Status::ProvedAtScale => 0,
        Status::BestEffort => 1,
        Status::DiagnosticHalt => 2,
    };
    reports.iter().map(|r| r.result.status).max_by_key(|&s| rank(s))
}

pub const GROWTH_RELATION: Relation = Relation::Le;
