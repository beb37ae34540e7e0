//! Running instances, writing outputs, and replaying reports.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use hbsg::exact::rat;
use hbsg::oracle::{audit_run, best_subset_growth, brute_iterated_sumset, OBound, OracleLimits};
use hbsg::pipeline::{run_pipeline, PipelineResult};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{file_stem, ExperimentConfig, OracleMode};
use crate::error::{io, Result};
use crate::instance::{generate_instance, Instance, InstanceSpec};
use crate::report::{write_summary, GrowthCheck, OracleSection, Report, Sizes, SubsetGap, Timing, GROWTH_RELATION};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub oracle: OracleMode,
    pub limits: OracleLimits,
    pub subset_search_max: usize,
    /// Worker threads; instances are independent.
    pub jobs: usize,
}

impl RunOptions {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        RunOptions {
            oracle: cfg.oracle,
            limits: cfg.limits.clone(),
            subset_search_max: cfg.subset_search_max,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn budget_or<T>(r: hbsg::Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(hbsg::Error::BudgetExceeded(why)) => Ok(Err(why)),
        Err(e) => Err(e.into()),
    }
}

/// Independent checks of one finished run.
pub fn oracle_section(
    spec: &InstanceSpec,
    inst: &Instance,
    result: &PipelineResult,
    limits: &OracleLimits,
    subset_search_max: usize,
) -> Result<OracleSection> {
    let (audit, audit_skipped) = match budget_or(audit_run(&inst.a, &inst.s, &spec.params, result, limits))? {
        Ok(a) => (Some(a), None),
        Err(why) => (None, Some(why)),
    };
    let p = &spec.params;
    let mut growth = Vec::new();
    let mut best_subset = Vec::new();
    let mut subset_skipped = None;
    if let Some(a_prime) = &result.a_prime {
        for row in &result.growth {
            let oracle_size = brute_iterated_sumset(a_prime, row.ell, limits)?.len();
            let exp = &p.c * (rat(1, 1) + &p.epsilon * rat(row.ell as i64, 1));
            let (oracle_rhs, oracle_pass) = OBound::pow(a_prime.len() as u128, exp).judge(oracle_size as u128, GROWTH_RELATION)?;
            let agree = oracle_size == row.size && oracle_rhs == row.bound.rhs && oracle_pass == row.bound.pass;
            growth.push(GrowthCheck {
                ell: row.ell,
                pipeline_size: row.size,
                oracle_size,
                pipeline_rhs: row.bound.rhs.clone(),
                oracle_rhs,
                pipeline_pass: row.bound.pass,
                oracle_pass,
                agree,
            });
        }
        if inst.a.len() > subset_search_max {
            subset_skipped = Some(format!("|A| = {} > {subset_search_max}", inst.a.len()));
        } else {
            for row in &result.growth {
                match budget_or(best_subset_growth(&inst.a, row.ell, a_prime.len(), limits))? {
                    Ok(best) => best_subset.push(SubsetGap {
                        ell: row.ell,
                        min_size: a_prime.len(),
                        pipeline_size: row.size,
                        optimum: best.size,
                        gap: row.size.saturating_sub(best.size),
                        optimal_subset: best.subset,
                        subsets_searched: best.subsets_searched,
                    }),
                    Err(why) => {
                        subset_skipped = Some(why);
                        break;
                    }
                }
            }
        }
    }
    Ok(OracleSection { audit, audit_skipped, growth, best_subset, subset_skipped })
}

/// Generates, runs and (optionally) audits one instance.
pub fn run_instance(spec: &InstanceSpec, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    let inst = generate_instance(spec)?;
    let result = run_pipeline(&inst.a, &inst.s, &spec.params)?;
    let wall_ms = millis(start);
    let sizes = Sizes { ambient: inst.a.len(), strings: inst.s.len(), universe: inst.s.universe_size() };
    let (oracle, oracle_ms) = match opts.oracle {
        OracleMode::Off => (None, None),
        OracleMode::On => {
            let t = Instant::now();
            let section = oracle_section(spec, &inst, &result, &opts.limits, opts.subset_search_max)?;
            (Some(section), Some(millis(t)))
        }
    };
    Ok(Report {
        instance: spec.clone(),
        limits: opts.limits.clone(),
        sizes,
        result,
        oracle,
        timing: Timing { wall_ms, oracle_ms },
    })
}

/// Runs every spec on `opts.jobs` threads; output order follows input order.
pub fn run_all(specs: &[InstanceSpec], opts: &RunOptions) -> Result<Vec<Report>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Report>>>> = Mutex::new((0..specs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..opts.jobs.clamp(1, specs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= specs.len() {
                    break;
                }
                let r = run_instance(&specs[i], opts);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("lock").into_iter().map(|r| r.expect("every slot filled")).collect()
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub reports: Vec<Report>,
    pub report_paths: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Writes `reports/<id>.json` per instance and `summary.csv` under `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    let specs = cfg.expand()?;
    let reports = run_all(&specs, &RunOptions::from_config(cfg))?;
    let dir = out_dir.join("reports");
    io(&dir, std::fs::create_dir_all(&dir))?;
    let report_paths = reports.iter().map(|r| r.write(&dir)).collect::<Result<_>>()?;
    let summary = out_dir.join("summary.csv");
    write_summary(&summary, &reports)?;
    Ok(ExperimentOutput { reports, report_paths, summary })
}

/// Writes `instances/<id>.json` with the realized `A` and `S`.
pub fn generate_all(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let dir = out_dir.join("instances");
    io(&dir, std::fs::create_dir_all(&dir))?;
    let mut paths = Vec::new();
    for spec in cfg.expand()? {
        let inst = generate_instance(&spec)?;
        let doc = json!({
            "instance": spec,
            "ambient": inst.a.to_json(),
            "strings": inst.s.to_json(),
            "sizes": Sizes { ambient: inst.a.len(), strings: inst.s.len(), universe: inst.s.universe_size() },
        });
        let path = dir.join(format!("{}.json", file_stem(&spec.id)));
        io(&path, std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub id: String,
    /// Rerunning from the echo reproduced the stored result exactly.
    pub replay_identical: bool,
    /// `None` when the audit exceeded the oracle budget.
    pub audit_pass: Option<bool>,
    pub mismatches: Vec<String>,
}

impl VerifyOutcome {
    pub fn pass(&self) -> bool {
        self.replay_identical && self.audit_pass != Some(false)
    }
}

/// Regenerates the instance from the report's echo, reruns the pipeline and
/// audits the stored result with the oracle.
pub fn verify_report(report: &Report) -> Result<VerifyOutcome> {
    let spec = &report.instance;
    let inst = generate_instance(spec)?;
    let rerun = run_pipeline(&inst.a, &inst.s, &spec.params)?;
    let replay_identical = rerun == report.result && rerun.ledger.to_json_bytes() == report.result.ledger.to_json_bytes();
    let mut mismatches = Vec::new();
    if !replay_identical {
        mismatches.push("rerun differs from the stored result".to_string());
    }
    let audit_pass = match budget_or(audit_run(&inst.a, &inst.s, &spec.params, &report.result, &report.limits))? {
        Ok(a) => {
            mismatches.extend(a.mismatches.iter().map(|m| match m.seq {
                Some(s) => format!("entry {s}: {}", m.message),
                None => m.message.clone(),
            }));
            Some(a.pass)
        }
        Err(_) => None,
    };
    Ok(VerifyOutcome { id: spec.id.clone(), replay_identical, audit_pass, mismatches })
}
