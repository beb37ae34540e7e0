use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hbsg::pipeline::Status;
use hbsg_cli::config::{ExperimentConfig, OracleMode, Overrides};
use hbsg_cli::report::{load_dir, worst_status, write_summary, Report};
use hbsg_cli::run::{generate_all, run_experiment, verify_report};

/// Batch extractions with certified ledgers.
#[derive(Parser)]
#[command(name = "hbsg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realize every instance of a config and write it under OUT_DIR/instances.
    Gen(Common),
    /// Run every instance; write OUT_DIR/reports/*.json and OUT_DIR/summary.csv.
    Run(Common),
    /// Replay reports from their echo and audit them with the oracle.
    Verify {
        /// A report file or a directory of reports.
        path: PathBuf,
    },
    /// Rebuild summary.csv from OUT_DIR/reports and print it.
    Report {
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    oracle: Option<OracleMode>,
    /// Comma-separated, e.g. "2,3,4".
    #[arg(long, value_delimiter = ',')]
    ell: Option<Vec<u32>>,
    #[arg(long)]
    max_iters: Option<u32>,
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides { seed: self.seed, oracle: self.oracle, ell: self.ell.clone(), max_iters: self.max_iters });
        Ok(cfg)
    }
}

const EXIT_BEST_EFFORT: u8 = 10;
const EXIT_HALT: u8 = 20;
const EXIT_VERIFY_FAILED: u8 = 30;

fn status_code(s: Option<Status>) -> ExitCode {
    match s {
        Some(Status::DiagnosticHalt) => ExitCode::from(EXIT_HALT),
        Some(Status::BestEffort) => ExitCode::from(EXIT_BEST_EFFORT),
        _ => ExitCode::SUCCESS,
    }
}

fn print_summary(reports: &[Report]) {
    for r in reports {
        let res = &r.result;
        let a_prime = res.a_prime.as_ref().map_or("-".to_string(), |a| a.len().to_string());
        let oracle = match &r.oracle {
            Some(o) if o.pass() => "oracle ok",
            Some(_) => "ORACLE MISMATCH",
            None => "",
        };
        println!(
            "{:<32} |A|={:<4} k={:<3} iters={:<3} |A'|={:<5} {:<16} {}",
            r.instance.id,
            r.sizes.ambient,
            r.instance.k,
            res.iterations,
            a_prime,
            res.status.as_str(),
            oracle
        );
    }
}

fn verify(path: &Path) -> anyhow::Result<ExitCode> {
    let reports = if path.is_dir() { load_dir(path)? } else { vec![Report::load(path)?] };
    if reports.is_empty() {
        bail!("no reports under {}", path.display());
    }
    let mut ok = true;
    for r in &reports {
        let v = verify_report(r).with_context(|| format!("verifying {}", r.instance.id))?;
        let audit = match v.audit_pass {
            Some(true) => "audit ok",
            Some(false) => "AUDIT FAILED",
            None => "audit skipped (budget)",
        };
        let replay = if v.replay_identical { "replay identical" } else { "REPLAY DIFFERS" };
        println!("{:<32} {replay}, {audit}", v.id);
        for m in &v.mismatches {
            println!("    {m}");
        }
        ok &= v.pass();
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY_FAILED) })
}

fn main_inner() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Gen(c) => {
            for p in generate_all(&c.config()?, &c.out_dir)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(c) => {
            let out = run_experiment(&c.config()?, &c.out_dir)?;
            print_summary(&out.reports);
            println!("summary: {}", out.summary.display());
            Ok(status_code(worst_status(&out.reports)))
        }
        Command::Verify { path } => verify(&path),
        Command::Report { out_dir } => {
            let reports = load_dir(&out_dir.join("reports"))?;
            let summary = out_dir.join("summary.csv");
            write_summary(&summary, &reports)?;
            print!("{}", std::fs::read_to_string(&summary)?);
            Ok(status_code(worst_status(&reports)))
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
