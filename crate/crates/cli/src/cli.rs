use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::pipeline::{stage_augment, stage_calibrate, stage_generate, stage_govern, stage_validate};
use crate::summary::{read_ledger, RunSummary};
use crate::{exit_code_for, run_loop, store, CliError};

#[derive(Debug, Parser)]
#[command(name = "seal", version, about = "Closed-loop synthetic network data with calibration, audit and governance")]
pub struct Args {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed. `run-loop` runs only this seed when given.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Check the configuration and print the plan without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emulated field data and the starting synthetic dataset.
    Generate,
    /// Test suites, fairness resampling, bias scores and audit trail.
    Augment,
    /// One federated calibration pass, then regenerate and re-augment.
    Calibrate,
    /// Train the task model and compute FID, equalized odds and robustness.
    Validate,
    /// Record the audit verdict; seal the dataset when certified.
    Govern,
    /// The whole loop for every configured seed.
    RunLoop,
    /// Aggregate ledgers into a mean ± std table.
    Report {
        /// Ledger files or run directories.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn ledgers_under(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let top = path.join("ledger.csv");
    if top.is_file() {
        return Ok(vec![top]);
    }
    let mut found = Vec::new();
    let entries = std::fs::read_dir(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for entry in entries {
        let p = entry.map_err(|e| CliError::Io(e.to_string()))?.path().join("ledger.csv");
        if p.is_file() {
            found.push(p);
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(CliError::MissingArtifact(format!("no ledger under {}", path.display())));
    }
    Ok(found)
}

pub fn execute(args: &Args) -> Result<i32, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &args.output {
        cfg.output_dir = o.clone();
    }
    let seed = args.seed.unwrap_or(0);
    let dir = store::seed_dir(&cfg.output_dir, seed);

    if let Command::Report { input } = &args.command {
        let mut rows = Vec::new();
        for p in input {
            for l in ledgers_under(p)? {
                rows.extend(read_ledger(&l)?);
            }
        }
        print!("{}", RunSummary::from_rows(rows)?.table());
        return Ok(0);
    }

    if args.dry_run {
        let what = match &args.command {
            Command::RunLoop => {
                let seeds: Vec<u64> = args.seed.map_or_else(|| (0..cfg.n_seeds as u64).collect(), |s| vec![s]);
                format!("run-loop over seeds {seeds:?}")
            }
            other => format!("{other:?} for seed {seed}").to_lowercase(),
        };
        println!("config ok ({}); would run {what} into {}", cfg.digest(), cfg.output_dir.display());
        return Ok(0);
    }

    match &args.command {
        Command::RunLoop => {
            let seeds: Vec<u64> = args.seed.map_or_else(|| (0..cfg.n_seeds as u64).collect(), |s| vec![s]);
            let summary = run_loop(&cfg, &seeds, &cfg.output_dir)?;
            print!("{}", summary.table());
            let states = summary.rows.iter().map(|r| {
                if r.final_state == "Certified" {
                    seal_core::governance::LifecycleState::Certified
                } else {
                    seal_core::governance::LifecycleState::Rejected
                }
            });
            Ok(exit_code_for(states))
        }
        Command::Generate => {
            let st = stage_generate(&cfg, seed)?;
            store::save(&dir, &cfg, &st)?;
            Ok(0)
        }
        Command::Augment | Command::Calibrate | Command::Validate | Command::Govern => {
            let mut st = store::load(&dir, &cfg)?;
            match &args.command {
                Command::Augment => stage_augment(&cfg, &mut st)?,
                Command::Calibrate => stage_calibrate(&cfg, &mut st)?,
                Command::Validate => stage_validate(&cfg, &mut st)?,
                _ => stage_govern(&cfg, &mut st)?,
            }
            store::save(&dir, &cfg, &st)?;
            Ok(if matches!(args.command, Command::Govern) { exit_code_for([st.state()]) } else { 0 })
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
}
