//! Argument parsing and exit-code policy for the `ibench` binary.
//!
//! `ibench <verb> --config <path> [--set section.key=value]... [--seed N]
//! [--paper-scale] [--force] [--jobs N]`
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 missing
//! artifact.

use super::commands::{
    cmd_eval, cmd_gen_data, cmd_report, cmd_sweep, cmd_train, CliOptions, HarnessError,
};
use super::config::Config;

const USAGE: &str = "\
usage: ibench <gen-data|train|sweep|eval|report> --config <path>
              [--set section.key=value]... [--seed N] [--paper-scale]
              [--force] [--jobs N]";

/// Run the CLI and return the process exit code.
pub fn run(args: &[String]) -> i32 {
    match run_inner(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ibench: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(args: &[String]) -> Result<(), HarnessError> {
    let Some(verb) = args.first() else {
        return Err(HarnessError::BadSetup(USAGE.into()));
    };
    let mut config_path: Option<String> = None;
    let mut overrides: Vec<String> = Vec::new();
    let mut seed: Option<u64> = None;
    let mut opts = CliOptions { jobs: 1, ..CliOptions::default() };

    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => config_path = Some(next_value(&mut it, "--config")?),
            "--set" => overrides.push(next_value(&mut it, "--set")?),
            "--seed" => {
                let v = next_value(&mut it, "--seed")?;
                seed = Some(v.parse().map_err(|_| {
                    HarnessError::BadSetup(format!("--seed wants an integer, got '{v}'"))
                })?);
            }
            "--jobs" => {
                let v = next_value(&mut it, "--jobs")?;
                opts.jobs = v.parse().map_err(|_| {
                    HarnessError::BadSetup(format!("--jobs wants an integer, got '{v}'"))
                })?;
            }
            "--paper-scale" => opts.paper_scale = true,
            "--force" => opts.force = true,
            other => {
                return Err(HarnessError::BadSetup(format!("unknown flag '{other}'\n{USAGE}")))
            }
        }
    }

    let Some(config_path) = config_path else {
        return Err(HarnessError::BadSetup(format!("--config is required\n{USAGE}")));
    };
    let config_path = std::path::PathBuf::from(config_path);
    if !config_path.exists() {
        return Err(HarnessError::MissingArtifact(config_path));
    }
    let mut cfg = Config::load(&config_path)?;
    for spec in &overrides {
        cfg.set(spec)?;
    }
    if let Some(s) = seed {
        // one seed pins both data generation and training
        cfg.set(&format!("data.seed={s}"))?;
        cfg.set(&format!("solver.seed={s}"))?;
    }
    if opts.paper_scale {
        // protocol-scale training settings; dataset sizes are handled by
        // gen-data itself
        cfg.set("solver.batch=1024")?;
        cfg.set("solver.epochs=300")?;
    }

    match verb.as_str() {
        "gen-data" => {
            let path = cmd_gen_data(&cfg, &opts)?;
            println!("gen-data: wrote {}", path.display());
        }
        "train" => {
            let outcome = cmd_train(&cfg, &opts)?;
            println!(
                "train: {} val_r1 = {:.6e}{}",
                outcome.run_dir.display(),
                outcome.record.val_r1,
                if outcome.cached { " (cached)" } else { "" }
            );
        }
        "sweep" => {
            let outcome = cmd_sweep(&cfg, &opts)?;
            println!(
                "sweep: {} cells, best = cell-{:03} ({})",
                outcome.records.len(),
                outcome.best_cell,
                outcome.best_dir.display()
            );
        }
        "eval" => {
            let report = cmd_eval(&cfg, &opts)?;
            println!(
                "eval: {} on {}: r1 = {:.6e}, r{} = {:.6e}",
                report.solver,
                report.task,
                report.r1(),
                report.t_max,
                report.r_t.last().unwrap()
            );
        }
        "report" => {
            let bundle = cmd_report(&cfg, &opts)?;
            println!("report: wrote {}", bundle.table_errors.display());
            println!("report: wrote {}", bundle.table_timing.display());
            println!("report: wrote {}", bundle.curves.display());
            println!("report: wrote {}", bundle.nonuniqueness.display());
        }
        other => {
            return Err(HarnessError::BadSetup(format!("unknown verb '{other}'\n{USAGE}")))
        }
    }
    Ok(())
}

fn next_value(
    it: &mut std::slice::Iter<'_, String>,
    flag: &str,
) -> Result<String, HarnessError> {
    it.next()
        .cloned()
        .ok_or_else(|| HarnessError::BadSetup(format!("{flag} needs a value\n{USAGE}")))
}
