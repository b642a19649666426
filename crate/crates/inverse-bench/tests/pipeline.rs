//! End-to-end harness flows: dataset files, training runs, caching, sweeps,
//! evaluation reports, and the consolidated tables.

use std::fs;
use std::path::Path;

use inverse_bench::harness::{cli, cmd_eval, cmd_gen_data, cmd_report, cmd_sweep, cmd_train};
use inverse_bench::harness::{CliOptions, Config, HarnessError};
use inverse_bench::metrics::EvalReport;

fn write_config(dir: &Path, solver: &str, extra: &str) -> std::path::PathBuf {
    let text = format!(
        "[task]\n\
         name = toy\n\
         [data]\n\
         path = {data}\n\
         n = 300\n\
         seed = 7\n\
         fractions = 0.7,0.2,0.1\n\
         [solver]\n\
         kind = {solver}\n\
         hidden = 24\n\
         activation = relu\n\
         batchnorm = false\n\
         epochs = 25\n\
         batch = 64\n\
         lr = 3e-3\n\
         seed = 1\n\
         iterations = 40\n\
         population = 60\n\
         oversample = 2\n\
         [eval]\n\
         t_max = 8\n\
         eval_seed = 99\n\
         [output]\n\
         dir = {out}\n\
         {extra}",
        data = dir.join("data").join("toy.csv").display(),
        out = dir.join("runs").display(),
    );
    let path = dir.join(format!("{solver}.cfg"));
    fs::write(&path, text).unwrap();
    path
}

fn opts() -> CliOptions {
    CliOptions { jobs: 1, ..CliOptions::default() }
}

#[test]
fn gen_data_is_idempotent_and_respects_force() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), "nn", "");
    let cfg = Config::load(&cfg_path).unwrap();

    let path = cmd_gen_data(&cfg, &opts()).unwrap();
    let first = fs::read(&path).unwrap();

    // without --force a second run refuses to clobber
    match cmd_gen_data(&cfg, &opts()) {
        Err(HarnessError::WouldClobber(_)) => {}
        other => panic!("expected WouldClobber, got {other:?}"),
    }

    // with --force the bytes come out identical for the same seed
    let forced = CliOptions { force: true, ..opts() };
    cmd_gen_data(&cfg, &forced).unwrap();
    assert_eq!(first, fs::read(&path).unwrap());
}

#[test]
fn train_writes_artifacts_and_caches_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), "nn", "");
    let cfg = Config::load(&cfg_path).unwrap();
    cmd_gen_data(&cfg, &opts()).unwrap();

    let outcome = cmd_train(&cfg, &opts()).unwrap();
    assert!(!outcome.cached);
    assert!(outcome.record.val_r1.is_finite());
    for file in ["checkpoint.ibchk", "manifest.txt", "record.txt", "losses.txt"] {
        assert!(outcome.run_dir.join(file).exists(), "missing {file}");
    }

    // identical hashes: second run is a no-op
    let cached = cmd_train(&cfg, &opts()).unwrap();
    assert!(cached.cached);
    assert_eq!(cached.record.val_r1, outcome.record.val_r1);

    // config change invalidates the cache
    let mut changed = cfg.clone();
    changed.set("solver.lr=1e-3").unwrap();
    let retrained = cmd_train(&changed, &opts()).unwrap();
    assert!(!retrained.cached);
}

#[test]
fn sweep_runs_every_cell_and_selects_the_argmin() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), "nn", "[sweep]\nlr = 1e-3,5e-3\nhidden = 16,24\n");
    let cfg = Config::load(&cfg_path).unwrap();
    cmd_gen_data(&cfg, &opts()).unwrap();

    let outcome = cmd_sweep(&cfg, &opts()).unwrap();
    assert_eq!(outcome.records.len(), 4, "2x2 grid should yield 4 records");
    let best = outcome
        .records
        .iter()
        .map(|r| r.val_r1)
        .fold(f64::INFINITY, f64::min);
    let promoted = outcome.best_dir.join("record.txt");
    assert!(promoted.exists());
    let chosen = inverse_bench::harness::RunRecord::load(&promoted).unwrap();
    assert_eq!(chosen.val_r1, best, "promoted cell is not the argmin");
    assert!(outcome.best_dir.join("sweep_summary.txt").exists());
    assert!(outcome.best_dir.join("checkpoint.ibchk").exists());
}

#[test]
fn sweep_respects_parallel_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), "nn", "[sweep]\nlr = 1e-3,5e-3\n");
    let cfg = Config::load(&cfg_path).unwrap();
    cmd_gen_data(&cfg, &opts()).unwrap();
    let parallel = CliOptions { jobs: 2, ..opts() };
    let outcome = cmd_sweep(&cfg, &parallel).unwrap();
    assert_eq!(outcome.records.len(), 2);
}

#[test]
fn eval_produces_gamma_once_both_counterparts_exist() {
    let tmp = tempfile::tempdir().unwrap();
    let nn_cfg = Config::load(&write_config(tmp.path(), "nn", "")).unwrap();
    let na_cfg = Config::load(&write_config(tmp.path(), "na", "")).unwrap();
    cmd_gen_data(&nn_cfg, &opts()).unwrap();

    cmd_train(&nn_cfg, &opts()).unwrap();
    cmd_train(&na_cfg, &opts()).unwrap();

    let nn_report = cmd_eval(&nn_cfg, &opts()).unwrap();
    assert!(nn_report.gamma.is_none(), "gamma requires the na counterpart");
    let na_report = cmd_eval(&na_cfg, &opts()).unwrap();
    let gamma = na_report.gamma.expect("gamma present once both reports exist");
    assert!((gamma - nn_report.r1() / na_report.r1()).abs() < 1e-12);
    assert!(na_report.d_r.is_some());

    // re-evaluating nn now picks up gamma too
    let nn_again = cmd_eval(&nn_cfg, &opts()).unwrap();
    assert!(nn_again.gamma.is_some());
}

#[test]
fn report_r1_matches_recomputation_from_the_proposal_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Config::load(&write_config(tmp.path(), "nn", "")).unwrap();
    cmd_gen_data(&cfg, &opts()).unwrap();
    cmd_train(&cfg, &opts()).unwrap();
    let report = cmd_eval(&cfg, &opts()).unwrap();

    // independently re-simulate the rank-0 proposals from the dump
    let task = inverse_bench::Task::toy();
    let ds = inverse_bench::forward::load_dataset(
        &tmp.path().join("data").join("toy.csv"),
    )
    .unwrap();
    let targets = ds.spectrum_matrix(inverse_bench::forward::Split::Test);
    let dump =
        fs::read_to_string(tmp.path().join("runs").join("nn").join("proposals.txt")).unwrap();
    let mut first_errors = Vec::new();
    for line in dump.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let target_idx: usize = fields[0].parse().unwrap();
        let rank: usize = fields[1].parse().unwrap();
        if rank != 0 {
            continue;
        }
        let design: Vec<f64> = fields[2..].iter().map(|v| v.parse().unwrap()).collect();
        let resim = task.simulate(&design).unwrap();
        let mse = resim
            .iter()
            .zip(&targets[target_idx])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / resim.len() as f64;
        first_errors.push(mse);
    }
    let recomputed = first_errors.iter().sum::<f64>() / first_errors.len() as f64;
    assert!(
        (report.r1() - recomputed).abs() < 1e-15,
        "report r1 {} vs dump recomputation {recomputed}",
        report.r1()
    );
}

#[test]
fn report_merges_reports_and_omits_deterministic_tmax() {
    let tmp = tempfile::tempdir().unwrap();
    let nn_cfg = Config::load(&write_config(tmp.path(), "nn", "")).unwrap();
    let ga_cfg = Config::load(&write_config(tmp.path(), "ga", "")).unwrap();
    cmd_gen_data(&nn_cfg, &opts()).unwrap();
    cmd_train(&nn_cfg, &opts()).unwrap();
    cmd_train(&ga_cfg, &opts()).unwrap();
    cmd_eval(&nn_cfg, &opts()).unwrap();
    cmd_eval(&ga_cfg, &opts()).unwrap();

    let bundle = cmd_report(&nn_cfg, &opts()).unwrap();
    let table = fs::read_to_string(&bundle.table_errors).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    // header + toy row in the T=1 block, then the T=max block
    assert!(lines[1].starts_with("task,nn,tandem,na,ga,"));
    let t1_row = lines[2];
    assert!(t1_row.starts_with("toy,"));
    let cells: Vec<&str> = t1_row.split(',').collect();
    assert_ne!(cells[1], "-", "nn r1 must be present");
    // T=max block: nn column shows '-', ga column shows a number
    let tmax_row = lines[5];
    let cells: Vec<&str> = tmax_row.split(',').collect();
    assert_eq!(cells[1], "-", "deterministic solver keeps '-' at T=max");
    assert_ne!(cells[4], "-", "ga at T=max must be present");

    let curves = fs::read_to_string(&bundle.curves).unwrap();
    assert!(curves.lines().count() > 2 * 8, "curve rows for both solvers");
}

#[test]
fn deterministic_solver_has_flat_curve_in_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Config::load(&write_config(tmp.path(), "nn", "")).unwrap();
    cmd_gen_data(&cfg, &opts()).unwrap();
    cmd_train(&cfg, &opts()).unwrap();
    let report = cmd_eval(&cfg, &opts()).unwrap();
    let report_file =
        EvalReport::load(&tmp.path().join("runs").join("nn").join("report.txt")).unwrap();
    assert_eq!(report, report_file);
    for r in &report.r_t {
        assert_eq!(*r, report.r_t[0], "deterministic solver r_T must be flat");
    }
}

#[test]
fn cli_exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), "nn", "");

    let arg = |s: &str| s.to_string();
    // unknown verb -> config error (2)
    assert_eq!(cli::run(&[arg("destroy")]), 2);
    // missing config file -> missing artifact (4)
    assert_eq!(cli::run(&[arg("train"), arg("--config"), arg("/nonexistent.cfg")]), 4);
    // bad override syntax -> 2
    assert_eq!(
        cli::run(&[
            arg("train"),
            arg("--config"),
            cfg_path.display().to_string(),
            arg("--set"),
            arg("nonsense")
        ]),
        2
    );
    // train before gen-data -> missing dataset (4)
    assert_eq!(cli::run(&[arg("train"), arg("--config"), cfg_path.display().to_string()]), 4);
    // happy path gen-data -> 0
    assert_eq!(cli::run(&[arg("gen-data"), arg("--config"), cfg_path.display().to_string()]), 0);
    // bad solver kind -> 2
    assert_eq!(
        cli::run(&[
            arg("train"),
            arg("--config"),
            cfg_path.display().to_string(),
            arg("--set"),
            arg("solver.kind=psychic")
        ]),
        2
    );
}

#[test]
fn report_rejects_conflicting_dataset_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Config::load(&write_config(tmp.path(), "nn", "")).unwrap();
    cmd_gen_data(&cfg, &opts()).unwrap();
    cmd_train(&cfg, &opts()).unwrap();
    cmd_eval(&cfg, &opts()).unwrap();
    // forge a second report for the same task with a different dataset hash
    let nn_report = tmp.path().join("runs").join("nn").join("report.txt");
    let forged_dir = tmp.path().join("runs").join("ga");
    fs::create_dir_all(&forged_dir).unwrap();
    let text = fs::read_to_string(&nn_report)
        .unwrap()
        .replace("solver = nn", "solver = ga");
    let text = regex_replace_hash(&text);
    fs::write(forged_dir.join("report.txt"), text).unwrap();
    match cmd_report(&cfg, &opts()) {
        Err(HarnessError::BadSetup(msg)) => assert!(msg.contains("conflicting")),
        other => panic!("expected conflict error, got {other:?}"),
    }
}

fn regex_replace_hash(text: &str) -> String {
    text.lines()
        .map(|l| {
            if l.starts_with("dataset_hash = ") {
                "dataset_hash = 0000000000000000".to_string()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[test]
fn cli_seed_flag_overrides_data_and_solver_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), "nn", "");
    let args: Vec<String> = [
        "gen-data",
        "--config",
        &cfg_path.display().to_string(),
        "--seed",
        "123",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(cli::run(&args), 0);
    let manifest =
        fs::read_to_string(tmp.path().join("data").join("toy.manifest")).unwrap();
    assert!(manifest.contains("seed = 123"), "manifest: {manifest}");
}

#[test]
fn paper_scale_on_a_task_without_preset_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Config::load(&write_config(tmp.path(), "nn", "")).unwrap();
    let ps = CliOptions { paper_scale: true, ..opts() };
    match cmd_gen_data(&cfg, &ps) {
        Err(e) => assert_eq!(e.exit_code(), 2),
        Ok(_) => panic!("toy has no paper-scale preset"),
    }
}

#[test]
fn nan_training_yields_a_failed_record_and_numeric_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), "vae", "");
    let mut cfg = Config::load(&cfg_path).unwrap();
    cmd_gen_data(&cfg, &opts()).unwrap();
    // a hopeless step size sends the encoder's log-variance head far enough
    // that exp() overflows and the loss leaves the finite range
    cfg.set("solver.lr=1e18").unwrap();
    cfg.set("solver.epochs=60").unwrap();
    match cmd_train(&cfg, &opts()) {
        Err(e) => assert_eq!(e.exit_code(), 3, "unexpected error class: {e}"),
        Ok(_) => panic!("expected numeric failure"),
    }
    let record = inverse_bench::harness::RunRecord::load(
        &tmp.path().join("runs").join("vae").join("record.txt"),
    )
    .unwrap();
    assert_eq!(record.status, inverse_bench::harness::RunStatus::Failed);
    assert!(record.error.is_some());
}
