//! The five experiment verbs: gen-data, train, sweep, eval, report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use thiserror::Error;

use crate::checkpoint::{format_f64, Checkpoint, CheckpointError};
use crate::flows::{CinnSolver, InnSolver};
use crate::forward::dataset::{self, Dataset, DatasetError};
use crate::forward::task::{ForwardError, Task};
use crate::forward::{generate_dataset_sized, load_dataset, Split};
use crate::metrics::report::ReportError;
use crate::metrics::{self, EvalReport, MetricsError};
use crate::solvers::{
    ForwardNet, GaSolver, InverseSolver, MdnSolver, NaSolver, NnSolver, SolverConfig, SolverError,
    SolverKind, TandemSolver, TrainLog,
};

use super::config::{solver_config_pairs, Config, ConfigError};
use super::record::{content_hash, write_losses, RunRecord, RunStatus};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid configuration: {0}")]
    BadSetup(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
    #[error("artifact already exists (use --force): {0}")]
    WouldClobber(PathBuf),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// CLI exit code: 2 config, 3 numeric, 4 missing artifact.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::BadSetup(_) | HarnessError::WouldClobber(_) => 2,
            HarnessError::Numeric(_) | HarnessError::Io(_) => 3,
            HarnessError::MissingArtifact(_) => 4,
        }
    }
}

impl From<SolverError> for HarnessError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BadConfig(m) => HarnessError::BadSetup(m),
            other => HarnessError::Numeric(other.to_string()),
        }
    }
}

impl From<ForwardError> for HarnessError {
    fn from(e: ForwardError) -> Self {
        match e {
            ForwardError::UnknownTask(t) => HarnessError::BadSetup(format!("unknown task '{t}'")),
            other => HarnessError::Numeric(other.to_string()),
        }
    }
}

impl From<DatasetError> for HarnessError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::BadFractions(f) => {
                HarnessError::BadSetup(format!("bad split fractions {f:?}"))
            }
            DatasetError::Io(e) => HarnessError::Io(e),
            other => HarnessError::Numeric(other.to_string()),
        }
    }
}

impl From<MetricsError> for HarnessError {
    fn from(e: MetricsError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

impl From<CheckpointError> for HarnessError {
    fn from(e: CheckpointError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

impl From<ReportError> for HarnessError {
    fn from(e: ReportError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

/// Flags shared by every verb.
#[derive(Debug, Clone, Default)]
pub struct CliOptions {
    pub paper_scale: bool,
    pub force: bool,
    pub jobs: usize,
}

fn load_task(cfg: &Config) -> Result<Task, HarnessError> {
    let name = cfg.require("task", "name")?;
    let surrogate = cfg.get("task", "surrogate").map(PathBuf::from);
    if let Some(p) = &surrogate {
        if !p.exists() {
            return Err(HarnessError::MissingArtifact(p.clone()));
        }
    }
    Ok(Task::by_name(name, surrogate.as_deref())?)
}

fn data_path(cfg: &Config) -> Result<PathBuf, HarnessError> {
    Ok(PathBuf::from(cfg.require("data", "path")?))
}

fn output_dir(cfg: &Config) -> Result<PathBuf, HarnessError> {
    Ok(PathBuf::from(cfg.require("output", "dir")?))
}

fn run_dir(cfg: &Config, kind: SolverKind) -> Result<PathBuf, HarnessError> {
    Ok(output_dir(cfg)?.join(kind.name()))
}

/// Hash of the sections that determine a training run.
fn train_config_hash(cfg: &Config) -> String {
    let mut sub = Config::default();
    for section in ["task", "data", "solver"] {
        if let Some(pairs) = cfg.sections.get(section) {
            sub.sections.insert(section.to_string(), pairs.clone());
        }
    }
    content_hash(sub.canonical_string().as_bytes())
}

fn dataset_hash(path: &Path) -> Result<String, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact(path.to_path_buf()));
    }
    Ok(content_hash(&fs::read(path)?))
}

// ── gen-data ─────────────────────────────────────────────────────────

/// Generate the dataset + manifest named by `[data] path`. Idempotent for a
/// fixed seed; refuses to overwrite without `--force`.
pub fn cmd_gen_data(cfg: &Config, opts: &CliOptions) -> Result<PathBuf, HarnessError> {
    let task = load_task(cfg)?;
    let path = data_path(cfg)?;
    if path.exists() && !opts.force {
        return Err(HarnessError::WouldClobber(path));
    }
    let seed = cfg.get_u64("data", "seed")?.unwrap_or(0);
    let sizes = if opts.paper_scale {
        dataset::paper_scale_sizes(&task.spec.name).ok_or_else(|| {
            HarnessError::BadSetup(format!(
                "task '{}' has no paper-scale preset",
                task.spec.name
            ))
        })?
    } else {
        let n = cfg.get_usize("data", "n")?.unwrap_or(4_000 + 1_000 + 100);
        let fractions = cfg
            .get_f64_list("data", "fractions")?
            .unwrap_or_else(|| vec![0.8, 0.18, 0.02]);
        if fractions.len() != 3 {
            return Err(HarnessError::BadSetup("fractions needs three entries".into()));
        }
        let f = [fractions[0], fractions[1], fractions[2]];
        if f.iter().any(|&x| x < 0.0) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(HarnessError::BadSetup(format!("bad split fractions {f:?}")));
        }
        dataset::split_sizes(n, f)
    };
    let ds = generate_dataset_sized(&task, sizes, seed, opts.jobs.max(1))?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    dataset::save_dataset(&task, &ds, &path)?;
    Ok(path)
}

// ── train ────────────────────────────────────────────────────────────

/// Everything cmd_train leaves on disk for one solver.
pub struct TrainOutcome {
    pub record: RunRecord,
    pub run_dir: PathBuf,
    pub cached: bool,
}

/// A trained solver plus its training trace.
pub struct TrainedSolver {
    pub solver: Box<dyn InverseSolver>,
    pub log: TrainLog,
}

/// Train the solver described by the config's `[solver]` section against a
/// dataset and task; shared machinery for `train` and `sweep`.
pub fn train_solver(
    task: &Task,
    ds: &Dataset,
    solver_cfg: &SolverConfig,
    dir: &Path,
) -> Result<TrainedSolver, HarnessError> {
    let spec = &task.spec;
    let surrogate_for = || -> Result<ForwardNet, HarnessError> {
        // reuse a shared forward checkpoint when present, else train one
        let fwd_path = dir.join("forward.ibchk");
        let (net, trained_here) = if fwd_path.exists() {
            (ForwardNet::from_checkpoint(&Checkpoint::load(&fwd_path)?, spec)?, false)
        } else {
            let (net, _) = ForwardNet::train(ds, spec, solver_cfg)?;
            (net, true)
        };
        if trained_here {
            net.to_checkpoint().save(&fwd_path)?;
        }
        Ok(net)
    };
    let trained: TrainedSolver = match solver_cfg.kind {
        SolverKind::Nn => {
            let (s, log) = NnSolver::train(ds, spec, solver_cfg)?;
            TrainedSolver { solver: Box::new(s), log }
        }
        SolverKind::Tandem => {
            let (s, log) = TandemSolver::train(ds, spec, solver_cfg)?;
            TrainedSolver { solver: Box::new(s), log: log.stage2 }
        }
        SolverKind::Na => {
            let net = surrogate_for()?;
            let s = NaSolver::new(net, solver_cfg.clone())?;
            TrainedSolver { solver: Box::new(s), log: TrainLog::default() }
        }
        SolverKind::Ga => {
            let net = surrogate_for()?;
            let s = GaSolver::new(net, solver_cfg.clone())?;
            TrainedSolver { solver: Box::new(s), log: TrainLog::default() }
        }
        SolverKind::Mdn => {
            let (s, log) = MdnSolver::train(ds, spec, solver_cfg)?;
            TrainedSolver { solver: Box::new(s), log }
        }
        SolverKind::Vae => {
            let (s, log) = crate::solvers::VaeSolver::train(ds, spec, solver_cfg)?;
            TrainedSolver { solver: Box::new(s), log }
        }
        SolverKind::Inn => {
            let (s, log) = InnSolver::train(ds, spec, solver_cfg)?;
            TrainedSolver { solver: Box::new(s), log }
        }
        SolverKind::Cinn => {
            let (s, log) = CinnSolver::train(ds, spec, solver_cfg)?;
            TrainedSolver { solver: Box::new(s), log }
        }
    };
    Ok(trained)
}

/// Mean first-proposal re-simulation error on the validation split.
fn validation_r1(
    solver: &dyn InverseSolver,
    task: &Task,
    ds: &Dataset,
    seed: u64,
) -> Result<f64, HarnessError> {
    let targets = ds.spectrum_matrix(Split::Val);
    if targets.is_empty() {
        return Err(HarnessError::BadSetup("validation split is empty".into()));
    }
    let curve = metrics::rt_curve(solver, task, &targets, 1, seed)?;
    Ok(curve.r1())
}

fn manifest_string(
    solver_cfg: &SolverConfig,
    task: &Task,
    record: &RunRecord,
    param_count: usize,
) -> String {
    let mut out = String::from("[run]\n");
    writeln!(out, "task = {}", task.spec.name).unwrap();
    writeln!(out, "val_r1 = {}", format_f64(record.val_r1)).unwrap();
    writeln!(out, "train_seconds = {}", format_f64(record.train_seconds)).unwrap();
    writeln!(out, "param_count = {param_count}").unwrap();
    writeln!(out, "config_hash = {}", record.config_hash).unwrap();
    writeln!(out, "dataset_hash = {}", record.dataset_hash).unwrap();
    out.push_str("[solver]\n");
    for (k, v) in solver_config_pairs(solver_cfg) {
        writeln!(out, "{k} = {v}").unwrap();
    }
    out
}

/// Train one solver into `<output.dir>/<kind>/`. Skips the run when a
/// completed record with matching config/dataset hashes is already there.
pub fn cmd_train(cfg: &Config, opts: &CliOptions) -> Result<TrainOutcome, HarnessError> {
    let task = load_task(cfg)?;
    let path = data_path(cfg)?;
    let ds_hash = dataset_hash(&path)?;
    let cfg_hash = train_config_hash(cfg);
    let solver_cfg = cfg.solver_config()?;
    let dir = run_dir(cfg, solver_cfg.kind)?;
    fs::create_dir_all(&dir)?;
    let record_path = dir.join("record.txt");

    if !opts.force {
        if let Some(existing) = RunRecord::load(&record_path) {
            if existing.matches(&cfg_hash, &ds_hash) && dir.join("checkpoint.ibchk").exists() {
                eprintln!("train: cached run found, skipping ({})", dir.display());
                return Ok(TrainOutcome { record: existing, run_dir: dir, cached: true });
            }
        }
    }

    let ds = load_dataset(&path)?;
    // shared surrogate path: copy it in before training so na/ga/tandem reuse
    if let Some(shared) = cfg.get("solver", "surrogate_checkpoint") {
        let src = PathBuf::from(shared);
        if !src.exists() {
            return Err(HarnessError::MissingArtifact(src));
        }
        fs::copy(&src, dir.join("forward.ibchk"))?;
    }

    let started = Instant::now();
    let outcome = train_solver(&task, &ds, &solver_cfg, &dir);
    let train_seconds = started.elapsed().as_secs_f64();

    let trained = match outcome {
        Ok(t) => t,
        Err(e) => {
            let record = RunRecord {
                status: RunStatus::Failed,
                solver: solver_cfg.kind.name().into(),
                task: task.spec.name.clone(),
                seed: solver_cfg.seed,
                config_hash: cfg_hash,
                dataset_hash: ds_hash,
                train_seconds,
                val_r1: f64::NAN,
                checkpoint: String::new(),
                error: Some(e.to_string()),
            };
            record.save(&record_path)?;
            return Err(e);
        }
    };

    let eval_seed = cfg.get_u64("eval", "eval_seed")?.unwrap_or(2718);
    let val_r1 = validation_r1(trained.solver.as_ref(), &task, &ds, eval_seed)?;
    let record = RunRecord {
        status: RunStatus::Complete,
        solver: solver_cfg.kind.name().into(),
        task: task.spec.name.clone(),
        seed: solver_cfg.seed,
        config_hash: cfg_hash,
        dataset_hash: ds_hash,
        train_seconds,
        val_r1,
        checkpoint: "checkpoint.ibchk".into(),
        error: None,
    };
    trained.solver.checkpoint().save(&dir.join("checkpoint.ibchk"))?;
    fs::write(
        dir.join("manifest.txt"),
        manifest_string(&solver_cfg, &task, &record, trained.solver.param_count()),
    )?;
    write_losses(&dir.join("losses.txt"), &trained.log.train_losses)?;
    record.save(&record_path)?;
    Ok(TrainOutcome { record, run_dir: dir, cached: false })
}

/// Rebuild a trained solver from a run directory.
pub fn load_solver(dir: &Path, task: &Task) -> Result<Box<dyn InverseSolver>, HarnessError> {
    let manifest_path = dir.join("manifest.txt");
    if !manifest_path.exists() {
        return Err(HarnessError::MissingArtifact(manifest_path));
    }
    let manifest = Config::load(&manifest_path)?;
    let solver_cfg = manifest.solver_config()?;
    let ckpt_path = dir.join("checkpoint.ibchk");
    if !ckpt_path.exists() {
        return Err(HarnessError::MissingArtifact(ckpt_path));
    }
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let spec = &task.spec;
    let solver: Box<dyn InverseSolver> = match solver_cfg.kind {
        SolverKind::Nn => Box::new(NnSolver::from_checkpoint(&ckpt, spec)?),
        SolverKind::Tandem => Box::new(TandemSolver::from_checkpoint(&ckpt, spec)?),
        SolverKind::Na => Box::new(NaSolver::new(
            ForwardNet::from_checkpoint(&ckpt, spec)?,
            solver_cfg.clone(),
        )?),
        SolverKind::Ga => Box::new(GaSolver::new(
            ForwardNet::from_checkpoint(&ckpt, spec)?,
            solver_cfg.clone(),
        )?),
        SolverKind::Mdn => Box::new(MdnSolver::from_checkpoint(&ckpt, spec, &solver_cfg)?),
        SolverKind::Vae => {
            Box::new(crate::solvers::VaeSolver::from_checkpoint(&ckpt, spec, &solver_cfg)?)
        }
        SolverKind::Inn => Box::new(InnSolver::from_checkpoint(&ckpt, spec, &solver_cfg)?),
        SolverKind::Cinn => Box::new(CinnSolver::from_checkpoint(&ckpt, spec)?),
    };
    Ok(solver)
}

// ── sweep ────────────────────────────────────────────────────────────

pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub best_cell: usize,
    pub best_dir: PathBuf,
}

/// Cartesian hyperparameter grid from the `[sweep]` section; cells run under
/// `<run dir>/cell-NNN/`, the winner's artifacts are copied to the run root.
pub fn cmd_sweep(cfg: &Config, opts: &CliOptions) -> Result<SweepOutcome, HarnessError> {
    let sweep = cfg
        .sections
        .get("sweep")
        .ok_or_else(|| HarnessError::BadSetup("sweep requires a [sweep] section".into()))?
        .clone();
    let max_cells = cfg.get_usize("sweep", "max_cells")?.unwrap_or(usize::MAX);
    let wall_cap = cfg.get_f64("sweep", "wall_clock_cap_s")?.unwrap_or(f64::INFINITY);

    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for (key, value) in &sweep {
        if key == "max_cells" || key == "wall_clock_cap_s" {
            continue;
        }
        let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
        if values.is_empty() {
            return Err(HarnessError::BadSetup(format!("sweep axis '{key}' is empty")));
        }
        axes.push((key.clone(), values));
    }
    if axes.is_empty() {
        return Err(HarnessError::BadSetup("sweep grid is empty".into()));
    }
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let n_cells = total.min(max_cells);

    let solver_kind = cfg.solver_config()?.kind;
    let root = run_dir(cfg, solver_kind)?;
    fs::create_dir_all(&root)?;

    // cell -> overrides, in grid enumeration order (first axis slowest)
    let cell_overrides = |cell: usize| -> Vec<(String, String)> {
        let mut idx = cell;
        let mut out = Vec::with_capacity(axes.len());
        for (key, values) in axes.iter().rev() {
            out.push((key.clone(), values[idx % values.len()].clone()));
            idx /= values.len();
        }
        out.reverse();
        out
    };

    let started = Instant::now();
    let next_cell = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; n_cells]);
    let jobs = opts.jobs.max(1).min(n_cells);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let cell = next_cell.fetch_add(1, Ordering::SeqCst);
                if cell >= n_cells || started.elapsed().as_secs_f64() > wall_cap {
                    break;
                }
                let mut cell_cfg = cfg.clone();
                for (key, value) in cell_overrides(cell) {
                    cell_cfg
                        .set(&format!("solver.{key}={value}"))
                        .expect("cell override is well-formed");
                }
                let cell_dir = root.join(format!("cell-{cell:03}"));
                cell_cfg
                    .set(&format!("output.dir={}", cell_dir.display()))
                    .expect("cell dir override is well-formed");
                // each cell nests its own <kind>/ dir under cell-NNN
                let outcome = cmd_train(&cell_cfg, &CliOptions { jobs: 1, ..opts.clone() });
                let record = match outcome {
                    Ok(t) => Some(t.record),
                    Err(e) => {
                        eprintln!("sweep: cell {cell} failed: {e}");
                        None
                    }
                };
                results.lock().expect("poisoned")[cell] = record;
            });
        }
    });
    let records: Vec<Option<RunRecord>> = results.into_inner().expect("poisoned");

    // argmin over completed cells, ties to the earliest
    let mut best: Option<(usize, f64)> = None;
    for (i, rec) in records.iter().enumerate() {
        if let Some(r) = rec {
            if r.status == RunStatus::Complete && r.val_r1.is_finite() {
                if best.is_none() || r.val_r1 < best.unwrap().1 {
                    best = Some((i, r.val_r1));
                }
            }
        }
    }
    let Some((best_cell, _)) = best else {
        return Err(HarnessError::Numeric("all sweep cells failed".into()));
    };

    // summary, stable ordering
    let mut summary = String::from("cell,val_r1,status,overrides\n");
    for (i, rec) in records.iter().enumerate() {
        let overrides: Vec<String> =
            cell_overrides(i).into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        match rec {
            Some(r) => writeln!(
                summary,
                "{i},{},{},{}",
                format_f64(r.val_r1),
                if r.status == RunStatus::Complete { "complete" } else { "failed" },
                overrides.join(";")
            )
            .unwrap(),
            None => writeln!(summary, "{i},nan,failed,{}", overrides.join(";")).unwrap(),
        }
    }
    writeln!(summary, "best = {best_cell}").unwrap();
    fs::write(root.join("sweep_summary.txt"), summary)?;

    // promote the winner's artifacts to the run root
    let best_dir = root.join(format!("cell-{best_cell:03}")).join(solver_kind.name());
    for name in ["checkpoint.ibchk", "manifest.txt", "record.txt", "losses.txt", "forward.ibchk"] {
        let src = best_dir.join(name);
        if src.exists() {
            fs::copy(&src, root.join(name))?;
        }
    }
    let flat: Vec<RunRecord> = records.into_iter().flatten().collect();
    Ok(SweepOutcome { records: flat, best_cell, best_dir: root })
}

// ── eval ─────────────────────────────────────────────────────────────

/// Evaluate a trained solver on the test split: full r_T curve against the
/// true forward model, non-uniqueness measures, timing, proposal dump.
pub fn cmd_eval(cfg: &Config, _opts: &CliOptions) -> Result<EvalReport, HarnessError> {
    let task = load_task(cfg)?;
    let path = data_path(cfg)?;
    let ds = load_dataset(&path)?;
    let ds_hash = dataset_hash(&path)?;
    let solver_cfg = cfg.solver_config()?;
    let dir = run_dir(cfg, solver_cfg.kind)?;
    let solver = load_solver(&dir, &task)?;

    let t_max = cfg.get_usize("eval", "t_max")?.unwrap_or(50);
    let eval_seed = cfg.get_u64("eval", "eval_seed")?.unwrap_or(2718);
    let targets = ds.spectrum_matrix(Split::Test);
    if targets.is_empty() {
        return Err(HarnessError::BadSetup("test split is empty".into()));
    }
    let curve = metrics::rt_curve(solver.as_ref(), &task, &targets, t_max, eval_seed)?;

    let mut report = EvalReport::from_curve(
        &curve,
        eval_seed,
        &train_config_hash(cfg),
        &ds_hash,
        solver.param_count(),
    );
    report.infer_seconds_per_200 =
        metrics::per_200_proposals(curve.propose_seconds, targets.len() * t_max)?;
    if let Some(record) = RunRecord::load(&dir.join("record.txt")) {
        report.train_seconds = record.train_seconds;
    }

    // non-uniqueness: spectral clusters over the train split
    let n_clusters = cfg.get_usize("eval", "clusters")?.unwrap_or(5);
    let cluster_size = cfg.get_usize("eval", "cluster_size")?.unwrap_or(5);
    let clusters = metrics::spectral_clusters(&ds, n_clusters, cluster_size, eval_seed);
    let train_rows = ds.rows(Split::Train);
    let designs_unit: Vec<Vec<f64>> =
        train_rows.iter().map(|&i| task.spec.unit_normalize(&ds.designs[i])).collect();
    report.d_r = Some(metrics::d_r(&designs_unit, &clusters)?);
    write_cluster_dump(&dir.join("clusters.txt"), &ds, &train_rows, &clusters)?;

    // γ appears once both the direct and the adjoint runs exist
    let counterpart_kind = match solver_cfg.kind {
        SolverKind::Nn => Some(SolverKind::Na),
        SolverKind::Na => Some(SolverKind::Nn),
        _ => None,
    };
    if let Some(other) = counterpart_kind {
        let other_path = output_dir(cfg)?.join(other.name()).join("report.txt");
        if other_path.exists() {
            let other_report = EvalReport::load(&other_path)?;
            if other_report.task == task.spec.name && other_report.dataset_hash == ds_hash {
                let (r_nn, r_na) = match solver_cfg.kind {
                    SolverKind::Nn => (report.r1(), other_report.r1()),
                    _ => (other_report.r1(), report.r1()),
                };
                report.gamma = Some(metrics::gamma(r_nn, r_na)?);
            }
        } else {
            eprintln!(
                "eval: no {} report for task '{}' yet; gamma omitted",
                other.name(),
                task.spec.name
            );
        }
    }

    write_proposal_dump(&dir.join("proposals.txt"), &curve.designs)?;
    report.save(&dir.join("report.txt"))?;
    Ok(report)
}

fn write_cluster_dump(
    path: &Path,
    ds: &Dataset,
    train_rows: &[usize],
    clusters: &[Vec<usize>],
) -> Result<(), HarnessError> {
    let mut out = String::from("cluster,row,design...\n");
    for (c, cluster) in clusters.iter().enumerate() {
        for &local in cluster {
            let row = train_rows[local];
            let design: Vec<String> =
                ds.designs[row].iter().map(|v| format_f64(*v)).collect();
            writeln!(out, "{c},{row},{}", design.join(",")).unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_proposal_dump(path: &Path, designs: &[Vec<Vec<f64>>]) -> Result<(), HarnessError> {
    let mut out = String::from("target,rank,design...\n");
    for (t, per_target) in designs.iter().enumerate() {
        for (rank, g) in per_target.iter().enumerate() {
            let cells: Vec<String> = g.iter().map(|v| format_f64(*v)).collect();
            writeln!(out, "{t},{rank},{}", cells.join(",")).unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

// ── report ───────────────────────────────────────────────────────────

#[derive(Debug)]
pub struct ReportBundle {
    pub table_errors: PathBuf,
    pub table_timing: PathBuf,
    pub curves: PathBuf,
    pub nonuniqueness: PathBuf,
}

/// Merge every `<solver>/report.txt` under the output dir into benchmark-style
/// tables plus a full-curve file for plotting.
pub fn cmd_report(cfg: &Config, _opts: &CliOptions) -> Result<ReportBundle, HarnessError> {
    let root = output_dir(cfg)?;
    if !root.exists() {
        return Err(HarnessError::MissingArtifact(root));
    }
    let mut reports: Vec<EvalReport> = Vec::new();
    let mut dirs: Vec<PathBuf> = fs::read_dir(&root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let path = dir.join("report.txt");
        if path.exists() {
            reports.push(EvalReport::load(&path)?);
        }
    }
    if reports.is_empty() {
        return Err(HarnessError::MissingArtifact(root.join("*/report.txt")));
    }
    // same task evaluated against different datasets is a mixed-up run dir
    for a in &reports {
        for b in &reports {
            if a.task == b.task && a.dataset_hash != b.dataset_hash {
                return Err(HarnessError::BadSetup(format!(
                    "conflicting dataset hashes for task '{}': {} vs {}",
                    a.task, a.dataset_hash, b.dataset_hash
                )));
            }
        }
    }
    reports.sort_by(|a, b| a.task.cmp(&b.task).then(a.solver.cmp(&b.solver)));

    let mut tasks: Vec<String> = reports.iter().map(|r| r.task.clone()).collect();
    tasks.sort();
    tasks.dedup();
    let solver_columns: Vec<&str> = SolverKind::ALL.iter().map(|k| k.name()).collect();
    let find = |task: &str, solver: &str| -> Option<&EvalReport> {
        reports.iter().find(|r| r.task == task && r.solver == solver)
    };

    // Table-3 layout: r1 block, then best-of-T block with deterministic
    // solvers omitted.
    let t_max = reports.iter().map(|r| r.t_max).max().unwrap_or(1);
    let mut errors_table = String::new();
    writeln!(errors_table, "# T=1 re-simulation error").unwrap();
    writeln!(errors_table, "task,{}", solver_columns.join(",")).unwrap();
    for task in &tasks {
        let cells: Vec<String> = solver_columns
            .iter()
            .map(|s| find(task, s).map_or("-".into(), |r| format_f64(r.r1())))
            .collect();
        writeln!(errors_table, "{task},{}", cells.join(",")).unwrap();
    }
    writeln!(errors_table, "# T={t_max} re-simulation error").unwrap();
    writeln!(errors_table, "task,{}", solver_columns.join(",")).unwrap();
    for task in &tasks {
        let cells: Vec<String> = solver_columns
            .iter()
            .map(|s| {
                find(task, s).map_or("-".into(), |r| {
                    if r.deterministic {
                        "-".into()
                    } else {
                        format_f64(*r.r_t.last().unwrap())
                    }
                })
            })
            .collect();
        writeln!(errors_table, "{task},{}", cells.join(",")).unwrap();
    }

    let mut timing_table = String::new();
    writeln!(timing_table, "# train seconds / eval seconds per 200 proposals").unwrap();
    writeln!(timing_table, "task,solver,train_s,eval_s_per_200").unwrap();
    for r in &reports {
        writeln!(
            timing_table,
            "{},{},{},{}",
            r.task,
            r.solver,
            format_f64(r.train_seconds),
            format_f64(r.infer_seconds_per_200)
        )
        .unwrap();
    }

    let mut curves = String::from("solver,task,T,r_t,p25,p75\n");
    for r in &reports {
        for t in 0..r.t_max {
            writeln!(
                curves,
                "{},{},{},{},{},{}",
                r.solver,
                r.task,
                t + 1,
                format_f64(r.r_t[t]),
                format_f64(r.p25[t]),
                format_f64(r.p75[t])
            )
            .unwrap();
        }
    }

    let mut nonuniq = String::from("task,gamma,d_r,source_solver\n");
    for r in &reports {
        if r.gamma.is_some() || r.d_r.is_some() {
            writeln!(
                nonuniq,
                "{},{},{},{}",
                r.task,
                r.gamma.map_or("-".into(), format_f64),
                r.d_r.map_or("-".into(), format_f64),
                r.solver
            )
            .unwrap();
        }
    }

    let bundle = ReportBundle {
        table_errors: root.join("table_errors.txt"),
        table_timing: root.join("table_timing.txt"),
        curves: root.join("curves.txt"),
        nonuniqueness: root.join("nonuniqueness.txt"),
    };
    fs::write(&bundle.table_errors, errors_table)?;
    fs::write(&bundle.table_timing, timing_table)?;
    fs::write(&bundle.curves, curves)?;
    fs::write(&bundle.nonuniqueness, nonuniq)?;
    Ok(bundle)
}
