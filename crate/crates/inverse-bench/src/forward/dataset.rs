//! Dataset generation and the delimited-text on-disk format.
//!
//! Designs are i.i.d. uniform over the task's bounds hypercube, spectra come
//! from the task's forward model, and every row is produced from an RNG
//! stream derived from (seed, row index) so output is identical no matter how
//! generation is sharded.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::task::{ForwardError, Task};
use crate::checkpoint::format_f64;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn label(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("split fractions {0:?} must be positive and sum to 1")]
    BadFractions([f64; 3]),
    #[error("dataset file malformed at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Ordered (design, spectrum, split) rows for one task.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub task_name: String,
    pub seed: u64,
    pub designs: Vec<Vec<f64>>,
    pub spectra: Vec<Vec<f64>>,
    pub splits: Vec<Split>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.designs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.designs.is_empty()
    }

    pub fn rows(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn design_matrix(&self, split: Split) -> Vec<Vec<f64>> {
        self.rows(split).into_iter().map(|i| self.designs[i].clone()).collect()
    }

    pub fn spectrum_matrix(&self, split: Split) -> Vec<Vec<f64>> {
        self.rows(split).into_iter().map(|i| self.spectra[i].clone()).collect()
    }
}

/// Exact split sizes for n rows: val and test take their floors, the
/// remainder goes to train.
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> (usize, usize, usize) {
    let n_val = (n as f64 * fractions[1]).floor() as usize;
    let n_test = (n as f64 * fractions[2]).floor() as usize;
    (n - n_val - n_test, n_val, n_test)
}

/// Paper-scale row counts (train, val, test) for the built-in tasks.
pub fn paper_scale_sizes(task_name: &str) -> Option<(usize, usize, usize)> {
    match task_name {
        "stack" | "shell" => Some((40_000, 10_000, 500)),
        "adm-surrogate" => Some((8_000, 2_000, 500)),
        _ => None,
    }
}

pub fn generate_dataset(
    task: &Task,
    n: usize,
    seed: u64,
    fractions: [f64; 3],
) -> Result<Dataset, DatasetError> {
    if fractions.iter().any(|&f| f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadFractions(fractions));
    }
    let (n_train, n_val, n_test) = split_sizes(n, fractions);
    generate_dataset_sized(task, (n_train, n_val, n_test), seed, 1)
}

/// Generate with explicit split sizes. Rows may be sharded over `jobs`
/// threads; each row's RNG stream is derived from (seed, row index), so the
/// output is identical for any thread count.
pub fn generate_dataset_sized(
    task: &Task,
    sizes: (usize, usize, usize),
    seed: u64,
    jobs: usize,
) -> Result<Dataset, DatasetError> {
    let n = sizes.0 + sizes.1 + sizes.2;
    assert!(n > 0, "dataset size must be positive");
    let root = Rng::new(seed);
    let simulate_row = |row: usize| -> Result<(Vec<f64>, Vec<f64>), ForwardError> {
        let mut rng = root.derive(row as u64);
        let g = task.spec.uniform_design(&mut rng);
        let s = task.simulate(&g)?;
        Ok((g, s))
    };

    let jobs = jobs.max(1).min(n);
    let mut rows: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n);
    if jobs == 1 {
        for row in 0..n {
            rows.push(simulate_row(row)?);
        }
    } else {
        let chunk = n.div_ceil(jobs);
        let results: Vec<Result<Vec<(Vec<f64>, Vec<f64>)>, ForwardError>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..jobs)
                    .map(|j| {
                        let simulate_row = &simulate_row;
                        scope.spawn(move || {
                            let lo = j * chunk;
                            let hi = ((j + 1) * chunk).min(n);
                            (lo..hi).map(simulate_row).collect()
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
        for shard in results {
            rows.extend(shard?);
        }
    }

    let (mut designs, mut spectra) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (g, s) in rows {
        designs.push(g);
        spectra.push(s);
    }
    let splits = (0..n)
        .map(|i| {
            if i < sizes.0 {
                Split::Train
            } else if i < sizes.0 + sizes.1 {
                Split::Val
            } else {
                Split::Test
            }
        })
        .collect();
    Ok(Dataset { task_name: task.spec.name.clone(), seed, designs, spectra, splits })
}

/// Comma-delimited rows with a `g0..,s0..,split` header.
pub fn dataset_to_string(ds: &Dataset) -> String {
    let d_g = ds.designs.first().map_or(0, |g| g.len());
    let d_s = ds.spectra.first().map_or(0, |s| s.len());
    let mut out = String::new();
    let header: Vec<String> = (0..d_g)
        .map(|i| format!("g{i}"))
        .chain((0..d_s).map(|i| format!("s{i}")))
        .chain(std::iter::once("split".to_string()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..ds.len() {
        for v in &ds.designs[i] {
            write!(out, "{},", format_f64(*v)).unwrap();
        }
        for v in &ds.spectra[i] {
            write!(out, "{},", format_f64(*v)).unwrap();
        }
        out.push_str(ds.splits[i].label());
        out.push('\n');
    }
    out
}

pub fn dataset_from_string(text: &str, task_name: &str, seed: u64) -> Result<Dataset, DatasetError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(DatasetError::Malformed {
        line: 1,
        message: "empty dataset file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let d_g = cols.iter().take_while(|c| c.starts_with('g')).count();
    if cols.last() != Some(&"split") || d_g + 1 > cols.len() {
        return Err(DatasetError::Malformed { line: 1, message: "bad header".into() });
    }
    let d_s = cols.len() - d_g - 1;
    if !cols[d_g..d_g + d_s].iter().all(|c| c.starts_with('s')) {
        return Err(DatasetError::Malformed { line: 1, message: "bad header".into() });
    }
    let mut ds = Dataset {
        task_name: task_name.to_string(),
        seed,
        designs: Vec::new(),
        spectra: Vec::new(),
        splits: Vec::new(),
    };
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d_g + d_s + 1 {
            return Err(DatasetError::Malformed {
                line: lineno + 1,
                message: format!("expected {} fields, got {}", d_g + d_s + 1, fields.len()),
            });
        }
        let parse = |tok: &str| -> Result<f64, DatasetError> {
            tok.parse().map_err(|_| DatasetError::Malformed {
                line: lineno + 1,
                message: format!("bad float '{tok}'"),
            })
        };
        let g: Vec<f64> = fields[..d_g].iter().map(|t| parse(t)).collect::<Result<_, _>>()?;
        let s: Vec<f64> =
            fields[d_g..d_g + d_s].iter().map(|t| parse(t)).collect::<Result<_, _>>()?;
        let split = Split::parse(fields[d_g + d_s]).ok_or(DatasetError::Malformed {
            line: lineno + 1,
            message: format!("bad split label '{}'", fields[d_g + d_s]),
        })?;
        ds.designs.push(g);
        ds.spectra.push(s);
        ds.splits.push(split);
    }
    Ok(ds)
}

/// Companion manifest recording how the dataset was built.
pub fn manifest_to_string(task: &Task, ds: &Dataset) -> String {
    let mut out = String::new();
    out.push_str("IBDATA v1\n");
    writeln!(out, "task = {}", ds.task_name).unwrap();
    writeln!(out, "seed = {}", ds.seed).unwrap();
    writeln!(out, "rows = {}", ds.len()).unwrap();
    let (tr, va, te) = (
        ds.rows(Split::Train).len(),
        ds.rows(Split::Val).len(),
        ds.rows(Split::Test).len(),
    );
    writeln!(out, "split_sizes = {tr},{va},{te}").unwrap();
    let bounds: Vec<String> = task
        .spec
        .bounds
        .iter()
        .map(|(lo, hi)| format!("{}:{}", format_f64(*lo), format_f64(*hi)))
        .collect();
    writeln!(out, "bounds = {}", bounds.join(",")).unwrap();
    writeln!(out, "grid_unit = {}", task.spec.grid_unit).unwrap();
    let grid: Vec<String> = task.spec.grid.iter().map(|v| format_f64(*v)).collect();
    writeln!(out, "grid = {}", grid.join(",")).unwrap();
    out
}

pub fn save_dataset(task: &Task, ds: &Dataset, data_path: &Path) -> Result<(), DatasetError> {
    fs::write(data_path, dataset_to_string(ds))?;
    fs::write(manifest_path(data_path), manifest_to_string(task, ds))?;
    Ok(())
}

pub fn load_dataset(data_path: &Path) -> Result<Dataset, DatasetError> {
    let manifest = fs::read_to_string(manifest_path(data_path))?;
    let mut task_name = String::new();
    let mut seed = 0u64;
    for line in manifest.lines() {
        if let Some(rest) = line.strip_prefix("task = ") {
            task_name = rest.to_string();
        }
        if let Some(rest) = line.strip_prefix("seed = ") {
            seed = rest.parse().unwrap_or(0);
        }
    }
    let text = fs::read_to_string(data_path)?;
    dataset_from_string(&text, &task_name, seed)
}

pub fn manifest_path(data_path: &Path) -> std::path::PathBuf {
    data_path.with_extension("manifest")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn designs_respect_bounds_and_splits_are_exact() {
        let task = Task::toy();
        let ds = generate_dataset(&task, 103, 5, [0.7, 0.2, 0.1]).unwrap();
        for g in &ds.designs {
            assert!(task.spec.check_bounds(g).is_ok());
        }
        let (tr, va, te) =
            (ds.rows(Split::Train).len(), ds.rows(Split::Val).len(), ds.rows(Split::Test).len());
        // floor(103*0.2)=20, floor(103*0.1)=10, remainder to train
        assert_eq!((tr, va, te), (73, 20, 10));
        assert_eq!(tr + va + te, 103);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let task = Task::toy();
        let a = generate_dataset(&task, 40, 9, [0.8, 0.1, 0.1]).unwrap();
        let b = generate_dataset(&task, 40, 9, [0.8, 0.1, 0.1]).unwrap();
        assert_eq!(dataset_to_string(&a), dataset_to_string(&b));
        let c = generate_dataset(&task, 40, 10, [0.8, 0.1, 0.1]).unwrap();
        assert_ne!(dataset_to_string(&a), dataset_to_string(&c));
    }

    #[test]
    fn file_round_trip_preserves_rows() {
        let task = Task::toy();
        let ds = generate_dataset(&task, 20, 3, [0.5, 0.25, 0.25]).unwrap();
        let text = dataset_to_string(&ds);
        let back = dataset_from_string(&text, "toy", 3).unwrap();
        assert_eq!(ds.designs, back.designs);
        assert_eq!(ds.spectra, back.spectra);
        assert_eq!(ds.splits, back.splits);
    }

    #[test]
    fn paper_scale_presets_match_the_benchmark_table() {
        assert_eq!(paper_scale_sizes("stack"), Some((40_000, 10_000, 500)));
        assert_eq!(paper_scale_sizes("shell"), Some((40_000, 10_000, 500)));
        assert_eq!(paper_scale_sizes("adm-surrogate"), Some((8_000, 2_000, 500)));
        assert_eq!(paper_scale_sizes("toy"), None);
    }

    #[test]
    fn sharded_generation_matches_sequential() {
        let task = Task::toy();
        let a = generate_dataset_sized(&task, (30, 8, 4), 77, 1).unwrap();
        let b = generate_dataset_sized(&task, (30, 8, 4), 77, 4).unwrap();
        assert_eq!(dataset_to_string(&a), dataset_to_string(&b));
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let task = Task::toy();
        assert!(matches!(
            generate_dataset(&task, 10, 1, [0.5, 0.2, 0.2]),
            Err(DatasetError::BadFractions(_))
        ));
    }
}
