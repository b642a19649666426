//! Per-solver-per-task evaluation record and its on-disk text form.
//!
//! Floats are written with 17 significant digits, so a report round-trips
//! through its file bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::checkpoint::format_f64;
use crate::solvers::SolverKind;

use super::RTCurve;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report file malformed at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub const REPORT_MAGIC: &str = "IBREPORT v1";

/// Everything one evaluation run produces for one solver on one task.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub solver: String,
    pub task: String,
    pub seed: u64,
    pub config_hash: String,
    pub dataset_hash: String,
    pub param_count: usize,
    pub deterministic: bool,
    pub t_max: usize,
    pub r_t: Vec<f64>,
    pub p25: Vec<f64>,
    pub p75: Vec<f64>,
    /// γ = r₁(NN)/r₁(NA); present once both counterparts were evaluated.
    pub gamma: Option<f64>,
    pub d_r: Option<f64>,
    pub train_seconds: f64,
    pub infer_seconds_per_200: f64,
}

impl EvalReport {
    pub fn r1(&self) -> f64 {
        self.r_t[0]
    }

    pub fn from_curve(
        curve: &RTCurve,
        seed: u64,
        config_hash: &str,
        dataset_hash: &str,
        param_count: usize,
    ) -> EvalReport {
        let deterministic = matches!(curve.solver, SolverKind::Nn | SolverKind::Tandem);
        EvalReport {
            solver: curve.solver.name().to_string(),
            task: curve.task.clone(),
            seed,
            config_hash: config_hash.to_string(),
            dataset_hash: dataset_hash.to_string(),
            param_count,
            deterministic,
            t_max: curve.t_max(),
            r_t: curve.r_t.clone(),
            p25: curve.p25.clone(),
            p75: curve.p75.clone(),
            gamma: None,
            d_r: None,
            train_seconds: 0.0,
            infer_seconds_per_200: 0.0,
        }
    }

    pub fn to_string(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_MAGIC);
        out.push('\n');
        writeln!(out, "solver = {}", self.solver).unwrap();
        writeln!(out, "task = {}", self.task).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "config_hash = {}", self.config_hash).unwrap();
        writeln!(out, "dataset_hash = {}", self.dataset_hash).unwrap();
        writeln!(out, "param_count = {}", self.param_count).unwrap();
        writeln!(out, "deterministic = {}", self.deterministic).unwrap();
        writeln!(out, "t_max = {}", self.t_max).unwrap();
        if let Some(g) = self.gamma {
            writeln!(out, "gamma = {}", format_f64(g)).unwrap();
            // convention note: the ratio is r1(nn)/r1(na), reproducing the
            // published table orientation rather than the inline equation
            writeln!(out, "gamma_convention = r1_nn_over_r1_na").unwrap();
        }
        if let Some(d) = self.d_r {
            writeln!(out, "d_r = {}", format_f64(d)).unwrap();
        }
        writeln!(out, "train_seconds = {}", format_f64(self.train_seconds)).unwrap();
        writeln!(out, "infer_seconds_per_200 = {}", format_f64(self.infer_seconds_per_200))
            .unwrap();
        for t in 0..self.t_max {
            writeln!(
                out,
                "curve {} {} {} {}",
                t + 1,
                format_f64(self.r_t[t]),
                format_f64(self.p25[t]),
                format_f64(self.p75[t])
            )
            .unwrap();
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<EvalReport, ReportError> {
        let mut report = EvalReport {
            solver: String::new(),
            task: String::new(),
            seed: 0,
            config_hash: String::new(),
            dataset_hash: String::new(),
            param_count: 0,
            deterministic: false,
            t_max: 0,
            r_t: Vec::new(),
            p25: Vec::new(),
            p75: Vec::new(),
            gamma: None,
            d_r: None,
            train_seconds: 0.0,
            infer_seconds_per_200: 0.0,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim_end() == REPORT_MAGIC => {}
            other => {
                return Err(ReportError::Malformed {
                    line: 1,
                    message: format!("bad magic {other:?}"),
                })
            }
        }
        let mut saw_end = false;
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "end" {
                saw_end = true;
                break;
            }
            let bad = |message: String| ReportError::Malformed { line: lineno + 1, message };
            if let Some(rest) = line.strip_prefix("curve ") {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() != 4 {
                    return Err(bad(format!("curve row needs 4 fields, got {}", fields.len())));
                }
                let parse = |tok: &str| -> Result<f64, ReportError> {
                    tok.parse().map_err(|_| ReportError::Malformed {
                        line: lineno + 1,
                        message: format!("bad float '{tok}'"),
                    })
                };
                report.r_t.push(parse(fields[1])?);
                report.p25.push(parse(fields[2])?);
                report.p75.push(parse(fields[3])?);
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| bad(format!("expected 'key = value', got '{line}'")))?;
            match key {
                "solver" => report.solver = value.to_string(),
                "task" => report.task = value.to_string(),
                "seed" => report.seed = value.parse().map_err(|_| bad("bad seed".into()))?,
                "config_hash" => report.config_hash = value.to_string(),
                "dataset_hash" => report.dataset_hash = value.to_string(),
                "param_count" => {
                    report.param_count = value.parse().map_err(|_| bad("bad count".into()))?
                }
                "deterministic" => report.deterministic = value == "true",
                "t_max" => report.t_max = value.parse().map_err(|_| bad("bad t_max".into()))?,
                "gamma" => {
                    report.gamma = Some(value.parse().map_err(|_| bad("bad gamma".into()))?)
                }
                "gamma_convention" => {}
                "d_r" => report.d_r = Some(value.parse().map_err(|_| bad("bad d_r".into()))?),
                "train_seconds" => {
                    report.train_seconds = value.parse().map_err(|_| bad("bad seconds".into()))?
                }
                "infer_seconds_per_200" => {
                    report.infer_seconds_per_200 =
                        value.parse().map_err(|_| bad("bad seconds".into()))?
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        if !saw_end {
            return Err(ReportError::Malformed { line: 0, message: "missing 'end'".into() });
        }
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<EvalReport, ReportError> {
        EvalReport::parse(&fs::read_to_string(path)?)
    }
}
