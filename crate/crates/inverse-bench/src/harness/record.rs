//! Run records and content hashing.
//!
//! A record captures one training run: what was trained (config hash), on
//! what (dataset hash), how it went (per-epoch losses, validation r₁), and
//! where the checkpoint lives. Re-running a completed cell with identical
//! hashes is a no-op.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::checkpoint::format_f64;

/// FNV-1a over raw bytes, hex-encoded. Used as the content fingerprint for
/// configs and dataset files.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub status: RunStatus,
    pub solver: String,
    pub task: String,
    pub seed: u64,
    pub config_hash: String,
    pub dataset_hash: String,
    pub train_seconds: f64,
    pub val_r1: f64,
    pub checkpoint: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Complete,
    Failed,
}

impl RunRecord {
    pub fn to_string(&self) -> String {
        let mut out = String::from("IBRUN v1\n");
        writeln!(
            out,
            "status = {}",
            match self.status {
                RunStatus::Complete => "complete",
                RunStatus::Failed => "failed",
            }
        )
        .unwrap();
        writeln!(out, "solver = {}", self.solver).unwrap();
        writeln!(out, "task = {}", self.task).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "config_hash = {}", self.config_hash).unwrap();
        writeln!(out, "dataset_hash = {}", self.dataset_hash).unwrap();
        writeln!(out, "train_seconds = {}", format_f64(self.train_seconds)).unwrap();
        writeln!(out, "val_r1 = {}", format_f64(self.val_r1)).unwrap();
        writeln!(out, "checkpoint = {}", self.checkpoint).unwrap();
        if let Some(e) = &self.error {
            writeln!(out, "error = {}", e.replace('\n', " ")).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Option<RunRecord> {
        let mut lines = text.lines();
        if lines.next()? != "IBRUN v1" {
            return None;
        }
        let mut record = RunRecord {
            status: RunStatus::Failed,
            solver: String::new(),
            task: String::new(),
            seed: 0,
            config_hash: String::new(),
            dataset_hash: String::new(),
            train_seconds: 0.0,
            val_r1: f64::NAN,
            checkpoint: String::new(),
            error: None,
        };
        for line in lines {
            let Some((key, value)) = line.split_once(" = ") else { continue };
            match key {
                "status" => {
                    record.status =
                        if value == "complete" { RunStatus::Complete } else { RunStatus::Failed }
                }
                "solver" => record.solver = value.to_string(),
                "task" => record.task = value.to_string(),
                "seed" => record.seed = value.parse().ok()?,
                "config_hash" => record.config_hash = value.to_string(),
                "dataset_hash" => record.dataset_hash = value.to_string(),
                "train_seconds" => record.train_seconds = value.parse().ok()?,
                "val_r1" => record.val_r1 = value.parse().ok()?,
                "checkpoint" => record.checkpoint = value.to_string(),
                "error" => record.error = Some(value.to_string()),
                _ => {}
            }
        }
        Some(record)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_string())
    }

    pub fn load(path: &Path) -> Option<RunRecord> {
        RunRecord::parse(&fs::read_to_string(path).ok()?)
    }

    /// Whether a cached record makes retraining unnecessary.
    pub fn matches(&self, config_hash: &str, dataset_hash: &str) -> bool {
        self.status == RunStatus::Complete
            && self.config_hash == config_hash
            && self.dataset_hash == dataset_hash
    }
}

pub fn write_losses(path: &Path, losses: &[f64]) -> std::io::Result<()> {
    let mut out = String::new();
    for l in losses {
        out.push_str(&format_f64(*l));
        out.push('\n');
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = content_hash(b"hello");
        assert_eq!(a, content_hash(b"hello"));
        assert_ne!(a, content_hash(b"hellp"));
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn record_round_trips() {
        let record = RunRecord {
            status: RunStatus::Complete,
            solver: "ga".into(),
            task: "shell".into(),
            seed: 7,
            config_hash: "aa".into(),
            dataset_hash: "bb".into(),
            train_seconds: 1.5,
            val_r1: 3.25e-4,
            checkpoint: "checkpoint.ibchk".into(),
            error: None,
        };
        let back = RunRecord::parse(&record.to_string()).unwrap();
        assert_eq!(record, back);
        assert!(back.matches("aa", "bb"));
        assert!(!back.matches("aa", "cc"));
    }
}
