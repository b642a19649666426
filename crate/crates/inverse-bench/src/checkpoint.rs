//! Line-oriented checkpoint files.
//!
//! Layout:
//!
//! ```text
//! IBCHK v1
//! tensor <name> <rank> <dim...>
//! <whitespace-separated floats, 17 significant digits>
//! ...
//! end
//! ```
//!
//! Floats are printed with 17 significant digits so `f64` values round-trip
//! exactly. Loaders reject unknown magic and any shape/value-count mismatch.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::autodiff::Tensor;

pub const MAGIC: &str = "IBCHK v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad checkpoint magic: expected '{MAGIC}', got '{0}'")]
    BadMagic(String),
    #[error("tensor '{name}': expected {expected} values for shape {shape:?}, got {got}")]
    ValueCount { name: String, shape: Vec<usize>, expected: usize, got: usize },
    #[error("malformed checkpoint line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing 'end' terminator")]
    MissingEnd,
    #[error("tensor '{0}' not found in checkpoint")]
    MissingTensor(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Ordered named tensors. Order is preserved so files are byte-stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub entries: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint { entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.entries.push((name.into(), tensor));
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, CheckpointError> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| CheckpointError::MissingTensor(name.to_string()))
    }

    pub fn to_string(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (name, tensor) in &self.entries {
            write!(out, "tensor {name} {}", tensor.shape.len()).unwrap();
            for d in &tensor.shape {
                write!(out, " {d}").unwrap();
            }
            out.push('\n');
            for (i, v) in tensor.values.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{}", format_f64(*v)).unwrap();
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Checkpoint, CheckpointError> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| CheckpointError::BadMagic(String::new()))?;
        if first.trim_end() != MAGIC {
            return Err(CheckpointError::BadMagic(first.to_string()));
        }
        let mut ckpt = Checkpoint::new();
        let mut saw_end = false;
        while let Some((lineno, line)) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "end" {
                saw_end = true;
                break;
            }
            let mut parts = line.split_whitespace();
            if parts.next() != Some("tensor") {
                return Err(CheckpointError::Malformed {
                    line: lineno + 1,
                    message: format!("expected 'tensor' or 'end', got '{line}'"),
                });
            }
            let name = parts
                .next()
                .ok_or(CheckpointError::Malformed {
                    line: lineno + 1,
                    message: "missing tensor name".into(),
                })?
                .to_string();
            let rank: usize = parse_field(parts.next(), lineno, "rank")?;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(parse_field(parts.next(), lineno, "dimension")?);
            }
            if parts.next().is_some() {
                return Err(CheckpointError::Malformed {
                    line: lineno + 1,
                    message: "trailing tokens after shape".into(),
                });
            }
            let expected: usize = shape.iter().product();
            let (vlineno, vline) = lines.next().ok_or(CheckpointError::Malformed {
                line: lineno + 2,
                message: "missing value line".into(),
            })?;
            let mut values = Vec::with_capacity(expected);
            for tok in vline.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| CheckpointError::Malformed {
                    line: vlineno + 1,
                    message: format!("bad float '{tok}'"),
                })?;
                values.push(v);
            }
            if values.len() != expected {
                return Err(CheckpointError::ValueCount {
                    name,
                    shape,
                    expected,
                    got: values.len(),
                });
            }
            ckpt.push(name, Tensor::new(shape, values));
        }
        if !saw_end {
            return Err(CheckpointError::MissingEnd);
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        let text = fs::read_to_string(path)?;
        Checkpoint::parse(&text)
    }
}

fn parse_field<T: std::str::FromStr>(
    tok: Option<&str>,
    lineno: usize,
    what: &str,
) -> Result<T, CheckpointError> {
    tok.and_then(|t| t.parse().ok()).ok_or(CheckpointError::Malformed {
        line: lineno + 1,
        message: format!("missing or invalid {what}"),
    })
}

/// 17 significant digits: enough to round-trip any finite f64 exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}
