//! Benchmark task descriptions and the forward-model dispatch.

use std::path::Path;

use thiserror::Error;

use crate::autodiff::{Mlp, NnError};
use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::rng::Rng;

use super::surrogate::{mlp_from_checkpoint, mlp_to_checkpoint};
use super::{shell, stack, toy};

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("design dimension {got} does not match task '{task}' ({expected})")]
    DesignDim { task: String, got: usize, expected: usize },
    #[error("design component {index} = {value} outside bounds [{lo}, {hi}]")]
    OutOfBounds { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("multipole series did not converge by order {order}")]
    NonConvergent { order: usize },
    #[error("surrogate checkpoint does not fit task: {0}")]
    SurrogateShape(String),
    #[error("unknown task '{0}'")]
    UnknownTask(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Static description of one benchmark task: design dimensionality and
/// bounds, plus the spectral grid the forward model is sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub design_dim: usize,
    pub spectrum_dim: usize,
    /// Per-dimension [lo, hi], physical units (nm for thicknesses).
    pub bounds: Vec<(f64, f64)>,
    /// Uniformly spaced spectral grid values.
    pub grid: Vec<f64>,
    /// Grid unit label, e.g. "nm" or "THz".
    pub grid_unit: String,
}

impl TaskSpec {
    pub fn new(
        name: &str,
        bounds: Vec<(f64, f64)>,
        grid: Vec<f64>,
        grid_unit: &str,
    ) -> TaskSpec {
        assert!(bounds.iter().all(|(lo, hi)| lo < hi), "bounds must satisfy lo < hi");
        assert!(grid.windows(2).all(|w| w[0] < w[1]), "grid must be strictly monotone");
        TaskSpec {
            name: name.to_string(),
            design_dim: bounds.len(),
            spectrum_dim: grid.len(),
            bounds,
            grid,
            grid_unit: grid_unit.to_string(),
        }
    }

    /// Domain mean per dimension, exactly (lo + hi) / 2.
    pub fn mean(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| (lo + hi) / 2.0).collect()
    }

    /// Domain range per dimension, exactly hi - lo.
    pub fn range(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| hi - lo).collect()
    }

    pub fn check_bounds(&self, g: &[f64]) -> Result<(), ForwardError> {
        if g.len() != self.design_dim {
            return Err(ForwardError::DesignDim {
                task: self.name.clone(),
                got: g.len(),
                expected: self.design_dim,
            });
        }
        for (i, (&v, &(lo, hi))) in g.iter().zip(&self.bounds).enumerate() {
            if !(lo..=hi).contains(&v) || !v.is_finite() {
                return Err(ForwardError::OutOfBounds { index: i, value: v, lo, hi });
            }
        }
        Ok(())
    }

    pub fn clip(&self, g: &mut [f64]) {
        for (v, &(lo, hi)) in g.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Map a raw design to [-1, 1] per dimension.
    pub fn normalize(&self, g: &[f64]) -> Vec<f64> {
        g.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| (2.0 * v - (lo + hi)) / (hi - lo))
            .collect()
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| (v * (hi - lo) + lo + hi) / 2.0)
            .collect()
    }

    /// Map to [0, 1] per dimension (used for design-space distances).
    pub fn unit_normalize(&self, g: &[f64]) -> Vec<f64> {
        g.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn uniform_design(&self, rng: &mut Rng) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| rng.uniform(lo, hi)).collect()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// A task together with its ground-truth forward model.
#[derive(Debug, Clone)]
pub struct Task {
    pub spec: TaskSpec,
    model: Model,
}

#[derive(Debug, Clone)]
enum Model {
    Stack(stack::StackPhysics),
    Shell,
    Surrogate(Box<Mlp>),
    Toy,
    Linear(Vec<f64>), // row-major [spectrum_dim, 2]
}

impl Task {
    /// Graphene/dielectric multilayer stack: 5 thicknesses -> absorptivity on
    /// 256 wavelengths, 240-2000 nm.
    pub fn stack() -> Task {
        Task {
            spec: TaskSpec::new(
                "stack",
                vec![(20.0, 100.0); 5],
                linspace(240.0, 2000.0, 256),
                "nm",
            ),
            model: Model::Stack(stack::StackPhysics::default()),
        }
    }

    /// Multilayer dielectric sphere: 8 shell thicknesses -> scattering
    /// efficiency on 201 wavelengths, 400-800 nm.
    pub fn shell() -> Task {
        Task {
            spec: TaskSpec::new(
                "shell",
                vec![(30.0, 70.0); 8],
                linspace(400.0, 800.0, 201),
                "nm",
            ),
            model: Model::Shell,
        }
    }

    /// Metasurface-style task backed by a user-supplied surrogate checkpoint:
    /// 14 design parameters -> 2000 spectral points over 100-500 THz.
    /// The surrogate plays the role of the true simulator.
    pub fn adm_surrogate(checkpoint: &Path) -> Result<Task, ForwardError> {
        let spec = Self::adm_spec();
        let ckpt = Checkpoint::load(checkpoint)?;
        let mlp = mlp_from_checkpoint(&ckpt)?;
        Self::from_surrogate_mlp(spec, mlp)
    }

    pub fn adm_spec() -> TaskSpec {
        let mut bounds = vec![(20.0, 100.0); 10]; // height, period, 4x2 radii
        bounds.extend(vec![(0.0, 180.0); 4]); // rotation angles, degrees
        TaskSpec::new("adm-surrogate", bounds, linspace(100.0, 500.0, 2000), "THz")
    }

    pub fn from_surrogate_mlp(spec: TaskSpec, mlp: Mlp) -> Result<Task, ForwardError> {
        if mlp.spec.input_width() != spec.design_dim {
            return Err(ForwardError::SurrogateShape(format!(
                "input width {} vs design dim {}",
                mlp.spec.input_width(),
                spec.design_dim
            )));
        }
        if mlp.spec.output_width() != spec.spectrum_dim {
            return Err(ForwardError::SurrogateShape(format!(
                "output width {} vs spectrum dim {}",
                mlp.spec.output_width(),
                spec.spectrum_dim
            )));
        }
        Ok(Task { spec, model: Model::Surrogate(Box::new(mlp)) })
    }

    /// Radially symmetric toy task: s_k = sin(3π(g₁²+g₂²)x_k) on 32 points.
    /// Every circle of designs is an exact non-uniqueness class.
    pub fn toy() -> Task {
        Task {
            spec: TaskSpec::new("toy", vec![(-1.0, 1.0); 2], linspace(0.0, 1.0, 32), "au"),
            model: Model::Toy,
        }
    }

    /// Injective linear toy task: s = Mg with a fixed well-conditioned M.
    /// Each spectrum has exactly one design, so inverse models face no
    /// non-uniqueness at all.
    pub fn linear() -> Task {
        let d_s = 16;
        let spec = TaskSpec::new("linear", vec![(-1.0, 1.0); 2], linspace(0.0, 1.0, d_s), "au");
        let mut rng = Rng::new(0x11ea5);
        let m: Vec<f64> = (0..d_s * 2).map(|_| rng.uniform(-1.0, 1.0)).collect();
        Task { spec, model: Model::Linear(m) }
    }

    /// Built-in task lookup; `adm-surrogate` needs a checkpoint path.
    pub fn by_name(name: &str, surrogate: Option<&Path>) -> Result<Task, ForwardError> {
        match name {
            "stack" => Ok(Task::stack()),
            "shell" => Ok(Task::shell()),
            "toy" => Ok(Task::toy()),
            "linear" => Ok(Task::linear()),
            "adm-surrogate" => match surrogate {
                Some(p) => Task::adm_surrogate(p),
                None => Err(ForwardError::SurrogateShape(
                    "task 'adm-surrogate' requires a surrogate checkpoint".into(),
                )),
            },
            other => Err(ForwardError::UnknownTask(other.to_string())),
        }
    }

    /// The true forward model: design -> spectrum. Pure and deterministic;
    /// rejects out-of-bounds designs.
    pub fn simulate(&self, g: &[f64]) -> Result<Vec<f64>, ForwardError> {
        self.spec.check_bounds(g)?;
        match &self.model {
            Model::Stack(physics) => Ok(stack::simulate_stack(physics, g, &self.spec.grid)),
            Model::Shell => shell::simulate_shell(g, &self.spec.grid),
            Model::Surrogate(mlp) => Ok(mlp.eval(g, 1)?),
            Model::Toy => Ok(toy::simulate_toy(g, &self.spec.grid)),
            Model::Linear(m) => Ok(linear_map(m, g)),
        }
    }

    /// Serialize a surrogate-backed task's model (used by tests and tools).
    pub fn surrogate_checkpoint(&self) -> Option<Checkpoint> {
        match &self.model {
            Model::Surrogate(mlp) => Some(mlp_to_checkpoint(mlp)),
            _ => None,
        }
    }
}

fn linear_map(m: &[f64], g: &[f64]) -> Vec<f64> {
    let d_s = m.len() / g.len();
    let mut out = vec![0.0; d_s];
    for (k, row) in m.chunks(g.len()).enumerate() {
        out[k] = row.iter().zip(g).map(|(a, b)| a * b).sum();
    }
    out
}

/// Public access to the linear toy's matrix for oracle construction in tests.
pub fn linear_task_matrix(task: &Task) -> Option<&[f64]> {
    match &task.model {
        Model::Linear(m) => Some(m),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_dims_match_the_benchmark_table() {
        let stack = Task::stack();
        assert_eq!((stack.spec.design_dim, stack.spec.spectrum_dim), (5, 256));
        let shell = Task::shell();
        assert_eq!((shell.spec.design_dim, shell.spec.spectrum_dim), (8, 201));
        let adm = Task::adm_spec();
        assert_eq!((adm.design_dim, adm.spectrum_dim), (14, 2000));
    }

    #[test]
    fn mean_and_range_are_exact() {
        let spec = Task::stack().spec;
        for (i, &(lo, hi)) in spec.bounds.iter().enumerate() {
            assert_eq!(spec.mean()[i], (lo + hi) / 2.0);
            assert_eq!(spec.range()[i], hi - lo);
        }
    }

    #[test]
    fn out_of_bounds_design_is_rejected() {
        let task = Task::toy();
        let err = task.simulate(&[1.5, 0.0]).unwrap_err();
        assert!(matches!(err, ForwardError::OutOfBounds { index: 0, .. }));
    }

    #[test]
    fn normalize_round_trips() {
        let spec = Task::shell().spec;
        let g: Vec<f64> = spec.bounds.iter().map(|&(lo, hi)| 0.25 * lo + 0.75 * hi).collect();
        let z = spec.normalize(&g);
        assert!(z.iter().all(|v| v.abs() <= 1.0));
        let back = spec.denormalize(&z);
        for (a, b) in g.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
