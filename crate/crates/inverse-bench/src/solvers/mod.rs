//! Deep inverse solvers behind a uniform train/propose interface.
//!
//! Every solver consumes a training dataset and answers
//! `propose(target, T, seed)` with exactly `T` in-bounds candidate designs in
//! its preferred order. Networks operate on designs normalized to [-1, 1] per
//! dimension; proposals are mapped back to physical units and clipped before
//! they leave a solver.

pub mod forward_net;
pub mod ga;
pub mod mdn;
pub mod na;
pub mod nn;
pub mod tandem;
pub mod vae;

pub mod train;

pub use forward_net::ForwardNet;
pub use ga::GaSolver;
pub use mdn::{mdn_nll, MdnSolver, MixtureParams};
pub use na::NaSolver;
pub use nn::NnSolver;
pub use tandem::TandemSolver;
pub use train::{epoch_batches, gather_rows, TrainLog};
pub use vae::{kl_diag_gaussian, VaeSolver};

use thiserror::Error;

use crate::autodiff::{Activation, Graph, GraphError, NnError, NodeId, OptimError};
use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::forward::task::TaskSpec;
use crate::forward::{Dataset, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Nn,
    Tandem,
    Na,
    Ga,
    Mdn,
    Vae,
    Inn,
    Cinn,
}

impl SolverKind {
    pub fn parse(s: &str) -> Option<SolverKind> {
        match s {
            "nn" => Some(SolverKind::Nn),
            "tandem" | "td" => Some(SolverKind::Tandem),
            "na" => Some(SolverKind::Na),
            "ga" => Some(SolverKind::Ga),
            "mdn" => Some(SolverKind::Mdn),
            "vae" => Some(SolverKind::Vae),
            "inn" => Some(SolverKind::Inn),
            "cinn" => Some(SolverKind::Cinn),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Nn => "nn",
            SolverKind::Tandem => "tandem",
            SolverKind::Na => "na",
            SolverKind::Ga => "ga",
            SolverKind::Mdn => "mdn",
            SolverKind::Vae => "vae",
            SolverKind::Inn => "inn",
            SolverKind::Cinn => "cinn",
        }
    }

    /// Solvers whose proposals do not depend on the draw seed.
    pub fn deterministic(&self) -> bool {
        matches!(self, SolverKind::Nn | SolverKind::Tandem)
    }

    pub const ALL: [SolverKind; 8] = [
        SolverKind::Nn,
        SolverKind::Tandem,
        SolverKind::Na,
        SolverKind::Ga,
        SolverKind::Mdn,
        SolverKind::Vae,
        SolverKind::Inn,
        SolverKind::Cinn,
    ];
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NanLoss { epoch: usize },
    #[error("invalid solver config: {0}")]
    BadConfig(String),
    #[error("target length {got} does not match task spectrum dim {expected}")]
    TargetDim { got: usize, expected: usize },
    #[error("candidate pool {pool} smaller than requested proposals {requested}")]
    PoolTooSmall { pool: usize, requested: usize },
    #[error("dataset has no '{0}' rows")]
    EmptySplit(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Ordered candidate designs for one target spectrum. Designs are in physical
/// units and inside the task bounds.
#[derive(Debug, Clone)]
pub struct ProposalSet {
    pub target: Vec<f64>,
    pub designs: Vec<Vec<f64>>,
    /// Solver-side error estimates (surrogate re-simulation where available).
    pub predicted_errors: Option<Vec<f64>>,
}

pub trait InverseSolver: Send + Sync {
    fn kind(&self) -> SolverKind;
    fn task_spec(&self) -> &TaskSpec;
    /// Trainable parameter count, for capacity-matched comparisons.
    fn param_count(&self) -> usize;
    /// `count` ordered in-bounds designs for `target`. `seed` pins down any
    /// sampling the solver does; deterministic solvers ignore it.
    fn propose(&self, target: &[f64], count: usize, seed: u64) -> Result<ProposalSet, SolverError>;
    /// Model tensors for persistence (the harness adds a manifest).
    fn checkpoint(&self) -> Checkpoint;
}

/// Shared hyperparameters. Defaults follow the benchmark protocol (batch
/// 1024, 300 epochs); desk-scale configs override them explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub batchnorm: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub patience: usize,
    pub decay_factor: f64,
    pub seed: u64,
    pub boundary_weight: f64,
    /// NA: Adam iterations on the candidate designs; GA: generations.
    pub iterations: usize,
    /// GA population size.
    pub population: usize,
    /// NA optimizes `na_oversample * T` candidates and keeps the best `T`.
    pub na_oversample: usize,
    /// Step size for the NA descent on candidate designs.
    pub na_lr: f64,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism: usize,
    /// MDN mixture components.
    pub components: usize,
    /// Include the (2π) normalization constant in the MDN likelihood.
    pub mdn_norm_constant: bool,
    /// VAE latent dimension and KL weight.
    pub latent_dim: usize,
    pub kl_weight: f64,
    /// Flow depth (coupling blocks) and INN fit/normality trade-off σ.
    pub blocks: usize,
    pub sigma_fit: f64,
    /// INN latent width |z|; padding is derived from the dimension identity.
    pub inn_latent: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverKind::Nn,
            hidden: vec![64, 64],
            activation: Activation::Relu,
            batchnorm: true,
            epochs: 300,
            batch_size: 1024,
            lr: 1e-3,
            patience: 10,
            decay_factor: 0.5,
            seed: 1,
            boundary_weight: 1.0,
            iterations: 300,
            population: 200,
            na_oversample: 4,
            na_lr: 0.05,
            crossover_rate: 0.8,
            mutation_rate: 0.05,
            elitism: 2,
            components: 4,
            mdn_norm_constant: true,
            latent_dim: 4,
            kl_weight: 1e-2,
            blocks: 6,
            sigma_fit: 0.1,
            inn_latent: 2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::BadConfig(m));
        if self.hidden.iter().any(|&w| w == 0) {
            return bad("hidden widths must be positive".into());
        }
        if self.lr <= 0.0 {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!("crossover rate {} outside [0,1]", self.crossover_rate));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation rate {} outside [0,1]", self.mutation_rate));
        }
        if self.components == 0 {
            return bad("mdn needs at least one component".into());
        }
        if self.kl_weight < 0.0 {
            return bad(format!("kl weight {} must be nonnegative", self.kl_weight));
        }
        if !(0.0 < self.decay_factor && self.decay_factor < 1.0) {
            return bad(format!("decay factor {} outside (0,1)", self.decay_factor));
        }
        if self.sigma_fit <= 0.0 {
            return bad(format!("sigma must be positive, got {}", self.sigma_fit));
        }
        Ok(())
    }
}

/// Boundary penalty Σᵢ relu(|ĝᵢ - μᵢ| - Rᵢ/2): zero inside the training
/// hypercube, growing linearly outside.
pub fn boundary_loss(g_hat: &[f64], mean: &[f64], range: &[f64]) -> f64 {
    assert_eq!(g_hat.len(), mean.len());
    assert_eq!(g_hat.len(), range.len());
    g_hat
        .iter()
        .zip(mean)
        .zip(range)
        .map(|((&g, &mu), &r)| ((g - mu).abs() - 0.5 * r).max(0.0))
        .sum()
}

/// Graph version of [`boundary_loss`] for a `[rows, d]` batch against row
/// constants; returns the per-sample penalty as `[rows, 1]`.
pub fn boundary_loss_node(
    graph: &mut Graph,
    g_hat: NodeId,
    mean: NodeId,
    half_range: NodeId,
) -> Result<NodeId, GraphError> {
    let centered = graph.sub(g_hat, mean)?;
    let neg = graph.neg(centered);
    let pos_part = graph.relu(centered);
    let neg_part = graph.relu(neg);
    let abs = graph.add(pos_part, neg_part)?;
    let excess = graph.sub(abs, half_range)?;
    let penalty = graph.relu(excess);
    Ok(graph.sum_axis(penalty, 1))
}

/// Flattened (rows, spectra, normalized designs) for one split.
pub(crate) fn split_arrays(
    dataset: &Dataset,
    spec: &TaskSpec,
    split: Split,
) -> (usize, Vec<f64>, Vec<f64>) {
    let rows = dataset.rows(split);
    let mut spectra = Vec::with_capacity(rows.len() * spec.spectrum_dim);
    let mut designs = Vec::with_capacity(rows.len() * spec.design_dim);
    for &i in &rows {
        spectra.extend_from_slice(&dataset.spectra[i]);
        designs.extend(spec.normalize(&dataset.designs[i]));
    }
    (rows.len(), spectra, designs)
}
