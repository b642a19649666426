//! Desk-scale benchmark framework for data-driven inverse design.
//!
//! The crate bundles everything needed to pose an inverse-design task, train
//! deep inverse solvers against it, and score them:
//!
//! - [`autodiff`] — reverse-mode differentiation, MLPs, Adam, plateau schedule
//! - [`forward`] — analytic and surrogate forward models plus dataset tooling
//! - [`solvers`] — direct, tandem, neural-adjoint, genetic, mixture-density,
//!   and variational solvers behind one `propose` interface
//! - [`flows`] — affine-coupling flows and the two invertible solvers
//! - [`metrics`] — re-simulation error, the r_T curve, and the non-uniqueness
//!   measures γ and D_r
//! - [`harness`] — configs, run records, sweeps, and the `ibench` CLI verbs
//!
//! See the crate `examples/` directory for one runnable program per
//! capability, and `README.md` for the CLI walkthrough.

pub mod autodiff;
pub mod checkpoint;
pub mod flows;
pub mod forward;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod solvers;

pub use autodiff::{Graph, GraphError, Mlp, MlpSpec, NodeId, Optimizer, Tensor};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use forward::{Dataset, ForwardError, Task, TaskSpec};
pub use harness::{Config, HarnessError};
pub use metrics::{rt_curve, EvalReport, MetricsError, RTCurve};
pub use solvers::{InverseSolver, ProposalSet, SolverConfig, SolverError, SolverKind};
pub use rng::Rng;
