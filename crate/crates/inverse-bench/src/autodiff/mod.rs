//! Reverse-mode automatic differentiation: dense tensors, a define-by-run
//! graph, MLP layers with batch normalization, and Adam with a
//! reduce-on-plateau schedule.

pub mod graph;
pub mod nn;
pub mod optim;

pub use graph::{Graph, GraphError, NodeId, Tensor};
pub use nn::{Activation, Binding, Mlp, MlpSpec, NnError};
pub use optim::{OptimError, Optimizer};
