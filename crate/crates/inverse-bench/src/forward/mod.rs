//! Ground-truth forward models, benchmark task definitions, and dataset
//! generation.

pub mod dataset;
pub mod shell;
pub mod stack;
pub mod surrogate;
pub mod task;
pub mod toy;

pub use dataset::{generate_dataset, generate_dataset_sized, load_dataset, save_dataset, Dataset, DatasetError, Split};
pub use shell::{layered_sphere_scattering_cs, simulate_shell};
pub use stack::{simulate_stack, stack_rt, StackPhysics};
pub use surrogate::{mlp_from_checkpoint, mlp_to_checkpoint};
pub use task::{ForwardError, Task, TaskSpec};
pub use toy::simulate_toy;
