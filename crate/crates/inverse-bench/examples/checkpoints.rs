//! The shared checkpoint format: write a trained network, read it back, and
//! use it as a surrogate forward model for a user-defined task.
//!
//! ```bash
//! cargo run --example checkpoints
//! ```

use inverse_bench::autodiff::{Activation, Mlp, MlpSpec};
use inverse_bench::forward::{mlp_from_checkpoint, mlp_to_checkpoint};
use inverse_bench::{Checkpoint, Task, TaskSpec};

fn main() {
    let spec = MlpSpec::regression(3, &[8], 16, Activation::Tanh, false, 4);
    let mlp = Mlp::init(spec).unwrap();
    let ckpt = mlp_to_checkpoint(&mlp);
    let text = ckpt.to_string();
    println!("checkpoint header and first tensor line:");
    for line in text.lines().take(3) {
        let short: String = line.chars().take(100).collect();
        println!("  {short}");
    }

    let dir = std::env::temp_dir().join("inverse-bench-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("surrogate.ibchk");
    ckpt.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    let back = mlp_from_checkpoint(&loaded).unwrap();
    let x = [0.2, -0.5, 0.9];
    assert_eq!(mlp.eval(&x, 1).unwrap(), back.eval(&x, 1).unwrap());
    println!("round trip through {} is bit-exact", path.display());

    // a surrogate checkpoint can stand in as the true forward model
    let grid: Vec<f64> = (0..16).map(|i| i as f64).collect();
    let task_spec = TaskSpec::new("custom", vec![(-1.0, 1.0); 3], grid, "au");
    let task = Task::from_surrogate_mlp(task_spec, back).unwrap();
    let s = task.simulate(&[0.1, 0.2, 0.3]).unwrap();
    println!("surrogate-backed task produced a {}-point spectrum", s.len());
}
