//! Mixture density network on the toy task: the conditional p(g|s) comes out
//! as a Gaussian mixture whose components land on the solution circle.
//!
//! ```bash
//! cargo run --example mixture_density
//! ```

use inverse_bench::autodiff::Activation;
use inverse_bench::forward::generate_dataset;
use inverse_bench::solvers::{MdnSolver, SolverConfig};
use inverse_bench::{InverseSolver, SolverKind, Task};

fn main() {
    let task = Task::toy();
    let ds = generate_dataset(&task, 800, 31, [0.85, 0.15, 0.0]).unwrap();
    let cfg = SolverConfig {
        kind: SolverKind::Mdn,
        hidden: vec![64, 64],
        activation: Activation::Relu,
        batchnorm: false,
        epochs: 150,
        batch_size: 128,
        lr: 3e-3,
        seed: 7,
        components: 6,
        ..SolverConfig::default()
    };
    let (mdn, log) = MdnSolver::train(&ds, &task.spec, &cfg).unwrap();
    println!(
        "trained MDN with 6 components; best validation NLL {:.3} at epoch {}",
        log.val_losses[log.best_epoch],
        log.best_epoch
    );

    let truth = [0.45, 0.40];
    let target = task.simulate(&truth).unwrap();
    let mixture = mdn.mixture_for(&target).unwrap();
    println!("mixture for a target of radius {:.3}:", (truth[0] * truth[0] + truth[1] * truth[1]).sqrt());
    for i in 0..mixture.components() {
        let mu = &mixture.means[i * 2..(i + 1) * 2];
        println!(
            "  component {i}: weight {:.3}, mean [{:+.3}, {:+.3}] (radius {:.3})",
            mixture.weights[i],
            mu[0],
            mu[1],
            (mu[0] * mu[0] + mu[1] * mu[1]).sqrt()
        );
    }

    let props = mdn.propose(&target, 6, 99).unwrap();
    println!("six sampled proposals, ordered heaviest component first:");
    for g in &props.designs {
        let resim = task.simulate(g).unwrap();
        let mse = resim
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / target.len() as f64;
        println!("  [{:+.3}, {:+.3}] -> true re-sim MSE {mse:.2e}", g[0], g[1]);
    }
}
