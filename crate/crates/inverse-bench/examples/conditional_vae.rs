//! Conditional VAE on the toy task: encode (design, spectrum) into a latent
//! Gaussian, decode fresh standard-normal draws under a target condition.
//!
//! ```bash
//! cargo run --example conditional_vae
//! ```

use inverse_bench::autodiff::Activation;
use inverse_bench::forward::generate_dataset;
use inverse_bench::solvers::{kl_diag_gaussian, SolverConfig, VaeSolver};
use inverse_bench::{InverseSolver, SolverKind, Task};

fn main() {
    // the closed-form KL the loss uses
    println!("KL(N(0,1) || N(0,1)) = {}", kl_diag_gaussian(&[0.0], &[0.0]));
    println!("KL(N(1,1) || N(0,1)) = {}", kl_diag_gaussian(&[1.0], &[0.0]));

    let task = Task::toy();
    let ds = generate_dataset(&task, 800, 13, [0.85, 0.15, 0.0]).unwrap();
    let cfg = SolverConfig {
        kind: SolverKind::Vae,
        hidden: vec![64, 64],
        activation: Activation::Relu,
        batchnorm: false,
        epochs: 150,
        batch_size: 128,
        lr: 3e-3,
        seed: 3,
        latent_dim: 4,
        kl_weight: 1e-2,
        ..SolverConfig::default()
    };
    let (vae, log) = VaeSolver::train(&ds, &task.spec, &cfg).unwrap();
    println!(
        "trained VAE; best validation reconstruction {:.3e} at epoch {}",
        log.val_losses[log.best_epoch],
        log.best_epoch
    );

    let target = task.simulate(&[0.5, 0.25]).unwrap();
    let props = vae.propose(&target, 8, 2024).unwrap();
    println!("eight decoded proposals for one target:");
    for g in &props.designs {
        let resim = task.simulate(g).unwrap();
        let mse = resim
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / target.len() as f64;
        println!(
            "  [{:+.3}, {:+.3}] radius {:.3} -> re-sim MSE {mse:.2e}",
            g[0],
            g[1],
            (g[0] * g[0] + g[1] * g[1]).sqrt()
        );
    }
    // same seed, same draws
    let again = vae.propose(&target, 8, 2024).unwrap();
    assert_eq!(props.designs, again.designs);
    println!("propose is reproducible under a fixed latent seed");
}
