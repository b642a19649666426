//! Neural adjoint on the toy task: train a forward surrogate, then descend on
//! a pool of candidate designs and keep the best-of-T.
//!
//! ```bash
//! cargo run --example neural_adjoint
//! ```

use inverse_bench::autodiff::Activation;
use inverse_bench::forward::{generate_dataset, Split};
use inverse_bench::metrics::{resim_mse, rt_curve};
use inverse_bench::solvers::{ForwardNet, NaSolver, SolverConfig};
use inverse_bench::{InverseSolver, SolverKind, Task};

fn main() {
    let task = Task::toy();
    let ds = generate_dataset(&task, 700, 71, [0.8, 0.17, 0.03]).unwrap();
    let cfg = SolverConfig {
        kind: SolverKind::Na,
        hidden: vec![96, 96],
        activation: Activation::Relu,
        batchnorm: false,
        epochs: 300,
        batch_size: 128,
        lr: 3e-3,
        patience: 15,
        seed: 5,
        iterations: 150,
        na_lr: 0.05,
        na_oversample: 4,
        ..SolverConfig::default()
    };
    let (surrogate, log) = ForwardNet::train(&ds, &task.spec, &cfg).unwrap();
    println!(
        "surrogate trained: validation MSE {:.3e}",
        log.val_losses[log.best_epoch]
    );

    let na = NaSolver::new(surrogate, cfg).unwrap();
    let truth = [0.52, -0.33];
    let target = task.simulate(&truth).unwrap();
    let props = na.propose(&target, 8, 1234).unwrap();
    println!("target generated by g = {truth:?} (radius {:.3})", (0.52f64 * 0.52 + 0.33 * 0.33).sqrt());
    for (i, g) in props.designs.iter().enumerate() {
        let resim = task.simulate(g).unwrap();
        println!(
            "  proposal {i}: g = [{:+.3}, {:+.3}]  radius {:.3}  true re-sim MSE {:.2e}",
            g[0],
            g[1],
            (g[0] * g[0] + g[1] * g[1]).sqrt(),
            resim_mse(&target, &resim).unwrap()
        );
    }
    println!("distinct points on the same circle are equally valid inverses");

    let targets = ds.spectrum_matrix(Split::Test);
    let curve = rt_curve(&na, &task, &targets, 50, 4242).unwrap();
    println!(
        "over {} test targets: r_1 = {:.3e}, r_50 = {:.3e} (best-of-T gain {:.2}x)",
        targets.len(),
        curve.r_t[0],
        curve.r_t[49],
        curve.r_t[0] / curve.r_t[49]
    );
}
