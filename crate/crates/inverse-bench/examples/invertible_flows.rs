//! The two flow-based solvers on the toy task. The plain INN learns the
//! forward map on zero-padded designs; the conditional flow maps designs to
//! latents given the spectrum. Both invert exactly, so sampling latents
//! produces designs directly.
//!
//! ```bash
//! cargo run --example invertible_flows
//! ```

use inverse_bench::flows::{CinnSolver, Flow, InnSolver};
use inverse_bench::forward::generate_dataset;
use inverse_bench::solvers::SolverConfig;
use inverse_bench::{InverseSolver, Rng, SolverKind, Task};

fn main() {
    // bijectivity of a raw coupling stack
    let mut flow = Flow::new(8, 0, 4, &[16], 5).unwrap();
    let mut rng = Rng::new(1);
    for t in flow.trainable_mut() {
        for v in t.values.iter_mut() {
            *v = rng.uniform(-0.5, 0.5);
        }
    }
    let x: Vec<f64> = (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let (y, logdet) = flow.forward_values(&x, None, 1).unwrap();
    let back = flow.inverse_values(&y, None, 1).unwrap();
    let drift = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("4-block coupling flow: round-trip drift {drift:.2e}, logdet {:.4}", logdet[0]);

    let task = Task::toy();
    let ds = generate_dataset(&task, 800, 21, [0.85, 0.15, 0.0]).unwrap();
    let base = SolverConfig {
        hidden: vec![48],
        batchnorm: false,
        epochs: 300,
        batch_size: 100,
        lr: 3e-3,
        patience: 30,
        blocks: 6,
        seed: 23,
        sigma_fit: 0.05,
        inn_latent: 2,
        ..SolverConfig::default()
    };

    let inn_cfg = SolverConfig { kind: SolverKind::Inn, ..base.clone() };
    let (inn, _) = InnSolver::train(&ds, &task.spec, &inn_cfg).unwrap();
    let target = task.simulate(&[0.5, 0.2]).unwrap();
    let props = inn.propose(&target, 5, 31).unwrap();
    println!("INN proposals (width 34 flow: 2 design + 32 padding = 32 spectrum + 2 latent):");
    report(&task, &target, &props.designs);

    let cinn_cfg = SolverConfig { kind: SolverKind::Cinn, hidden: vec![32, 32], ..base };
    let (cinn, _) = CinnSolver::train(&ds, &task.spec, &cinn_cfg).unwrap();
    let props = cinn.propose(&target, 5, 31).unwrap();
    println!("cINN proposals (width 2 flow conditioned on the 32-point spectrum):");
    report(&task, &target, &props.designs);
    println!(
        "the plain INN leans on zero-padding to square up the widths and tends\n\
         to wander off the data manifold at inference; conditioning the flow on\n\
         the spectrum instead is what makes the cINN proposals land near the\n\
         target circle"
    );
}

fn report(task: &Task, target: &[f64], designs: &[Vec<f64>]) {
    for g in designs {
        let resim = task.simulate(g).unwrap();
        let mse = resim
            .iter()
            .zip(target)
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
}
