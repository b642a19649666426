//! Build a small MLP on the autodiff graph, backpropagate a loss, and compare
//! every parameter gradient against central finite differences.
//!
//! ```bash
//! cargo run --example autodiff_gradients
//! ```

use inverse_bench::autodiff::{Activation, Graph, Mlp, MlpSpec, Tensor};
use inverse_bench::Rng;

fn main() {
    let spec = MlpSpec::regression(4, &[16, 8], 3, Activation::Tanh, true, 42);
    let mut mlp = Mlp::init(spec).unwrap();
    println!("network: 4 -> 16 -> 8 -> 3 (tanh, batchnorm), {} parameters", mlp.param_count());

    let rows = 16;
    let mut rng = Rng::new(7);
    let x: Vec<f64> = (0..rows * 4).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let t: Vec<f64> = (0..rows * 3).map(|_| rng.uniform(-1.0, 1.0)).collect();

    let loss_of = |mlp: &mut Mlp| -> f64 {
        let mut g = Graph::new();
        let xid = g.input(&Tensor::new(vec![rows, 4], x.clone()));
        let tid = g.input(&Tensor::new(vec![rows, 3], t.clone()));
        let (out, _) = mlp.forward_train(&mut g, xid).unwrap();
        let diff = g.sub(out, tid).unwrap();
        let sq = g.square(diff);
        let loss = g.mean(sq);
        g.value(loss)
    };

    // analytic gradients from one backward pass
    let analytic: Vec<Vec<f64>> = {
        let mut g = Graph::new();
        let xid = g.input(&Tensor::new(vec![rows, 4], x.clone()));
        let tid = g.input(&Tensor::new(vec![rows, 3], t.clone()));
        let (out, binding) = mlp.forward_train(&mut g, xid).unwrap();
        let diff = g.sub(out, tid).unwrap();
        let sq = g.square(diff);
        let loss = g.mean(sq);
        println!("loss at init: {:.6}", g.value(loss));
        g.backward(loss).unwrap();
        binding.ids.iter().map(|&id| g.grad(id).to_vec()).collect()
    };

    // numeric gradients, parameter by parameter
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for slot in 0..analytic.len() {
        for i in 0..analytic[slot].len() {
            let orig = mlp.trainable_mut()[slot].values[i];
            mlp.trainable_mut()[slot].values[i] = orig + h;
            let up = loss_of(&mut mlp);
            mlp.trainable_mut()[slot].values[i] = orig - h;
            let down = loss_of(&mut mlp);
            mlp.trainable_mut()[slot].values[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[slot][i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0));
        }
    }
    println!("worst relative gradient error vs finite differences: {worst:.3e}");
    assert!(worst < 1e-5);
    println!("analytic gradients agree with the finite-difference oracle");
}
