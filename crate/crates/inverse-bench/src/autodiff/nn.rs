//! Multi-layer perceptrons on the autodiff graph.
//!
//! Layers are affine → optional batch normalization → activation. Train mode
//! normalizes with batch statistics (built from graph primitives so gradients
//! flow through them); eval mode applies the frozen running statistics as a
//! plain affine map, which keeps inference differentiable with respect to the
//! inputs — the neural-adjoint optimizer relies on that.

use thiserror::Error;

use super::graph::{Graph, GraphError, NodeId, Tensor};
use crate::rng::Rng;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

/// Architecture description. `widths` runs input → hidden… → output, so it has
/// one more entry than there are layers. `activations` and `batchnorm` carry
/// one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
    pub batchnorm: Vec<bool>,
    pub seed: u64,
}

impl MlpSpec {
    /// Hidden layers share one activation; the output layer is linear and
    /// batchnorm-free, which is what every solver here wants.
    pub fn regression(input: usize, hidden: &[usize], output: usize, act: Activation, bn: bool, seed: u64) -> Self {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        let layers = widths.len() - 1;
        let mut activations = vec![act; layers];
        activations[layers - 1] = Activation::Linear;
        let mut batchnorm = vec![bn; layers];
        batchnorm[layers - 1] = false;
        MlpSpec { widths, activations, batchnorm, seed }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.widths.len() < 2 {
            return Err(NnError::BadSpec("at least one layer required".into()));
        }
        if self.widths.iter().any(|&w| w == 0) {
            return Err(NnError::BadSpec("layer widths must be positive".into()));
        }
        let layers = self.widths.len() - 1;
        if self.activations.len() != layers || self.batchnorm.len() != layers {
            return Err(NnError::BadSpec(format!(
                "expected {layers} activation/batchnorm entries"
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid mlp spec: {0}")]
    BadSpec(String),
    #[error("input width {got} does not match first layer width {expected}")]
    InputWidth { got: usize, expected: usize },
    #[error("batchnorm in train mode needs batch size > 1")]
    BatchnormSingleton,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> Self {
        BatchNorm {
            gamma: Tensor::new(vec![1, width], vec![1.0; width]),
            beta: Tensor::zeros(vec![1, width]),
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub weight: Tensor, // [in, out]
    pub bias: Tensor,   // [1, out]
    pub bn: Option<BatchNorm>,
    pub activation: Activation,
}

/// MLP with owned parameters. Trainable tensors are exposed in a fixed slot
/// order (weight, bias, then gamma/beta per batchnorm layer, layer by layer)
/// that the optimizer and checkpoints rely on.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub layers: Vec<Layer>,
}

/// Leaf bindings for one forward pass, in trainable slot order.
#[derive(Debug)]
pub struct Binding {
    pub ids: Vec<NodeId>,
}

fn apply_activation(graph: &mut Graph, h: NodeId, act: Activation) -> NodeId {
    match act {
        Activation::Relu => graph.relu(h),
        Activation::Tanh => graph.tanh(h),
        Activation::Linear => h,
    }
}

impl Mlp {
    /// Xavier-uniform weights, zero biases, unit gamma.
    pub fn init(spec: MlpSpec) -> Result<Mlp, NnError> {
        spec.validate()?;
        let mut rng = Rng::new(spec.seed);
        let mut layers = Vec::new();
        for l in 0..spec.widths.len() - 1 {
            let (fan_in, fan_out) = (spec.widths[l], spec.widths[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.uniform(-bound, bound)).collect();
            layers.push(Layer {
                weight: Tensor::new(vec![fan_in, fan_out], w),
                bias: Tensor::zeros(vec![1, fan_out]),
                bn: if spec.batchnorm[l] { Some(BatchNorm::new(fan_out)) } else { None },
                activation: spec.activations[l],
            });
        }
        Ok(Mlp { spec, layers })
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.trainable().iter().map(|(_, t)| t.len()).sum()
    }

    /// (name, tensor) pairs in slot order.
    pub fn trainable(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.w"), &layer.weight));
            out.push((format!("layer{l}.b"), &layer.bias));
            if let Some(bn) = &layer.bn {
                out.push((format!("layer{l}.gamma"), &bn.gamma));
                out.push((format!("layer{l}.beta"), &bn.beta));
            }
        }
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for layer in self.layers.iter_mut() {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
            if let Some(bn) = &mut layer.bn {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
            }
        }
        out
    }

    /// Build a train-mode forward pass on `graph`: parameters enter as
    /// trainable leaves, batchnorm uses batch statistics, and the running
    /// statistics are updated as a side effect. Returns the output node and
    /// the leaf bindings in trainable slot order.
    pub fn forward_train(
        &mut self,
        graph: &mut Graph,
        x: NodeId,
    ) -> Result<(NodeId, Binding), NnError> {
        let (rows, cols) = graph.shape(x);
        if cols != self.spec.input_width() {
            return Err(NnError::InputWidth { got: cols, expected: self.spec.input_width() });
        }
        if rows < 2 && self.layers.iter().any(|l| l.bn.is_some()) {
            return Err(NnError::BatchnormSingleton);
        }
        let mut ids = Vec::new();
        let mut h = x;
        for layer in self.layers.iter_mut() {
            let w = graph.param(&layer.weight);
            let b = graph.param(&layer.bias);
            ids.push(w);
            ids.push(b);
            let lin = graph.matmul(h, w)?;
            h = graph.add(lin, b)?;
            if let Some(bn) = &mut layer.bn {
                let gamma = graph.param(&bn.gamma);
                let beta = graph.param(&bn.beta);
                ids.push(gamma);
                ids.push(beta);
                let mu = graph.mean_axis(h, 0);
                let centered = graph.sub(h, mu)?;
                let sq = graph.square(centered);
                let var = graph.mean_axis(sq, 0);
                let var_eps = graph.add_const(var, BN_EPS);
                let inv_std = graph.pow_const(var_eps, -0.5);
                let normed = graph.multiply(centered, inv_std)?;
                for (r, m) in bn.running_mean.iter_mut().zip(graph.values(mu)) {
                    *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * m;
                }
                for (r, v) in bn.running_var.iter_mut().zip(graph.values(var)) {
                    *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v;
                }
                let scaled = graph.multiply(normed, gamma)?;
                h = graph.add(scaled, beta)?;
            }
            h = apply_activation(graph, h, layer.activation);
        }
        Ok((h, Binding { ids }))
    }

    /// Build an eval-mode forward pass: parameters enter as constants (no
    /// gradients reach them, though gradients still flow through to the
    /// inputs) and batchnorm applies the frozen running statistics.
    pub fn forward_eval(&self, graph: &mut Graph, x: NodeId) -> Result<NodeId, NnError> {
        let (_, cols) = graph.shape(x);
        if cols != self.spec.input_width() {
            return Err(NnError::InputWidth { got: cols, expected: self.spec.input_width() });
        }
        let mut h = x;
        for layer in &self.layers {
            let w = graph.input(&layer.weight);
            let b = graph.input(&layer.bias);
            let lin = graph.matmul(h, w)?;
            h = graph.add(lin, b)?;
            if let Some(bn) = &layer.bn {
                let width = bn.running_mean.len();
                let mean = graph.constant(1, width, bn.running_mean.clone());
                let inv: Vec<f64> =
                    bn.running_var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
                let inv_std = graph.constant(1, width, inv);
                let gamma = graph.input(&bn.gamma);
                let beta = graph.input(&bn.beta);
                let centered = graph.sub(h, mean)?;
                let normed = graph.multiply(centered, inv_std)?;
                let scaled = graph.multiply(normed, gamma)?;
                h = graph.add(scaled, beta)?;
            }
            h = apply_activation(graph, h, layer.activation);
        }
        Ok(h)
    }

    /// Eval-mode forward returning plain values; `x` is row-major `[rows, in]`.
    pub fn eval(&self, x: &[f64], rows: usize) -> Result<Vec<f64>, NnError> {
        assert!(rows > 0 && x.len() % rows == 0, "ragged eval input");
        let cols = x.len() / rows;
        if cols != self.spec.input_width() {
            return Err(NnError::InputWidth { got: cols, expected: self.spec.input_width() });
        }
        let mut graph = Graph::new();
        let input = Tensor::new(vec![rows, cols], x.to_vec());
        let xid = graph.input(&input);
        let out = self.forward_eval(&mut graph, xid)?;
        Ok(graph.values(out).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(widths: &[usize], act: Activation, bn: bool) -> MlpSpec {
        MlpSpec::regression(widths[0], &widths[1..widths.len() - 1], widths[widths.len() - 1], act, bn, 9)
    }

    #[test]
    fn zero_weights_pass_bias_through() {
        let mut mlp = Mlp::init(spec(&[3, 2], Activation::Linear, false)).unwrap();
        for v in mlp.layers[0].weight.values.iter_mut() {
            *v = 0.0;
        }
        mlp.layers[0].bias.values = vec![1.5, -0.5];
        let out = mlp.eval(&[0.3, 9.0, -2.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(out, vec![1.5, -0.5, 1.5, -0.5]);
    }

    #[test]
    fn hand_evaluated_single_layer_relu() {
        // W=[[2]], b=[1], relu, x=[3] -> [7]
        let s = MlpSpec {
            widths: vec![1, 1],
            activations: vec![Activation::Relu],
            batchnorm: vec![false],
            seed: 0,
        };
        let mut mlp = Mlp::init(s).unwrap();
        mlp.layers[0].weight.values = vec![2.0];
        mlp.layers[0].bias.values = vec![1.0];
        let out = mlp.eval(&[3.0], 1).unwrap();
        assert_eq!(out, vec![7.0]);
    }

    #[test]
    fn train_mode_batchnorm_normalizes_batch() {
        let s = MlpSpec {
            widths: vec![4, 6],
            activations: vec![Activation::Linear],
            batchnorm: vec![true],
            seed: 3,
        };
        let mut mlp = Mlp::init(s).unwrap();
        let mut rng = Rng::new(17);
        let rows = 32;
        let x: Vec<f64> = (0..rows * 4).map(|_| rng.uniform(-2.0, 3.0)).collect();
        let mut graph = Graph::new();
        let xid = graph.input(&Tensor::new(vec![rows, 4], x));
        let (out, _) = mlp.forward_train(&mut graph, xid).unwrap();
        // gamma=1, beta=0 at init, so the output is the normalized batch
        let vals = graph.values(out);
        for c in 0..6 {
            let col: Vec<f64> = (0..rows).map(|r| vals[r * 6 + c]).collect();
            let mean = col.iter().sum::<f64>() / rows as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rows as f64;
            assert!(mean.abs() < 1e-10, "col {c} mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "col {c} var {var}");
        }
    }

    #[test]
    fn batchnorm_rejects_singleton_batches_in_train_mode() {
        let s = MlpSpec {
            widths: vec![2, 2],
            activations: vec![Activation::Linear],
            batchnorm: vec![true],
            seed: 3,
        };
        let mut mlp = Mlp::init(s).unwrap();
        let mut graph = Graph::new();
        let xid = graph.input(&Tensor::new(vec![1, 2], vec![0.0, 1.0]));
        let err = mlp.forward_train(&mut graph, xid).unwrap_err();
        assert!(matches!(err, NnError::BatchnormSingleton));
    }

    #[test]
    fn same_seed_gives_bit_identical_networks() {
        let a = Mlp::init(spec(&[5, 8, 3], Activation::Tanh, true)).unwrap();
        let b = Mlp::init(spec(&[5, 8, 3], Activation::Tanh, true)).unwrap();
        for (ta, tb) in a.trainable().iter().zip(b.trainable()) {
            assert_eq!(ta.1.values, tb.1.values);
        }
        let x = [0.1, -0.2, 0.3, 0.4, -0.5];
        assert_eq!(a.eval(&x, 1).unwrap(), b.eval(&x, 1).unwrap());
    }

    #[test]
    fn input_width_mismatch_is_reported() {
        let mlp = Mlp::init(spec(&[3, 2], Activation::Linear, false)).unwrap();
        let err = mlp.eval(&[1.0, 2.0], 1).unwrap_err();
        assert!(matches!(err, NnError::InputWidth { got: 2, expected: 3 }));
    }
}
