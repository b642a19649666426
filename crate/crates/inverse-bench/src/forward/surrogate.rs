//! MLP surrogate (de)serialization: a trained network standing in for an
//! expensive simulator, stored in the common checkpoint format.
//!
//! Layout: a `meta` tensor describing the architecture, then per-layer
//! weight/bias (and batchnorm) tensors named by slot. The meta tensor holds
//! `[n_widths, widths..., activation codes..., batchnorm flags..., seed]`.

use crate::autodiff::nn::Activation;
use crate::autodiff::{Mlp, MlpSpec, Tensor};
use crate::checkpoint::{Checkpoint, CheckpointError};

fn activation_code(a: Activation) -> f64 {
    match a {
        Activation::Relu => 0.0,
        Activation::Tanh => 1.0,
        Activation::Linear => 2.0,
    }
}

fn activation_from_code(c: f64) -> Result<Activation, CheckpointError> {
    match c as i64 {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::Tanh),
        2 => Ok(Activation::Linear),
        other => Err(CheckpointError::Malformed {
            line: 0,
            message: format!("unknown activation code {other}"),
        }),
    }
}

pub fn mlp_to_checkpoint(mlp: &Mlp) -> Checkpoint {
    let mut ckpt = Checkpoint::new();
    push_mlp(&mut ckpt, "", mlp);
    ckpt
}

/// Append an MLP's tensors under `<prefix>meta`, `<prefix>layer0.w`, ...
/// so several networks can share one checkpoint.
pub fn push_mlp(ckpt: &mut Checkpoint, prefix: &str, mlp: &Mlp) {
    let spec = &mlp.spec;
    let mut meta = vec![spec.widths.len() as f64];
    meta.extend(spec.widths.iter().map(|&w| w as f64));
    meta.extend(spec.activations.iter().map(|&a| activation_code(a)));
    meta.extend(spec.batchnorm.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    meta.push(spec.seed as f64);
    ckpt.push(format!("{prefix}meta"), Tensor::new(vec![meta.len()], meta));
    for (l, layer) in mlp.layers.iter().enumerate() {
        ckpt.push(format!("{prefix}layer{l}.w"), layer.weight.clone());
        ckpt.push(format!("{prefix}layer{l}.b"), layer.bias.clone());
        if let Some(bn) = &layer.bn {
            ckpt.push(format!("{prefix}layer{l}.gamma"), bn.gamma.clone());
            ckpt.push(format!("{prefix}layer{l}.beta"), bn.beta.clone());
            ckpt.push(
                format!("{prefix}layer{l}.running_mean"),
                Tensor::new(vec![1, bn.running_mean.len()], bn.running_mean.clone()),
            );
            ckpt.push(
                format!("{prefix}layer{l}.running_var"),
                Tensor::new(vec![1, bn.running_var.len()], bn.running_var.clone()),
            );
        }
    }
}

pub fn mlp_from_checkpoint(ckpt: &Checkpoint) -> Result<Mlp, CheckpointError> {
    read_mlp(ckpt, "")
}

/// Counterpart of [`push_mlp`].
pub fn read_mlp(ckpt: &Checkpoint, prefix: &str) -> Result<Mlp, CheckpointError> {
    let meta = &ckpt.get(&format!("{prefix}meta"))?.values;
    let bad = |message: String| CheckpointError::Malformed { line: 0, message };
    if meta.is_empty() {
        return Err(bad("empty meta tensor".into()));
    }
    let n_widths = meta[0] as usize;
    let layers = n_widths.saturating_sub(1);
    let expected = 1 + n_widths + 2 * layers + 1;
    if meta.len() != expected {
        return Err(bad(format!("meta length {} vs expected {expected}", meta.len())));
    }
    let widths: Vec<usize> = meta[1..1 + n_widths].iter().map(|&w| w as usize).collect();
    let activations: Vec<Activation> = meta[1 + n_widths..1 + n_widths + layers]
        .iter()
        .map(|&c| activation_from_code(c))
        .collect::<Result<_, _>>()?;
    let batchnorm: Vec<bool> =
        meta[1 + n_widths + layers..1 + n_widths + 2 * layers].iter().map(|&b| b != 0.0).collect();
    let seed = meta[expected - 1] as u64;
    let spec = MlpSpec { widths, activations, batchnorm, seed };
    let mut mlp = Mlp::init(spec)
        .map_err(|e| bad(format!("invalid architecture in checkpoint: {e}")))?;
    for (l, layer) in mlp.layers.iter_mut().enumerate() {
        let check = |name: &str, got: &Tensor, want: &Tensor| -> Result<(), CheckpointError> {
            if got.len() != want.len() {
                return Err(CheckpointError::ValueCount {
                    name: name.to_string(),
                    shape: got.shape.clone(),
                    expected: want.len(),
                    got: got.len(),
                });
            }
            Ok(())
        };
        let w = ckpt.get(&format!("{prefix}layer{l}.w"))?;
        check(&format!("{prefix}layer{l}.w"), w, &layer.weight)?;
        layer.weight.values = w.values.clone();
        let b = ckpt.get(&format!("{prefix}layer{l}.b"))?;
        check(&format!("{prefix}layer{l}.b"), b, &layer.bias)?;
        layer.bias.values = b.values.clone();
        if let Some(bn) = &mut layer.bn {
            bn.gamma.values = ckpt.get(&format!("{prefix}layer{l}.gamma"))?.values.clone();
            bn.beta.values = ckpt.get(&format!("{prefix}layer{l}.beta"))?.values.clone();
            bn.running_mean = ckpt.get(&format!("{prefix}layer{l}.running_mean"))?.values.clone();
            bn.running_var = ckpt.get(&format!("{prefix}layer{l}.running_var"))?.values.clone();
        }
    }
    Ok(mlp)
}
