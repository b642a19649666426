//! Affine coupling blocks with exact inverses and closed-form
//! log-determinants.
//!
//! One block passes half the vector through untouched, transforms the other
//! half as y₂ = x₂ ⊙ exp(s(x₁,c)) + t(x₁,c), and finishes with a fixed random
//! permutation. Halves alternate block to block. Scale outputs go through a
//! bounded soft clamp c·tanh(·/c) so exp stays well-conditioned.

use crate::autodiff::{Graph, Mlp, MlpSpec, NodeId, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::surrogate::{push_mlp, read_mlp};
use crate::rng::Rng;
use crate::solvers::SolverError;

pub const SCALE_CLAMP: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct CouplingBlock {
    pub scale_net: Mlp,
    pub translate_net: Mlp,
    /// Width of the passthrough half.
    pub split: usize,
    /// Transform the first half instead of the second.
    pub swap: bool,
    /// Fixed permutation applied after the affine map.
    pub perm: Vec<usize>,
}

/// Invertible map on `width`-dimensional vectors, optionally conditioned on a
/// `cond_width` auxiliary input fed to every subnet.
#[derive(Debug, Clone)]
pub struct Flow {
    pub blocks: Vec<CouplingBlock>,
    pub width: usize,
    pub cond_width: usize,
}

fn subnet(input: usize, hidden: &[usize], output: usize, seed: u64) -> Result<Mlp, SolverError> {
    let spec = MlpSpec::regression(
        input,
        hidden,
        output,
        crate::autodiff::Activation::Tanh,
        false,
        seed,
    );
    let mut net = Mlp::init(spec)?;
    // zero the output layer so the flow starts as the identity
    let last = net.layers.len() - 1;
    net.layers[last].weight.values.iter_mut().for_each(|v| *v = 0.0);
    net.layers[last].bias.values.iter_mut().for_each(|v| *v = 0.0);
    Ok(net)
}

impl Flow {
    pub fn new(
        width: usize,
        cond_width: usize,
        blocks: usize,
        hidden: &[usize],
        seed: u64,
    ) -> Result<Flow, SolverError> {
        if width < 2 {
            return Err(SolverError::BadConfig(format!(
                "coupling flows need width >= 2, got {width}"
            )));
        }
        let mut rng = Rng::new(seed ^ 0xf10f);
        let mut out = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let split = width / 2;
            let swap = b % 2 == 1;
            let (passthrough, transformed) =
                if swap { (width - split, split) } else { (split, width - split) };
            let sub_in = passthrough + cond_width;
            out.push(CouplingBlock {
                scale_net: subnet(sub_in, hidden, transformed, seed.wrapping_add(2 * b as u64))?,
                translate_net: subnet(
                    sub_in,
                    hidden,
                    transformed,
                    seed.wrapping_add(2 * b as u64 + 1),
                )?,
                split,
                swap,
                perm: rng.permutation(width),
            });
        }
        Ok(Flow { blocks: out, width, cond_width })
    }

    pub fn param_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.scale_net.param_count() + b.translate_net.param_count())
            .sum()
    }

    /// Trainable tensors across all blocks, in a fixed slot order.
    pub fn trainable(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for (n, t) in b.scale_net.trainable() {
                out.push((format!("block{i}.scale.{n}"), t));
            }
            for (n, t) in b.translate_net.trainable() {
                out.push((format!("block{i}.translate.{n}"), t));
            }
        }
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for b in self.blocks.iter_mut() {
            out.extend(b.scale_net.trainable_mut());
            out.extend(b.translate_net.trainable_mut());
        }
        out
    }

    /// Forward pass on the graph. Returns (y, per-sample logdet `[rows,1]`,
    /// parameter bindings in `trainable` slot order). `train` binds subnet
    /// parameters as trainable leaves.
    pub fn forward_graph(
        &mut self,
        graph: &mut Graph,
        x: NodeId,
        cond: Option<NodeId>,
        train: bool,
    ) -> Result<(NodeId, NodeId, Vec<NodeId>), SolverError> {
        let (rows, cols) = graph.shape(x);
        if cols != self.width {
            return Err(SolverError::BadConfig(format!(
                "flow width {} but input has {cols} columns",
                self.width
            )));
        }
        if let Some(c) = cond {
            let (crows, ccols) = graph.shape(c);
            if ccols != self.cond_width || crows != rows {
                return Err(SolverError::BadConfig(format!(
                    "condition shape [{crows},{ccols}] does not match [{rows},{}]",
                    self.cond_width
                )));
            }
        }
        let mut bindings = Vec::new();
        let mut h = x;
        let mut logdet = graph.constant(rows, 1, vec![0.0; rows]);
        for block in self.blocks.iter_mut() {
            let width = self.width;
            let (lo, hi) = if block.swap {
                (block.split, width) // passthrough columns
            } else {
                (0, block.split)
            };
            let passthrough = graph.slice_cols(h, lo, hi)?;
            let transformed_in = if block.swap {
                graph.slice_cols(h, 0, block.split)?
            } else {
                graph.slice_cols(h, block.split, width)?
            };
            let net_in = match cond {
                Some(c) => graph.concat_cols(passthrough, c)?,
                None => passthrough,
            };
            let (s_raw, t_out) = if train {
                let (s, bs) = block.scale_net.forward_train(graph, net_in)?;
                let (t, bt) = block.translate_net.forward_train(graph, net_in)?;
                bindings.extend(bs.ids);
                bindings.extend(bt.ids);
                (s, t)
            } else {
                (
                    block.scale_net.forward_eval(graph, net_in)?,
                    block.translate_net.forward_eval(graph, net_in)?,
                )
            };
            let sc = soft_clamp(graph, s_raw);
            let scale = graph.exp(sc);
            let scaled = graph.multiply(transformed_in, scale)?;
            let y2 = graph.add(scaled, t_out)?;
            let joined = if block.swap {
                graph.concat_cols(y2, passthrough)?
            } else {
                graph.concat_cols(passthrough, y2)?
            };
            h = graph.gather_cols(joined, &block.perm)?;
            let block_logdet = graph.sum_axis(sc, 1);
            logdet = graph.add(logdet, block_logdet)?;
        }
        Ok((h, logdet, bindings))
    }

    /// Exact inverse on plain values (`rows` x `width`, row-major), eval-mode
    /// subnets.
    pub fn inverse_values(
        &self,
        y: &[f64],
        cond: Option<&[f64]>,
        rows: usize,
    ) -> Result<Vec<f64>, SolverError> {
        let w = self.width;
        assert_eq!(y.len(), rows * w);
        let mut h = y.to_vec();
        for block in self.blocks.iter().rev() {
            // undo the permutation: output column j came from input index perm[j]
            let mut unperm = vec![0.0; rows * w];
            for r in 0..rows {
                for (j, &src) in block.perm.iter().enumerate() {
                    unperm[r * w + src] = h[r * w + j];
                }
            }
            let split = block.split;
            let (pass_range, trans_range) = if block.swap {
                (split..w, 0..split)
            } else {
                (0..split, split..w)
            };
            let pw = pass_range.len();
            let tw = trans_range.len();
            let mut net_in = Vec::with_capacity(rows * (pw + self.cond_width));
            for r in 0..rows {
                net_in.extend_from_slice(&unperm[r * w + pass_range.start..r * w + pass_range.end]);
                if let Some(c) = cond {
                    net_in
                        .extend_from_slice(&c[r * self.cond_width..(r + 1) * self.cond_width]);
                }
            }
            let s_raw = block.scale_net.eval(&net_in, rows)?;
            let t_out = block.translate_net.eval(&net_in, rows)?;
            let mut x = unperm.clone();
            for r in 0..rows {
                for j in 0..tw {
                    let sc = soft_clamp_value(s_raw[r * tw + j]);
                    let y2 = unperm[r * w + trans_range.start + j];
                    x[r * w + trans_range.start + j] =
                        (y2 - t_out[r * tw + j]) * (-sc).exp();
                }
            }
            h = x;
        }
        Ok(h)
    }

    /// Forward on plain values (eval-mode), returning (y, per-sample logdet).
    pub fn forward_values(
        &self,
        x: &[f64],
        cond: Option<&[f64]>,
        rows: usize,
    ) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        let mut graph = Graph::new();
        let xid = graph.input(&Tensor::new(vec![rows, self.width], x.to_vec()));
        let cid = match cond {
            Some(c) => Some(graph.input(&Tensor::new(vec![rows, self.cond_width], c.to_vec()))),
            None => None,
        };
        // forward_graph takes &mut self only for the train path
        let mut me = self.clone();
        let (y, logdet, _) = me.forward_graph(&mut graph, xid, cid, false)?;
        Ok((graph.values(y).to_vec(), graph.values(logdet).to_vec()))
    }

    pub fn to_checkpoint(&self, prefix: &str) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        self.push_to(&mut ckpt, prefix);
        ckpt
    }

    pub fn push_to(&self, ckpt: &mut Checkpoint, prefix: &str) {
        ckpt.push(
            format!("{prefix}shape"),
            Tensor::new(
                vec![3],
                vec![self.width as f64, self.cond_width as f64, self.blocks.len() as f64],
            ),
        );
        for (i, b) in self.blocks.iter().enumerate() {
            push_mlp(ckpt, &format!("{prefix}block{i}.scale."), &b.scale_net);
            push_mlp(ckpt, &format!("{prefix}block{i}.translate."), &b.translate_net);
            ckpt.push(
                format!("{prefix}block{i}.perm"),
                Tensor::new(vec![b.perm.len()], b.perm.iter().map(|&p| p as f64).collect()),
            );
            ckpt.push(
                format!("{prefix}block{i}.split"),
                Tensor::new(vec![2], vec![b.split as f64, if b.swap { 1.0 } else { 0.0 }]),
            );
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, prefix: &str) -> Result<Flow, SolverError> {
        let shape = &ckpt.get(&format!("{prefix}shape"))?.values;
        let (width, cond_width, n_blocks) =
            (shape[0] as usize, shape[1] as usize, shape[2] as usize);
        let mut blocks = Vec::with_capacity(n_blocks);
        for i in 0..n_blocks {
            let scale_net = read_mlp(ckpt, &format!("{prefix}block{i}.scale."))?;
            let translate_net = read_mlp(ckpt, &format!("{prefix}block{i}.translate."))?;
            let perm: Vec<usize> = ckpt
                .get(&format!("{prefix}block{i}.perm"))?
                .values
                .iter()
                .map(|&v| v as usize)
                .collect();
            let meta = &ckpt.get(&format!("{prefix}block{i}.split"))?.values;
            blocks.push(CouplingBlock {
                scale_net,
                translate_net,
                split: meta[0] as usize,
                swap: meta[1] != 0.0,
                perm,
            });
        }
        Ok(Flow { blocks, width, cond_width })
    }
}

fn soft_clamp(graph: &mut Graph, s: NodeId) -> NodeId {
    let inner = graph.scale(s, 1.0 / SCALE_CLAMP);
    let t = graph.tanh(inner);
    graph.scale(t, SCALE_CLAMP)
}

pub fn soft_clamp_value(s: f64) -> f64 {
    SCALE_CLAMP * (s / SCALE_CLAMP).tanh()
}
