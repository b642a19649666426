//! Trained forward surrogate f̂: normalized design -> spectrum.
//!
//! One surrogate backs the tandem second stage, the neural-adjoint descent,
//! and the genetic algorithm's fitness, mirroring how those methods share a
//! forward network in the benchmark protocol.

use crate::autodiff::{Graph, Mlp, MlpSpec, NodeId, Optimizer, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::surrogate::{push_mlp, read_mlp};
use crate::forward::task::TaskSpec;
use crate::forward::{Dataset, Split};
use crate::rng::Rng;

use super::train::{epoch_batches, gather_rows, TrainLog};
use super::{split_arrays, SolverConfig, SolverError};

#[derive(Debug, Clone)]
pub struct ForwardNet {
    pub task: TaskSpec,
    pub net: Mlp,
}

impl ForwardNet {
    /// Train on the dataset's train split by spectrum MSE; the snapshot with
    /// the lowest validation MSE wins.
    pub fn train(
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(ForwardNet, TrainLog), SolverError> {
        cfg.validate()?;
        let (n_tr, s_tr, g_tr) = split_arrays(dataset, task, Split::Train);
        let (n_val, s_val, g_val) = split_arrays(dataset, task, Split::Val);
        if n_tr == 0 {
            return Err(SolverError::EmptySplit("train"));
        }
        let spec = MlpSpec::regression(
            task.design_dim,
            &cfg.hidden,
            task.spectrum_dim,
            cfg.activation,
            cfg.batchnorm,
            cfg.seed,
        );
        let mut net = Mlp::init(spec)?;
        let mut opt = Optimizer::adam(cfg.lr, &net.trainable())
            .with_plateau(cfg.patience, cfg.decay_factor);

        let mut rng = Rng::new(cfg.seed ^ 0x5eed);
        let mut log = TrainLog::default();
        let mut best = (f64::INFINITY, net.clone(), 0usize);
        for epoch in 0..cfg.epochs {
            let mut epoch_loss = 0.0;
            for batch in epoch_batches(n_tr, cfg.batch_size, &mut rng) {
                let xb = gather_rows(&g_tr, task.design_dim, &batch);
                let tb = gather_rows(&s_tr, task.spectrum_dim, &batch);
                let mut graph = Graph::new();
                let x = graph.input(&Tensor::new(vec![batch.len(), task.design_dim], xb));
                let t = graph.input(&Tensor::new(vec![batch.len(), task.spectrum_dim], tb));
                let (out, binding) = net.forward_train(&mut graph, x)?;
                let diff = graph.sub(out, t)?;
                let sq = graph.square(diff);
                let loss = graph.mean(sq);
                let loss_val = graph.value(loss);
                if !loss_val.is_finite() {
                    return Err(SolverError::NanLoss { epoch });
                }
                epoch_loss += loss_val * batch.len() as f64;
                graph.backward(loss)?;
                let grads: Vec<&[f64]> = binding.ids.iter().map(|&id| graph.grad(id)).collect();
                opt.step(&mut net.trainable_mut(), &grads)?;
            }
            epoch_loss /= n_tr as f64;
            log.train_losses.push(epoch_loss);
            opt.plateau_step(epoch_loss);

            let val_loss = if n_val > 0 {
                mse_eval(&net, &g_val, &s_val, n_val, task)
            } else {
                epoch_loss
            };
            log.val_losses.push(val_loss);
            if val_loss < best.0 {
                best = (val_loss, net.clone(), epoch);
            }
        }
        log.best_epoch = best.2;
        Ok((ForwardNet { task: task.clone(), net: best.1 }, log))
    }

    /// Predicted spectrum for one raw design.
    pub fn predict(&self, g_raw: &[f64]) -> Vec<f64> {
        let gn = self.task.normalize(g_raw);
        self.net.eval(&gn, 1).expect("surrogate width checked at construction")
    }

    /// Predicted spectra for `rows` normalized designs, flat row-major.
    pub fn predict_normalized(&self, gn: &[f64], rows: usize) -> Vec<f64> {
        self.net.eval(gn, rows).expect("surrogate width checked at construction")
    }

    /// Mean squared surrogate re-simulation error of one normalized design
    /// against a target spectrum.
    pub fn surrogate_mse(&self, gn: &[f64], target: &[f64]) -> f64 {
        let s = self.predict_normalized(gn, 1);
        s.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / target.len() as f64
    }

    /// Eval-mode forward pass node (frozen parameters, differentiable in x).
    pub fn apply_frozen(&self, graph: &mut Graph, x: NodeId) -> Result<NodeId, SolverError> {
        Ok(self.net.forward_eval(graph, x)?)
    }

    /// FNV-1a over the parameter bit patterns; freeze contracts compare this.
    pub fn params_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for (_, t) in self.net.trainable() {
            for v in &t.values {
                for b in v.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x1000_0000_01b3);
                }
            }
        }
        h
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        push_mlp(&mut ckpt, "forward.", &self.net);
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, task: &TaskSpec) -> Result<ForwardNet, SolverError> {
        let net = read_mlp(ckpt, "forward.")?;
        Ok(ForwardNet { task: task.clone(), net })
    }
}

fn mse_eval(net: &Mlp, gn: &[f64], s: &[f64], rows: usize, task: &TaskSpec) -> f64 {
    let pred = net.eval(gn, rows).expect("shapes fixed by training");
    pred.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        / (rows * task.spectrum_dim) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use crate::forward::{generate_dataset, Task};

    #[test]
    fn surrogate_learns_the_linear_toy() {
        let task = Task::linear();
        let ds = generate_dataset(&task, 300, 11, [0.8, 0.2, 0.0]).unwrap();
        let cfg = SolverConfig {
            hidden: vec![32],
            activation: Activation::Tanh,
            batchnorm: false,
            epochs: 200,
            batch_size: 64,
            lr: 5e-3,
            seed: 3,
            ..SolverConfig::default()
        };
        let (net, log) = ForwardNet::train(&ds, &task.spec, &cfg).unwrap();
        let final_val = *log.val_losses.last().unwrap();
        assert!(final_val < 5e-3, "surrogate val MSE {final_val}");
        // prediction quality on a fresh design
        let g = [0.3, -0.6];
        let true_s = task.simulate(&g).unwrap();
        let pred = net.predict(&g);
        let mse = pred
            .iter()
            .zip(&true_s)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / true_s.len() as f64;
        assert!(mse < 2e-2, "fresh-design mse {mse}");
    }

    #[test]
    fn params_hash_tracks_changes() {
        let task = Task::linear();
        let ds = generate_dataset(&task, 50, 2, [0.8, 0.2, 0.0]).unwrap();
        let cfg = SolverConfig {
            hidden: vec![8],
            batchnorm: false,
            epochs: 2,
            batch_size: 16,
            ..SolverConfig::default()
        };
        let (mut net, _) = ForwardNet::train(&ds, &task.spec, &cfg).unwrap();
        let h0 = net.params_hash();
        assert_eq!(h0, net.params_hash());
        net.net.layers[0].weight.values[0] += 1.0;
        assert_ne!(h0, net.params_hash());
    }
}
