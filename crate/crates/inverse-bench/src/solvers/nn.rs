//! Direct inverse regression: one MLP from spectrum to design, trained with
//! MSE against the ground-truth geometry. Deterministic, single-solution;
//! the baseline every inverse comparison should include.

use crate::autodiff::{Graph, Mlp, MlpSpec, Optimizer, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::surrogate::{push_mlp, read_mlp};
use crate::forward::task::TaskSpec;
use crate::forward::{Dataset, Split};
use crate::rng::Rng;

use super::train::{epoch_batches, gather_rows, TrainLog};
use super::{split_arrays, InverseSolver, ProposalSet, SolverConfig, SolverError, SolverKind};

pub struct NnSolver {
    pub task: TaskSpec,
    net: Mlp, // spectrum -> normalized design
}

impl NnSolver {
    pub fn train(
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(NnSolver, TrainLog), SolverError> {
        cfg.validate()?;
        let (n_tr, s_tr, g_tr) = split_arrays(dataset, task, Split::Train);
        let (n_val, s_val, g_val) = split_arrays(dataset, task, Split::Val);
        if n_tr == 0 {
            return Err(SolverError::EmptySplit("train"));
        }
        let spec = MlpSpec::regression(
            task.spectrum_dim,
            &cfg.hidden,
            task.design_dim,
            cfg.activation,
            cfg.batchnorm,
            cfg.seed,
        );
        let mut net = Mlp::init(spec)?;
        let mut opt = Optimizer::adam(cfg.lr, &net.trainable())
            .with_plateau(cfg.patience, cfg.decay_factor);
        let mut rng = Rng::new(cfg.seed ^ 0x77);
        let mut log = TrainLog::default();
        let mut best = (f64::INFINITY, net.clone(), 0usize);
        for epoch in 0..cfg.epochs {
            let mut epoch_loss = 0.0;
            for batch in epoch_batches(n_tr, cfg.batch_size, &mut rng) {
                let xb = gather_rows(&s_tr, task.spectrum_dim, &batch);
                let tb = gather_rows(&g_tr, task.design_dim, &batch);
                let mut graph = Graph::new();
                let x = graph.input(&Tensor::new(vec![batch.len(), task.spectrum_dim], xb));
                let t = graph.input(&Tensor::new(vec![batch.len(), task.design_dim], tb));
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
                let pred = net.eval(&s_val, n_val)?;
                pred.iter().zip(&g_val).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                    / g_val.len() as f64
            } else {
                epoch_loss
            };
            log.val_losses.push(val_loss);
            if val_loss < best.0 {
                best = (val_loss, net.clone(), epoch);
            }
        }
        log.best_epoch = best.2;
        Ok((NnSolver { task: task.clone(), net: best.1 }, log))
    }

    pub fn final_train_loss(log: &TrainLog) -> f64 {
        log.train_losses.last().copied().unwrap_or(f64::NAN)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, task: &TaskSpec) -> Result<NnSolver, SolverError> {
        Ok(NnSolver { task: task.clone(), net: read_mlp(ckpt, "inverse.")? })
    }
}

impl InverseSolver for NnSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Nn
    }

    fn task_spec(&self) -> &TaskSpec {
        &self.task
    }

    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    fn propose(&self, target: &[f64], count: usize, _seed: u64) -> Result<ProposalSet, SolverError> {
        if target.len() != self.task.spectrum_dim {
            return Err(SolverError::TargetDim {
                got: target.len(),
                expected: self.task.spectrum_dim,
            });
        }
        let gn = self.net.eval(target, 1)?;
        let mut g = self.task.denormalize(&gn);
        self.task.clip(&mut g);
        Ok(ProposalSet {
            target: target.to_vec(),
            designs: vec![g; count],
            predicted_errors: None,
        })
    }

    fn checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        push_mlp(&mut ckpt, "inverse.", &self.net);
        ckpt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use crate::forward::{generate_dataset, Task};

    fn overfit_cfg() -> SolverConfig {
        SolverConfig {
            hidden: vec![],
            activation: Activation::Linear,
            batchnorm: false,
            epochs: 1500,
            batch_size: 20,
            lr: 0.05,
            patience: 200,
            seed: 5,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn overfits_the_bijective_linear_toy() {
        // 20 samples of an invertible linear map: a linear net must drive the
        // training MSE to numerical zero.
        let task = Task::linear();
        let ds = generate_dataset(&task, 20, 8, [1.0, 0.0, 0.0]).unwrap();
        let (_, log) = NnSolver::train(&ds, &task.spec, &overfit_cfg()).unwrap();
        let final_loss = *log.train_losses.last().unwrap();
        assert!(final_loss < 1e-6, "training MSE {final_loss}");
    }

    #[test]
    fn propose_returns_identical_rows() {
        let task = Task::toy();
        let ds = generate_dataset(&task, 60, 1, [0.8, 0.2, 0.0]).unwrap();
        let cfg = SolverConfig {
            hidden: vec![16],
            epochs: 5,
            batch_size: 16,
            batchnorm: false,
            ..SolverConfig::default()
        };
        let (solver, _) = NnSolver::train(&ds, &task.spec, &cfg).unwrap();
        let target = task.simulate(&[0.4, 0.1]).unwrap();
        let props = solver.propose(&target, 5, 999).unwrap();
        assert_eq!(props.designs.len(), 5);
        for d in &props.designs {
            assert_eq!(d, &props.designs[0]);
            assert!(task.spec.check_bounds(d).is_ok());
        }
    }
}
