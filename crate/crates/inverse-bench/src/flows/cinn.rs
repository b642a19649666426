//! Conditional invertible solver: the flow maps designs to latents
//! conditioned on the spectrum, z = f(g | s), with |z| = |g|. Training drives
//! the latents toward a standard normal; proposing inverts fresh normal draws
//! under the target condition.

use crate::autodiff::{Graph, Optimizer, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::task::TaskSpec;
use crate::forward::{Dataset, Split};
use crate::rng::Rng;

use super::coupling::Flow;
use crate::solvers::train::{epoch_batches, gather_rows, TrainLog};
use crate::solvers::{
    split_arrays, InverseSolver, ProposalSet, SolverConfig, SolverError, SolverKind,
};

pub struct CinnSolver {
    pub task: TaskSpec,
    flow: Flow,
}

impl CinnSolver {
    pub fn train(
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(CinnSolver, TrainLog), SolverError> {
        cfg.validate()?;
        let d_g = task.design_dim;
        let d_s = task.spectrum_dim;
        let (n_tr, s_tr, g_tr) = split_arrays(dataset, task, Split::Train);
        let (n_val, s_val, g_val) = split_arrays(dataset, task, Split::Val);
        if n_tr == 0 {
            return Err(SolverError::EmptySplit("train"));
        }
        let mut flow = Flow::new(d_g, d_s, cfg.blocks, &cfg.hidden, cfg.seed)?;
        let mut opt = Optimizer::adam(cfg.lr, &flow.trainable())
            .with_plateau(cfg.patience, cfg.decay_factor);
        let mut rng = Rng::new(cfg.seed ^ 0xc1);
        let mut log = TrainLog::default();
        let mut best = (f64::INFINITY, flow.clone(), 0usize);

        let batch_loss = |flow: &mut Flow,
                          graph: &mut Graph,
                          gn: &[f64],
                          s: &[f64],
                          rows: usize,
                          train: bool|
         -> Result<(crate::autodiff::NodeId, Vec<crate::autodiff::NodeId>), SolverError> {
            let x = graph.input(&Tensor::new(vec![rows, d_g], gn.to_vec()));
            let c = graph.input(&Tensor::new(vec![rows, d_s], s.to_vec()));
            let (z, logdet, bindings) = flow.forward_graph(graph, x, Some(c), train)?;
            let z_sq = graph.square(z);
            let normality = graph.sum(z_sq);
            let normality_scaled = graph.scale(normality, 0.5);
            let logdet_total = graph.sum(logdet);
            let neg_logdet = graph.neg(logdet_total);
            let total = graph.add(normality_scaled, neg_logdet)?;
            let loss = graph.scale(total, 1.0 / rows as f64);
            Ok((loss, bindings))
        };

        for epoch in 0..cfg.epochs {
            let mut epoch_loss = 0.0;
            for batch in epoch_batches(n_tr, cfg.batch_size, &mut rng) {
                let gb = gather_rows(&g_tr, d_g, &batch);
                let sb = gather_rows(&s_tr, d_s, &batch);
                let mut graph = Graph::new();
                let (loss, bindings) =
                    batch_loss(&mut flow, &mut graph, &gb, &sb, batch.len(), true)?;
                let loss_val = graph.value(loss);
                if !loss_val.is_finite() {
                    return Err(SolverError::NanLoss { epoch });
                }
                epoch_loss += loss_val * batch.len() as f64;
                graph.backward(loss)?;
                let grads: Vec<&[f64]> = bindings.iter().map(|&id| graph.grad(id)).collect();
                opt.step(&mut flow.trainable_mut(), &grads)?;
            }
            epoch_loss /= n_tr as f64;
            log.train_losses.push(epoch_loss);
            opt.plateau_step(epoch_loss);

            let val_loss = if n_val > 0 {
                let mut graph = Graph::new();
                let (loss, _) = batch_loss(&mut flow, &mut graph, &g_val, &s_val, n_val, false)?;
                graph.value(loss)
            } else {
                epoch_loss
            };
            log.val_losses.push(val_loss);
            if val_loss < best.0 {
                best = (val_loss, flow.clone(), epoch);
            }
        }
        log.best_epoch = best.2;
        Ok((CinnSolver { task: task.clone(), flow: best.1 }, log))
    }

    /// Latents for (normalized designs, spectra) under the trained flow.
    pub fn latents(&self, gn: &[f64], s: &[f64], rows: usize) -> Result<Vec<f64>, SolverError> {
        let (z, _) = self.flow.forward_values(gn, Some(s), rows)?;
        Ok(z)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, task: &TaskSpec) -> Result<CinnSolver, SolverError> {
        Ok(CinnSolver { task: task.clone(), flow: Flow::from_checkpoint(ckpt, "flow.")? })
    }
}

impl InverseSolver for CinnSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Cinn
    }

    fn task_spec(&self) -> &TaskSpec {
        &self.task
    }

    fn param_count(&self) -> usize {
        self.flow.param_count()
    }

    fn propose(&self, target: &[f64], count: usize, seed: u64) -> Result<ProposalSet, SolverError> {
        if target.len() != self.task.spectrum_dim {
            return Err(SolverError::TargetDim {
                got: target.len(),
                expected: self.task.spectrum_dim,
            });
        }
        let d_g = self.task.design_dim;
        let mut rng = Rng::new(seed);
        let z: Vec<f64> = (0..count * d_g).map(|_| rng.normal()).collect();
        let cond: Vec<f64> = target.iter().cycle().take(count * target.len()).copied().collect();
        let gn = self.flow.inverse_values(&z, Some(&cond), count)?;
        let designs = (0..count)
            .map(|r| {
                let mut g = self.task.denormalize(&gn[r * d_g..(r + 1) * d_g]);
                self.task.clip(&mut g);
                g
            })
            .collect();
        Ok(ProposalSet { target: target.to_vec(), designs, predicted_errors: None })
    }

    fn checkpoint(&self) -> Checkpoint {
        self.flow.to_checkpoint("flow.")
    }
}
