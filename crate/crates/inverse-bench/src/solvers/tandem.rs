//! Tandem solver: a forward net is trained first, then frozen while an
//! inverse net is trained through it on re-simulation error plus a boundary
//! penalty. The frozen stage sidesteps the unstable gradients a direct
//! inverse regression suffers on one-to-many data.

use crate::autodiff::{Graph, Mlp, MlpSpec, Optimizer, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::surrogate::{push_mlp, read_mlp};
use crate::forward::task::TaskSpec;
use crate::forward::{Dataset, Split};
use crate::rng::Rng;

use super::forward_net::ForwardNet;
use super::train::{epoch_batches, gather_rows, TrainLog};
use super::{
    boundary_loss_node, split_arrays, InverseSolver, ProposalSet, SolverConfig, SolverError,
    SolverKind,
};

pub struct TandemSolver {
    pub task: TaskSpec,
    pub forward: ForwardNet,
    inverse: Mlp, // spectrum -> normalized design
}

/// Training record for both stages.
pub struct TandemLog {
    pub stage1: TrainLog,
    pub stage2: TrainLog,
    /// Forward-parameter hash before and after stage 2; equal by contract.
    pub freeze_hash: (u64, u64),
}

impl TandemSolver {
    pub fn train(
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(TandemSolver, TandemLog), SolverError> {
        let (forward, stage1) = ForwardNet::train(dataset, task, cfg)?;
        let (solver, stage2, hashes) = Self::train_stage2(forward, dataset, task, cfg)?;
        Ok((solver, TandemLog { stage1, stage2, freeze_hash: hashes }))
    }

    /// Stage 2 against an existing (possibly shared) forward net.
    pub fn train_stage2(
        forward: ForwardNet,
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(TandemSolver, TrainLog, (u64, u64)), SolverError> {
        cfg.validate()?;
        let hash_before = forward.params_hash();
        let (n_tr, s_tr, _) = split_arrays(dataset, task, Split::Train);
        let (n_val, s_val, _) = split_arrays(dataset, task, Split::Val);
        if n_tr == 0 {
            return Err(SolverError::EmptySplit("train"));
        }
        let spec = MlpSpec::regression(
            task.spectrum_dim,
            &cfg.hidden,
            task.design_dim,
            cfg.activation,
            cfg.batchnorm,
            cfg.seed.wrapping_add(1),
        );
        let mut inverse = Mlp::init(spec)?;
        let mut opt = Optimizer::adam(cfg.lr, &inverse.trainable())
            .with_plateau(cfg.patience, cfg.decay_factor);
        let mut rng = Rng::new(cfg.seed ^ 0x7d2);
        let mut log = TrainLog::default();
        let mut best = (f64::INFINITY, inverse.clone(), 0usize);

        let resim_loss = |inverse: &mut Mlp,
                          spectra: &[f64],
                          rows: usize,
                          train: bool|
         -> Result<(f64, Option<(Graph, Vec<crate::autodiff::NodeId>)>), SolverError> {
            let mut graph = Graph::new();
            let x = graph.input(&Tensor::new(vec![rows, task.spectrum_dim], spectra.to_vec()));
            let (gn, binding) = if train {
                let (gn, b) = inverse.forward_train(&mut graph, x)?;
                (gn, Some(b))
            } else {
                (inverse.forward_eval(&mut graph, x)?, None)
            };
            let s_hat = forward.apply_frozen(&mut graph, gn)?;
            let diff = graph.sub(s_hat, x)?;
            let sq = graph.square(diff);
            let fit = graph.mean(sq);
            let mu = graph.constant(1, task.design_dim, vec![0.0; task.design_dim]);
            let half_r = graph.constant(1, task.design_dim, vec![1.0; task.design_dim]);
            let bdy_rows = boundary_loss_node(&mut graph, gn, mu, half_r)?;
            let bdy = graph.mean(bdy_rows);
            let bdy_scaled = graph.scale(bdy, cfg.boundary_weight);
            let loss = graph.add(fit, bdy_scaled)?;
            let v = graph.value(loss);
            if train {
                graph.backward(loss)?;
            }
            Ok((v, binding.map(|b| (graph, b.ids))))
        };

        for epoch in 0..cfg.epochs {
            let mut epoch_loss = 0.0;
            for batch in epoch_batches(n_tr, cfg.batch_size, &mut rng) {
                let xb = gather_rows(&s_tr, task.spectrum_dim, &batch);
                let (loss_val, ctx) = resim_loss(&mut inverse, &xb, batch.len(), true)?;
                if !loss_val.is_finite() {
                    return Err(SolverError::NanLoss { epoch });
                }
                epoch_loss += loss_val * batch.len() as f64;
                let (graph, ids) = ctx.expect("train pass always binds");
                let grads: Vec<&[f64]> = ids.iter().map(|&id| graph.grad(id)).collect();
                opt.step(&mut inverse.trainable_mut(), &grads)?;
            }
            epoch_loss /= n_tr as f64;
            log.train_losses.push(epoch_loss);
            opt.plateau_step(epoch_loss);

            let val_loss = if n_val > 0 {
                resim_loss(&mut inverse, &s_val, n_val, false)?.0
            } else {
                epoch_loss
            };
            log.val_losses.push(val_loss);
            if val_loss < best.0 {
                best = (val_loss, inverse.clone(), epoch);
            }
        }
        log.best_epoch = best.2;
        let hash_after = forward.params_hash();
        debug_assert_eq!(hash_before, hash_after);
        Ok((
            TandemSolver { task: task.clone(), forward, inverse: best.1 },
            log,
            (hash_before, hash_after),
        ))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, task: &TaskSpec) -> Result<TandemSolver, SolverError> {
        Ok(TandemSolver {
            task: task.clone(),
            forward: ForwardNet::from_checkpoint(ckpt, task)?,
            inverse: read_mlp(ckpt, "inverse.")?,
        })
    }
}

impl InverseSolver for TandemSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Tandem
    }

    fn task_spec(&self) -> &TaskSpec {
        &self.task
    }

    fn param_count(&self) -> usize {
        self.inverse.param_count() + self.forward.param_count()
    }

    fn propose(&self, target: &[f64], count: usize, _seed: u64) -> Result<ProposalSet, SolverError> {
        if target.len() != self.task.spectrum_dim {
            return Err(SolverError::TargetDim {
                got: target.len(),
                expected: self.task.spectrum_dim,
            });
        }
        let gn = self.inverse.eval(target, 1)?;
        let mut g = self.task.denormalize(&gn);
        self.task.clip(&mut g);
        Ok(ProposalSet {
            target: target.to_vec(),
            designs: vec![g; count],
            predicted_errors: None,
        })
    }

    fn checkpoint(&self) -> Checkpoint {
        let mut ckpt = self.forward.to_checkpoint();
        push_mlp(&mut ckpt, "inverse.", &self.inverse);
        ckpt
    }
}
