//! Invertible neural network solver. The flow learns the forward map as
//! [ŝ, z] = f([g, 0-padding]); sampling the latent and running the exact
//! inverse on [s, z] proposes designs. The widths must satisfy
//! |g| + |pad| = |s| + |z|.

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

pub struct InnSolver {
    pub task: TaskSpec,
    flow: Flow,
    latent_dim: usize,
    pad_dim: usize,
    sigma: f64,
}

impl InnSolver {
    /// Width bookkeeping: total = |s| + |z|, padding = total - |g|.
    /// Fails when the identity cannot hold (|g| > |s| + |z|).
    pub fn dims(task: &TaskSpec, latent: usize) -> Result<(usize, usize), SolverError> {
        let total = task.spectrum_dim + latent;
        if task.design_dim > total {
            return Err(SolverError::BadConfig(format!(
                "dimension identity violated: |g|={} exceeds |s|+|z|={total}",
                task.design_dim
            )));
        }
        Ok((total, total - task.design_dim))
    }

    pub fn train(
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(InnSolver, TrainLog), SolverError> {
        cfg.validate()?;
        let latent = cfg.inn_latent;
        let (width, pad) = Self::dims(task, latent)?;
        let (n_tr, s_tr, g_tr) = split_arrays(dataset, task, Split::Train);
        let (n_val, s_val, g_val) = split_arrays(dataset, task, Split::Val);
        if n_tr == 0 {
            return Err(SolverError::EmptySplit("train"));
        }
        let mut flow = Flow::new(width, 0, cfg.blocks, &cfg.hidden, cfg.seed)?;
        let mut opt = Optimizer::adam(cfg.lr, &flow.trainable())
            .with_plateau(cfg.patience, cfg.decay_factor);
        let mut rng = Rng::new(cfg.seed ^ 0x1aa);
        let mut log = TrainLog::default();
        let mut best = (f64::INFINITY, flow.clone(), 0usize);
        let d_g = task.design_dim;
        let d_s = task.spectrum_dim;

        let batch_loss = |flow: &mut Flow,
                          graph: &mut Graph,
                          gn: &[f64],
                          s: &[f64],
                          rows: usize,
                          train: bool|
         -> Result<(crate::autodiff::NodeId, Vec<crate::autodiff::NodeId>), SolverError> {
            // input [g, zero padding]
            let mut x = Vec::with_capacity(rows * width);
            for r in 0..rows {
                x.extend_from_slice(&gn[r * d_g..(r + 1) * d_g]);
                x.extend(std::iter::repeat(0.0).take(pad));
            }
            let xid = graph.input(&Tensor::new(vec![rows, width], x));
            let (y, logdet, bindings) = flow.forward_graph(graph, xid, None, train)?;
            let s_hat = graph.slice_cols(y, 0, d_s)?;
            let z = graph.slice_cols(y, d_s, width)?;
            let s_node = graph.input(&Tensor::new(vec![rows, d_s], s.to_vec()));
            let diff = graph.sub(s_hat, s_node)?;
            let sq = graph.square(diff);
            let fit = graph.sum(sq);
            let fit_scaled = graph.scale(fit, 0.5 / (cfg.sigma_fit * cfg.sigma_fit));
            let z_sq = graph.square(z);
            let normality = graph.sum(z_sq);
            let normality_scaled = graph.scale(normality, 0.5);
            let logdet_total = graph.sum(logdet);
            let neg_logdet = graph.neg(logdet_total);
            let a = graph.add(fit_scaled, normality_scaled)?;
            let total = graph.add(a, neg_logdet)?;
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
        Ok((
            InnSolver {
                task: task.clone(),
                flow: best.1,
                latent_dim: latent,
                pad_dim: pad,
                sigma: cfg.sigma_fit,
            },
            log,
        ))
    }

    /// Forward prediction ŝ for normalized designs (the first |s| outputs).
    pub fn predict_spectra(&self, gn: &[f64], rows: usize) -> Result<Vec<f64>, SolverError> {
        let width = self.task.spectrum_dim + self.latent_dim;
        let d_g = self.task.design_dim;
        let mut x = Vec::with_capacity(rows * width);
        for r in 0..rows {
            x.extend_from_slice(&gn[r * d_g..(r + 1) * d_g]);
            x.extend(std::iter::repeat(0.0).take(self.pad_dim));
        }
        let (y, _) = self.flow.forward_values(&x, None, rows)?;
        let d_s = self.task.spectrum_dim;
        let mut out = Vec::with_capacity(rows * d_s);
        for r in 0..rows {
            out.extend_from_slice(&y[r * width..r * width + d_s]);
        }
        Ok(out)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<InnSolver, SolverError> {
        let flow = Flow::from_checkpoint(ckpt, "flow.")?;
        let (_, pad) = Self::dims(task, cfg.inn_latent)?;
        Ok(InnSolver {
            task: task.clone(),
            flow,
            latent_dim: cfg.inn_latent,
            pad_dim: pad,
            sigma: cfg.sigma_fit,
        })
    }
}

impl InverseSolver for InnSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Inn
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
        let width = self.task.spectrum_dim + self.latent_dim;
        let mut rng = Rng::new(seed);
        let mut y = Vec::with_capacity(count * width);
        for _ in 0..count {
            y.extend_from_slice(target);
            for _ in 0..self.latent_dim {
                y.push(rng.normal());
            }
        }
        let x = self.flow.inverse_values(&y, None, count)?;
        let d_g = self.task.design_dim;
        let designs = (0..count)
            .map(|r| {
                // strip the padding coordinates
                let gn = &x[r * width..r * width + d_g];
                let mut g = self.task.denormalize(gn);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{generate_dataset, Task};

    fn quick_cfg() -> SolverConfig {
        SolverConfig {
            hidden: vec![48],
            epochs: 300,
            batch_size: 100,
            lr: 3e-3,
            blocks: 6,
            sigma_fit: 0.05,
            inn_latent: 2,
            seed: 11,
            patience: 30,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn dimension_identity_is_enforced() {
        let task = Task::toy(); // |g*|=2, |s|=32
        let (width, pad) = InnSolver::dims(&task.spec, 2).unwrap();
        assert_eq!(width, 34);
        assert_eq!(pad, 32);
        // |g| > |s| + |z| cannot be padded
        let mut bad = task.spec.clone();
        bad.design_dim = 40;
        assert!(InnSolver::dims(&bad, 2).is_err());
    }

    #[test]
    fn trained_flow_predicts_spectra_on_the_linear_toy() {
        let task = Task::linear();
        let ds = generate_dataset(&task, 500, 29, [0.8, 0.2, 0.0]).unwrap();
        let (solver, _) = InnSolver::train(&ds, &task.spec, &quick_cfg()).unwrap();
        // forward-prediction quality on the validation rows
        let rows = ds.rows(crate::forward::Split::Val);
        let mut mse = 0.0;
        let mut count = 0;
        for &i in rows.iter().take(50) {
            let gn = task.spec.normalize(&ds.designs[i]);
            let pred = solver.predict_spectra(&gn, 1).unwrap();
            for (a, b) in pred.iter().zip(&ds.spectra[i]) {
                mse += (a - b) * (a - b);
                count += 1;
            }
        }
        mse /= count as f64;
        assert!(mse < 1e-3, "forward-predicted spectrum MSE {mse}");
    }

    #[test]
    fn proposals_have_design_width_and_distinct_latents_give_distinct_designs() {
        let task = Task::toy();
        let ds = generate_dataset(&task, 300, 7, [0.8, 0.2, 0.0]).unwrap();
        let cfg = SolverConfig { epochs: 100, ..quick_cfg() };
        let (solver, _) = InnSolver::train(&ds, &task.spec, &cfg).unwrap();
        let target = task.simulate(&[0.5, 0.2]).unwrap();
        let props = solver.propose(&target, 8, 3).unwrap();
        assert_eq!(props.designs.len(), 8);
        for g in &props.designs {
            assert_eq!(g.len(), 2);
            assert!(task.spec.check_bounds(g).is_ok());
        }
        let first = &props.designs[0];
        assert!(
            props.designs.iter().any(|g| {
                g.iter().zip(first).map(|(a, b)| (a - b).abs()).sum::<f64>() > 1e-6
            }),
            "all proposals identical despite distinct latents"
        );
    }
}
