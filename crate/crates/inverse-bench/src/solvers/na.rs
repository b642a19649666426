//! Neural adjoint: gradient descent on a pool of candidate designs through a
//! frozen forward surrogate, with the boundary penalty keeping candidates
//! inside the training hypercube. Candidates are ranked by their surrogate
//! re-simulation error; the best T are returned.

use crate::autodiff::{Graph, Optimizer, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::task::TaskSpec;
use crate::rng::Rng;

use super::forward_net::ForwardNet;
use super::{
    boundary_loss_node, InverseSolver, ProposalSet, SolverConfig, SolverError, SolverKind,
};

pub struct NaSolver {
    pub surrogate: ForwardNet,
    cfg: SolverConfig,
}

impl NaSolver {
    pub fn new(surrogate: ForwardNet, cfg: SolverConfig) -> Result<NaSolver, SolverError> {
        cfg.validate()?;
        Ok(NaSolver { surrogate, cfg })
    }

    /// One descent run: optimize `pool` candidates for `target`, return
    /// (normalized designs, surrogate MSEs) sorted ascending by error.
    fn optimize_pool(
        &self,
        target: &[f64],
        pool: usize,
        seed: u64,
    ) -> Result<Vec<(Vec<f64>, f64)>, SolverError> {
        let task = &self.surrogate.task;
        let d = task.design_dim;
        let mut rng = Rng::new(seed);
        let mut candidates =
            Tensor::new(vec![pool, d], (0..pool * d).map(|_| rng.uniform(-1.0, 1.0)).collect());
        let mut opt = Optimizer::adam(self.cfg.na_lr, &[("designs".into(), &candidates)]);
        let target_t = Tensor::new(vec![1, target.len()], target.to_vec());

        for _ in 0..self.cfg.iterations {
            let mut graph = Graph::new();
            let g = graph.param(&candidates);
            let s_hat = self.surrogate.apply_frozen(&mut graph, g)?;
            let t = graph.input(&target_t);
            let diff = graph.sub(s_hat, t)?;
            let sq = graph.square(diff);
            let fit_rows = graph.mean_axis(sq, 1);
            let mu = graph.constant(1, d, vec![0.0; d]);
            let half_r = graph.constant(1, d, vec![1.0; d]);
            let bdy_rows = boundary_loss_node(&mut graph, g, mu, half_r)?;
            let bdy_scaled = graph.scale(bdy_rows, self.cfg.boundary_weight);
            let per_candidate = graph.add(fit_rows, bdy_scaled)?;
            let loss = graph.sum(per_candidate);
            graph.backward(loss)?;
            let grad = graph.grad(g).to_vec();
            opt.step(&mut [&mut candidates], &[&grad])?;
        }

        // clip and rank by surrogate error of the clipped candidate
        let mut ranked = Vec::with_capacity(pool);
        for row in 0..pool {
            let mut gn = candidates.values[row * d..(row + 1) * d].to_vec();
            for v in gn.iter_mut() {
                *v = v.clamp(-1.0, 1.0);
            }
            let err = self.surrogate.surrogate_mse(&gn, target);
            ranked.push((gn, err));
        }
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
        Ok(ranked)
    }
}

impl InverseSolver for NaSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Na
    }

    fn task_spec(&self) -> &TaskSpec {
        &self.surrogate.task
    }

    fn param_count(&self) -> usize {
        self.surrogate.param_count()
    }

    fn propose(&self, target: &[f64], count: usize, seed: u64) -> Result<ProposalSet, SolverError> {
        let task = &self.surrogate.task;
        if target.len() != task.spectrum_dim {
            return Err(SolverError::TargetDim { got: target.len(), expected: task.spectrum_dim });
        }
        let pool = count * self.cfg.na_oversample;
        if pool < count {
            return Err(SolverError::PoolTooSmall { pool, requested: count });
        }
        let ranked = self.optimize_pool(target, pool, seed)?;
        let mut designs = Vec::with_capacity(count);
        let mut errors = Vec::with_capacity(count);
        for (gn, err) in ranked.into_iter().take(count) {
            let mut g = task.denormalize(&gn);
            task.clip(&mut g);
            designs.push(g);
            errors.push(err);
        }
        Ok(ProposalSet { target: target.to_vec(), designs, predicted_errors: Some(errors) })
    }

    fn checkpoint(&self) -> Checkpoint {
        self.surrogate.to_checkpoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Activation, Mlp, MlpSpec};
    use crate::forward::{task::linear_task_matrix, Task};
    use crate::solvers::SolverConfig;

    /// Surrogate that IS the linear toy map, expressed in normalized design
    /// coordinates (the toy bounds are [-1,1] so normalize is the identity).
    fn perfect_linear_surrogate() -> (Task, ForwardNet) {
        let task = Task::linear();
        let m = linear_task_matrix(&task).unwrap().to_vec();
        let d_s = task.spec.spectrum_dim;
        let spec = MlpSpec {
            widths: vec![2, d_s],
            activations: vec![Activation::Linear],
            batchnorm: vec![false],
            seed: 0,
        };
        let mut net = Mlp::init(spec).unwrap();
        // weight layout is [in, out]; the task matrix is [out, in]
        for o in 0..d_s {
            for i in 0..2 {
                net.layers[0].weight.values[i * d_s + o] = m[o * 2 + i];
            }
        }
        net.layers[0].bias.values.iter_mut().for_each(|b| *b = 0.0);
        (task.clone(), ForwardNet { task: task.spec.clone(), net })
    }

    #[test]
    fn perfect_surrogate_drives_the_rank_one_error_to_zero() {
        let (task, surrogate) = perfect_linear_surrogate();
        let cfg = SolverConfig { iterations: 600, na_lr: 5e-2, ..SolverConfig::default() };
        let na = NaSolver::new(surrogate, cfg).unwrap();
        let target = task.simulate(&[0.31, -0.44]).unwrap();
        let props = na.propose(&target, 4, 7).unwrap();
        let best_err = props.predicted_errors.as_ref().unwrap()[0];
        assert!(best_err < 1e-8, "rank-1 surrogate loss {best_err}");
    }

    #[test]
    fn returned_errors_are_nondecreasing_and_designs_in_bounds() {
        let (task, surrogate) = perfect_linear_surrogate();
        let cfg = SolverConfig { iterations: 80, ..SolverConfig::default() };
        let na = NaSolver::new(surrogate, cfg).unwrap();
        let target = task.simulate(&[-0.6, 0.2]).unwrap();
        let props = na.propose(&target, 6, 3).unwrap();
        let errs = props.predicted_errors.unwrap();
        assert!(errs.windows(2).all(|w| w[0] <= w[1]), "ranking violated: {errs:?}");
        for g in &props.designs {
            assert!(task.spec.check_bounds(g).is_ok());
        }
    }

    #[test]
    fn undersized_pool_is_rejected() {
        let (_, surrogate) = perfect_linear_surrogate();
        let cfg = SolverConfig { na_oversample: 0, ..SolverConfig::default() };
        let na = NaSolver::new(surrogate, cfg).unwrap();
        let task = Task::linear();
        let target = task.simulate(&[0.1, 0.1]).unwrap();
        let err = na.propose(&target, 2, 1).unwrap_err();
        assert!(matches!(err, SolverError::PoolTooSmall { pool: 0, requested: 2 }));
    }
}
