//! Real-valued genetic algorithm over designs, scored by surrogate
//! re-simulation error. Roulette-wheel parent selection with probability
//! proportional to fitness, sequential pairing, single-point crossover,
//! per-gene uniform point mutation, and elitism copying the top-k verbatim.
//!
//! Fitness is 1/(MSE + 1e-9) so roulette weights stay positive and bounded.

use crate::checkpoint::Checkpoint;
use crate::forward::task::TaskSpec;
use crate::rng::Rng;

use super::forward_net::ForwardNet;
use super::{InverseSolver, ProposalSet, SolverConfig, SolverError, SolverKind};

const FITNESS_EPS: f64 = 1e-9;

pub struct GaSolver {
    pub surrogate: ForwardNet,
    cfg: SolverConfig,
}

impl GaSolver {
    pub fn new(surrogate: ForwardNet, cfg: SolverConfig) -> Result<GaSolver, SolverError> {
        cfg.validate()?;
        if cfg.population < cfg.elitism + 2 {
            return Err(SolverError::BadConfig(format!(
                "population {} must be at least elitism {} + 2",
                cfg.population, cfg.elitism
            )));
        }
        Ok(GaSolver { surrogate, cfg })
    }

    /// Best fitness per generation (used by the monotonicity tests).
    pub fn evolve_trace(
        &self,
        target: &[f64],
        seed: u64,
    ) -> Result<(Vec<Vec<f64>>, Vec<f64>), SolverError> {
        let task = &self.surrogate.task;
        let d = task.design_dim;
        let pop_size = self.cfg.population;
        let mut rng = Rng::new(seed);
        let mut population: Vec<Vec<f64>> = (0..pop_size)
            .map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let mut best_per_gen = Vec::with_capacity(self.cfg.iterations);

        for _gen in 0..self.cfg.iterations {
            let fitness = self.fitness_of(&population, target);
            let mut order: Vec<usize> = (0..pop_size).collect();
            order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
            best_per_gen.push(fitness[order[0]]);

            // elites pass unmodified
            let mut next: Vec<Vec<f64>> =
                order[..self.cfg.elitism].iter().map(|&i| population[i].clone()).collect();

            // roulette draws, paired sequentially; round up to whole pairs
            let n_children = pop_size - self.cfg.elitism;
            let probs = selection_probabilities(&fitness);
            let n_parents = n_children + n_children % 2;
            let parents: Vec<usize> =
                (0..n_parents).map(|_| roulette_draw(&probs, &mut rng)).collect();
            for pair in parents.chunks_exact(2) {
                let (pa, pb) = (&population[pair[0]], &population[pair[1]]);
                let (mut ca, mut cb) = (pa.clone(), pb.clone());
                if rng.next_f64() < self.cfg.crossover_rate && d > 1 {
                    let point = 1 + rng.below(d - 1);
                    single_point_crossover(&mut ca, &mut cb, point);
                }
                for child in [&mut ca, &mut cb] {
                    for gene in child.iter_mut() {
                        if rng.next_f64() < self.cfg.mutation_rate {
                            *gene = rng.uniform(-1.0, 1.0);
                        }
                    }
                }
                next.push(ca);
                if next.len() < pop_size {
                    next.push(cb);
                }
            }
            next.truncate(pop_size);
            population = next;
        }
        // final ranking by fitness
        let fitness = self.fitness_of(&population, target);
        let mut order: Vec<usize> = (0..pop_size).collect();
        order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
        let ranked = order.iter().map(|&i| population[i].clone()).collect();
        Ok((ranked, best_per_gen))
    }

    fn fitness_of(&self, population: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
        population
            .iter()
            .map(|gn| 1.0 / (self.surrogate.surrogate_mse(gn, target) + FITNESS_EPS))
            .collect()
    }
}

/// Roulette-wheel probabilities: fitness normalized to a simplex.
pub fn selection_probabilities(fitness: &[f64]) -> Vec<f64> {
    let total: f64 = fitness.iter().sum();
    fitness.iter().map(|f| f / total).collect()
}

fn roulette_draw(probs: &[f64], rng: &mut Rng) -> usize {
    let mut u = rng.next_f64();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

/// Swap everything from `point` onward between the two parents.
pub fn single_point_crossover(a: &mut [f64], b: &mut [f64], point: usize) {
    for i in point..a.len() {
        std::mem::swap(&mut a[i], &mut b[i]);
    }
}

impl InverseSolver for GaSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Ga
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
        if self.cfg.population < count {
            return Err(SolverError::PoolTooSmall {
                pool: self.cfg.population,
                requested: count,
            });
        }
        let (ranked, _) = self.evolve_trace(target, seed)?;
        let mut designs = Vec::with_capacity(count);
        let mut errors = Vec::with_capacity(count);
        for gn in ranked.into_iter().take(count) {
            errors.push(self.surrogate.surrogate_mse(&gn, target));
            let mut g = task.denormalize(&gn);
            task.clip(&mut g);
            designs.push(g);
        }
        Ok(ProposalSet { target: target.to_vec(), designs, predicted_errors: Some(errors) })
    }

    fn checkpoint(&self) -> Checkpoint {
        self.surrogate.to_checkpoint()
    }
}
