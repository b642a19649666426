//! Mixture density network: the conditional p(g|s) is a mixture of diagonal
//! Gaussians whose weights, means, and variances come from one network head.
//! Proposals are drawn component-by-weight and ordered heaviest component
//! first.

use crate::autodiff::{Graph, Mlp, MlpSpec, NodeId, Optimizer, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::surrogate::{push_mlp, read_mlp};
use crate::forward::task::TaskSpec;
use crate::forward::{Dataset, Split};
use crate::rng::Rng;

use super::train::{epoch_batches, gather_rows, TrainLog};
use super::{split_arrays, InverseSolver, ProposalSet, SolverConfig, SolverError, SolverKind};

const VARIANCE_FLOOR: f64 = 1e-6;
const LOG_2PI: f64 = 1.837_877_066_409_345_5;

/// Diagonal Gaussian mixture over designs.
#[derive(Debug, Clone)]
pub struct MixtureParams {
    /// Component weights on the simplex.
    pub weights: Vec<f64>,
    /// Row-major [k, d] means.
    pub means: Vec<f64>,
    /// Row-major [k, d] diagonal variances, strictly positive.
    pub variances: Vec<f64>,
}

impl MixtureParams {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        if self.weights.is_empty() { 0 } else { self.means.len() / self.weights.len() }
    }
}

/// Negative log likelihood of `g` under the mixture:
/// -log Σᵢ pᵢ |Σᵢ|^{-1/2} exp(-½ (μᵢ-g)ᵀ Σᵢ⁻¹ (μᵢ-g)), plus the Gaussian
/// normalization constant (d/2)·log 2π when `include_norm_constant` is set
/// (the constant does not change gradients; including it makes the value a
/// true density).
pub fn mdn_nll(
    params: &MixtureParams,
    g: &[f64],
    include_norm_constant: bool,
) -> Result<f64, SolverError> {
    let k = params.components();
    let d = params.dim();
    if g.len() != d {
        return Err(SolverError::BadConfig(format!(
            "design dim {} does not match mixture dim {d}",
            g.len()
        )));
    }
    if params.variances.iter().any(|&v| v <= 0.0) {
        return Err(SolverError::BadConfig("mixture variance must be positive".into()));
    }
    // log-sum-exp over component log densities (sans the 2π constant)
    let mut log_terms = Vec::with_capacity(k);
    for i in 0..k {
        let mu = &params.means[i * d..(i + 1) * d];
        let var = &params.variances[i * d..(i + 1) * d];
        let quad: f64 =
            mu.iter().zip(g).zip(var).map(|((m, x), v)| (m - x) * (m - x) / v).sum();
        let logdet: f64 = var.iter().map(|v| v.ln()).sum();
        log_terms.push(params.weights[i].ln() - 0.5 * logdet - 0.5 * quad);
    }
    let m = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + log_terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
    let constant = if include_norm_constant { 0.5 * d as f64 * LOG_2PI } else { 0.0 };
    Ok(-lse + constant)
}

pub struct MdnSolver {
    pub task: TaskSpec,
    net: Mlp, // spectrum -> [k logits | k*d means | k*d raw variances]
    components: usize,
    include_norm_constant: bool,
}

impl MdnSolver {
    pub fn train(
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(MdnSolver, TrainLog), SolverError> {
        cfg.validate()?;
        let k = cfg.components;
        let d = task.design_dim;
        let (n_tr, s_tr, g_tr) = split_arrays(dataset, task, Split::Train);
        let (n_val, s_val, g_val) = split_arrays(dataset, task, Split::Val);
        if n_tr == 0 {
            return Err(SolverError::EmptySplit("train"));
        }
        let spec = MlpSpec::regression(
            task.spectrum_dim,
            &cfg.hidden,
            k + 2 * k * d,
            cfg.activation,
            cfg.batchnorm,
            cfg.seed,
        );
        let mut net = Mlp::init(spec)?;
        let mut opt = Optimizer::adam(cfg.lr, &net.trainable())
            .with_plateau(cfg.patience, cfg.decay_factor);
        let mut rng = Rng::new(cfg.seed ^ 0x3d17);
        let mut log = TrainLog::default();
        let mut best = (f64::INFINITY, net.clone(), 0usize);
        let constant = if cfg.mdn_norm_constant { 0.5 * d as f64 * LOG_2PI } else { 0.0 };

        for epoch in 0..cfg.epochs {
            let mut epoch_loss = 0.0;
            for batch in epoch_batches(n_tr, cfg.batch_size, &mut rng) {
                let xb = gather_rows(&s_tr, task.spectrum_dim, &batch);
                let gb = gather_rows(&g_tr, d, &batch);
                let mut graph = Graph::new();
                let x = graph.input(&Tensor::new(vec![batch.len(), task.spectrum_dim], xb));
                let gt = graph.input(&Tensor::new(vec![batch.len(), d], gb));
                let (head, binding) = net.forward_train(&mut graph, x)?;
                let nll = nll_node(&mut graph, head, gt, k, d, constant)?;
                let loss_val = graph.value(nll);
                if !loss_val.is_finite() {
                    return Err(SolverError::NanLoss { epoch });
                }
                epoch_loss += loss_val * batch.len() as f64;
                graph.backward(nll)?;
                let grads: Vec<&[f64]> = binding.ids.iter().map(|&id| graph.grad(id)).collect();
                opt.step(&mut net.trainable_mut(), &grads)?;
            }
            epoch_loss /= n_tr as f64;
            log.train_losses.push(epoch_loss);
            opt.plateau_step(epoch_loss);

            let val_loss = if n_val > 0 {
                let mut graph = Graph::new();
                let x = graph.input(&Tensor::new(vec![n_val, task.spectrum_dim], s_val.clone()));
                let gt = graph.input(&Tensor::new(vec![n_val, d], g_val.clone()));
                let head = net.forward_eval(&mut graph, x)?;
                let nll = nll_node(&mut graph, head, gt, k, d, constant)?;
                graph.value(nll)
            } else {
                epoch_loss
            };
            log.val_losses.push(val_loss);
            if val_loss < best.0 {
                best = (val_loss, net.clone(), epoch);
            }
        }
        log.best_epoch = best.2;
        Ok((
            MdnSolver {
                task: task.clone(),
                net: best.1,
                components: k,
                include_norm_constant: cfg.mdn_norm_constant,
            },
            log,
        ))
    }

    /// Mixture parameters for one target spectrum (normalized design space).
    pub fn mixture_for(&self, target: &[f64]) -> Result<MixtureParams, SolverError> {
        let head = self.net.eval(target, 1)?;
        let k = self.components;
        let d = self.task.design_dim;
        let logits = &head[..k];
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = exp.iter().sum();
        let weights: Vec<f64> = exp.iter().map(|e| e / z).collect();
        let means = head[k..k + k * d].to_vec();
        let variances: Vec<f64> =
            head[k + k * d..].iter().map(|&r| softplus(r) + VARIANCE_FLOOR).collect();
        Ok(MixtureParams { weights, means, variances })
    }

    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<MdnSolver, SolverError> {
        Ok(MdnSolver {
            task: task.clone(),
            net: read_mlp(ckpt, "mdn.")?,
            components: cfg.components,
            include_norm_constant: cfg.mdn_norm_constant,
        })
    }

    pub fn nll_of(&self, params: &MixtureParams, gn: &[f64]) -> Result<f64, SolverError> {
        mdn_nll(params, gn, self.include_norm_constant)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Batched mixture NLL on the graph: `head` is `[rows, k + 2kd]`, `gt` is
/// `[rows, d]`; returns the scalar batch mean.
fn nll_node(
    graph: &mut Graph,
    head: NodeId,
    gt: NodeId,
    k: usize,
    d: usize,
    constant: f64,
) -> Result<NodeId, SolverError> {
    let logits = graph.slice_cols(head, 0, k)?;
    let log_z = graph.logsumexp_axis1(logits)?;
    let mut columns: Option<NodeId> = None;
    for i in 0..k {
        let logit_i = graph.slice_cols(logits, i, i + 1)?;
        let log_p = graph.sub(logit_i, log_z)?;
        let mu = graph.slice_cols(head, k + i * d, k + (i + 1) * d)?;
        let raw_var = graph.slice_cols(head, k + k * d + i * d, k + k * d + (i + 1) * d)?;
        let sp = graph.softplus(raw_var);
        let var = graph.add_const(sp, VARIANCE_FLOOR);
        let centered = graph.sub(mu, gt)?;
        let sq = graph.square(centered);
        let inv_var = graph.pow_const(var, -1.0);
        let scaled = graph.multiply(sq, inv_var)?;
        let quad = graph.sum_axis(scaled, 1);
        let log_var = graph.log(var);
        let logdet = graph.sum_axis(log_var, 1);
        let half_quad = graph.scale(quad, -0.5);
        let half_logdet = graph.scale(logdet, -0.5);
        let partial = graph.add(half_quad, half_logdet)?;
        let term = graph.add(partial, log_p)?;
        columns = Some(match columns {
            None => term,
            Some(prev) => graph.concat_cols(prev, term)?,
        });
    }
    let stacked = columns.expect("k >= 1 checked by config validation");
    let lse = graph.logsumexp_axis1(stacked)?;
    let neg = graph.neg(lse);
    let shifted = graph.add_const(neg, constant);
    Ok(graph.mean(shifted))
}

impl InverseSolver for MdnSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Mdn
    }

    fn task_spec(&self) -> &TaskSpec {
        &self.task
    }

    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    fn propose(&self, target: &[f64], count: usize, seed: u64) -> Result<ProposalSet, SolverError> {
        if target.len() != self.task.spectrum_dim {
            return Err(SolverError::TargetDim {
                got: target.len(),
                expected: self.task.spectrum_dim,
            });
        }
        let params = self.mixture_for(target)?;
        let d = self.task.design_dim;
        let mut rng = Rng::new(seed);
        // draw, remembering each sample's component weight
        let mut draws: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(count);
        for draw_idx in 0..count {
            let component = categorical(&params.weights, &mut rng);
            let mu = &params.means[component * d..(component + 1) * d];
            let var = &params.variances[component * d..(component + 1) * d];
            let gn: Vec<f64> =
                mu.iter().zip(var).map(|(m, v)| m + v.sqrt() * rng.normal()).collect();
            draws.push((params.weights[component], draw_idx, gn));
        }
        // heaviest component first, stable in draw order
        draws.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let designs = draws
            .into_iter()
            .map(|(_, _, gn)| {
                let mut g = self.task.denormalize(&gn);
                self.task.clip(&mut g);
                g
            })
            .collect();
        Ok(ProposalSet { target: target.to_vec(), designs, predicted_errors: None })
    }

    fn checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        push_mlp(&mut ckpt, "mdn.", &self.net);
        ckpt
    }
}

fn categorical(weights: &[f64], rng: &mut Rng) -> usize {
    let mut u = rng.next_f64();
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}
