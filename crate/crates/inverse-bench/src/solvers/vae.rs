//! Conditional variational autoencoder. The encoder maps (design, spectrum)
//! to a latent Gaussian, the decoder reconstructs the design from (latent,
//! spectrum), and the loss trades reconstruction MSE against the closed-form
//! KL divergence to a standard normal. Proposals decode fresh standard-normal
//! latents conditioned on the target.

use crate::autodiff::{Graph, Mlp, MlpSpec, Optimizer, Tensor};
use crate::checkpoint::Checkpoint;
use crate::forward::surrogate::{push_mlp, read_mlp};
use crate::forward::task::TaskSpec;
use crate::forward::{Dataset, Split};
use crate::rng::Rng;

use super::train::{epoch_batches, gather_rows, TrainLog};
use super::{split_arrays, InverseSolver, ProposalSet, SolverConfig, SolverError, SolverKind};

/// Closed-form KL(N(μ, diag σ²) ‖ N(0, I)) = ½ Σ (μ² + σ² - 1 - log σ²),
/// summed over latent dimensions.
pub fn kl_diag_gaussian(mu: &[f64], log_var: &[f64]) -> f64 {
    mu.iter()
        .zip(log_var)
        .map(|(&m, &lv)| 0.5 * (m * m + lv.exp() - 1.0 - lv))
        .sum()
}

pub struct VaeSolver {
    pub task: TaskSpec,
    encoder: Mlp, // [g, s] -> [mu | log var]
    decoder: Mlp, // [z, s] -> g
    latent_dim: usize,
}

impl VaeSolver {
    pub fn train(
        dataset: &Dataset,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<(VaeSolver, TrainLog), SolverError> {
        cfg.validate()?;
        let d = task.design_dim;
        let dz = cfg.latent_dim;
        let (n_tr, s_tr, g_tr) = split_arrays(dataset, task, Split::Train);
        let (n_val, s_val, g_val) = split_arrays(dataset, task, Split::Val);
        if n_tr == 0 {
            return Err(SolverError::EmptySplit("train"));
        }
        let enc_spec = MlpSpec::regression(
            d + task.spectrum_dim,
            &cfg.hidden,
            2 * dz,
            cfg.activation,
            cfg.batchnorm,
            cfg.seed,
        );
        let dec_spec = MlpSpec::regression(
            dz + task.spectrum_dim,
            &cfg.hidden,
            d,
            cfg.activation,
            cfg.batchnorm,
            cfg.seed.wrapping_add(1),
        );
        let mut encoder = Mlp::init(enc_spec)?;
        let mut decoder = Mlp::init(dec_spec)?;
        let named: Vec<(String, &Tensor)> = encoder
            .trainable()
            .into_iter()
            .map(|(n, t)| (format!("encoder.{n}"), t))
            .chain(decoder.trainable().into_iter().map(|(n, t)| (format!("decoder.{n}"), t)))
            .collect();
        let mut opt = Optimizer::adam(cfg.lr, &named).with_plateau(cfg.patience, cfg.decay_factor);
        drop(named);

        let mut rng = Rng::new(cfg.seed ^ 0xace);
        let mut log = TrainLog::default();
        let mut best = (f64::INFINITY, encoder.clone(), decoder.clone(), 0usize);

        for epoch in 0..cfg.epochs {
            let mut epoch_loss = 0.0;
            for batch in epoch_batches(n_tr, cfg.batch_size, &mut rng) {
                let rows = batch.len();
                let sb = gather_rows(&s_tr, task.spectrum_dim, &batch);
                let gb = gather_rows(&g_tr, d, &batch);
                let eps: Vec<f64> = (0..rows * dz).map(|_| rng.normal()).collect();

                let mut graph = Graph::new();
                let s = graph.input(&Tensor::new(vec![rows, task.spectrum_dim], sb));
                let g = graph.input(&Tensor::new(vec![rows, d], gb));
                let eps_node = graph.input(&Tensor::new(vec![rows, dz], eps));
                let enc_in = graph.concat_cols(g, s)?;
                let (enc_out, enc_bind) = encoder.forward_train(&mut graph, enc_in)?;
                let mu = graph.slice_cols(enc_out, 0, dz)?;
                let log_var = graph.slice_cols(enc_out, dz, 2 * dz)?;
                // z = mu + exp(log_var / 2) * eps
                let half_lv = graph.scale(log_var, 0.5);
                let sigma = graph.exp(half_lv);
                let noise = graph.multiply(sigma, eps_node)?;
                let z = graph.add(mu, noise)?;
                let dec_in = graph.concat_cols(z, s)?;
                let (g_hat, dec_bind) = decoder.forward_train(&mut graph, dec_in)?;
                let diff = graph.sub(g_hat, g)?;
                let sq = graph.square(diff);
                let recon = graph.mean(sq);
                // KL per sample, summed over latent dims, then batch-averaged
                let mu_sq = graph.square(mu);
                let var = graph.exp(log_var);
                let sum1 = graph.add(mu_sq, var)?;
                let sum2 = graph.sub(sum1, log_var)?;
                let sum3 = graph.add_const(sum2, -1.0);
                let kl_terms = graph.scale(sum3, 0.5);
                let kl_rows = graph.sum_axis(kl_terms, 1);
                let kl = graph.mean(kl_rows);
                let kl_weighted = graph.scale(kl, cfg.kl_weight);
                let loss = graph.add(recon, kl_weighted)?;
                let loss_val = graph.value(loss);
                if !loss_val.is_finite() {
                    return Err(SolverError::NanLoss { epoch });
                }
                epoch_loss += loss_val * rows as f64;
                graph.backward(loss)?;
                let grads: Vec<&[f64]> = enc_bind
                    .ids
                    .iter()
                    .chain(dec_bind.ids.iter())
                    .map(|&id| graph.grad(id))
                    .collect();
                let mut params = encoder.trainable_mut();
                params.extend(decoder.trainable_mut());
                opt.step(&mut params, &grads)?;
            }
            epoch_loss /= n_tr as f64;
            log.train_losses.push(epoch_loss);
            opt.plateau_step(epoch_loss);

            // validation: reconstruction through the latent mean
            let val_loss = if n_val > 0 {
                let enc_in: Vec<f64> = (0..n_val)
                    .flat_map(|r| {
                        g_val[r * d..(r + 1) * d]
                            .iter()
                            .chain(&s_val[r * task.spectrum_dim..(r + 1) * task.spectrum_dim])
                            .copied()
                            .collect::<Vec<f64>>()
                    })
                    .collect();
                let enc_out = encoder.eval(&enc_in, n_val)?;
                let dec_in: Vec<f64> = (0..n_val)
                    .flat_map(|r| {
                        enc_out[r * 2 * dz..r * 2 * dz + dz]
                            .iter()
                            .chain(&s_val[r * task.spectrum_dim..(r + 1) * task.spectrum_dim])
                            .copied()
                            .collect::<Vec<f64>>()
                    })
                    .collect();
                let g_hat = decoder.eval(&dec_in, n_val)?;
                g_hat.iter().zip(&g_val).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                    / g_val.len() as f64
            } else {
                epoch_loss
            };
            log.val_losses.push(val_loss);
            if val_loss < best.0 {
                best = (val_loss, encoder.clone(), decoder.clone(), epoch);
            }
        }
        log.best_epoch = best.3;
        Ok((
            VaeSolver { task: task.clone(), encoder: best.1, decoder: best.2, latent_dim: dz },
            log,
        ))
    }

    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        task: &TaskSpec,
        cfg: &SolverConfig,
    ) -> Result<VaeSolver, SolverError> {
        Ok(VaeSolver {
            task: task.clone(),
            encoder: read_mlp(ckpt, "encoder.")?,
            decoder: read_mlp(ckpt, "decoder.")?,
            latent_dim: cfg.latent_dim,
        })
    }
}

impl InverseSolver for VaeSolver {
    fn kind(&self) -> SolverKind {
        SolverKind::Vae
    }

    fn task_spec(&self) -> &TaskSpec {
        &self.task
    }

    fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    fn propose(&self, target: &[f64], count: usize, seed: u64) -> Result<ProposalSet, SolverError> {
        if target.len() != self.task.spectrum_dim {
            return Err(SolverError::TargetDim {
                got: target.len(),
                expected: self.task.spectrum_dim,
            });
        }
        let dz = self.latent_dim;
        let mut rng = Rng::new(seed);
        let mut dec_in = Vec::with_capacity(count * (dz + target.len()));
        for _ in 0..count {
            for _ in 0..dz {
                dec_in.push(rng.normal());
            }
            dec_in.extend_from_slice(target);
        }
        let gn = self.decoder.eval(&dec_in, count)?;
        let d = self.task.design_dim;
        let designs = (0..count)
            .map(|r| {
                let mut g = self.task.denormalize(&gn[r * d..(r + 1) * d]);
                self.task.clip(&mut g);
                g
            })
            .collect();
        Ok(ProposalSet { target: target.to_vec(), designs, predicted_errors: None })
    }

    fn checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        push_mlp(&mut ckpt, "encoder.", &self.encoder);
        push_mlp(&mut ckpt, "decoder.", &self.decoder);
        ckpt
    }
}
