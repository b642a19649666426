//! Adam with bias correction and a reduce-on-plateau learning-rate schedule.

use thiserror::Error;

use super::graph::Tensor;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("non-finite gradient on parameter '{param}'")]
    NanGradient { param: String },
    #[error("gradient length {got} does not match parameter '{param}' ({expected})")]
    GradientShape { param: String, got: usize, expected: usize },
}

/// Per-run optimizer state: Adam moments per parameter slot plus the plateau
/// scheduler. The learning rate never increases during a run.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    names: Vec<String>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub patience: usize,
    pub factor: f64,
    best_loss: f64,
    epochs_since_improvement: usize,
}

impl Optimizer {
    pub fn adam(lr: f64, params: &[(String, &Tensor)]) -> Self {
        assert!(lr > 0.0, "learning rate must be positive");
        Optimizer {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            names: params.iter().map(|(n, _)| n.clone()).collect(),
            m: params.iter().map(|(_, t)| vec![0.0; t.len()]).collect(),
            v: params.iter().map(|(_, t)| vec![0.0; t.len()]).collect(),
            patience: 10,
            factor: 0.5,
            best_loss: f64::INFINITY,
            epochs_since_improvement: 0,
        }
    }

    pub fn with_plateau(mut self, patience: usize, factor: f64) -> Self {
        assert!(factor > 0.0 && factor < 1.0, "decay factor must be in (0,1)");
        self.patience = patience;
        self.factor = factor;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update over all parameter slots. Slot order must match the
    /// order the optimizer was built with.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&[f64]]) -> Result<(), OptimError> {
        assert_eq!(params.len(), self.m.len(), "parameter slot count changed");
        assert_eq!(grads.len(), self.m.len());
        for (slot, grad) in grads.iter().enumerate() {
            if grad.len() != params[slot].len() {
                return Err(OptimError::GradientShape {
                    param: self.names[slot].clone(),
                    got: grad.len(),
                    expected: params[slot].len(),
                });
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(OptimError::NanGradient { param: self.names[slot].clone() });
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for (slot, grad) in grads.iter().enumerate() {
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            let p = &mut params[slot].values;
            for i in 0..grad.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * grad[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }

    /// Feed one epoch loss to the plateau schedule: after `patience`
    /// consecutive epochs without improving the best loss, the learning rate
    /// decays by `factor` and the counter resets.
    pub fn plateau_step(&mut self, epoch_loss: f64) {
        debug_assert!(epoch_loss.is_finite());
        if epoch_loss < self.best_loss {
            self.best_loss = epoch_loss;
            self.epochs_since_improvement = 0;
            return;
        }
        self.epochs_since_improvement += 1;
        if self.epochs_since_improvement >= self.patience {
            self.lr *= self.factor;
            self.epochs_since_improvement = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(v: f64) -> Tensor {
        Tensor::scalar(v)
    }

    fn named(t: &Tensor) -> Vec<(String, &Tensor)> {
        vec![("p".to_string(), t)]
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = one_param(1.25);
        let mut opt = Optimizer::adam(0.1, &named(&p));
        for _ in 0..5 {
            opt.step(&mut [&mut p], &[&[0.0]]).unwrap();
        }
        assert_eq!(p.values[0], 1.25);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // bias correction makes m_hat = g and v_hat = g^2 on step one, so the
        // update is lr * g / (|g| + eps) ~ lr * sign(g)
        let mut p = one_param(1.0);
        let mut opt = Optimizer::adam(0.1, &named(&p));
        opt.step(&mut [&mut p], &[&[2.0]]).unwrap();
        assert!((p.values[0] - 0.9).abs() < 1e-7, "got {}", p.values[0]);
    }

    #[test]
    fn quadratic_loss_decreases_under_repeated_steps() {
        // f(x) = x^2, grad = 2x
        let mut p = one_param(3.0);
        let mut opt = Optimizer::adam(0.05, &named(&p));
        let mut last = p.values[0] * p.values[0];
        for _ in 0..2 {
            let g = 2.0 * p.values[0];
            opt.step(&mut [&mut p], &[&[g]]).unwrap();
            let loss = p.values[0] * p.values[0];
            assert!(loss < last, "loss failed to decrease: {loss} vs {last}");
            last = loss;
        }
    }

    #[test]
    fn nan_gradient_names_the_parameter() {
        let mut p = one_param(0.0);
        let mut opt = Optimizer::adam(0.1, &named(&p));
        let err = opt.step(&mut [&mut p], &[&[f64::NAN]]).unwrap_err();
        match err {
            OptimError::NanGradient { param } => assert_eq!(param, "p"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn plateau_decays_after_patience_without_improvement() {
        let p = one_param(0.0);
        let mut opt = Optimizer::adam(0.1, &named(&p)).with_plateau(2, 0.5);
        for loss in [1.0, 1.0, 1.0] {
            opt.plateau_step(loss);
        }
        assert!((opt.lr - 0.05).abs() < 1e-15);
    }

    #[test]
    fn plateau_leaves_lr_alone_while_improving() {
        let p = one_param(0.0);
        let mut opt = Optimizer::adam(0.1, &named(&p)).with_plateau(2, 0.5);
        for loss in [1.0, 0.9, 0.8, 0.7, 0.6] {
            opt.plateau_step(loss);
        }
        assert_eq!(opt.lr, 0.1);
    }

    #[test]
    fn plateau_hand_trace_decays_exactly_once() {
        let p = one_param(0.0);
        let mut opt = Optimizer::adam(0.1, &named(&p)).with_plateau(2, 0.5);
        for loss in [1.0, 0.9, 0.9, 0.9, 0.9] {
            opt.plateau_step(loss);
        }
        assert!((opt.lr - 0.05).abs() < 1e-15, "lr {}", opt.lr);
    }

    #[test]
    fn learning_rate_never_increases() {
        let p = one_param(0.0);
        let mut opt = Optimizer::adam(0.1, &named(&p)).with_plateau(3, 0.7);
        let mut rng = crate::rng::Rng::new(2);
        let mut last_lr = opt.lr;
        for _ in 0..200 {
            opt.plateau_step(rng.uniform(0.0, 2.0));
            assert!(opt.lr <= last_lr);
            last_lr = opt.lr;
        }
    }
}
