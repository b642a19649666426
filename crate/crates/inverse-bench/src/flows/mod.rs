//! Normalizing-flow machinery and the two invertible inverse solvers.

pub mod cinn;
pub mod coupling;
pub mod inn;

pub use cinn::CinnSolver;
pub use coupling::{Flow, SCALE_CLAMP};
pub use inn::InnSolver;

use crate::solvers::SolverError;

/// Bidirectional-flow training loss:
/// ½(σ⁻²‖ŝ−s‖² + ‖z‖²) − logdet, with sums over coordinates.
pub fn inn_loss(
    s_hat: &[f64],
    s: &[f64],
    z: &[f64],
    logdet: f64,
    sigma: f64,
) -> Result<f64, SolverError> {
    if sigma <= 0.0 {
        return Err(SolverError::BadConfig(format!("sigma must be positive, got {sigma}")));
    }
    if s_hat.len() != s.len() {
        return Err(SolverError::TargetDim { got: s_hat.len(), expected: s.len() });
    }
    let fit: f64 = s_hat.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum();
    let normality: f64 = z.iter().map(|v| v * v).sum();
    Ok(0.5 * (fit / (sigma * sigma) + normality) - logdet)
}

/// Conditional-flow training loss: ½‖z‖² − logdet.
pub fn cinn_loss(z: &[f64], logdet: f64) -> f64 {
    0.5 * z.iter().map(|v| v * v).sum::<f64>() - logdet
}
