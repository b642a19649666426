//! Deliberately one-to-many toy task for fast tests.
//!
//! s_k = sin(3π(g₁² + g₂²) x_k): the spectrum depends on the design only
//! through its radius, so every centered circle is an exact non-uniqueness
//! class.

pub fn simulate_toy(g: &[f64], grid: &[f64]) -> Vec<f64> {
    let r2 = g.iter().map(|v| v * v).sum::<f64>();
    let omega = 3.0 * std::f64::consts::PI * r2;
    grid.iter().map(|&x| (omega * x).sin()).collect()
}
