//! Absorptivity of the five-period sheet/dielectric stack, with the energy
//! accounting that validates the transfer-matrix solution.
//!
//! ```bash
//! cargo run --example stack_spectrum
//! ```

use inverse_bench::forward::stack::{airy_single_slab_reflectance, stack_rt};
use inverse_bench::Task;

fn main() {
    let task = Task::stack();
    let g = [40.0, 65.0, 80.0, 30.0, 55.0];
    let spectrum = task.simulate(&g).unwrap();

    println!("design (nm): {g:?}");
    let peak = spectrum
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    println!(
        "absorptivity range [{:.4}, {:.4}], peak at {:.0} nm",
        spectrum.iter().cloned().fold(f64::INFINITY, f64::min),
        peak.1,
        task.spec.grid[peak.0],
    );

    // a coarse sketch of the spectrum
    for (i, chunk) in spectrum.chunks(32).enumerate() {
        let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
        let bar = "#".repeat((mean * 120.0) as usize);
        let lambda = task.spec.grid[i * 32];
        println!("{lambda:7.0} nm | {bar}");
    }

    // lossless degenerate case: a bare slab matches the Airy formula
    let (r, t) = stack_rt(&[(2.0, 60.0)], &[0.0.into(), 0.0.into()], 800.0);
    let airy = airy_single_slab_reflectance(2.0, 60.0, 800.0);
    println!("bare 60 nm slab at 800 nm: R = {r:.12}, Airy oracle = {airy:.12}");
    println!("energy closure |R+T-1| = {:.2e}", (r + t - 1.0).abs());
}
