//! Scattering efficiency of the eight-shell sphere across the visible band,
//! plus the homogeneous-limit cross-check.
//!
//! ```bash
//! cargo run --example shell_spectrum
//! ```

use inverse_bench::forward::layered_sphere_scattering_cs;
use inverse_bench::Task;

fn main() {
    let task = Task::shell();
    let g = [45.0, 60.0, 35.0, 68.0, 42.0, 55.0, 63.0, 38.0];
    let q = task.simulate(&g).unwrap();
    println!("shell thicknesses (nm): {g:?}");
    println!("outer radius: {:.0} nm", g.iter().sum::<f64>());

    for (i, chunk) in q.chunks(20).enumerate() {
        let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
        let bar = "#".repeat((mean * 12.0) as usize);
        println!("{:6.0} nm | {bar} ({mean:.2})", task.spec.grid[i * 20]);
    }

    // all shells at the same index collapse to a homogeneous sphere
    let radii: Vec<f64> = g
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let uniform = layered_sphere_scattering_cs(&radii, &vec![2.0; 8], 1.0, 600.0).unwrap();
    println!("homogeneous-limit cross-section at 600 nm: {uniform:.1} nm^2");
    let host_matched = layered_sphere_scattering_cs(&radii, &vec![1.0; 8], 1.0, 600.0).unwrap();
    println!("index-matched shells scatter {host_matched:.2e} nm^2 (nothing, as they must)");
}
