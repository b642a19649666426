//! Multilayer stack under normal-incidence s-polarized light.
//!
//! The structure is five (conductive sheet + dielectric layer) periods in air.
//! The sheets are zero-thickness current layers with a Drude intraband
//! surface conductivity; the dielectric is real and lossless, so every bit of
//! absorption comes from Re σ of the sheets. Fields are marched interface by
//! interface from the exit side, with the tangential-field jump h₂ = h₁ − η₀σE
//! at each sheet.

use num_complex::Complex64;

const LIGHT_SPEED: f64 = 299_792_458.0; // m/s
const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19; // C
const HBAR: f64 = 1.054_571_817e-34; // J s
const VACUUM_IMPEDANCE: f64 = 376.730_313_668; // ohm

/// Material constants for the stack task. All absorption scales with the
/// sheet conductivity, so zeroing the Fermi level turns the stack lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct StackPhysics {
    pub fermi_level_ev: f64,
    pub scattering_time_fs: f64,
    pub n_dielectric: f64,
    /// Graphene monolayers per conductive sheet; conductivity scales with it.
    pub layers_per_sheet: f64,
}

impl Default for StackPhysics {
    fn default() -> Self {
        StackPhysics {
            fermi_level_ev: 0.8,
            scattering_time_fs: 1.5,
            n_dielectric: 2.0,
            layers_per_sheet: 3.0,
        }
    }
}

impl StackPhysics {
    /// Drude intraband sheet conductivity at vacuum wavelength `lambda_nm`,
    /// e^{-iωt} convention (positive real part dissipates).
    pub fn sheet_conductivity(&self, lambda_nm: f64) -> Complex64 {
        let omega = 2.0 * std::f64::consts::PI * LIGHT_SPEED / (lambda_nm * 1e-9);
        let tau = self.scattering_time_fs * 1e-15;
        let fermi_j = self.fermi_level_ev * ELEMENTARY_CHARGE;
        let drude_weight =
            ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * fermi_j / (std::f64::consts::PI * HBAR * HBAR);
        self.layers_per_sheet * drude_weight * tau / Complex64::new(1.0, -omega * tau)
    }
}

/// Reflectance and transmittance of a general sheet/layer stack in air.
///
/// `layers` are interior (index, thickness-nm) pairs; `sheets[i]` is the
/// surface conductivity at interface i (there are `layers.len() + 1`
/// interfaces, entry side first). Both semi-infinite media are vacuum.
pub fn stack_rt(layers: &[(f64, f64)], sheets: &[Complex64], lambda_nm: f64) -> (f64, f64) {
    assert_eq!(sheets.len(), layers.len() + 1, "one sheet slot per interface");
    let k0 = 2.0 * std::f64::consts::PI / lambda_nm;

    // March from the exit medium (A=1, B=0) back to the entry medium.
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    let mut n_right = 1.0;
    for i in (0..=layers.len()).rev() {
        let zeta = sheets[i] * VACUUM_IMPEDANCE;
        let e_field = a + b;
        let h_right = n_right * (a - b);
        let h_left = h_right + zeta * e_field;
        let n_left = if i == 0 { 1.0 } else { layers[i - 1].0 };
        // amplitudes at the left layer's right edge
        let a_edge = (e_field + h_left / n_left) * 0.5;
        let b_edge = (e_field - h_left / n_left) * 0.5;
        if i == 0 {
            a = a_edge;
            b = b_edge;
        } else {
            // undo propagation across the left layer
            let phase = Complex64::new(0.0, k0 * n_left * layers[i - 1].1);
            a = a_edge * (-phase).exp();
            b = b_edge * phase.exp();
        }
        n_right = n_left;
    }
    let r = b / a;
    let t = Complex64::new(1.0, 0.0) / a;
    (r.norm_sqr(), t.norm_sqr())
}

/// Absorptivity spectrum of the five-period sheet/dielectric stack.
/// `g` holds the five dielectric thicknesses in nm; absorptivity is
/// A = 1 - R - T per grid wavelength.
pub fn simulate_stack(physics: &StackPhysics, g: &[f64], grid_nm: &[f64]) -> Vec<f64> {
    let layers: Vec<(f64, f64)> = g.iter().map(|&d| (physics.n_dielectric, d)).collect();
    grid_nm
        .iter()
        .map(|&lambda| {
            let sigma = physics.sheet_conductivity(lambda);
            // a sheet on top of each period; the exit interface is bare
            let mut sheets = vec![sigma; g.len()];
            sheets.push(Complex64::new(0.0, 0.0));
            let (r, t) = stack_rt(&layers, &sheets, lambda);
            1.0 - r - t
        })
        .collect()
}

/// Closed-form Airy reflectance of a single lossless slab in air; the
/// independent oracle for the degenerate stack configuration.
pub fn airy_single_slab_reflectance(n: f64, d_nm: f64, lambda_nm: f64) -> f64 {
    let r01 = (1.0 - n) / (1.0 + n);
    let r12 = (n - 1.0) / (n + 1.0);
    let beta = 2.0 * std::f64::consts::PI * n * d_nm / lambda_nm;
    let phase = Complex64::new(0.0, 2.0 * beta).exp();
    let r = (r01 + r12 * phase) / (1.0 + r01 * r12 * phase);
    r.norm_sqr()
}
