//! Physical constants in the working unit system: eV, nm, K, free-electron
//! mass `m0`, relative permittivity, densities per nm^3 or nm^2.

/// hbar^2 / (2 m0) in eV nm^2.
pub const HBAR2_OVER_2M0: f64 = 0.038_099_821_2;

/// e^2 / eps0 in eV nm. `(eps V')' = E2_OVER_EPS0 * (charge density in e/nm^3)`.
pub const E2_OVER_EPS0: f64 = 18.095_126_5;

/// Boltzmann constant in eV/K.
pub const K_B: f64 = 8.617_333_262e-5;

/// Bohr radius in nm.
pub const BOHR_RADIUS: f64 = 0.052_917_721_090_3;

/// 1 C/m^2 expressed in elementary charges per nm^2.
pub const C_PER_M2: f64 = 6.241_509_074;

/// 1 cm^-3 in nm^-3.
pub const PER_CM3: f64 = 1e-21;

/// m0 / (pi hbar^2) in eV^-1 nm^-2 (two-dimensional density of states per unit mass, spin included).
pub const DOS_2D_PER_M0: f64 = 1.0 / (2.0 * std::f64::consts::PI * HBAR2_OVER_2M0);

/// Converts a polarization or sheet charge in C/m^2 to a field contribution
/// `sigma / (eps0 eps)` in V/nm for relative permittivity `eps`.
pub fn sheet_to_field(sigma: f64, eps: f64) -> f64 {
    sigma * C_PER_M2 * E2_OVER_EPS0 / eps
}
