//! Physical constants (CODATA 2018), SI units unless noted.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Bohr magneton, J/T.
pub const MU_BOHR: f64 = 9.274_010_078_3e-24;

/// Boltzmann constant, J/K (exact).
pub const K_BOLTZMANN: f64 = 1.380_649e-23;

/// Vacuum permeability, T·m/A.
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant in Gaussian units, erg·s.
pub const HBAR_CGS: f64 = 1.054_571_817e-27;

/// Electron spin g-factor magnitude used by the spin models.
pub const G_S: f64 = 2.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeeman_scale_sanity() {
        // 2 mu_B / hbar = 1.7588e11 rad/s/T (electron gyromagnetic ratio)
        let gamma = 2.0 * MU_BOHR / HBAR;
        assert!((gamma - 1.7588e11).abs() / 1.7588e11 < 1e-3);
    }
}
