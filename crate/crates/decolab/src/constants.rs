//! Physical constants (CODATA 2018, SI units).

/// Planck constant h, J·s. Exact by the 2019 SI definition.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant ħ = h/2π, J·s, carried at full double precision
/// (CODATA 2018 prints the truncation 1.054571817e-34).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant k_B, J/K. Exact by the 2019 SI definition.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Fixed physical constants used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Planck constant, J·s.
    pub h: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

/// The CODATA 2018 values.
pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    hbar: HBAR,
    h: PLANCK,
    k_b: BOLTZMANN,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_is_two_pi_hbar() {
        let rel = (PLANCK - 2.0 * std::f64::consts::PI * HBAR).abs() / PLANCK;
        assert!(rel < 1e-15, "h vs 2πħ relative mismatch {rel}");
        // within one part in 1e9 of the printed CODATA 2018 truncation
        assert!((HBAR - 1.054_571_817e-34).abs() / HBAR < 1e-9);
    }
}
