//! Reduction of an experiment to dimensionless groups.
//!
//! SI magnitudes (ħ² ~ 1e-68 J²s²) make PDE arithmetic badly conditioned, so
//! the solvers work in units of the slit spacing ℓ and the flight time
//! `t_f = λLm/h`. In these units the dimensionless mass `mℓ²/(ħ t_f)` equals
//! the fringe phase scale `φ = 2πℓ²/(λL)`, so the kinetic generator carries
//! an effective Planck constant `1/φ`.

use super::{DetectorOverlaps, EnvironmentSpec, ExperimentConfig, QuantonSpec, ScreenGeometry, SlitArray, SourceAmplitudes};
use crate::constants::{BOLTZMANN, HBAR, PLANCK};
use crate::error::Error;
use crate::Result;

/// An experiment reduced to dimensionless groups, plus the two units needed
/// to restore SI values.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessInstance {
    /// Length unit: the slit spacing ℓ, m.
    pub length_unit: f64,
    /// Time unit: the flight time `λLm/h`, s.
    pub time_unit: f64,
    /// Number of slits; slit `j` sits at `x̂ = j`.
    pub n: usize,
    /// Slit width in units of ℓ.
    pub eps_hat: f64,
    /// Fringe phase scale `φ = 2πℓ²/(λL)`; `1/φ` acts as the effective ħ.
    pub phi: f64,
    /// Friction per flight time, `γ̂ = γ·t_f`.
    pub gamma_hat: f64,
    /// Thermal scale `k_B T t_f / ħ`.
    pub theta_temperature: f64,
    /// Screen distance in units of ℓ.
    pub screen_distance_hat: f64,
    /// Evolution time in units of `t_f`.
    pub t_hat: f64,
    /// Decoherence strength `κ = t/τ_d` at the stored `t_hat`.
    pub kappa: f64,
    /// `t_f/τ_d`: κ accumulated per unit of dimensionless time.
    pub kappa_rate: f64,
    /// Amplitude magnitudes (copied; already dimensionless).
    pub magnitudes: Vec<f64>,
    /// Amplitude phases, radians.
    pub phases: Vec<f64>,
    /// Detector overlap matrix (dimensionless).
    pub overlaps: DetectorOverlaps,
    /// Screen window in units of ℓ.
    pub x_min_hat: f64,
    /// Screen window in units of ℓ.
    pub x_max_hat: f64,
    /// Screen grid points.
    pub points: usize,
}

impl DimensionlessInstance {
    /// Coefficient of the decoherence generator `-D̂(x̂-x̂')²` per unit
    /// dimensionless time: `D̂ = Dℓ²t_f/(4ħ²) = 3·κ_rate`.
    pub fn diffusion_hat(&self) -> f64 {
        3.0 * self.kappa_rate
    }

    /// A synthetic instance for solver studies: `n` slits at `x̂ = 1..=n`,
    /// equal amplitudes, and decoherence injected directly through
    /// `κ_rate = t_f/τ_d` with the friction `γ̂` chosen independently.
    /// The SI embedding uses ℓ = 1 μm and `t_f` = 1 ms.
    pub fn synthetic(
        n: usize,
        eps_hat: f64,
        phi: f64,
        gamma_hat: f64,
        kappa_rate: f64,
        overlaps: DetectorOverlaps,
    ) -> Self {
        let amplitudes = SourceAmplitudes::equal(n);
        // temperature consistent with (γ̂, κ_rate) when γ̂ > 0, else 0
        let theta_temperature = if gamma_hat > 0.0 {
            6.0 * kappa_rate / (phi * gamma_hat)
        } else {
            0.0
        };
        DimensionlessInstance {
            length_unit: 1e-6,
            time_unit: 1e-3,
            n,
            eps_hat,
            phi,
            gamma_hat,
            theta_temperature,
            screen_distance_hat: 1e5,
            t_hat: 1.0,
            kappa: kappa_rate,
            kappa_rate,
            magnitudes: amplitudes.magnitudes,
            phases: amplitudes.phases,
            overlaps,
            x_min_hat: (n as f64 + 1.0) / 2.0 - 4.0,
            x_max_hat: (n as f64 + 1.0) / 2.0 + 4.0,
            points: 512,
        }
    }
}

/// Reduce a validated configuration and an evolution time to dimensionless
/// groups.
pub fn nondimensionalize(cfg: &ExperimentConfig, t: f64) -> Result<DimensionlessInstance> {
    cfg.validate().into_result()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", "evolution time must be nonnegative and finite"));
    }
    let ell = cfg.slits.spacing;
    let t_f = cfg.flight_time();
    let phi = 2.0 * std::f64::consts::PI * ell * ell
        / (cfg.quanton.wavelength * cfg.screen.distance);
    let diffusion = cfg.diffusion();
    // 1/τ_d = Dℓ²/(12ħ²)
    let kappa_rate = diffusion * ell * ell * t_f / (12.0 * HBAR * HBAR);
    let inst = DimensionlessInstance {
        length_unit: ell,
        time_unit: t_f,
        n: cfg.slits.n,
        eps_hat: cfg.slits.width / ell,
        phi,
        gamma_hat: cfg.environment.gamma * t_f,
        theta_temperature: BOLTZMANN * cfg.environment.temperature * t_f / HBAR,
        screen_distance_hat: cfg.screen.distance / ell,
        t_hat: t / t_f,
        kappa: kappa_rate * (t / t_f),
        kappa_rate,
        magnitudes: cfg.amplitudes.magnitudes.clone(),
        phases: cfg.amplitudes.phases.clone(),
        overlaps: cfg.detector.clone(),
        x_min_hat: cfg.screen.x_min / ell,
        x_max_hat: cfg.screen.x_max / ell,
        points: cfg.screen.points,
    };
    for (name, v) in [
        ("eps_hat", inst.eps_hat),
        ("phi", inst.phi),
        ("gamma_hat", inst.gamma_hat),
        ("kappa", inst.kappa),
        ("t_hat", inst.t_hat),
    ] {
        if !v.is_finite() {
            return Err(Error::numerical(format!("nondimensionalization produced nonfinite {name}")));
        }
    }
    Ok(inst)
}

/// Restore the SI configuration and evolution time from a dimensionless
/// instance.
pub fn redimensionalize(inst: &DimensionlessInstance) -> (ExperimentConfig, f64) {
    let ell = inst.length_unit;
    let t_f = inst.time_unit;
    let distance = inst.screen_distance_hat * ell;
    let wavelength = 2.0 * std::f64::consts::PI * ell * ell / (inst.phi * distance);
    let mass = PLANCK * t_f / (wavelength * distance);
    let cfg = ExperimentConfig {
        quanton: QuantonSpec { mass, wavelength },
        slits: SlitArray {
            n: inst.n,
            spacing: ell,
            width: inst.eps_hat * ell,
        },
        amplitudes: SourceAmplitudes {
            magnitudes: inst.magnitudes.clone(),
            phases: inst.phases.clone(),
        },
        detector: inst.overlaps.clone(),
        environment: EnvironmentSpec {
            gamma: inst.gamma_hat / t_f,
            temperature: inst.theta_temperature * HBAR / (BOLTZMANN * t_f),
        },
        screen: ScreenGeometry {
            distance,
            x_min: inst.x_min_hat * ell,
            x_max: inst.x_max_hat * ell,
            points: inst.points,
        },
    };
    (cfg, inst.t_hat * t_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_preset;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
        }
    }

    #[test]
    fn neon_phase_scale_from_direct_arithmetic() {
        let cfg = load_preset("neon").unwrap();
        let inst = nondimensionalize(&cfg, cfg.flight_time()).unwrap();
        // 2π ℓ² / (λ L) with ℓ = 6 μm, λ = 0.018 μm, L = 37 mm
        let phi = 2.0 * std::f64::consts::PI * 36e-12 / (1.8e-8 * 0.037);
        assert!(rel(inst.phi, phi) < 1e-12);
        assert!((inst.phi - 0.33963).abs() < 1e-4, "phi = {}", inst.phi);
    }

    #[test]
    fn length_unit_self_check() {
        let cfg = load_preset("neon").unwrap();
        let inst = nondimensionalize(&cfg, 0.0).unwrap();
        // x = ℓ maps to x̂ = 1
        assert!(rel(cfg.slits.spacing / inst.length_unit, 1.0) < 1e-15);
    }

    #[test]
    fn zero_coupling_means_zero_kappa() {
        let mut cfg = load_preset("neon").unwrap();
        cfg.environment.gamma = 0.0;
        let inst = nondimensionalize(&cfg, cfg.flight_time()).unwrap();
        assert_eq!(inst.kappa, 0.0);
        assert_eq!(inst.diffusion_hat(), 0.0);
    }

    #[test]
    fn round_trip_is_identity_within_1e12() {
        for name in ["neon", "c60"] {
            let cfg = load_preset(name).unwrap();
            let t = 0.37 * cfg.flight_time();
            let inst = nondimensionalize(&cfg, t).unwrap();
            let (back, t_back) = redimensionalize(&inst);
            assert!(rel(back.quanton.mass, cfg.quanton.mass) < 1e-12);
            assert!(rel(back.quanton.wavelength, cfg.quanton.wavelength) < 1e-12);
            assert!(rel(back.slits.spacing, cfg.slits.spacing) < 1e-12);
            assert!(rel(back.slits.width, cfg.slits.width) < 1e-12);
            assert!(rel(back.environment.gamma, cfg.environment.gamma) < 1e-12);
            assert!(rel(back.environment.temperature, cfg.environment.temperature) < 1e-12);
            assert!(rel(back.screen.distance, cfg.screen.distance) < 1e-12);
            assert!(rel(back.screen.x_min, cfg.screen.x_min) < 1e-12);
            assert!(rel(back.screen.x_max, cfg.screen.x_max) < 1e-12);
            assert_eq!(back.screen.points, cfg.screen.points);
            assert_eq!(back.amplitudes, cfg.amplitudes);
            assert_eq!(back.detector, cfg.detector);
            assert!(rel(t_back, t) < 1e-12);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = load_preset("neon").unwrap();
        cfg.quanton.mass = -1.0;
        assert!(nondimensionalize(&cfg, 0.0).is_err());
    }
}
