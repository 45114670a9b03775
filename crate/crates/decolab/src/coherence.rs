//! Quantum coherence of the interfering particle, computed three ways, and
//! inversion of measured coherence into the decoherence time.
//!
//! The normalized coherence of an n-dimensional state is
//! `C = (1/(n-1)) Σ_{i≠j} |ρ_ij|`, which lies in [0, 1]. For the n-slit
//! state decohering in the slit basis it has the closed form
//! `C(t) = (1/(n-1)) Σ_{j≠k} |c_j c_k| e^{-(j-k)² t/τ_d}` with
//! `τ_d = 12ħ²/(Dℓ²)`, independent of the which-way detector. The same
//! number is measurable by comparing the primary-maximum intensity with the
//! detector switched between all-parallel and all-orthogonal modes:
//! `C = (1/(n-1)) (I_max∥ - I_max⊥)/I_max⊥`. For two slits this inverts to
//! `τ_d = t / ln(2|c₁c₂|/C)`.

use crate::constants::{HBAR, PLANCK};
use crate::engine::{Coupling, IntensityProfile};
use crate::error::Error;
use crate::model::{DetectorMode, ExperimentConfig, FRAUNHOFER_ERROR};
use crate::Result;
use num_complex::Complex64;

/// How a coherence value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceMethod {
    /// Off-diagonal sum of the slit-basis density matrix.
    Matrix,
    /// Closed-form pair sum.
    Analytic,
    /// Simulated two-mode intensity measurement.
    Protocol,
}

/// A coherence value with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct CoherenceReading {
    pub value: f64,
    pub method: CoherenceMethod,
    /// Evolution time, s.
    pub t: f64,
}

/// The n×n slit-basis density matrix
/// `ρ_jk(t) = c_j c_k* O_jk e^{-(j-k)² t/τ_d}`.
#[derive(Debug, Clone)]
pub struct SlitBasisDensityMatrix {
    n: usize,
    rho: Vec<Complex64>,
}

impl SlitBasisDensityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `ρ_jk` with 1-based indices.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.rho[(j - 1) * self.n + (k - 1)]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        (1..=self.n).map(|j| self.get(j, j)).sum()
    }

    /// `max_jk |ρ_jk - ρ_kj*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 1..=self.n {
            for k in 1..=self.n {
                worst = worst.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        worst
    }

    /// Hermitian within 1e-12, unit trace within 1e-12, real nonnegative
    /// diagonal.
    pub fn check_invariants(&self) -> Result<()> {
        if self.hermiticity_defect() > 1e-12 {
            return Err(Error::numerical("slit-basis density matrix is not Hermitian"));
        }
        if (self.trace() - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::numerical("slit-basis density matrix trace is not 1"));
        }
        for j in 1..=self.n {
            let d = self.get(j, j);
            if d.im.abs() > 1e-12 || d.re < -1e-12 {
                return Err(Error::numerical("diagonal must be real and nonnegative"));
            }
        }
        Ok(())
    }
}

/// `C = (1/(n-1)) Σ_{i≠j} |ρ_ij|`.
pub fn coherence_of_matrix(rho: &SlitBasisDensityMatrix) -> Result<f64> {
    let n = rho.n;
    if n < 2 {
        return Err(Error::UndefinedCoherence);
    }
    let mut sum = 0.0;
    for j in 1..=n {
        for k in 1..=n {
            if j != k {
                sum += rho.get(j, k).norm();
            }
        }
    }
    Ok(sum / (n as f64 - 1.0))
}

/// Decay exponent per unit `(j-k)²`: `t/τ_d = Dℓ²t/(12ħ²)`.
fn decay_rate(cfg: &ExperimentConfig, t: f64, coupling: &Coupling) -> f64 {
    coupling.diffusion * cfg.slits.spacing * cfg.slits.spacing * t / (12.0 * HBAR * HBAR)
}

fn build_density_matrix(
    cfg: &ExperimentConfig,
    t: f64,
    rate: f64,
    detector_mode: DetectorMode,
) -> Result<SlitBasisDensityMatrix> {
    cfg.validate_for_exact()?;
    if !(t >= 0.0) || !(rate >= 0.0) {
        return Err(Error::invalid("t", "time and decay rate must be nonnegative"));
    }
    let n = cfg.slits.n;
    let overlaps = cfg.overlaps_for(detector_mode);
    let c = &cfg.amplitudes.magnitudes;
    let th = &cfg.amplitudes.phases;
    let mut rho = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 1..=n {
        for k in 1..=n {
            let djk = j as f64 - k as f64;
            let mag = c[j - 1] * c[k - 1] * overlaps.get(j, k) * (-rate * djk * djk).exp();
            rho[(j - 1) * n + (k - 1)] = Complex64::from_polar(mag, th[j - 1] - th[k - 1]);
        }
    }
    Ok(SlitBasisDensityMatrix { n, rho })
}

/// Slit-basis density matrix after time `t`, with the coupling from the
/// stored environment.
pub fn slit_density_matrix(
    cfg: &ExperimentConfig,
    t: f64,
    detector_mode: DetectorMode,
) -> Result<SlitBasisDensityMatrix> {
    let coupling = Coupling::from_environment(cfg);
    let rate = decay_rate(cfg, t, &coupling);
    build_density_matrix(cfg, t, rate, detector_mode)
}

/// Slit-basis density matrix at decoherence strength `κ = t/τ_d`.
pub fn slit_density_matrix_at_kappa(
    cfg: &ExperimentConfig,
    kappa: f64,
    detector_mode: DetectorMode,
) -> Result<SlitBasisDensityMatrix> {
    build_density_matrix(cfg, cfg.flight_time(), kappa, detector_mode)
}

fn pair_sum(magnitudes: &[f64], rate: f64) -> f64 {
    let n = magnitudes.len();
    let mut sum = 0.0;
    for j in 1..n {
        for k in (j + 1)..=n {
            let djk = (k - j) as f64;
            sum += 2.0 * magnitudes[j - 1] * magnitudes[k - 1] * (-rate * djk * djk).exp();
        }
    }
    sum / (n as f64 - 1.0)
}

/// Closed-form coherence after time `t` (independent of the detector
/// overlaps), with the coupling from the stored environment.
pub fn coherence_analytic(cfg: &ExperimentConfig, t: f64) -> Result<f64> {
    let coupling = Coupling::from_environment(cfg);
    coherence_analytic_with(cfg, t, &coupling)
}

/// Closed-form coherence with an explicit coupling.
pub fn coherence_analytic_with(cfg: &ExperimentConfig, t: f64, coupling: &Coupling) -> Result<f64> {
    if cfg.slits.n < 2 {
        return Err(Error::UndefinedCoherence);
    }
    cfg.validate_for_exact()?;
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "time must be nonnegative"));
    }
    Ok(pair_sum(&cfg.amplitudes.magnitudes, decay_rate(cfg, t, coupling)))
}

/// Closed-form coherence at decoherence strength `κ = t/τ_d`.
pub fn coherence_analytic_at_kappa(cfg: &ExperimentConfig, kappa: f64) -> Result<f64> {
    if cfg.slits.n < 2 {
        return Err(Error::UndefinedCoherence);
    }
    cfg.validate_for_exact()?;
    if !(kappa >= 0.0) {
        return Err(Error::invalid("kappa", "must be nonnegative"));
    }
    Ok(pair_sum(&cfg.amplitudes.magnitudes, kappa))
}

/// Coherence from measured primary-maximum intensities:
/// `C = (1/(n-1)) (I∥ - I⊥)/I⊥`. No clamping is applied; measurement noise
/// may push the result outside [0, 1] and the caller decides.
pub fn coherence_from_intensities(i_parallel: f64, i_perpendicular: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::UndefinedCoherence);
    }
    if !(i_perpendicular > 0.0) {
        return Err(Error::invalid("i_perpendicular", "must be positive"));
    }
    Ok((i_parallel - i_perpendicular) / i_perpendicular / (n as f64 - 1.0))
}

/// How a primary-maximum location was determined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrimaryMaxMethod {
    /// Zero or linearly ramped phases: the common maximum is analytic.
    Analytic,
    /// Located by scanning the sampled pattern; `resolution` is the grid
    /// cell size of the scan.
    GridSearch { resolution: f64 },
}

/// A primary-maximum intensity reading.
#[derive(Debug, Clone, Copy)]
pub struct PrimaryMax {
    /// Intensity value, 1/m.
    pub value: f64,
    /// Screen position of the maximum, m.
    pub location: f64,
    pub method: PrimaryMaxMethod,
}

/// Primary-maximum intensity in the far-field measurement idealization: the
/// wide single-slit envelopes are indistinguishable at the shared maximum
/// `x* = ℓ(n+1)/2` (shifted if the phases ramp linearly), where every
/// interference cosine is 1, so
///
/// ```text
/// I∥ = (1 + Σ_{j≠k}|c_j c_k| e^{-(j-k)²t/τ_d}) / √(πα/2),   I⊥ = 1/√(πα/2).
/// ```
///
/// Both detector modes must be read at the same `x*`; the envelope factor
/// cancels in the ratio used by [`coherence_from_intensities`]. Arbitrary
/// phases admit no point where all cosines peak together, which is reported
/// as [`Error::ProtocolInapplicable`] with a grid-search diagnostic.
pub fn primary_max_intensity(
    cfg: &ExperimentConfig,
    t: f64,
    coupling: &Coupling,
    detector_mode: DetectorMode,
) -> Result<PrimaryMax> {
    if cfg.slits.n < 2 {
        return Err(Error::UndefinedCoherence);
    }
    cfg.validate_for_exact()?;
    if cfg.fraunhofer_number() > FRAUNHOFER_ERROR {
        return Err(Error::Validation {
            field: "slits.width_m".to_string(),
            reason: format!(
                "measurement protocol requires the far field; Fraunhofer number {:.3e} > {FRAUNHOFER_ERROR}",
                cfg.fraunhofer_number()
            ),
        });
    }
    if !(t > 0.0) {
        return Err(Error::invalid("t", "protocol requires t > 0"));
    }
    let eps = cfg.slits.width;
    let m = cfg.quanton.mass;
    let spread = 2.0 * HBAR * t / (m * eps);
    let prefactor = 1.0 / (std::f64::consts::PI * spread * spread / 2.0).sqrt();

    let location = match detect_phase_ramp(cfg, t)? {
        RampShift(shift) => cfg.slits.pattern_center() + shift,
    };
    let bracket = match detector_mode {
        DetectorMode::Orthogonal => 1.0,
        DetectorMode::Parallel => {
            1.0 + (cfg.slits.n as f64 - 1.0)
                * pair_sum(&cfg.amplitudes.magnitudes, decay_rate(cfg, t, coupling))
        }
        DetectorMode::Configured => {
            return Err(Error::invalid(
                "detector_mode",
                "the protocol switches between parallel and orthogonal modes",
            ))
        }
    };
    Ok(PrimaryMax {
        value: prefactor * bracket,
        location,
        method: PrimaryMaxMethod::Analytic,
    })
}

struct RampShift(f64);

/// Zero phases: shift 0. Linear ramp θ_j = a + b·j: every pairwise argument
/// is restored by shifting the readout point by `-b/(phase scale)`.
/// Anything else: protocol inapplicable, diagnosed with a grid search over
/// one fringe.
fn detect_phase_ramp(cfg: &ExperimentConfig, t: f64) -> Result<RampShift> {
    const TOL: f64 = 1e-12;
    if cfg.amplitudes.phases_are_zero(TOL) {
        return Ok(RampShift(0.0));
    }
    let phase_unit = cfg.quanton.mass * cfg.slits.spacing / (HBAR * t);
    if cfg.amplitudes.phases_are_linear_ramp(TOL) {
        let b = cfg.amplitudes.phases[1] - cfg.amplitudes.phases[0];
        return Ok(RampShift(-b / phase_unit));
    }
    // diagnostic: where does the parallel-mode far-field pattern actually
    // peak, and how well can a scan resolve it?
    let ev = crate::engine::Evaluator::with_coupling(
        cfg,
        t,
        Coupling::free(),
        crate::engine::EvaluationMode::NoDecoherence,
    )?;
    let center = cfg.slits.pattern_center();
    let fringe = cfg.fringe_spacing();
    let points = 2001;
    let step = fringe / (points as f64 - 1.0);
    let mut best = (f64::NEG_INFINITY, center);
    for i in 0..points {
        let x = center - fringe / 2.0 + i as f64 * step;
        let v = ev.intensity(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    Err(Error::ProtocolInapplicable {
        reason: format!(
            "slit phases are neither zero nor a linear ramp, so no screen point makes every \
             interference cosine peak simultaneously; grid search finds the parallel-mode \
             maximum near x = {:.6e} m (resolution {:.3e} m), but the two-mode ratio there \
             does not measure the coherence",
            best.1, step
        ),
    })
}

/// Per-pair decoherence time `τ_d^{(jk)} = 12ħ²/(D(j-k)²ℓ²)`.
pub fn pair_decoherence_time(j: usize, k: usize, diffusion: f64, spacing: f64) -> Result<f64> {
    if j == k {
        return Err(Error::invalid("slit pair", "requires j != k"));
    }
    if !(spacing > 0.0) {
        return Err(Error::invalid("spacing", "must be positive"));
    }
    if !(diffusion > 0.0) {
        return Err(Error::invalid(
            "diffusion",
            "zero diffusion gives an infinite decoherence time",
        ));
    }
    let djk = j as f64 - k as f64;
    Ok(12.0 * HBAR * HBAR / (diffusion * djk * djk * spacing * spacing))
}

/// Two-slit decoherence time `τ_d = 12ħ²/(Dℓ²) = 6ħ²/(mγk_BTℓ²)`, computed
/// through the pair formula so the two agree bit-for-bit.
pub fn two_slit_decoherence_time(mass: f64, gamma: f64, temperature: f64, spacing: f64) -> Result<f64> {
    if !(mass > 0.0) || !(gamma > 0.0) || !(temperature > 0.0) || !(spacing > 0.0) {
        return Err(Error::invalid(
            "two_slit_decoherence_time",
            "all of mass, gamma, temperature, spacing must be positive",
        ));
    }
    let d = crate::model::diffusion_coefficient(mass, gamma, temperature)?;
    pair_decoherence_time(1, 2, d, spacing)
}

/// Invert a measured two-slit coherence: `τ_d = t / ln(2|c₁c₂|/C)`.
pub fn tau_d_from_coherence(coherence: f64, t: f64, c1: f64, c2: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "must be positive"));
    }
    if !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(Error::invalid("amplitudes", "|c1| and |c2| must be positive"));
    }
    let ceiling = 2.0 * c1 * c2;
    if coherence <= 0.0 {
        return Err(Error::FullyDecohered { coherence });
    }
    if coherence >= ceiling {
        return Err(Error::NoDecoherenceDetected { coherence, ceiling });
    }
    Ok(t / (ceiling / coherence).ln())
}

/// Invert measured symmetric two-slit intensities:
/// `τ_d = (λLm/h) / ln(I⊥/(I∥-I⊥))`.
pub fn tau_d_from_intensities(
    i_parallel: f64,
    i_perpendicular: f64,
    wavelength: f64,
    distance: f64,
    mass: f64,
) -> Result<f64> {
    tau_d_from_intensities_with_product(i_parallel, i_perpendicular, wavelength, distance, mass, 0.5)
}

/// As [`tau_d_from_intensities`] for a possibly asymmetric two-slit setup
/// with amplitude product `|c₁c₂|`.
pub fn tau_d_from_intensities_with_product(
    i_parallel: f64,
    i_perpendicular: f64,
    wavelength: f64,
    distance: f64,
    mass: f64,
    c1c2: f64,
) -> Result<f64> {
    if !(i_perpendicular > 0.0) {
        return Err(Error::invalid("i_perpendicular", "must be positive"));
    }
    if !(c1c2 > 0.0) {
        return Err(Error::invalid("c1c2", "must be positive"));
    }
    if i_parallel <= i_perpendicular {
        return Err(Error::NoInterference {
            i_par: i_parallel,
            i_perp: i_perpendicular,
        });
    }
    let flight = wavelength * distance * mass / PLANCK;
    if !(flight > 0.0) || !flight.is_finite() {
        return Err(Error::invalid("flight_time", "lambda, L, mass must be positive and finite"));
    }
    let coherence = (i_parallel - i_perpendicular) / i_perpendicular;
    if coherence >= 2.0 * c1c2 {
        return Err(Error::NoDecoherenceDetected {
            coherence,
            ceiling: 2.0 * c1c2,
        });
    }
    Ok(flight / (2.0 * c1c2 * i_perpendicular / (i_parallel - i_perpendicular)).ln())
}

/// Fringe visibility `V = (I_max - I_min)/(I_max + I_min)` from the central
/// interior maximum and its adjacent interior minima. A structured but
/// fringeless profile (no interior minima, e.g. fully decohered or
/// orthogonal-detector patterns) has visibility 0; a constant or monotonic
/// profile is an error.
pub fn visibility(profile: &IntensityProfile) -> Result<f64> {
    let ys = &profile.intensity;
    if ys.len() < 3 {
        return Err(Error::FlatProfile);
    }
    let global_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let global_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(global_max - global_min > 1e-12 * global_max.abs().max(1e-300)) {
        return Err(Error::FlatProfile);
    }
    let prominence = 1e-12 * (global_max - global_min);
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..ys.len() - 1 {
        if ys[i] >= ys[i - 1] + prominence && ys[i] >= ys[i + 1] + prominence {
            maxima.push(i);
        } else if ys[i] + prominence <= ys[i - 1] && ys[i] + prominence <= ys[i + 1] {
            minima.push(i);
        }
    }
    if maxima.is_empty() {
        return Err(Error::FlatProfile);
    }
    // central maximum: the strongest interior peak
    let &peak = maxima
        .iter()
        .max_by(|a, b| ys[**a].total_cmp(&ys[**b]))
        .expect("nonempty");
    let left_min = minima.iter().rev().find(|&&i| i < peak);
    let right_min = minima.iter().find(|&&i| i > peak);
    let adjacent = match (left_min, right_min) {
        (Some(&l), Some(&r)) => 0.5 * (ys[l] + ys[r]),
        (Some(&l), None) => ys[l],
        (None, Some(&r)) => ys[r],
        (None, None) => return Ok(0.0), // envelope hump without fringes
    };
    Ok((ys[peak] - adjacent) / (ys[peak] + adjacent))
}

/// Positions of interior maxima whose height is at least
/// `threshold_fraction` of the global maximum, refined by parabolic
/// interpolation through the three samples around each peak.
pub fn interior_maxima(xs: &[f64], ys: &[f64], threshold_fraction: f64) -> Vec<f64> {
    let global_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = threshold_fraction * global_max;
    let mut out = Vec::new();
    for i in 1..ys.len() - 1 {
        if ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] && ys[i] >= threshold {
            let denom = ys[i - 1] - 2.0 * ys[i] + ys[i + 1];
            let delta = if denom.abs() > 0.0 {
                0.5 * (ys[i - 1] - ys[i + 1]) / denom
            } else {
                0.0
            };
            let h = xs[i + 1] - xs[i];
            out.push(xs[i] + delta.clamp(-1.0, 1.0) * h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Evaluator, EvaluationMode, Normalization};
    use crate::model::{load_preset, SourceAmplitudes};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn two_slit() -> ExperimentConfig {
        load_preset("neon").unwrap().with_slit_count(2)
    }

    #[test]
    fn matrix_coherence_basics() {
        let cfg = two_slit();
        // diagonal matrix -> 0
        let rho = slit_density_matrix_at_kappa(&cfg, 0.0, DetectorMode::Orthogonal).unwrap();
        assert_eq!(coherence_of_matrix(&rho).unwrap(), 0.0);
        // maximally coherent pure state -> 1
        for n in 2..=6 {
            let cfg = load_preset("neon").unwrap().with_slit_count(n);
            let rho = slit_density_matrix_at_kappa(&cfg, 0.0, DetectorMode::Parallel).unwrap();
            rho.check_invariants().unwrap();
            assert!(rel(coherence_of_matrix(&rho).unwrap(), 1.0) < 1e-12);
            for j in 1..=n {
                for k in 1..=n {
                    assert!(rel(rho.get(j, k).re, 1.0 / n as f64) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_slit_coherence_is_undefined() {
        let cfg = load_preset("neon").unwrap().with_slit_count(1);
        let rho = slit_density_matrix_at_kappa(&cfg, 0.0, DetectorMode::Parallel).unwrap();
        assert!(matches!(coherence_of_matrix(&rho), Err(Error::UndefinedCoherence)));
        assert!(matches!(
            coherence_analytic_at_kappa(&cfg, 0.0),
            Err(Error::UndefinedCoherence)
        ));
        assert!(matches!(
            primary_max_intensity(&cfg, 1e-3, &Coupling::free(), DetectorMode::Parallel),
            Err(Error::UndefinedCoherence)
        ));
    }

    #[test]
    fn two_off_diagonals_of_quarter_give_half() {
        // n = 2, ρ_12 = ρ_21 = 0.25 -> C = 0.5
        let cfg = two_slit();
        // e^{-κ}/2 = 1/4 at κ = ln 2
        let rho = slit_density_matrix_at_kappa(&cfg, 2f64.ln(), DetectorMode::Parallel).unwrap();
        assert!(rel(rho.get(1, 2).re, 0.25) < 1e-12);
        assert!(rel(coherence_of_matrix(&rho).unwrap(), 0.5) < 1e-12);
    }

    #[test]
    fn off_diagonal_at_tau_d() {
        let cfg = two_slit();
        let rho = slit_density_matrix_at_kappa(&cfg, 1.0, DetectorMode::Parallel).unwrap();
        assert!(rel(rho.get(1, 2).norm(), 0.5 * (-1f64).exp()) < 1e-12);
        assert!((rho.get(1, 2).norm() - 0.18394).abs() < 1e-5);
    }

    #[test]
    fn analytic_closed_forms() {
        // equal amplitudes, t = 0 -> 1
        for n in 2..=8 {
            let cfg = load_preset("neon").unwrap().with_slit_count(n);
            assert!(rel(coherence_analytic_at_kappa(&cfg, 0.0).unwrap(), 1.0) < 1e-12);
        }
        // n = 2 at κ = 1 -> e^{-1}
        let c = coherence_analytic_at_kappa(&two_slit(), 1.0).unwrap();
        assert!(rel(c, (-1f64).exp()) < 1e-12);
        // n = 4 equal at κ = 1/12: explicit ordered-pair sum
        let cfg = load_preset("neon").unwrap();
        let c = coherence_analytic_at_kappa(&cfg, 1.0 / 12.0).unwrap();
        let oracle = (6.0 * (-1.0f64 / 12.0).exp()
            + 4.0 * (-4.0f64 / 12.0).exp()
            + 2.0 * (-9.0f64 / 12.0).exp())
            / 12.0;
        assert!(rel(c, oracle) < 1e-12);
        assert!((c - 0.77759).abs() < 1e-5, "C = {c}");
    }

    #[test]
    fn analytic_coherence_ignores_the_detector() {
        let mut cfg = load_preset("c60").unwrap();
        let a = coherence_analytic_at_kappa(&cfg, 0.3).unwrap();
        cfg.detector = cfg.overlaps_for(DetectorMode::Orthogonal);
        let b = coherence_analytic_at_kappa(&cfg, 0.3).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn intensity_coherence_examples() {
        assert_eq!(coherence_from_intensities(1.0, 1.0, 2).unwrap(), 0.0);
        assert_eq!(coherence_from_intensities(2.0, 1.0, 2).unwrap(), 1.0);
        assert_eq!(coherence_from_intensities(4.0, 1.0, 4).unwrap(), 1.0);
        assert!(coherence_from_intensities(1.0, 0.0, 2).is_err());
        assert!(coherence_from_intensities(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn protocol_matches_analytic_for_zero_phases() {
        let cfg = load_preset("neon").unwrap();
        let t = cfg.flight_time();
        let coupling = Coupling::from_kappa(1.0 / 12.0, cfg.slits.spacing, t).unwrap();
        let par = primary_max_intensity(&cfg, t, &coupling, DetectorMode::Parallel).unwrap();
        let perp = primary_max_intensity(&cfg, t, &coupling, DetectorMode::Orthogonal).unwrap();
        assert_eq!(par.location, perp.location);
        let c = coherence_from_intensities(par.value, perp.value, cfg.slits.n).unwrap();
        let reference = coherence_analytic_at_kappa(&cfg, 1.0 / 12.0).unwrap();
        assert!(rel(c, reference) < 1e-12);
        assert!((c - 0.77759).abs() < 1e-5);
    }

    #[test]
    fn protocol_two_slit_ratio_matches_grid_maximum() {
        let cfg = two_slit();
        let t = cfg.flight_time();
        let par =
            primary_max_intensity(&cfg, t, &Coupling::free(), DetectorMode::Parallel).unwrap();
        let perp =
            primary_max_intensity(&cfg, t, &Coupling::free(), DetectorMode::Orthogonal).unwrap();
        assert!(rel(par.value / perp.value, 2.0) < 1e-12);
        // cross-check against the sampled far-field pattern maximum
        let ev = Evaluator::at_kappa(&cfg, 0.0, EvaluationMode::FarField).unwrap();
        let profile = ev.pattern(Normalization::Raw).unwrap();
        let grid_max = profile.intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let grid_perp = ev.incoherent(par.location);
        assert!(rel(grid_max / grid_perp, 2.0) < 1e-2);
    }

    #[test]
    fn orthogonal_mode_reading_is_time_independent_at_fixed_alpha() {
        let cfg = load_preset("neon").unwrap();
        let t = cfg.flight_time();
        let c1 = Coupling::from_kappa(0.3, cfg.slits.spacing, t).unwrap();
        let c2 = Coupling::from_kappa(2.0, cfg.slits.spacing, t).unwrap();
        let a = primary_max_intensity(&cfg, t, &c1, DetectorMode::Orthogonal).unwrap();
        let b = primary_max_intensity(&cfg, t, &c2, DetectorMode::Orthogonal).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn linear_phase_ramp_shifts_the_readout_point() {
        let mut cfg = two_slit();
        cfg.amplitudes = SourceAmplitudes {
            magnitudes: cfg.amplitudes.magnitudes.clone(),
            phases: vec![0.2, 0.5],
        };
        let t = cfg.flight_time();
        let par = primary_max_intensity(&cfg, t, &Coupling::free(), DetectorMode::Parallel).unwrap();
        assert!(par.method == PrimaryMaxMethod::Analytic);
        assert!(par.location != cfg.slits.pattern_center());
        // the shifted point is a genuine maximum of the sampled pattern
        let ev = Evaluator::at_kappa(&cfg, 0.0, EvaluationMode::FarField).unwrap();
        let v0 = ev.intensity(par.location);
        let fringe = cfg.fringe_spacing();
        assert!(v0 > ev.intensity(par.location + 0.1 * fringe));
        assert!(v0 > ev.intensity(par.location - 0.1 * fringe));
    }

    #[test]
    fn arbitrary_phases_are_protocol_inapplicable() {
        let mut cfg = load_preset("neon").unwrap();
        cfg.amplitudes = SourceAmplitudes {
            magnitudes: cfg.amplitudes.magnitudes.clone(),
            phases: vec![0.0, 0.9, 0.1, 0.4],
        };
        let t = cfg.flight_time();
        let err = primary_max_intensity(&cfg, t, &Coupling::free(), DetectorMode::Parallel)
            .unwrap_err();
        assert!(matches!(err, Error::ProtocolInapplicable { .. }), "got {err}");
        assert!(err.to_string().contains("resolution"));
    }

    #[test]
    fn decoherence_time_ratios() {
        let d = 2.312e-51;
        let ell = 6e-6;
        let t12 = pair_decoherence_time(1, 2, d, ell).unwrap();
        let t14 = pair_decoherence_time(1, 4, d, ell).unwrap();
        let t13 = pair_decoherence_time(1, 3, d, ell).unwrap();
        assert!(rel(t12 / t14, 9.0) < 1e-12);
        assert!(rel(t13 / t14, 9.0 / 4.0) < 1e-12);
        assert!(pair_decoherence_time(2, 2, d, ell).is_err());
        assert!(pair_decoherence_time(1, 2, 0.0, ell).is_err());
    }

    #[test]
    fn neon_pair_time_from_direct_arithmetic() {
        let d = crate::model::diffusion_coefficient(3.349e-26, 1.0, 2.5e-3).unwrap();
        let tau = pair_decoherence_time(1, 2, d, 6e-6).unwrap();
        let direct = 12.0 * HBAR * HBAR / (d * 6e-6 * 6e-6);
        assert_eq!(tau, direct);
        assert!((tau - 1.60e-6).abs() / 1.60e-6 < 5e-3, "tau = {tau}");
    }

    #[test]
    fn two_slit_time_scalings_and_pair_consistency() {
        let (m, g, temp, ell) = (1.2e-24, 0.7, 300.0, 1e-7);
        let tau = two_slit_decoherence_time(m, g, temp, ell).unwrap();
        assert!(rel(two_slit_decoherence_time(m, g, 2.0 * temp, ell).unwrap(), tau / 2.0) < 1e-12);
        assert!(rel(two_slit_decoherence_time(m, g, temp, 2.0 * ell).unwrap(), tau / 4.0) < 1e-12);
        let d = crate::model::diffusion_coefficient(m, g, temp).unwrap();
        assert_eq!(tau.to_bits(), pair_decoherence_time(1, 2, d, ell).unwrap().to_bits());
        assert!(two_slit_decoherence_time(m, 0.0, temp, ell).is_err());
    }

    #[test]
    fn coherence_inversion_round_trip() {
        // C = 2|c1c2| e^{-1} at time t -> τ_d = t
        let c1 = 1.0 / 2f64.sqrt();
        let t = 0.02;
        let c = 2.0 * c1 * c1 * (-1f64).exp();
        assert!(rel(tau_d_from_coherence(c, t, c1, c1).unwrap(), t) < 1e-12);
        // full round trip through the two-slit closed form
        let cfg = two_slit();
        for &kappa in &[1e-3, 0.03, 0.7, 3.0, 10.0] {
            let tau_true = cfg.flight_time() / kappa;
            let c = coherence_analytic_at_kappa(&cfg, kappa).unwrap();
            let tau = tau_d_from_coherence(c, cfg.flight_time(), c1, c1).unwrap();
            assert!(rel(tau, tau_true) < 1e-12, "kappa = {kappa}");
        }
        // symmetric slits, C = 0.5 at the neon flight time
        let t = 3.366e-2;
        let tau = tau_d_from_coherence(0.5, t, c1, c1).unwrap();
        assert!(rel(tau, t / 2f64.ln()) < 1e-12);
        assert!((tau - 4.857e-2).abs() / 4.857e-2 < 1e-3);
    }

    #[test]
    fn coherence_inversion_error_paths() {
        let c1 = 1.0 / 2f64.sqrt();
        assert!(matches!(
            tau_d_from_coherence(1.0, 1.0, c1, c1),
            Err(Error::NoDecoherenceDetected { .. })
        ));
        assert!(matches!(
            tau_d_from_coherence(0.0, 1.0, c1, c1),
            Err(Error::FullyDecohered { .. })
        ));
    }

    #[test]
    fn intensity_inversion() {
        // I⊥ = 1, I∥ = 1 + e^{-1} -> τ_d = flight time
        let (lambda, dist, m) = (0.018e-6, 37e-3, 3.349e-26);
        let flight = crate::model::flight_time(lambda, dist, m).unwrap();
        let tau = tau_d_from_intensities(1.0 + (-1f64).exp(), 1.0, lambda, dist, m).unwrap();
        assert!(rel(tau, flight) < 1e-12);
        // I∥ = 2 I⊥ means C = 1: no decoherence occurred
        assert!(matches!(
            tau_d_from_intensities(2.0, 1.0, lambda, dist, m),
            Err(Error::NoDecoherenceDetected { .. })
        ));
        assert!(matches!(
            tau_d_from_intensities(0.9, 1.0, lambda, dist, m),
            Err(Error::NoInterference { .. })
        ));
    }

    #[test]
    fn chained_inversion_through_the_protocol() {
        let cfg = two_slit();
        let t = cfg.flight_time();
        let kappa = 0.5;
        let coupling = Coupling::from_kappa(kappa, cfg.slits.spacing, t).unwrap();
        let par = primary_max_intensity(&cfg, t, &coupling, DetectorMode::Parallel).unwrap();
        let perp = primary_max_intensity(&cfg, t, &coupling, DetectorMode::Orthogonal).unwrap();
        let tau = tau_d_from_intensities(
            par.value,
            perp.value,
            cfg.quanton.wavelength,
            cfg.screen.distance,
            cfg.quanton.mass,
        )
        .unwrap();
        assert!(rel(tau, t / kappa) < 1e-6);
    }

    #[test]
    fn visibility_of_two_slit_patterns() {
        // narrow slits: wide envelope, fringes barely modulated by it
        let mut cfg = two_slit();
        cfg.slits.width = 0.12e-6;
        cfg.screen.x_min = cfg.slits.pattern_center() - 2.6 * cfg.fringe_spacing();
        cfg.screen.x_max = cfg.slits.pattern_center() + 2.6 * cfg.fringe_spacing();
        cfg.screen.points = 4001;

        // κ = 0, parallel: perfect fringes
        let p = Evaluator::at_kappa(&cfg, 0.0, EvaluationMode::FarField)
            .unwrap()
            .pattern(Normalization::Raw)
            .unwrap();
        let v = visibility(&p).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "V = {v}");

        // κ = 1: V ≈ e^{-1}
        let p = Evaluator::at_kappa(&cfg, 1.0, EvaluationMode::FarField)
            .unwrap()
            .pattern(Normalization::Raw)
            .unwrap();
        let v = visibility(&p).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-2, "V = {v}");

        // orthogonal detector: a single smooth hump, no fringes
        let mut ortho = cfg.clone();
        ortho.detector = ortho.overlaps_for(DetectorMode::Orthogonal);
        let p = Evaluator::at_kappa(&ortho, 0.0, EvaluationMode::FarField)
            .unwrap()
            .pattern(Normalization::Raw)
            .unwrap();
        let v = visibility(&p).unwrap();
        assert!(v.abs() < 1e-6, "V = {v}");
    }

    #[test]
    fn visibility_rejects_flat_profiles() {
        let profile = IntensityProfile {
            x: (0..10).map(|i| i as f64).collect(),
            intensity: vec![1.0; 10],
            t: 0.0,
            normalization: Normalization::Raw,
        };
        assert!(matches!(visibility(&profile), Err(Error::FlatProfile)));
    }
}
