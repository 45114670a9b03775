//! Physical configuration: domain types, validation, presets, config files,
//! and nondimensionalization.
//!
//! Conventions: slit `j` (1-based, `j = 1..=n`) is centered at `x = j·ℓ`,
//! so the pattern center sits at `x = ℓ(n+1)/2`. All boundary units are SI.

mod configfile;
mod dimensionless;
mod presets;

pub use configfile::{load_config, parse_config_str, render_config};
pub use dimensionless::{nondimensionalize, redimensionalize, DimensionlessInstance};
pub use presets::{load_preset, preset_names};

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::Error;
use crate::Result;

/// Interfering particle: mass and de Broglie wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantonSpec {
    /// Mass, kg.
    pub mass: f64,
    /// De Broglie wavelength, m.
    pub wavelength: f64,
}

/// Slit array geometry. Slit `j` is a Gaussian aperture of 1/e half-width
/// `width` centered at `j·spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitArray {
    /// Number of slits, `n >= 1`.
    pub n: usize,
    /// Center-to-center spacing ℓ, m.
    pub spacing: f64,
    /// Gaussian width ε of each slit state, m.
    pub width: f64,
}

impl SlitArray {
    /// Center of slit `j` (1-based).
    pub fn center_of(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    /// Symmetry point of the array, `ℓ(n+1)/2`.
    pub fn pattern_center(&self) -> f64 {
        self.spacing * (self.n as f64 + 1.0) / 2.0
    }
}

/// Source amplitudes `c_j = |c_j| e^{iθ_j}` across the slits.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceAmplitudes {
    /// Magnitudes `|c_j|`, one per slit; `Σ|c_j|² = 1`.
    pub magnitudes: Vec<f64>,
    /// Phases θ_j in radians (detector-state phases are absorbed here).
    pub phases: Vec<f64>,
}

impl SourceAmplitudes {
    /// Equal weights `|c_j| = 1/√n`, zero phases.
    pub fn equal(n: usize) -> Self {
        let c = 1.0 / (n as f64).sqrt();
        SourceAmplitudes {
            magnitudes: vec![c; n],
            phases: vec![0.0; n],
        }
    }

    /// Magnitudes with zero phases. Normalization is checked by
    /// [`ExperimentConfig::validate`].
    pub fn from_magnitudes(magnitudes: Vec<f64>) -> Self {
        let n = magnitudes.len();
        SourceAmplitudes {
            magnitudes,
            phases: vec![0.0; n],
        }
    }

    /// `Σ|c_j|²`.
    pub fn norm_squared(&self) -> f64 {
        self.magnitudes.iter().map(|c| c * c).sum()
    }

    /// True when every phase is zero (within `tol`).
    pub fn phases_are_zero(&self, tol: f64) -> bool {
        self.phases.iter().all(|t| t.abs() <= tol)
    }

    /// True when phases form a linear ramp θ_j = a + b·j (within `tol`),
    /// which only shifts the interference pattern sideways.
    pub fn phases_are_linear_ramp(&self, tol: f64) -> bool {
        let n = self.phases.len();
        if n <= 2 {
            return true;
        }
        let a = self.phases[0];
        let b = self.phases[1] - self.phases[0];
        self.phases
            .iter()
            .enumerate()
            .all(|(i, t)| (t - (a + b * i as f64)).abs() <= tol)
    }
}

/// Which-way detector state overlaps `O_jk = <d_j|d_k>`, a real symmetric
/// positive-semidefinite Gram matrix with unit diagonal. Detector phases are
/// absorbed into the source phases, so complex overlaps are rejected at
/// ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOverlaps {
    n: usize,
    matrix: Vec<f64>, // row-major n×n
}

/// Detector setting used by operations that switch between fully
/// indistinguishable and fully distinguishable paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// All detector states identical: `O_jk = 1`.
    Parallel,
    /// All detector states orthogonal: `O_jk = δ_jk`.
    Orthogonal,
    /// Use the overlaps stored in the configuration.
    Configured,
}

impl DetectorOverlaps {
    /// All paths indistinguishable, `O_jk = 1`.
    pub fn parallel(n: usize) -> Self {
        DetectorOverlaps {
            n,
            matrix: vec![1.0; n * n],
        }
    }

    /// All paths distinguishable, `O_jk = δ_jk`.
    pub fn orthogonal(n: usize) -> Self {
        let mut matrix = vec![0.0; n * n];
        for j in 0..n {
            matrix[j * n + j] = 1.0;
        }
        DetectorOverlaps { n, matrix }
    }

    /// From a row-major n×n matrix. Invariants are checked by
    /// [`ExperimentConfig::validate`].
    pub fn from_matrix(n: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::invalid(
                "detector.matrix",
                format!("expected {} entries for n = {n}, got {}", n * n, matrix.len()),
            ));
        }
        Ok(DetectorOverlaps { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `O_jk` with 1-based slit indices.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.matrix[(j - 1) * self.n + (k - 1)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.matrix
    }

    /// True when every off-diagonal overlap is 1 (within 1e-12).
    pub fn is_parallel(&self) -> bool {
        self.matrix.iter().all(|o| (o - 1.0).abs() <= 1e-12)
    }

    /// Smallest eigenvalue-like pivot from an LDLᵀ factorization; the matrix
    /// is positive semidefinite iff this is nonnegative (up to roundoff).
    /// A vanishing pivot with nonzero entries left in its column marks an
    /// indefinite matrix, reported as a negative pivot.
    fn min_ldlt_pivot(&self) -> f64 {
        let n = self.n;
        let mut a = self.matrix.clone();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let pivot = a[k * n + k];
            min_pivot = min_pivot.min(pivot);
            if pivot.abs() <= 1e-12 {
                for i in (k + 1)..n {
                    if a[i * n + k].abs() > 1e-10 {
                        return -a[i * n + k].abs();
                    }
                }
                continue;
            }
            if pivot < 0.0 {
                return pivot;
            }
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        min_pivot
    }
}

/// Thermal environment: friction coefficient and bath temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentSpec {
    /// Langevin friction coefficient γ, 1/s.
    pub gamma: f64,
    /// Bath temperature T, K.
    pub temperature: f64,
}

/// Screen placement and sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenGeometry {
    /// Slit-to-screen distance L, m.
    pub distance: f64,
    /// Leftmost sampled screen position, m.
    pub x_min: f64,
    /// Rightmost sampled screen position, m.
    pub x_max: f64,
    /// Number of grid points (>= 2).
    pub points: usize,
}

impl ScreenGeometry {
    /// The sampled screen positions, uniformly spaced and inclusive of both
    /// endpoints.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        let dx = (self.x_max - self.x_min) / (n as f64 - 1.0);
        (0..n).map(|i| self.x_min + i as f64 * dx).collect()
    }
}

/// Complete description of one decohering interference experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub quanton: QuantonSpec,
    pub slits: SlitArray,
    pub amplitudes: SourceAmplitudes,
    pub detector: DetectorOverlaps,
    pub environment: EnvironmentSpec,
    pub screen: ScreenGeometry,
}

/// Severity of a validation finding. `Error` entries make the configuration
/// unusable for at least one module; `Warning` entries flag marginal
/// regimes (e.g. a Fraunhofer number above 0.01 but below 0.1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

/// One violated invariant.
#[derive(Debug, Clone)]
pub struct Violation {
    pub field: String,
    pub severity: Severity,
    pub message: String,
}

/// Outcome of [`ExperimentConfig::validate`]. Empty iff the configuration is
/// usable by every module (including the far-field ones).
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.violations.iter().any(|v| v.severity == Severity::Error)
    }

    /// First error-severity violation converted to an [`Error`], if any.
    pub fn into_result(self) -> Result<()> {
        match self
            .violations
            .into_iter()
            .find(|v| v.severity == Severity::Error)
        {
            None => Ok(()),
            Some(v) => Err(Error::Validation {
                field: v.field,
                reason: v.message,
            }),
        }
    }

    fn push(&mut self, field: impl Into<String>, severity: Severity, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            severity,
            message: message.into(),
        });
    }
}

/// Fraunhofer threshold above which far-field formulas get a warning.
pub const FRAUNHOFER_WARN: f64 = 0.01;
/// Fraunhofer threshold above which far-field formulas are refused.
pub const FRAUNHOFER_ERROR: f64 = 0.1;

impl ExperimentConfig {
    /// Check every invariant and return the full report (report-only; never
    /// fails).
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.slits.n;

        if !(self.quanton.mass > 0.0) || !self.quanton.mass.is_finite() {
            report.push("quanton.mass_kg", Severity::Error, "mass must be positive and finite");
        }
        if !(self.quanton.wavelength > 0.0) || !self.quanton.wavelength.is_finite() {
            report.push("quanton.lambda_m", Severity::Error, "wavelength must be positive and finite");
        }
        if n < 1 {
            report.push("slits.n", Severity::Error, "need at least one slit");
        }
        if !(self.slits.spacing > 0.0) || !self.slits.spacing.is_finite() {
            report.push("slits.spacing_m", Severity::Error, "slit spacing must be positive and finite");
        }
        if !(self.slits.width > 0.0) || !self.slits.width.is_finite() {
            report.push("slits.width_m", Severity::Error, "slit width must be positive and finite");
        }

        if self.amplitudes.magnitudes.len() != n {
            report.push(
                "amplitudes.c",
                Severity::Error,
                format!("expected {n} magnitudes, got {}", self.amplitudes.magnitudes.len()),
            );
        }
        if self.amplitudes.phases.len() != n {
            report.push(
                "amplitudes.theta",
                Severity::Error,
                format!("expected {n} phases, got {}", self.amplitudes.phases.len()),
            );
        }
        if self.amplitudes.magnitudes.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            report.push("amplitudes.c", Severity::Error, "magnitudes must be nonnegative and finite");
        } else if self.amplitudes.magnitudes.len() == n {
            let norm = self.amplitudes.norm_squared();
            if (norm - 1.0).abs() > 1e-12 {
                report.push(
                    "amplitudes.c",
                    Severity::Error,
                    format!("amplitude normalization: sum of |c_j|^2 = {norm}, expected 1"),
                );
            }
        }

        self.validate_detector(&mut report);

        if !(self.environment.gamma >= 0.0) || !self.environment.gamma.is_finite() {
            report.push("env.gamma_per_s", Severity::Error, "gamma must be nonnegative and finite");
        }
        if !(self.environment.temperature >= 0.0) || !self.environment.temperature.is_finite() {
            report.push("env.T_K", Severity::Error, "temperature must be nonnegative and finite");
        }

        if !(self.screen.distance > 0.0) || !self.screen.distance.is_finite() {
            report.push("screen.L_m", Severity::Error, "screen distance must be positive and finite");
        }
        if !(self.screen.x_min < self.screen.x_max) {
            report.push("screen.xmin_m", Severity::Error, "screen range must satisfy xmin < xmax");
        }
        if self.screen.points < 2 {
            report.push("screen.points", Severity::Error, "need at least 2 screen points");
        }

        // Fraunhofer condition for the far-field operations
        let f = self.fraunhofer_number();
        if f.is_finite() && f > FRAUNHOFER_ERROR {
            report.push(
                "slits.width_m",
                Severity::Error,
                format!("Fraunhofer condition violated: eps^2*pi/(lambda*L) = {f:.4e} > {FRAUNHOFER_ERROR}"),
            );
        } else if f.is_finite() && f > FRAUNHOFER_WARN {
            report.push(
                "slits.width_m",
                Severity::Warning,
                format!("Fraunhofer number eps^2*pi/(lambda*L) = {f:.4e} exceeds {FRAUNHOFER_WARN}; far-field formulas are marginal"),
            );
        }

        report
    }

    fn validate_detector(&self, report: &mut ValidationReport) {
        let n = self.slits.n;
        let d = &self.detector;
        if d.n != n {
            report.push(
                "detector.matrix",
                Severity::Error,
                format!("overlap matrix is {}x{}, expected {n}x{n}", d.n, d.n),
            );
            return;
        }
        for j in 1..=n {
            if (d.get(j, j) - 1.0).abs() > 1e-12 {
                report.push(
                    "detector.matrix",
                    Severity::Error,
                    format!("detector states must be normalized: O[{j}][{j}] = {}", d.get(j, j)),
                );
            }
            for k in (j + 1)..=n {
                if (d.get(j, k) - d.get(k, j)).abs() > 1e-12 {
                    report.push(
                        "detector.matrix",
                        Severity::Error,
                        format!("overlap matrix must be symmetric: O[{j}][{k}] != O[{k}][{j}]"),
                    );
                }
            }
        }
        if d.matrix.iter().any(|o| !o.is_finite() || *o < -1e-12 || *o > 1.0 + 1e-12) {
            report.push(
                "detector.matrix",
                Severity::Error,
                "overlaps must lie in [0, 1]",
            );
        } else if d.min_ldlt_pivot() < -1e-10 {
            report.push(
                "detector.matrix",
                Severity::Error,
                "overlap matrix is not positive semidefinite (not a Gram matrix)",
            );
        }
    }

    /// Validation that ignores far-field-only violations (the Fraunhofer
    /// condition), for operations that use the exact dynamics.
    pub(crate) fn validate_for_exact(&self) -> Result<()> {
        let report = self.validate();
        for v in report.violations {
            if v.severity == Severity::Error && !v.message.contains("Fraunhofer") {
                return Err(Error::Validation {
                    field: v.field,
                    reason: v.message,
                });
            }
        }
        Ok(())
    }

    /// `ε²π/(λL)`; far-field formulas require this to be small.
    pub fn fraunhofer_number(&self) -> f64 {
        self.slits.width * self.slits.width * std::f64::consts::PI
            / (self.quanton.wavelength * self.screen.distance)
    }

    /// Diffusion coefficient `D = 2mγk_BT` from the stored environment.
    pub fn diffusion(&self) -> f64 {
        2.0 * self.quanton.mass * self.environment.gamma * BOLTZMANN * self.environment.temperature
    }

    /// Slit-to-screen flight time `λLm/h`. Meaningful for validated
    /// configurations; garbage inputs flow through as garbage numbers and
    /// are caught by validation, never by a panic here.
    pub fn flight_time(&self) -> f64 {
        self.quanton.wavelength * self.screen.distance * self.quanton.mass / PLANCK
    }

    /// Spacing `λL/ℓ` between primary maxima in the far field.
    pub fn fringe_spacing(&self) -> f64 {
        self.quanton.wavelength * self.screen.distance / self.slits.spacing
    }

    /// Overlap matrix corresponding to a detector setting.
    pub fn overlaps_for(&self, mode: DetectorMode) -> DetectorOverlaps {
        match mode {
            DetectorMode::Parallel => DetectorOverlaps::parallel(self.slits.n),
            DetectorMode::Orthogonal => DetectorOverlaps::orthogonal(self.slits.n),
            DetectorMode::Configured => self.detector.clone(),
        }
    }

    /// Same experiment with a different slit count: equal amplitudes, a
    /// parallel detector of matching size, and the screen window re-centered
    /// on the new pattern center.
    pub fn with_slit_count(&self, n: usize) -> ExperimentConfig {
        let mut cfg = self.clone();
        let old_center = self.slits.pattern_center();
        cfg.slits.n = n;
        cfg.amplitudes = SourceAmplitudes::equal(n);
        cfg.detector = if self.detector.is_parallel() {
            DetectorOverlaps::parallel(n)
        } else {
            DetectorOverlaps::orthogonal(n)
        };
        let new_center = cfg.slits.pattern_center();
        cfg.screen.x_min += new_center - old_center;
        cfg.screen.x_max += new_center - old_center;
        cfg
    }
}

/// Diffusion coefficient `D = 2mγk_BT`, kg²·m²/s³.
pub fn diffusion_coefficient(mass: f64, gamma: f64, temperature: f64) -> Result<f64> {
    if !mass.is_finite() || !gamma.is_finite() || !temperature.is_finite() {
        return Err(Error::invalid("diffusion_coefficient", "nonfinite input"));
    }
    if mass <= 0.0 {
        return Err(Error::invalid("mass", "must be positive"));
    }
    if gamma < 0.0 {
        return Err(Error::invalid("gamma", "must be nonnegative"));
    }
    if temperature < 0.0 {
        return Err(Error::invalid("temperature", "must be nonnegative"));
    }
    Ok(2.0 * mass * gamma * BOLTZMANN * temperature)
}

/// Slit-to-screen flight time `t = λLm/h` (the particle moves at the de
/// Broglie velocity `v = h/(mλ)` over a distance `L`).
pub fn flight_time(wavelength: f64, distance: f64, mass: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !(mass > 0.0) || distance < 0.0 {
        return Err(Error::invalid(
            "flight_time",
            "requires wavelength > 0, mass > 0, distance >= 0",
        ));
    }
    Ok(wavelength * distance * mass / PLANCK)
}
