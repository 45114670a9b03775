//! Built-in experiment presets.
//!
//! Parameters are adapted from two matter-wave interference experiments:
//! ultracold neon atoms (`neon`) and C60 fullerene molecules (`c60`). The
//! slit width and the friction coefficient are not fixed by those
//! experiments; the widths below satisfy the narrow-slit condition
//! `ε² << λL/π` while leaving several fringes visible under the single-slit
//! envelope, and γ defaults to 1/s (decoherence strength is usually driven
//! through `κ = t/τ_d` instead).

use super::{
    DetectorOverlaps, EnvironmentSpec, ExperimentConfig, QuantonSpec, ScreenGeometry, SlitArray,
    SourceAmplitudes,
};
use crate::error::Error;
use crate::Result;

/// Names accepted by [`load_preset`], in listing order.
pub fn preset_names() -> &'static [&'static str] {
    &["neon", "c60"]
}

/// Look up a preset configuration by name.
pub fn load_preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "neon" => Ok(neon()),
        "c60" => Ok(c60()),
        _ => Err(Error::UnknownPreset {
            name: name.to_string(),
            available: preset_names().join(", "),
        }),
    }
}

/// Ultracold neon atoms: m = 3.349e-26 kg, T = 2.5 mK, λ = 0.018 μm,
/// ℓ = 6 μm, L = 37 mm; 4 slits of width 1 μm. Fringe spacing λL/ℓ = 111 μm.
fn neon() -> ExperimentConfig {
    let n = 4;
    let slits = SlitArray {
        n,
        spacing: 6e-6,
        width: 1e-6,
    };
    let center = slits.pattern_center();
    ExperimentConfig {
        quanton: QuantonSpec {
            mass: 3.349e-26,
            wavelength: 0.018e-6,
        },
        slits,
        amplitudes: SourceAmplitudes::equal(n),
        detector: DetectorOverlaps::parallel(n),
        environment: EnvironmentSpec {
            gamma: 1.0,
            temperature: 2.5e-3,
        },
        screen: ScreenGeometry {
            distance: 37e-3,
            x_min: center - 400e-6,
            x_max: center + 400e-6,
            points: 1001,
        },
    }
}

/// C60 fullerene molecules: m = 1.2e-24 kg, T = 900 K, λ = 0.0025 nm,
/// ℓ = 100 nm, L = 1.25 m; 4 slits of width 20 nm. Fringe spacing 31.25 μm.
fn c60() -> ExperimentConfig {
    let n = 4;
    let slits = SlitArray {
        n,
        spacing: 100e-9,
        width: 20e-9,
    };
    let center = slits.pattern_center();
    ExperimentConfig {
        quanton: QuantonSpec {
            mass: 1.2e-24,
            wavelength: 0.0025e-9,
        },
        slits,
        amplitudes: SourceAmplitudes::equal(n),
        detector: DetectorOverlaps::parallel(n),
        environment: EnvironmentSpec {
            gamma: 1.0,
            temperature: 900.0,
        },
        screen: ScreenGeometry {
            distance: 1.25,
            x_min: center - 120e-6,
            x_max: center + 120e-6,
            points: 1001,
        },
    }
}
