//! Interactive browser demo: explore how environmental decoherence washes
//! out an n-slit interference pattern, watch the coherence decay, and invert
//! simulated intensity measurements into a decoherence time.
//!
//! Build with `wasm-pack build crates/decolab-web --target web` and serve
//! `crates/decolab-web/www/` (the page loads the generated `pkg/` module).
//! Everything here is plain Rust calling the `decolab` library, so the same
//! functions are unit-tested natively.

use decolab::coherence::{coherence_analytic_at_kappa, tau_d_from_intensities_with_product};
use decolab::engine::{Evaluator, EvaluationMode, Normalization};
use decolab::model::load_preset;
use wasm_bindgen::prelude::*;

/// Names accepted as the `preset` argument, in display order.
#[wasm_bindgen]
pub fn preset_names() -> Vec<String> {
    decolab::model::preset_names()
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Peak-normalized screen pattern at decoherence strength `kappa = t/τ_d`,
/// returned as interleaved `[x_um, intensity, ...]` pairs.
#[wasm_bindgen]
pub fn pattern_points(
    preset: &str,
    slits: usize,
    kappa: f64,
    mode: &str,
    points: usize,
) -> Result<Vec<f64>, String> {
    let mut cfg = load_preset(preset)
        .map_err(|e| e.to_string())?
        .with_slit_count(slits.clamp(1, 8));
    cfg.screen.points = points.clamp(16, 20_000);
    let mode: EvaluationMode = mode.parse().map_err(|e: decolab::Error| e.to_string())?;
    let profile = Evaluator::at_kappa(&cfg, kappa, mode)
        .and_then(|ev| ev.pattern(Normalization::PeakNormalized))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(profile.x.len() * 2);
    for (x, y) in profile.x.iter().zip(&profile.intensity) {
        out.push(x * 1e6);
        out.push(*y);
    }
    Ok(out)
}

/// Coherence decay curve C(kappa) for an equal-amplitude n-slit experiment,
/// interleaved `[kappa, C, ...]` over `[0, kappa_max]`.
#[wasm_bindgen]
pub fn coherence_curve(
    preset: &str,
    slits: usize,
    kappa_max: f64,
    samples: usize,
) -> Result<Vec<f64>, String> {
    let cfg = load_preset(preset)
        .map_err(|e| e.to_string())?
        .with_slit_count(slits.clamp(2, 8));
    let samples = samples.clamp(2, 4096);
    let kappa_max = if kappa_max > 0.0 { kappa_max } else { 1.0 };
    let mut out = Vec::with_capacity(samples * 2);
    for i in 0..samples {
        let kappa = kappa_max * i as f64 / (samples as f64 - 1.0);
        let c = coherence_analytic_at_kappa(&cfg, kappa).map_err(|e| e.to_string())?;
        out.push(kappa);
        out.push(c);
    }
    Ok(out)
}

/// Coherence of the current pattern (what the two-mode measurement returns).
#[wasm_bindgen]
pub fn coherence_at(preset: &str, slits: usize, kappa: f64) -> Result<f64, String> {
    let cfg = load_preset(preset)
        .map_err(|e| e.to_string())?
        .with_slit_count(slits.clamp(2, 8));
    coherence_analytic_at_kappa(&cfg, kappa).map_err(|e| e.to_string())
}

/// Invert measured primary-maximum intensities of a two-slit experiment
/// into the decoherence time `τ_d = (λLm/h)/ln(2|c₁c₂| I⊥/(I∥-I⊥))`,
/// seconds.
#[wasm_bindgen]
pub fn invert_tau_d(
    i_parallel: f64,
    i_perpendicular: f64,
    lambda_m: f64,
    distance_m: f64,
    mass_kg: f64,
    c1c2: f64,
) -> Result<f64, String> {
    tau_d_from_intensities_with_product(
        i_parallel,
        i_perpendicular,
        lambda_m,
        distance_m,
        mass_kg,
        c1c2,
    )
    .map_err(|e| e.to_string())
}

/// Flight time λLm/h of a preset, seconds (used to convert κ to seconds in
/// the UI).
#[wasm_bindgen]
pub fn flight_time_s(preset: &str) -> Result<f64, String> {
    let cfg = load_preset(preset).map_err(|e| e.to_string())?;
    Ok(cfg.flight_time())
}
