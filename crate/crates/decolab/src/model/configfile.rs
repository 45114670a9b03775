//! Flat `key=value` config files.
//!
//! UTF-8 text, one `key = value` pair per line, `#` starts a comment.
//! Recognized keys:
//!
//! ```text
//! quanton.mass_kg    quanton.lambda_m
//! slits.n            slits.spacing_m     slits.width_m
//! amplitudes.c       amplitudes.theta            # comma lists; optional
//! detector.mode      detector.matrix             # parallel|orthogonal|matrix
//! env.gamma_per_s    env.T_K
//! screen.L_m         screen.xmin_m  screen.xmax_m  screen.points
//! ```
//!
//! `amplitudes.c` defaults to equal weights `1/√n`, `amplitudes.theta` to all
//! zeros, and `detector.mode` to `parallel`.

use super::{
    DetectorOverlaps, EnvironmentSpec, ExperimentConfig, QuantonSpec, ScreenGeometry, SlitArray,
    SourceAmplitudes,
};
use crate::error::Error;
use crate::Result;
use std::collections::HashMap;
use std::path::Path;

const KNOWN_KEYS: &[&str] = &[
    "quanton.mass_kg",
    "quanton.lambda_m",
    "slits.n",
    "slits.spacing_m",
    "slits.width_m",
    "amplitudes.c",
    "amplitudes.theta",
    "detector.mode",
    "detector.matrix",
    "env.gamma_per_s",
    "env.T_K",
    "screen.L_m",
    "screen.xmin_m",
    "screen.xmax_m",
    "screen.points",
];

/// Read and validate a config file from disk.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

/// Parse and validate config text.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut entries: HashMap<&str, (usize, &str)> = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::ConfigParse {
                line: line_no,
                reason: format!("unknown key `{key}`"),
            });
        }
        if let Some((prev_line, _)) = entries.insert(key, (line_no, value)) {
            return Err(Error::ConfigParse {
                line: line_no,
                reason: format!("duplicate key `{key}` (first set at line {prev_line})"),
            });
        }
    }

    let get = |key: &'static str| -> Result<(usize, &str)> {
        entries
            .get(key)
            .copied()
            .ok_or(Error::MissingKey { key })
    };
    let f64_key = |key: &'static str| -> Result<f64> {
        let (line, value) = get(key)?;
        value.parse::<f64>().map_err(|_| Error::ConfigParse {
            line,
            reason: format!("`{key}` is not a number: `{value}`"),
        })
    };

    let n = {
        let (line, value) = get("slits.n")?;
        value.parse::<usize>().map_err(|_| Error::ConfigParse {
            line,
            reason: format!("`slits.n` is not a positive integer: `{value}`"),
        })?
    };
    let points = {
        let (line, value) = get("screen.points")?;
        value.parse::<usize>().map_err(|_| Error::ConfigParse {
            line,
            reason: format!("`screen.points` is not a positive integer: `{value}`"),
        })?
    };

    let amplitudes = match entries.get("amplitudes.c") {
        None => SourceAmplitudes::equal(n),
        Some(&(line, value)) => {
            let magnitudes = parse_f64_list(value, line)?;
            SourceAmplitudes::from_magnitudes(magnitudes)
        }
    };
    let amplitudes = match entries.get("amplitudes.theta") {
        None => amplitudes,
        Some(&(line, value)) => SourceAmplitudes {
            phases: parse_f64_list(value, line)?,
            ..amplitudes
        },
    };

    let detector = match entries.get("detector.mode").map(|&(l, v)| (l, v)) {
        None | Some((_, "parallel")) => DetectorOverlaps::parallel(n),
        Some((_, "orthogonal")) => DetectorOverlaps::orthogonal(n),
        Some((line, "matrix")) => {
            let (mline, value) = get("detector.matrix").map_err(|_| Error::ConfigParse {
                line,
                reason: "detector.mode = matrix requires detector.matrix".to_string(),
            })?;
            DetectorOverlaps::from_matrix(n, parse_f64_list(value, mline)?)?
        }
        Some((line, other)) => {
            return Err(Error::ConfigParse {
                line,
                reason: format!("detector.mode must be parallel|orthogonal|matrix, got `{other}`"),
            })
        }
    };

    let cfg = ExperimentConfig {
        quanton: QuantonSpec {
            mass: f64_key("quanton.mass_kg")?,
            wavelength: f64_key("quanton.lambda_m")?,
        },
        slits: SlitArray {
            n,
            spacing: f64_key("slits.spacing_m")?,
            width: f64_key("slits.width_m")?,
        },
        amplitudes,
        detector,
        environment: EnvironmentSpec {
            gamma: f64_key("env.gamma_per_s")?,
            temperature: f64_key("env.T_K")?,
        },
        screen: ScreenGeometry {
            distance: f64_key("screen.L_m")?,
            x_min: f64_key("screen.xmin_m")?,
            x_max: f64_key("screen.xmax_m")?,
            points,
        },
    };

    cfg.validate().into_result()?;
    Ok(cfg)
}

fn parse_f64_list(value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| Error::ConfigParse {
                line,
                reason: format!("`{tok}` is not a number"),
            })
        })
        .collect()
}

/// Render a configuration in the config-file syntax (round-trips through
/// [`parse_config_str`]).
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let list = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{x:.17e}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = String::new();
    out.push_str(&format!("quanton.mass_kg = {:.17e}\n", cfg.quanton.mass));
    out.push_str(&format!("quanton.lambda_m = {:.17e}\n", cfg.quanton.wavelength));
    out.push_str(&format!("slits.n = {}\n", cfg.slits.n));
    out.push_str(&format!("slits.spacing_m = {:.17e}\n", cfg.slits.spacing));
    out.push_str(&format!("slits.width_m = {:.17e}\n", cfg.slits.width));
    out.push_str(&format!("amplitudes.c = {}\n", list(&cfg.amplitudes.magnitudes)));
    out.push_str(&format!("amplitudes.theta = {}\n", list(&cfg.amplitudes.phases)));
    if cfg.detector.is_parallel() {
        out.push_str("detector.mode = parallel\n");
    } else if cfg.detector == DetectorOverlaps::orthogonal(cfg.slits.n) {
        out.push_str("detector.mode = orthogonal\n");
    } else {
        out.push_str("detector.mode = matrix\n");
        out.push_str(&format!("detector.matrix = {}\n", list(cfg.detector.as_slice())));
    }
    out.push_str(&format!("env.gamma_per_s = {:.17e}\n", cfg.environment.gamma));
    out.push_str(&format!("env.T_K = {:.17e}\n", cfg.environment.temperature));
    out.push_str(&format!("screen.L_m = {:.17e}\n", cfg.screen.distance));
    out.push_str(&format!("screen.xmin_m = {:.17e}\n", cfg.screen.x_min));
    out.push_str(&format!("screen.xmax_m = {:.17e}\n", cfg.screen.x_max));
    out.push_str(&format!("screen.points = {}\n", cfg.screen.points));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# two equal slits
quanton.mass_kg = 3.349e-26
quanton.lambda_m = 1.8e-8
slits.n = 2
slits.spacing_m = 6e-6
slits.width_m = 1e-6
env.gamma_per_s = 0.0
env.T_K = 0.0
screen.L_m = 0.037
screen.xmin_m = -4e-4
screen.xmax_m = 4e-4
screen.points = 101
";

    #[test]
    fn defaults_give_equal_amplitudes() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        let want = 1.0 / 2f64.sqrt();
        assert_eq!(cfg.amplitudes.magnitudes, vec![want, want]);
        assert_eq!(cfg.amplitudes.phases, vec![0.0, 0.0]);
        assert!(cfg.detector.is_parallel());
    }

    #[test]
    fn missing_mass_names_the_key() {
        let text = MINIMAL.replace("quanton.mass_kg = 3.349e-26\n", "");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("quanton.mass"), "got: {err}");
    }

    #[test]
    fn bad_normalization_is_rejected() {
        let text = format!("{MINIMAL}amplitudes.c = 0.7,0.64031242374328485\n");
        // sum of squares = 0.9 -> normalization error
        let err = parse_config_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("amplitudes.c") && msg.contains("normalization"), "got: {msg}");
    }

    #[test]
    fn parse_error_reports_line_number() {
        let text = format!("{MINIMAL}slits.width_m 2e-6\n");
        let err = parse_config_str(&text).unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 13),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = format!("{MINIMAL}slits.n = 3\n");
        assert!(matches!(
            parse_config_str(&text),
            Err(Error::ConfigParse { .. })
        ));
    }

    #[test]
    fn render_round_trips() {
        let cfg = super::super::load_preset("c60").unwrap();
        let text = render_config(&cfg);
        let back = parse_config_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn matrix_mode_parses() {
        let text = format!(
            "{MINIMAL}detector.mode = matrix\ndetector.matrix = 1.0, 0.5, 0.5, 1.0\n"
        );
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.detector.get(1, 2), 0.5);
        assert_eq!(cfg.detector.get(1, 1), 1.0);
    }
}
