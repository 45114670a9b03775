//! CSV and SVG emitters. CSV is the machine contract (17 significant digits
//! round-trips f64 exactly); the SVG is a minimal hand-rolled polyline plot
//! for eyeballing patterns, deterministic for identical input.

use decolab::engine::{IntensityProfile, Normalization};

/// Pattern CSV: `x_m,<intensity column>` with one row per grid point.
pub fn render_pattern_csv(profile: &IntensityProfile) -> String {
    let header = match profile.normalization {
        Normalization::PeakNormalized => "x_m,intensity_norm",
        Normalization::Raw => "x_m,intensity_per_m",
    };
    let mut out = String::with_capacity(profile.x.len() * 48 + 32);
    out.push_str(header);
    out.push('\n');
    for (x, y) in profile.x.iter().zip(&profile.intensity) {
        out.push_str(&format!("{x:.16e},{y:.16e}\n"));
    }
    out
}

/// Two-column series CSV with a caller-chosen header.
pub fn render_series_csv(x_name: &str, y_name: &str, rows: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(rows.len() * 48 + 32);
    out.push_str(x_name);
    out.push(',');
    out.push_str(y_name);
    out.push('\n');
    for (x, y) in rows {
        out.push_str(&format!("{x:.16e},{y:.16e}\n"));
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 16.0;
const BOTTOM: f64 = 56.0;

/// Single-polyline SVG in a fixed 800×500 view box, x axis in μm.
pub fn render_svg(profile: &IntensityProfile) -> String {
    let xs = &profile.x;
    let ys = &profile.intensity;
    let x_lo = xs.first().copied().unwrap_or(0.0) * 1e6;
    let x_hi = xs.last().copied().unwrap_or(1.0) * 1e6;
    let mut y_lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut y_hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(y_hi - y_lo > 0.0) {
        // constant profile: pad the range so the line sits mid-plot
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x_um: f64| LEFT + (x_um - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let y_label = match profile.normalization {
        Normalization::PeakNormalized => "intensity (peak-normalized)",
        Normalization::Raw => "intensity [1/m]",
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - BOTTOM,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - BOTTOM
    ));
    // ticks and labels
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let xp = px(xv);
        svg.push_str(&format!(
            "<line x1=\"{xp:.2}\" y1=\"{}\" x2=\"{xp:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{xp:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{xv:.1}</text>\n",
            HEIGHT - BOTTOM + 20.0
        ));
        let yv = y_lo + f * (y_hi - y_lo);
        let yp = py(yv);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yp:.2}\" x2=\"{LEFT}\" y2=\"{yp:.2}\" stroke=\"black\"/>\n",
            LEFT - 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{yv:.3e}</text>\n",
            LEFT - 10.0,
            yp + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">x [um]</text>\n",
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{y_label}</text>\n",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    ));
    // the data polyline
    svg.push_str("<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\" points=\"");
    for (x, y) in xs.iter().zip(ys) {
        svg.push_str(&format!("{:.2},{:.2} ", px(x * 1e6), py(*y)));
    }
    svg.push_str("\"/>\n</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(ys: Vec<f64>) -> IntensityProfile {
        IntensityProfile {
            x: (0..ys.len()).map(|i| i as f64 * 1e-6).collect(),
            intensity: ys,
            t: 0.0,
            normalization: Normalization::PeakNormalized,
        }
    }

    #[test]
    fn pattern_csv_has_header_plus_one_row_per_point() {
        let csv = render_pattern_csv(&profile(vec![0.1, 0.2, 0.3]));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "x_m,intensity_norm");
    }

    #[test]
    fn csv_round_trips_f64_bit_exactly() {
        let values = vec![0.1, 1.0 / 3.0, 2.5e-51, f64::MIN_POSITIVE, 0.7775937526];
        let csv = render_pattern_csv(&profile(values.clone()));
        for (line, want) in csv.lines().skip(1).zip(&values) {
            let got: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(got.to_bits(), want.to_bits());
        }
    }

    #[test]
    fn constant_profile_gives_a_horizontal_polyline() {
        let svg = render_svg(&profile(vec![2.0; 5]));
        let points = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let ys: Vec<f64> = points
            .split_whitespace()
            .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]), "polyline not horizontal: {ys:?}");
    }

    #[test]
    fn svg_is_deterministic() {
        let p = profile(vec![0.0, 0.5, 1.0, 0.25]);
        assert_eq!(render_svg(&p), render_svg(&p));
    }
}
