//! Standalone SVG line charts of sweep results: the two price bounds and
//! the clearing price against the downstream endowment, with the region
//! where the acceptable-price band is nonempty shaded.

use std::fmt::Write as _;

use thiserror::Error;

use crate::sweep::SweepRow;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("no sweep rows match delta = {delta}")]
    EmptySelection { delta: f64 },
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 64.0;

const SERIES: [(&str, &str); 3] = [
    ("alpha_lower", "#d95f02"),
    ("alpha_upper", "#1b9e77"),
    ("alpha_star", "#7570b3"),
];
const BAND_FILL: &str = "#a6cee3";

/// Renders the rows with the selected `delta` as an SVG document. Rows
/// must already be in grid order (ascending `e2` within the selection).
pub fn render_chart(rows: &[SweepRow], delta: f64) -> Result<String, ChartError> {
    let selected: Vec<&SweepRow> = rows.iter().filter(|r| r.delta == delta).collect();
    if selected.is_empty() {
        return Err(ChartError::EmptySelection { delta });
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let x_min = selected.iter().map(|r| r.e2).fold(f64::INFINITY, f64::min);
    let x_max = selected.iter().map(|r| r.e2).fold(f64::NEG_INFINITY, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for r in &selected {
        for v in [r.alpha_lower, r.alpha_upper, r.alpha_star] {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    let pad = 0.05 * (y_max - y_min).max(1e-9);
    y_min -= pad;
    y_max += pad;
    let y_span = y_max - y_min;

    let to_x = |e2: f64| MARGIN_LEFT + plot_w * (e2 - x_min) / x_span;
    let to_y = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - y_min) / y_span);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">price bounds and clearing price (delta = {})</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        fmt_num(delta)
    );

    // shaded runs where the acceptable-price band is nonempty
    let half_step = if selected.len() > 1 {
        0.5 * (x_max - x_min) / ((selected.len() - 1) as f64)
    } else {
        0.5
    };
    let mut run_start: Option<f64> = None;
    let mut last_in_run = 0.0;
    let shade = |from: f64, to: f64, svg: &mut String| {
        let x0 = to_x((from - half_step).max(x_min));
        let x1 = to_x((to + half_step).min(x_max));
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{BAND_FILL}" fill-opacity="0.45"/>"#,
            x0,
            MARGIN_TOP,
            (x1 - x0).max(0.0),
            plot_h
        );
    };
    for r in &selected {
        if r.band_nonempty() {
            run_start.get_or_insert(r.e2);
            last_in_run = r.e2;
        } else if let Some(start) = run_start.take() {
            shade(start, last_in_run, &mut svg);
        }
    }
    if let Some(start) = run_start {
        shade(start, last_in_run, &mut svg);
    }

    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black" stroke-width="1"/>"#,
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        b = MARGIN_TOP + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black" stroke-width="1"/>"#,
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h
    );

    for (value, frac) in ticks(x_min, x_max) {
        let x = MARGIN_LEFT + plot_w * frac;
        let y = MARGIN_TOP + plot_h;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y}" x2="{x:.2}" y2="{}" stroke="black" stroke-width="1"/>"#,
            y + 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            y + 20.0,
            fmt_num(value)
        );
    }
    for (value, frac) in ticks(y_min, y_max) {
        let y = MARGIN_TOP + plot_h * (1.0 - frac);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black" stroke-width="1"/>"#,
            MARGIN_LEFT - 6.0,
            l = MARGIN_LEFT
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 9.0,
            y + 4.0,
            fmt_num(value)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">e2 (downstream endowment)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 {mid})">price</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        mid = MARGIN_TOP + plot_h / 2.0
    );

    // series polylines
    for (idx, (name, color)) in SERIES.iter().enumerate() {
        let mut points = String::new();
        for r in &selected {
            let v = match idx {
                0 => r.alpha_lower,
                1 => r.alpha_upper,
                _ => r.alpha_star,
            };
            let _ = write!(points, "{:.2},{:.2} ", to_x(r.e2), to_y(v));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"><title>{name}</title></polyline>"#,
            points.trim_end()
        );
    }

    // legend
    let legend_x = MARGIN_LEFT + plot_w + 18.0;
    for (i, (name, color)) in SERIES.iter().enumerate() {
        let y = MARGIN_TOP + 14.0 + 24.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            legend_x + 26.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13">{name}</text>"#,
            legend_x + 32.0,
            y + 4.0
        );
    }
    let band_y = MARGIN_TOP + 14.0 + 24.0 * SERIES.len() as f64;
    let _ = writeln!(
        svg,
        r#"<rect x="{legend_x}" y="{}" width="26" height="12" fill="{BAND_FILL}" fill-opacity="0.45"/>"#,
        band_y - 6.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13">agreement band</text>"#,
        legend_x + 32.0,
        band_y + 4.0
    );

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Up to eight round-number ticks as (value, fraction-of-range).
fn ticks(min: f64, max: f64) -> Vec<(f64, f64)> {
    let span = max - min;
    if !(span > 0.0) {
        return vec![(min, 0.5)];
    }
    let raw_step = span / 6.0;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| span / s <= 8.0)
        .unwrap_or(magnitude * 10.0);
    let first = (min / step).ceil() as i64;
    let last = (max / step).floor() as i64;
    (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            (v, (v - min) / span)
        })
        .collect()
}

fn fmt_num(v: f64) -> String {
    // ticks are round decimals; trim binary dust before display
    let rounded = (v * 1e9).round() / 1e9;
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sweep::{run_sweep, SweepSpec};

    #[test]
    fn full_penalty_chart_has_no_shading() {
        let rows = run_sweep(&fixtures::skewed_sweep()).unwrap();
        let svg = render_chart(&rows, 30.0).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains(r#"<svg version="1.1""#));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("alpha_lower"));
        assert!(svg.contains("alpha_upper"));
        assert!(svg.contains("alpha_star"));
        // band empty everywhere: the only band-colored rect is the legend swatch
        assert_eq!(svg.matches(BAND_FILL).count(), 1);
    }

    #[test]
    fn softened_penalty_chart_shades_the_band() {
        let spec = SweepSpec {
            base: fixtures::skewed_soft_penalty_base(),
            delta_values: vec![30.0],
            e2_grid: crate::sweep::E2Grid { start: 0.0, stop: 100.0, step: 1.0 },
            columns: None,
        };
        let rows = run_sweep(&spec).unwrap();
        let svg = render_chart(&rows, 30.0).unwrap();
        // legend swatch plus at least one shaded run
        assert!(svg.matches(BAND_FILL).count() >= 2);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let rows = run_sweep(&fixtures::skewed_sweep()).unwrap();
        assert!(matches!(
            render_chart(&rows, 99.0),
            Err(ChartError::EmptySelection { .. })
        ));
        assert!(matches!(
            render_chart(&[], 30.0),
            Err(ChartError::EmptySelection { .. })
        ));
    }

    #[test]
    fn rendering_is_deterministic() {
        let rows = run_sweep(&fixtures::skewed_sweep()).unwrap();
        let a = render_chart(&rows, 12.0).unwrap();
        let b = render_chart(&rows, 12.0).unwrap();
        assert_eq!(a, b);
    }
}
