//! Standalone SVG plots of sweep tables: sum rate versus SNR, one polyline
//! per bound, with a legend and labeled axes. No external assets; the file
//! is valid SVG 1.1 on its own.

use crate::bounds::BoundId;
use crate::error::{Error, Result};
use crate::sweep::SweepResult;
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 60.0;

fn color(bound: BoundId) -> &'static str {
    match bound {
        BoundId::Ub => "#d62728",
        BoundId::Lb1 => "#1f77b4",
        BoundId::Lb2 => "#2ca02c",
        BoundId::Lb3 => "#9467bd",
    }
}

fn label(bound: BoundId) -> &'static str {
    match bound {
        BoundId::Ub => "UB",
        BoundId::Lb1 => "LB1",
        BoundId::Lb2 => "LB2",
        BoundId::Lb3 => "LB3",
    }
}

/// Render `result` to `path`. With `clamp_lb2`, negative LB2 sum rates are
/// drawn as zero; every other bound is drawn as-is.
pub fn render_svg(result: &SweepResult, path: &Path, clamp_lb2: bool) -> Result<()> {
    let text = render_svg_string(result, clamp_lb2)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Render to a string (the file content of [`render_svg`]).
pub fn render_svg_string(result: &SweepResult, clamp_lb2: bool) -> Result<String> {
    if result.rows.is_empty() {
        return Err(Error::DegenerateInput(
            "nothing to plot: sweep result is empty".into(),
        ));
    }
    let value = |row_bound: BoundId, y: f64| -> f64 {
        if clamp_lb2 && row_bound == BoundId::Lb2 {
            y.max(0.0)
        } else {
            y
        }
    };
    let xs: Vec<f64> = result.rows.iter().map(|r| r.snr_db).collect();
    let ys: Vec<f64> = result
        .rows
        .iter()
        .map(|r| value(r.bound, r.sum_rate_bits))
        .collect();
    let (x_min, x_max) = span(&xs);
    let (y_min, y_max) = span(&ys);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = move |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        out,
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    // Gridlines and ticks.
    let x_ticks = ticks(x_min, x_max, 9);
    let y_ticks = ticks(y_min, y_max, 7);
    for &t in &x_ticks {
        let x = sx(t);
        let _ = writeln!(
            out,
            "  <line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            out,
            "  <text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\" fill=\"#333333\">{}</text>",
            MARGIN_TOP + plot_h + 18.0,
            tick_label(t)
        );
    }
    for &t in &y_ticks {
        let y = sy(t);
        let _ = writeln!(
            out,
            "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\" fill=\"#333333\">{}</text>",
            MARGIN_LEFT - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }

    // Frame.
    let _ = writeln!(
        out,
        "  <rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>"
    );

    // Axis labels.
    let _ = writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" fill=\"#111111\">SNR [dB]</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" fill=\"#111111\" transform=\"rotate(-90 18 {:.2})\">\
         sum rate [bits/channel use]</text>",
        18.0,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // One polyline per bound present.
    let bounds = result.bounds();
    for &b in &bounds {
        let mut points = String::new();
        for row in result.series(b) {
            let _ = write!(
                points,
                "{:.2},{:.2} ",
                sx(row.snr_db),
                sy(value(b, row.sum_rate_bits))
            );
        }
        let _ = writeln!(
            out,
            "  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
            color(b),
            points.trim_end()
        );
    }

    // Legend, top-left inside the frame.
    for (i, &b) in bounds.iter().enumerate() {
        let y = MARGIN_TOP + 18.0 + 20.0 * i as f64;
        let x = MARGIN_LEFT + 14.0;
        let _ = writeln!(
            out,
            "  <line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"{}\" stroke-width=\"2\"/>",
            x + 26.0,
            color(b)
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" \
             fill=\"#111111\">{}</text>",
            x + 34.0,
            y + 4.5,
            label(b)
        );
    }

    out.push_str("</svg>\n");
    Ok(out)
}

/// Data range padded so flat series still get a visible band.
fn span(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.04;
        (lo - pad, hi + pad)
    }
}

/// Round tick positions at a 1/2/5 decade step, about `target` of them.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target.max(2) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        mag
    } else if norm <= 2.0 {
        2.0 * mag
    } else if norm <= 5.0 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut v = first;
    while v <= hi + step * 1e-9 {
        out.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Method;
    use crate::sweep::SweepRow;

    fn row(snr_db: f64, bound: BoundId, sum: f64) -> SweepRow {
        SweepRow {
            snr_db,
            precoder: "zfbf".into(),
            csi: "perfect".into(),
            bound,
            method: Method::MonteCarlo,
            sum_rate_bits: sum,
            stderr: 0.01,
            samples: 100,
            seed: 0,
        }
    }

    #[test]
    fn one_bound_two_points_gives_one_two_vertex_polyline() {
        let result = SweepResult {
            rows: vec![row(0.0, BoundId::Ub, 1.0), row(10.0, BoundId::Ub, 3.0)],
        };
        let svg = render_svg_string(&result, false).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let points = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(points.split_whitespace().count(), 2);
        assert!(svg.contains("SNR [dB]"));
        assert!(svg.contains("sum rate [bits/channel use]"));
        assert!(svg.starts_with("<?xml"));
    }

    #[test]
    fn four_bounds_give_four_polylines_and_legend_entries() {
        let mut rows = Vec::new();
        for (i, b) in BoundId::ALL.into_iter().enumerate() {
            rows.push(row(0.0, b, 1.0 + i as f64));
            rows.push(row(10.0, b, 2.0 + i as f64));
        }
        let result = SweepResult { rows };
        let svg = render_svg_string(&result, false).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 4);
        for lab in ["UB", "LB1", "LB2", "LB3"] {
            assert!(svg.contains(&format!(">{lab}</text>")), "missing {lab}");
        }
    }

    #[test]
    fn clamp_flag_floors_lb2_only() {
        let result = SweepResult {
            rows: vec![
                row(0.0, BoundId::Lb2, -2.0),
                row(10.0, BoundId::Lb2, 4.0),
                row(0.0, BoundId::Lb3, -1.0),
                row(10.0, BoundId::Lb3, 5.0),
            ],
        };
        let plain = render_svg_string(&result, false).unwrap();
        let clamped = render_svg_string(&result, true).unwrap();
        assert_ne!(plain, clamped);
        // Lowest drawn pixel (largest y) of one bound's polyline.
        let bottom = |svg: &str, color: &str| -> f64 {
            let line = svg
                .lines()
                .find(|l| l.contains("<polyline") && l.contains(color))
                .unwrap();
            let points = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
            points
                .split_whitespace()
                .map(|p| p.split(',').nth(1).unwrap().parse::<f64>().unwrap())
                .fold(f64::NEG_INFINITY, f64::max)
        };
        // Unclamped, LB2 dips to −2, below LB3's −1; clamped, LB2 bottoms
        // out at 0, above it.
        assert!(bottom(&plain, "#2ca02c") > bottom(&plain, "#9467bd"));
        assert!(bottom(&clamped, "#2ca02c") < bottom(&clamped, "#9467bd"));
    }

    #[test]
    fn empty_result_is_rejected() {
        assert!(matches!(
            render_svg_string(&SweepResult::default(), false),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn flat_series_still_renders() {
        let result = SweepResult {
            rows: vec![row(0.0, BoundId::Ub, 2.0), row(10.0, BoundId::Ub, 2.0)],
        };
        let svg = render_svg_string(&result, false).unwrap();
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
    }
}
