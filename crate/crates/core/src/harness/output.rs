use std::fmt::Write as _;
use std::path::Path;

use super::trace::RunTrace;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub fn emit_csv(trace: &RunTrace, path: impl AsRef<Path>) -> Result<()> {
    trace.save_csv(path)
}

pub fn emit_plot(traces: &[RunTrace], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(traces)).map_err(|e| Error::io(path, e))
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Log-scale line chart of loss gap against round, one polyline per trace.
/// Non-positive or non-finite gaps break the line.
pub fn render_svg(traces: &[RunTrace]) -> String {
    let positive = || {
        traces
            .iter()
            .flat_map(|t| t.loss_gaps())
            .filter(|g| g.is_finite() && *g > 0.0)
    };
    let lo = positive().fold(f64::INFINITY, f64::min);
    let hi = positive().fold(f64::NEG_INFINITY, f64::max);
    let (mut dec_lo, mut dec_hi) = if lo.is_finite() {
        (lo.log10().floor(), hi.log10().ceil())
    } else {
        (-1.0, 0.0)
    };
    if dec_hi <= dec_lo {
        dec_hi = dec_lo + 1.0;
    }
    // Keep tick labels readable for traces spanning many decades.
    if dec_hi - dec_lo > 40.0 {
        dec_lo = dec_hi - 40.0;
    }
    let max_round = traces
        .iter()
        .filter_map(|t| t.rows.last().map(|r| r.round))
        .max()
        .unwrap_or(0)
        .max(1) as f64;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |round: f64| LEFT + plot_w * round / max_round;
    let sy = |gap: f64| {
        let t = (gap.log10().clamp(dec_lo, dec_hi) - dec_lo) / (dec_hi - dec_lo);
        TOP + plot_h * (1.0 - t)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let step = ((dec_hi - dec_lo) / 10.0).ceil().max(1.0);
    let mut decade = dec_lo;
    while decade <= dec_hi {
        let y = sy(10f64.powf(decade));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            decade as i64
        );
        decade += step;
    }
    for i in 0..=5 {
        let round = max_round * i as f64 / 5.0;
        let x = sx(round);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            round.round() as i64
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">round</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">loss gap</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, trace) in traces.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segments: Vec<Vec<String>> = vec![Vec::new()];
        for row in &trace.rows {
            if row.loss_gap.is_finite() && row.loss_gap > 0.0 {
                let point = format!("{:.2},{:.2}", sx(row.round as f64), sy(row.loss_gap));
                segments.last_mut().expect("nonempty").push(point);
            } else if !segments.last().expect("nonempty").is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                seg.join(" ")
            );
        }
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            x + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(&trace.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::TraceRow;

    fn row(round: usize, loss_gap: f64) -> TraceRow {
        TraceRow {
            round,
            loss_gap,
            grad_norm: 1.0,
            dist_to_opt: 1.0,
            oracle_err_sq: 0.0,
            lemma1_bound: f64::NAN,
            inner_iters: 0,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn one_polyline_per_trace() {
        let mut a = RunTrace::new("gd <a&b>");
        a.rows = vec![row(0, 1.0), row(1, 0.1), row(2, 0.01)];
        let mut b = RunTrace::new("pigs");
        b.rows = vec![row(0, 1.0), row(1, 1e-6)];
        let svg = render_svg(&[a, b]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("gd &lt;a&amp;b&gt;"));
    }

    #[test]
    fn zero_gap_breaks_the_line() {
        let mut a = RunTrace::new("a");
        a.rows = vec![row(0, 1.0), row(1, 0.5), row(2, 0.0), row(3, 0.1), row(4, 0.01)];
        assert_eq!(render_svg(&[a]).matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_input_still_renders() {
        let svg = render_svg(&[]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
