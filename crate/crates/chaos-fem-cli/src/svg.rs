//! Hand-rolled log-log SVG line plot of error vs sample count, one series
//! per polynomial degree. Static markup, no external assets.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 614.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 390.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#e377c2",
];

pub struct Series {
    pub label: String,
    /// (sample count, error) points; non-finite or non-positive entries are skipped.
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Render the plot, or None when no series carries a plottable point.
pub fn convergence_plot(series: &[Series], y_label: &str) -> Option<String> {
    let cleaned: Vec<(&Series, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
                .map(|&(x, y)| (x.log10(), y.log10()))
                .collect();
            (s, pts)
        })
        .collect();
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for (_, pts) in &cleaned {
        for &(x, y) in pts {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !x_lo.is_finite() || !y_lo.is_finite() {
        return None;
    }
    if x_hi - x_lo < 1e-9 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let y_lo = y_lo.floor();
    let y_hi = y_hi.ceil().max(y_lo + 1.0);

    let to_x = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * (RIGHT - LEFT);
    let to_y = |v: f64| BOTTOM - (v - y_lo) / (y_hi - y_lo) * (BOTTOM - TOP);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );

    // decade grid and tick labels on the y axis
    let mut decade = y_lo as i64;
    while decade <= y_hi as i64 {
        let y = to_y(decade as f64);
        let _ = writeln!(
            out,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{RIGHT}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{decade}</text>",
            LEFT - 6.0,
            y + 4.0,
        );
        decade += 1;
    }

    // one tick per distinct sample count
    let mut ticks: Vec<f64> = cleaned
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|&(x, _)| x))
        .collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for &tick in &ticks {
        let x = to_x(tick);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#bbbbbb\" stroke-width=\"1\"/>",
            BOTTOM + 5.0,
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            BOTTOM + 18.0,
            10f64.powf(tick).round() as i64,
        );
    }

    let _ = writeln!(
        out,
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" \
         stroke=\"black\" stroke-width=\"1\"/>"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" \
         stroke=\"black\" stroke-width=\"1\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">samples</text>",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 8.0,
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.2})\">{y_label}</text>",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
    );

    let mut legend_y = TOP + 8.0;
    for (i, (series, pts)) in cleaned.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = if series.dashed {
            "#444444"
        } else {
            PALETTE[i % PALETTE.len()]
        };
        let dash = if series.dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", to_x(x), to_y(y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash} \
             points=\"{}\"/>",
            path.join(" "),
        );
        for &(x, y) in pts {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>",
                to_x(x),
                to_y(y),
            );
        }
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{legend_y:.2}\" x2=\"{:.2}\" y2=\"{legend_y:.2}\" \
             stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>",
            RIGHT - 118.0,
            RIGHT - 96.0,
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            RIGHT - 90.0,
            legend_y + 4.0,
            series.label,
        );
        legend_y += 16.0;
    }

    out.push_str("</svg>\n");
    Some(out)
}
