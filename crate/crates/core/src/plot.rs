//! Minimal static SVG line charts. No dependencies, no interactivity; just
//! axes, ticks, a legend and polylines, enough to eyeball a trajectory.

use crate::engine::Trajectory;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 55.0;
/// Points per polyline are capped; longer series are strided down.
const MAX_POINTS: usize = 1600;

pub const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, color_index: usize, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            color: PALETTE[color_index % PALETTE.len()].to_string(),
            points,
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        // widen a degenerate range so the scale stays usable
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 {
        format!("{v:.0}")
    } else if a >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render a line chart of the given series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x_lo, x_hi) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y_lo_raw, y_hi) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let y_lo = y_lo_raw.min(0.0); // knowledge plots read better anchored at 0
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let y_of = |y: f64| MARGIN_TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = String::with_capacity(16 * 1024);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));

    // grid and ticks
    for tx in ticks(x_lo, x_hi, 6) {
        let x = x_of(tx);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{y1:.1}\" x2=\"{x:.1}\" y2=\"{y2:.1}\" stroke=\"#dddddd\"/>\n",
            y1 = MARGIN_TOP,
            y2 = MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt_tick(tx),
            y = MARGIN_TOP + plot_h + 18.0
        ));
    }
    for ty in ticks(y_lo, y_hi, 5) {
        let y = y_of(ty);
        svg.push_str(&format!(
            "<line x1=\"{x1:.1}\" y1=\"{y:.1}\" x2=\"{x2:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n",
            x1 = MARGIN_LEFT,
            x2 = MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{yt:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt_tick(ty),
            x = MARGIN_LEFT - 6.0,
            yt = y + 4.0
        ));
    }

    // axes
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333333\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(y_label)
    ));

    // series
    for s in series {
        let stride = (s.points.len() / MAX_POINTS).max(1);
        let mut path = String::new();
        for (i, (x, y)) in s.points.iter().enumerate() {
            if i % stride != 0 && i != s.points.len() - 1 {
                continue;
            }
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            path.push_str(&format!("{:.2},{:.2} ", x_of(*x), y_of(*y)));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            s.color,
            path.trim_end()
        ));
    }

    // legend
    let mut ly = MARGIN_TOP + 8.0;
    for s in series {
        let lx = MARGIN_LEFT + plot_w - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            lx + 22.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
        ly += 18.0;
    }

    svg.push_str("</svg>\n");
    svg
}

/// The standard chart for one trajectory: knowledge stocks, requirement
/// level(s) and, when recorded, the focus class's own stocks.
pub fn trajectory_chart(title: &str, traj: &Trajectory) -> String {
    let mut series = Vec::new();
    series.push(Series::new("z", 0, traj.samples.iter().map(|s| (s.t, s.z)).collect()));
    series.push(Series::new("z1", 1, traj.samples.iter().map(|s| (s.t, s.z1)).collect()));
    series.push(Series::new("z2", 2, traj.samples.iter().map(|s| (s.t, s.z2)).collect()));
    series.push(Series::new(
        if traj.dual_u { "u1" } else { "u" },
        3,
        traj.samples.iter().map(|s| (s.t, s.u1)).collect(),
    ));
    if traj.dual_u {
        series.push(Series::new("u2", 4, traj.samples.iter().map(|s| (s.t, s.u2)).collect()));
    }
    if let Some(focus) = &traj.focus {
        let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        series.push(Series::new(
            format!("z1 (class {})", focus.class_index + 1),
            5,
            times.iter().copied().zip(focus.z1.iter().copied()).collect(),
        ));
        series.push(Series::new(
            format!("z2 (class {})", focus.class_index + 1),
            6,
            times.iter().copied().zip(focus.z2.iter().copied()).collect(),
        ));
    }
    line_chart(title, "t", "level", &series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_series_and_labels() {
        let series = vec![
            Series::new("Z", 0, (0..100).map(|i| (i as f64, (i as f64).sqrt())).collect()),
            Series::new("U", 1, (0..100).map(|i| (i as f64, i as f64 / 10.0)).collect()),
        ];
        let svg = line_chart("knowledge over time", "t", "level", &series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("knowledge over time"));
        assert!(svg.contains(">Z<") && svg.contains(">U<"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn degenerate_and_empty_series_do_not_panic() {
        let svg = line_chart("empty", "t", "y", &[]);
        assert!(svg.contains("</svg>"));
        let flat = vec![Series::new("flat", 0, vec![(0.0, 1.0), (1.0, 1.0)])];
        let svg = line_chart("flat", "t", "y", &flat);
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn long_series_are_downsampled() {
        let series = vec![Series::new("big", 0, (0..100_000).map(|i| (i as f64, 1.0)).collect())];
        let svg = line_chart("big", "t", "y", &series);
        // well under one coordinate pair per input point
        assert!(svg.len() < 200_000, "svg unexpectedly large: {}", svg.len());
    }
}
