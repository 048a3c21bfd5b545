//! Static SVG renderings of a comparison report: error curves with spread
//! bands, confidence-filtered error, and win rates. Output is deterministic
//! byte for byte, and every chart embeds its data-space domain as `data-*`
//! attributes so coordinates can be mapped back to values without guessing.

use crate::acquisition::Strategy;
use crate::experiment::ComparisonReport;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const PLOT_X: f64 = 64.0;
const PLOT_Y: f64 = 36.0;
const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 352.0;
const TICKS: usize = 5;

pub fn strategy_color(s: Strategy) -> &'static str {
    match s {
        Strategy::Entropy => "#1f77b4",
        Strategy::Variance => "#ff7f0e",
        Strategy::Emc => "#2ca02c",
        Strategy::Random => "#d62728",
    }
}

struct Series {
    label: String,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

struct Band {
    color: &'static str,
    upper: Vec<(f64, f64)>,
    lower: Vec<(f64, f64)>,
}

fn finite(points: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
}

/// Pads a degenerate domain so the mapping stays invertible.
fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    bands: &[Band],
    y_domain: Option<(f64, f64)>,
) -> String {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| finite(&s.points).map(|(x, _)| x))
        .collect();
    let x_domain = if xs.is_empty() {
        (0.0, 1.0)
    } else {
        widen((
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ))
    };
    let y_domain = y_domain.unwrap_or_else(|| {
        let mut top = f64::NEG_INFINITY;
        for s in series {
            for (_, y) in finite(&s.points) {
                top = top.max(y);
            }
        }
        for b in bands {
            for (_, y) in finite(&b.upper) {
                top = top.max(y);
            }
        }
        if top.is_finite() && top > 0.0 {
            (0.0, top * 1.05)
        } else {
            (0.0, 1.0)
        }
    });
    let y_domain = widen(y_domain);

    let x_px = |x: f64| PLOT_X + (x - x_domain.0) / (x_domain.1 - x_domain.0) * PLOT_W;
    let y_px = |y: f64| PLOT_Y + PLOT_H - (y - y_domain.0) / (y_domain.1 - y_domain.0) * PLOT_H;

    let mut svg = format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\" data-x-min=\"{xmin}\" data-x-max=\"{xmax}\" ",
            "data-y-min=\"{ymin}\" data-y-max=\"{ymax}\" data-plot-x=\"{px}\" ",
            "data-plot-y=\"{py}\" data-plot-w=\"{pw}\" data-plot-h=\"{ph}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        xmin = x_domain.0,
        xmax = x_domain.1,
        ymin = y_domain.0,
        ymax = y_domain.1,
        px = PLOT_X,
        py = PLOT_Y,
        pw = PLOT_W,
        ph = PLOT_H,
    );

    svg.push_str(&format!(
        "<text x=\"{:.3}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{title}</text>\n",
        PLOT_X + PLOT_W / 2.0
    ));

    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_domain.0 + f * (x_domain.1 - x_domain.0);
        let yv = y_domain.0 + f * (y_domain.1 - y_domain.0);
        let xp = x_px(xv);
        let yp = y_px(yv);
        svg.push_str(&format!(
            "<line x1=\"{xp:.3}\" y1=\"{:.3}\" x2=\"{xp:.3}\" y2=\"{:.3}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            PLOT_Y,
            PLOT_Y + PLOT_H
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.3}\" y1=\"{yp:.3}\" x2=\"{:.3}\" y2=\"{yp:.3}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            PLOT_X,
            PLOT_X + PLOT_W
        ));
        svg.push_str(&format!(
            "<text x=\"{xp:.3}\" y=\"{:.3}\" text-anchor=\"middle\" \
             font-family=\"sans-serif\" font-size=\"11\">{xv:.0}</text>\n",
            PLOT_Y + PLOT_H + 18.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{:.3}\" text-anchor=\"end\" \
             font-family=\"sans-serif\" font-size=\"11\">{yv:.3}</text>\n",
            PLOT_X - 8.0,
            yp + 4.0
        ));
    }

    for b in bands {
        let upper: Vec<(f64, f64)> = finite(&b.upper).collect();
        let lower: Vec<(f64, f64)> = finite(&b.lower).collect();
        if upper.len() < 2 || upper.len() != lower.len() {
            continue;
        }
        let mut d = String::new();
        for (i, &(x, y)) in upper.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{:.3},{:.3} ", x_px(x), y_px(y)));
        }
        for &(x, y) in lower.iter().rev() {
            d.push_str(&format!("L{:.3},{:.3} ", x_px(x), y_px(y)));
        }
        d.push('Z');
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"{}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
            b.color
        ));
    }

    for s in series {
        let pts: Vec<(f64, f64)> = finite(&s.points).collect();
        if pts.is_empty() {
            continue;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", x_px(x), y_px(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline data-series=\"{}\" points=\"{}\" fill=\"none\" \
             stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            s.label,
            coords.join(" "),
            s.color
        ));
    }

    for (i, s) in series.iter().enumerate() {
        let y = PLOT_Y + 14.0 + 18.0 * i as f64;
        let x = PLOT_X + PLOT_W - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{x:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" \
             stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            y - 4.0,
            x + 22.0,
            y - 4.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{y:.3}\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>\n",
            x + 28.0,
            s.label
        ));
    }

    svg.push_str(&format!(
        "<rect x=\"{PLOT_X}\" y=\"{PLOT_Y}\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.3}\" y=\"{:.3}\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" font-size=\"13\">{x_label}</text>\n",
        PLOT_X + PLOT_W / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.3}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 18 {:.3})\">{y_label}</text>\n",
        PLOT_Y + PLOT_H / 2.0,
        PLOT_Y + PLOT_H / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}

fn x_axis(report: &ComparisonReport) -> Vec<f64> {
    report.training_sizes.iter().map(|&n| n as f64).collect()
}

/// Mean total error per strategy with a band of half a standard deviation
/// on each side, the spread the comparison figures use. The band's lower
/// edge is clamped at zero since error is a rate.
pub fn error_curves_svg(report: &ComparisonReport) -> String {
    let xs = x_axis(report);
    let mut series = Vec::new();
    let mut bands = Vec::new();
    for c in &report.curves {
        let color = strategy_color(c.strategy);
        series.push(Series {
            label: format!("{} mean", c.strategy),
            color,
            points: xs.iter().copied().zip(c.mean_error.iter().copied()).collect(),
        });
        bands.push(Band {
            color,
            upper: xs
                .iter()
                .zip(c.mean_error.iter().zip(&c.std_error))
                .map(|(&x, (&m, &sd))| (x, m + 0.5 * sd))
                .collect(),
            lower: xs
                .iter()
                .zip(c.mean_error.iter().zip(&c.std_error))
                .map(|(&x, (&m, &sd))| (x, (m - 0.5 * sd).max(0.0)))
                .collect(),
        });
    }
    chart(
        &format!("{}: misclassification error", report.name),
        "simulations",
        "error",
        &series,
        &bands,
        None,
    )
}

/// Mean error among locations the model is confident about.
pub fn filtered_error_svg(report: &ComparisonReport) -> String {
    let xs = x_axis(report);
    let series: Vec<Series> = report
        .curves
        .iter()
        .map(|c| Series {
            label: format!("{} filtered", c.strategy),
            color: strategy_color(c.strategy),
            points: xs
                .iter()
                .copied()
                .zip(c.mean_filtered_error.iter().copied())
                .collect(),
        })
        .collect();
    chart(
        &format!("{}: confidence-filtered error", report.name),
        "simulations",
        "filtered error",
        &series,
        &[],
        None,
    )
}

/// Fraction of runs where entropy matched or beat each competitor.
pub fn win_rate_svg(report: &ComparisonReport) -> String {
    let xs = x_axis(report);
    let series: Vec<Series> = report
        .win_rates
        .iter()
        .map(|w| Series {
            label: format!("vs {}", w.competitor),
            color: strategy_color(w.competitor),
            points: xs.iter().copied().zip(w.rate.iter().copied()).collect(),
        })
        .collect();
    chart(
        &format!("{}: entropy win rate", report.name),
        "simulations",
        "win rate",
        &series,
        &[],
        Some((0.0, 1.0)),
    )
}

/// Every chart for one report, as (file name, content) pairs.
pub fn render_plots(report: &ComparisonReport) -> Vec<(&'static str, String)> {
    vec![
        ("error.svg", error_curves_svg(report)),
        ("filtered_error.svg", filtered_error_svg(report)),
        ("win_rate.svg", win_rate_svg(report)),
    ]
}
