//! Dependency-free SVG line plots: byte-deterministic for identical input,
//! which makes plots golden-file testable.

use bbfi_core::curve::Curve;

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 58.0;
const HIST_HEIGHT: f64 = 26.0;
const HIST_BINS: usize = 20;

const COLOR_EMPHASIS: &str = "#000000";
const COLOR_FAINT: &str = "#8a8a8a";
const COLOR_MAX: &str = "#2ca02c";
const COLOR_MIN: &str = "#d62728";

/// One curve with its rendering role.
#[derive(Debug, Clone)]
pub struct PlotCurve {
    pub curve: Curve,
    /// Aggregate curves (PI, PD) are drawn heavier than per-observation ones.
    pub emphasis: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub curves: Vec<PlotCurve>,
    pub title: Option<String>,
    pub x_label: String,
    pub y_label: String,
    /// Colour the non-emphasis curves with the largest (green) and smallest
    /// (red) ordinate integral.
    pub highlight_extremes: bool,
    /// Add a marginal histogram strip of the first curve's abscissa values.
    pub histogram: bool,
    /// Tick positions and labels for categorical abscissas.
    pub x_ticks: Option<Vec<(f64, String)>>,
}

/// Four-significant-digit label formatting.
fn sig4(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(3 - exp);
    let rounded = (v * scale).round() / scale;
    if rounded.abs() >= 1e6 || rounded.abs() < 1e-4 {
        format!("{rounded:.3e}")
    } else {
        format!("{rounded}")
    }
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

struct Scale {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    plot_w: f64,
    plot_h: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x_min) / (self.x_max - self.x_min) * self.plot_w
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN_TOP + self.plot_h - (v - self.y_min) / (self.y_max - self.y_min) * self.plot_h
    }
}

/// Renders a standalone SVG document: one polyline per curve, aggregate
/// curves heavier, optional extreme-integral highlighting, optional abscissa
/// histogram strip.
pub fn render_line_plot(spec: &PlotSpec) -> Result<String> {
    if spec.curves.is_empty() {
        return Err(Error::Usage("nothing to plot: no curves".into()));
    }
    for pc in &spec.curves {
        if pc.curve.abscissa.iter().chain(&pc.curve.ordinates).any(|v| !v.is_finite()) {
            return Err(Error::Usage(format!(
                "curve '{}' contains non-finite values",
                pc.curve.label
            )));
        }
    }

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for pc in &spec.curves {
        for &v in &pc.curve.abscissa {
            x_min = x_min.min(v);
            x_max = x_max.max(v);
        }
        for &v in &pc.curve.ordinates {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if x_min == x_max {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let x_pad = (x_max - x_min) * 0.04;
    let y_pad = (y_max - y_min) * 0.06;
    let hist_extra = if spec.histogram { HIST_HEIGHT } else { 0.0 };
    let scale = Scale {
        x_min: x_min - x_pad,
        x_max: x_max + x_pad,
        y_min: y_min - y_pad,
        y_max: y_max + y_pad,
        plot_w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        plot_h: HEIGHT - MARGIN_TOP - MARGIN_BOTTOM - hist_extra,
    };

    // Integral extremes among the non-emphasis curves.
    let (mut max_idx, mut min_idx) = (None::<usize>, None::<usize>);
    if spec.highlight_extremes {
        let mut best = f64::NEG_INFINITY;
        let mut worst = f64::INFINITY;
        for (i, pc) in spec.curves.iter().enumerate() {
            if pc.emphasis {
                continue;
            }
            let integral = pc.curve.mean_ordinate();
            if integral > best {
                best = integral;
                max_idx = Some(i);
            }
            if integral < worst {
                worst = integral;
                min_idx = Some(i);
            }
        }
    }

    let mut svg = String::with_capacity(4096);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");

    if let Some(title) = &spec.title {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
            WIDTH / 2.0,
            escape(title)
        ));
    }

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y_axis_bottom = MARGIN_TOP + scale.plot_h;
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y_axis_bottom}\" x2=\"{x1}\" y2=\"{y_axis_bottom}\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{MARGIN_TOP}\" x2=\"{x0}\" y2=\"{y_axis_bottom}\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
    ));
    // Zero line when it crosses the range.
    if scale.y_min < 0.0 && scale.y_max > 0.0 {
        let zy = fmt2(scale.y(0.0));
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{zy}\" x2=\"{x1}\" y2=\"{zy}\" stroke=\"#cccccc\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n"
        ));
    }

    // Tick labels.
    let ticks: Vec<(f64, String)> = spec.x_ticks.clone().unwrap_or_else(|| {
        [x_min, (x_min + x_max) / 2.0, x_max]
            .iter()
            .map(|&v| (v, sig4(v)))
            .collect()
    });
    for (pos, label) in &ticks {
        let tx = fmt2(scale.x(*pos));
        svg.push_str(&format!(
            "<text x=\"{tx}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            y_axis_bottom + 16.0,
            escape(label)
        ));
    }
    for v in [y_min, y_max] {
        let ty = fmt2(scale.y(v));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{ty}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            x0 - 6.0,
            sig4(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 6.0,
        escape(&spec.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        MARGIN_TOP + scale.plot_h / 2.0,
        MARGIN_TOP + scale.plot_h / 2.0,
        escape(&spec.y_label)
    ));

    // Histogram strip of the first curve's abscissa values.
    if spec.histogram {
        let values = &spec.curves[0].curve.abscissa;
        let mut counts = [0usize; HIST_BINS];
        for &v in values {
            let frac = (v - scale.x_min) / (scale.x_max - scale.x_min);
            let bin = ((frac * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
            counts[bin] += 1;
        }
        let max_count = counts.iter().copied().max().unwrap_or(1).max(1);
        let strip_top = y_axis_bottom + 20.0;
        for (b, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let h = HIST_HEIGHT * count as f64 / max_count as f64;
            let bx = MARGIN_LEFT + scale.plot_w * b as f64 / HIST_BINS as f64;
            let bw = scale.plot_w / HIST_BINS as f64;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#bbbbbb\"/>\n",
                fmt2(bx),
                fmt2(strip_top + HIST_HEIGHT - h),
                fmt2(bw - 1.0),
                fmt2(h)
            ));
        }
    }

    // Faint curves first, then highlighted, then emphasized on top.
    let layer = |pc: &PlotCurve, i: usize| -> u8 {
        if pc.emphasis {
            2
        } else if Some(i) == max_idx || Some(i) == min_idx {
            1
        } else {
            0
        }
    };
    for pass in 0u8..3 {
        for (i, pc) in spec.curves.iter().enumerate() {
            if layer(pc, i) != pass {
                continue;
            }
            let (color, width) = if pc.emphasis {
                (COLOR_EMPHASIS, 2.5)
            } else if Some(i) == max_idx {
                (COLOR_MAX, 1.8)
            } else if Some(i) == min_idx {
                (COLOR_MIN, 1.8)
            } else {
                (COLOR_FAINT, 1.2)
            };
            let points: Vec<String> = pc
                .curve
                .abscissa
                .iter()
                .zip(&pc.curve.ordinates)
                .map(|(&x, &y)| format!("{},{}", fmt2(scale.x(x)), fmt2(scale.y(y))))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" opacity=\"0.9\" points=\"{}\"><title>{}</title></polyline>\n",
                points.join(" "),
                escape(&pc.curve.label)
            ));
        }
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
