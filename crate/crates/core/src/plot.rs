//! Deterministic SVG curve plots.
//!
//! Renders seed-averaged sweep curves: one marker per point, vertical
//! standard-error bars, a polyline per series, and a legend when curves
//! overlay. The output is a pure function of the input (fixed canvas,
//! fixed palette, fixed number formatting), so identical data produces
//! byte-identical files.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sweep::SweepResult;

/// One plotted point: position plus a symmetric error bar half-height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    /// Standard error; 0 suppresses the bar.
    pub err: f64,
}

/// A labeled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<PlotPoint>,
}

/// Everything one chart needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 620.0;
const TOP: f64 = 46.0;
const BOTTOM: f64 = 386.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct LinScale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl LinScale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> LinScale {
        LinScale { lo, hi, a, b }
    }

    fn map(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

fn padded(min: f64, max: f64) -> (f64, f64) {
    if min == max {
        let d = if min == 0.0 { 0.5 } else { min.abs() * 0.1 };
        (min - d, max + d)
    } else {
        let d = (max - min) * 0.05;
        (min - d, max + d)
    }
}

fn px(v: f64) -> String {
    format!("{:.2}", v)
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e6 || v.abs() < 1e-3) {
        return format!("{v:.2e}");
    }
    if (v - v.round()).abs() < 1e-9 && v.abs() >= 1.0 {
        return format!("{}", v.round() as i64);
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the chart to SVG text.
pub fn render_svg(plot: &PlotSpec) -> Result<String> {
    if plot.series.is_empty() || plot.series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Config("plot needs at least one point".into()));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &plot.series {
        for p in &s.points {
            if !p.x.is_finite() || !p.y.is_finite() || !p.err.is_finite() || p.err < 0.0 {
                return Err(Error::numeric("render_svg", "non-finite or negative plot value"));
            }
            x_min = x_min.min(p.x);
            x_max = x_max.max(p.x);
            y_min = y_min.min(p.y - p.err);
            y_max = y_max.max(p.y + p.err);
        }
    }
    let (x_lo, x_hi) = padded(x_min, x_max);
    let (y_lo, y_hi) = padded(y_min, y_max);
    let sx = LinScale::new(x_lo, x_hi, LEFT, RIGHT);
    let sy = LinScale::new(y_lo, y_hi, BOTTOM, TOP);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        px((LEFT + RIGHT) / 2.0),
        escape(&plot.title)
    ));

    for i in 0..5 {
        let t = i as f64 / 4.0;
        let xv = x_lo + t * (x_hi - x_lo);
        let yv = y_lo + t * (y_hi - y_lo);
        let xp = px(sx.map(xv));
        let yp = px(sy.map(yv));
        out.push_str(&format!(
            "<line x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
            px(TOP),
            px(BOTTOM)
        ));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yp}\" x2=\"{}\" y2=\"{yp}\" stroke=\"#ddd\"/>\n",
            px(LEFT),
            px(RIGHT)
        ));
        out.push_str(&format!(
            "<text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
            px(BOTTOM + 18.0),
            tick_label(xv)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            px(LEFT - 8.0),
            px(sy.map(yv) + 4.0),
            tick_label(yv)
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        px(LEFT),
        px(TOP),
        px(RIGHT - LEFT),
        px(BOTTOM - TOP)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        px((LEFT + RIGHT) / 2.0),
        px(HEIGHT - 12.0),
        escape(&plot.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 18 {})\">{}</text>\n",
        px((TOP + BOTTOM) / 2.0),
        px((TOP + BOTTOM) / 2.0),
        escape(&plot.y_label)
    ));

    for (si, series) in plot.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if series.points.len() >= 2 {
            let pts: Vec<String> = series
                .points
                .iter()
                .map(|p| format!("{},{}", px(sx.map(p.x)), px(sy.map(p.y))))
                .collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                pts.join(" ")
            ));
        }
        for p in &series.points {
            let cx = sx.map(p.x);
            if p.err > 0.0 {
                let y_hi_px = sy.map(p.y + p.err);
                let y_lo_px = sy.map(p.y - p.err);
                let xp = px(cx);
                out.push_str(&format!(
                    "<line class=\"errbar\" x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" \
                     stroke=\"{color}\"/>\n",
                    px(y_hi_px),
                    px(y_lo_px)
                ));
                for yp in [y_hi_px, y_lo_px] {
                    out.push_str(&format!(
                        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>\n",
                        px(cx - 4.0),
                        px(yp),
                        px(cx + 4.0),
                        px(yp)
                    ));
                }
            }
            out.push_str(&format!(
                "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{color}\"/>\n",
                px(cx),
                px(sy.map(p.y))
            ));
        }
    }

    if plot.series.len() > 1 {
        let lx = RIGHT - 170.0;
        let mut ly = TOP + 14.0;
        out.push_str(&format!(
            "<rect class=\"legend\" x=\"{}\" y=\"{}\" width=\"160\" height=\"{}\" \
             fill=\"white\" stroke=\"#999\"/>\n",
            px(lx),
            px(TOP + 4.0),
            px(plot.series.len() as f64 * 18.0 + 8.0)
        ));
        for (si, series) in plot.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" \
                 stroke-width=\"2\"/>\n",
                px(lx + 8.0),
                px(ly + 4.0),
                px(lx + 30.0),
                px(ly + 4.0)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
                px(lx + 36.0),
                px(ly + 8.0),
                escape(&series.label)
            ));
            ly += 18.0;
        }
    }

    out.push_str("</svg>\n");
    Ok(out)
}

/// Curve of per-value means with standard-error bars from a finished
/// sweep. Axis values whose runs all failed are dropped.
pub fn sweep_series(result: &SweepResult, label: &str) -> Series {
    let points = result
        .summaries
        .iter()
        .filter_map(|s| {
            s.mean.map(|m| PlotPoint {
                x: s.axis_value as f64,
                y: m,
                err: s.stderr.unwrap_or(0.0),
            })
        })
        .collect();
    Series {
        label: label.into(),
        points,
    }
}

/// Renders a sweep result as a single-curve chart and writes it to
/// `out`.
pub fn plot_curves(result: &SweepResult, out: &Path) -> Result<()> {
    let spec = PlotSpec {
        title: format!("final exact W1 vs {}", result.axis.label()),
        x_label: result.axis.label().into(),
        y_label: "exact W1".into(),
        series: vec![sweep_series(result, "mean over seeds")],
    };
    let svg = render_svg(&spec)?;
    fs::write(out, svg).map_err(|e| Error::io(out.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{CellResult, RunStatus, SweepAxis, SweepResult};

    fn one_series(points: Vec<PlotPoint>) -> PlotSpec {
        PlotSpec {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "a".into(),
                points,
            }],
        }
    }

    #[test]
    fn single_point_renders_exactly_one_marker_and_no_polyline() {
        let svg = render_svg(&one_series(vec![PlotPoint {
            x: 1.0,
            y: 2.0,
            err: 0.0,
        }]))
        .unwrap();
        assert_eq!(svg.matches("class=\"marker\"").count(), 1);
        assert!(!svg.contains("<polyline"));
        assert!(!svg.contains("class=\"errbar\""));
        assert!(!svg.contains("class=\"legend\""));
    }

    #[test]
    fn two_series_render_two_polylines_and_a_legend() {
        let mk = |dy: f64| Series {
            label: format!("curve {dy}"),
            points: (0..3)
                .map(|i| PlotPoint {
                    x: i as f64,
                    y: dy + i as f64,
                    err: 0.1,
                })
                .collect(),
        };
        let spec = PlotSpec {
            title: "overlay".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![mk(0.0), mk(2.0)],
        };
        let svg = render_svg(&spec).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("class=\"legend\"").count(), 1);
        assert!(svg.contains("curve 0"));
        assert!(svg.contains("curve 2"));
        assert_eq!(svg.matches("class=\"marker\"").count(), 6);
        assert_eq!(svg.matches("class=\"errbar\"").count(), 6);
    }

    #[test]
    fn identical_input_renders_byte_identical_svg() {
        let spec = one_series(vec![
            PlotPoint {
                x: 500.0,
                y: 0.1672,
                err: 0.004,
            },
            PlotPoint {
                x: 6000.0,
                y: 0.1541,
                err: 0.003,
            },
        ]);
        let a = render_svg(&spec).unwrap();
        let b = render_svg(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn larger_values_map_higher_on_the_canvas() {
        let svg = render_svg(&one_series(vec![
            PlotPoint {
                x: 0.0,
                y: 0.0,
                err: 0.0,
            },
            PlotPoint {
                x: 1.0,
                y: 1.0,
                err: 0.0,
            },
        ]))
        .unwrap();
        let cys: Vec<f64> = svg
            .lines()
            .filter(|l| l.contains("class=\"marker\""))
            .map(|l| {
                let s = l.split("cy=\"").nth(1).unwrap();
                s[..s.find('"').unwrap()].parse().unwrap()
            })
            .collect();
        assert!(cys[1] < cys[0], "SVG y grows downward: {cys:?}");
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(render_svg(&one_series(vec![])).is_err());
        assert!(render_svg(&one_series(vec![PlotPoint {
            x: f64::NAN,
            y: 0.0,
            err: 0.0
        }]))
        .is_err());
        assert!(render_svg(&one_series(vec![PlotPoint {
            x: 0.0,
            y: 0.0,
            err: -1.0
        }]))
        .is_err());
    }

    #[test]
    fn sweep_series_drops_all_failed_values() {
        let cells = vec![
            CellResult {
                axis_value: 10,
                seed: 0,
                status: RunStatus::Ok,
                final_exact_w1: Some(0.4),
                error: None,
            },
            CellResult {
                axis_value: 20,
                seed: 0,
                status: RunStatus::Failed,
                final_exact_w1: None,
                error: Some("x".into()),
            },
        ];
        let result = SweepResult::from_cells(SweepAxis::NTrain, cells);
        let series = sweep_series(&result, "m");
        assert_eq!(series.points.len(), 1);
        assert_eq!(series.points[0].x, 10.0);
        assert_eq!(series.points[0].y, 0.4);
    }

    #[test]
    fn plot_curves_writes_an_svg_file() {
        let cells = vec![
            CellResult {
                axis_value: 500,
                seed: 1,
                status: RunStatus::Ok,
                final_exact_w1: Some(0.17),
                error: None,
            },
            CellResult {
                axis_value: 2000,
                seed: 1,
                status: RunStatus::Ok,
                final_exact_w1: Some(0.15),
                error: None,
            },
        ];
        let result = SweepResult::from_cells(SweepAxis::NTrain, cells);
        let path = std::env::temp_dir().join(format!("gswgan_plot_{}.svg", std::process::id()));
        plot_curves(&result, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("training samples"));
        let _ = fs::remove_file(&path);
    }
}
