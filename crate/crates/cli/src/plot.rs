//! SVG rendering of JSON reports. Output depends only on report content.

use plotters::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::Value;
use snls_core::density::SmallBallReport;
use snls_core::dynamics::ConvergenceReport;
use snls_core::measure::{SigmaEnsembleReport, StationaryReport};

use crate::error::CliError;
use crate::reports::{DensityData, GrowthData, ScaleData, SweepData};

const SIZE: (u32, u32) = (720, 480);
const PALETTE: [RGBColor; 4] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189)];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

impl Series {
    fn line(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, markers: false }
    }

    fn dots(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, markers: true }
    }
}

/// One SVG document: file suffix (appended to the report stem) and text.
pub type Figure = (String, String);

fn malformed(kind: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("malformed {kind} report: {e}"))
}

fn data<T: DeserializeOwned>(kind: &str, v: &Value) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| malformed(kind, e))
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn draw_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Runtime(format!("plot rendering failed: {e:?}"))
}

pub fn line_chart(title: &str, x_desc: &str, y_desc: &str, series: &[Series]) -> Result<String, CliError> {
    let clean: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect())
        .collect();
    let xr = range(clean.iter().flatten().map(|p| p.0));
    let yr = range(clean.iter().flatten().map(|p| p.1));
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc(x_desc).y_desc(y_desc).draw().map_err(draw_err)?;
        for (k, (s, pts)) in series.iter().zip(&clean).enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let drawn = if s.markers {
                chart.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled()))).map_err(draw_err)?
            } else {
                chart.draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2))).map_err(draw_err)?
            };
            drawn.label(s.name.as_str()).legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

/// Histogram densities `mass/width` with a horizontal bound drawn from `a` on.
pub fn histogram_chart(title: &str, edges: &[f64], masses: &[f64], bound: Option<(f64, f64)>) -> Result<String, CliError> {
    if edges.len() != masses.len() + 1 || masses.is_empty() {
        return Err(malformed("density", "histogram needs one more edge than bins"));
    }
    let heights: Vec<f64> = masses.iter().enumerate().map(|(k, m)| m / (edges[k + 1] - edges[k])).collect();
    let xr = range(edges.iter().copied());
    let top = heights.iter().copied().chain(bound.map(|b| b.1)).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let top = if top > 0.0 { 1.1 * top } else { 1.0 };
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(xr.0..xr.1, 0.0..top)
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc("value").y_desc("density").draw().map_err(draw_err)?;
        chart
            .draw_series(heights.iter().enumerate().map(|(k, &h)| {
                Rectangle::new([(edges[k], 0.0), (edges[k + 1], h)], PALETTE[0].mix(0.5).filled())
            }))
            .map_err(draw_err)?
            .label("histogram")
            .legend(|(x, y)| Rectangle::new([(x, y - 5), (x + 20, y + 5)], PALETTE[0].mix(0.5).filled()));
        if let Some((a, c)) = bound {
            let color = PALETTE[1];
            chart
                .draw_series(LineSeries::new([(a.max(xr.0), c), (xr.1, c)], color.stroke_width(2)))
                .map_err(draw_err)?
                .label("density bound")
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

fn log_points(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.log10(), b.log10())).collect()
}

/// Figures for one report `{kind, manifest, data}`.
pub fn render(report: &Value) -> Result<Vec<Figure>, CliError> {
    let kind = report.get("kind").and_then(Value::as_str).ok_or_else(|| malformed("unknown", "missing `kind`"))?;
    let v = report.get("data").ok_or_else(|| malformed(kind, "missing `data`"))?;
    let one = |svg: String| Ok(vec![(String::new(), svg)]);
    match kind {
        "growth" => {
            let d: GrowthData = data(kind, v)?;
            let g = &d.growth;
            let norms = d.times.iter().copied().zip(g.norms.iter().copied()).collect();
            let envelope = d.times.iter().copied().zip(g.envelope.iter().map(|e| 2.0 * e)).collect();
            one(line_chart(
                &format!("norm growth, r = {}, i = {}", g.r, g.i),
                "t",
                "norm",
                &[Series::line("‖u(t)‖_r", norms), Series::line("2ξ(1+i+ln(1+t))", envelope)],
            )?)
        }
        "stationary" => {
            let d: StationaryReport = data(kind, v)?;
            let r: Vec<f64> = d.tail.iter().map(|t| t.radius).collect();
            let y: Vec<f64> = d.tail.iter().map(|t| t.value).collect();
            one(line_chart(
                &format!("tail of the dissipation, slope {:.3}", d.tail_slope),
                "log10 R",
                "log10 tail",
                &[Series::line("tail", log_points(&r, &y))],
            )?)
        }
        "convergence" => {
            let d: ConvergenceReport = data(kind, v)?;
            let x: Vec<f64> = d.rows.iter().map(|r| 1.0 + r.top_eigenvalue).collect();
            let y: Vec<f64> = d.rows.iter().map(|r| r.error).collect();
            let pts = log_points(&x, &y);
            let mut series = vec![Series::dots("sup error", pts.clone())];
            if let Some(&(x0, y0)) = pts.first() {
                let line = pts.iter().map(|&(x, _)| (x, y0 + d.expected_slope * (x - x0))).collect();
                series.push(Series::line(&format!("slope {:.2}", d.expected_slope), line));
            }
            one(line_chart(&format!("Galerkin convergence, fitted slope {:.3}", d.slope), "log10(1+λ_N)", "log10 error", &series)?)
        }
        "density" => {
            let d: DensityData = data(kind, v)?;
            d.laws
                .iter()
                .map(|law| {
                    let c = law.bound.histogram.iter().map(|h| h.1).fold(0.0, f64::max);
                    let svg = histogram_chart(
                        &format!("law of {} with density bound above {:.3}", law.tag.name(), law.bound.a),
                        &law.histogram.edges,
                        &law.histogram.masses,
                        Some((law.bound.a, c)),
                    )?;
                    Ok((format!("-{}", law.tag.name()), svg))
                })
                .collect()
        }
        "smallball" => {
            let d: SmallBallReport = data(kind, v)?;
            let p = d.deltas.iter().copied().zip(d.probabilities.iter().copied()).collect();
            let env = d.deltas.iter().map(|&x| (x, d.slope * x)).collect();
            one(line_chart("small-ball probabilities", "δ", "P(‖u‖ < δ)", &[Series::dots("empirical", p), Series::line("Cδ", env)])?)
        }
        "sigma" => {
            let d: SigmaEnsembleReport = data(kind, v)?;
            let pts = d.levels.iter().map(|&i| f64::from(i)).zip(d.rejected_fraction.iter().copied()).collect();
            one(line_chart("Σ rejections", "i", "rejected fraction", &[Series::dots("rejected", pts)])?)
        }
        "scale" => {
            let d: ScaleData = data(kind, v)?;
            let pts: Vec<(f64, f64)> = d.rows.iter().map(|r| (r.lambda, r.mass_dissipation.estimate)).collect();
            let fit = pts.iter().map(|&(x, _)| (x, d.intercept + d.slope * x)).collect();
            one(line_chart(
                &format!("scaling in Λ, R² = {:.4}", d.r_squared),
                "Λ",
                "Ê𝓜",
                &[Series::dots("measured", pts), Series::line("linear fit", fit)],
            )?)
        }
        "sweep" => {
            let d: SweepData = data(kind, v)?;
            let em = d.report.rows.iter().map(|r| (r.alpha, r.mass_dissipation.estimate)).collect();
            let target = d.report.rows.iter().map(|r| (r.alpha, r.mass_target)).collect();
            let mut figs = vec![(
                String::new(),
                line_chart("inviscid sweep", "α", "Ê𝓜", &[Series::dots("Ê𝓜", em), Series::line("A_0/2", target)])?,
            )];
            if d.ks.len() == d.report.rows.len() && !d.ks.is_empty() {
                let ks = d.report.rows.iter().map(|r| r.alpha).zip(d.ks.iter().copied()).collect();
                figs.push(("-ks".into(), line_chart("invariance trend", "α", "max KS", &[Series::line("KS", ks)])?));
            }
            Ok(figs)
        }
        other => Err(malformed(other, "unsupported report kind")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn growth_report_gives_one_svg_with_two_curves() {
        let report = json!({
            "kind": "growth",
            "manifest": "simulate.manifest.json",
            "data": {
                "times": [0.0, 0.5, 1.0],
                "growth": { "i": 1.0, "r": 1.0, "ratio": 0.2, "within_bound": true,
                            "envelope": [2.0, 2.2, 2.4], "norms": [0.5, 0.6, 0.5] },
                "mass_drift": 0.0, "energy_drift": 0.0, "exact_error": null
            }
        });
        let figs = render(&report).unwrap();
        assert_eq!(figs.len(), 1);
        let svg = &figs[0].1;
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("‖u(t)‖_r") && svg.contains("2ξ(1+i+ln(1+t))"));
    }

    #[test]
    fn rendering_is_a_pure_function() {
        let report = json!({ "kind": "smallball", "manifest": "m.manifest.json", "data": {
            "measure_id": "x", "deltas": [0.1, 1.0], "probabilities": [0.0, 0.5], "slope": 0.5,
            "slack": 1.0, "worst_ratio": 1.0, "status": "dominated" } });
        assert_eq!(render(&report).unwrap(), render(&report).unwrap());
    }

    #[test]
    fn malformed_reports_are_rejected() {
        assert!(render(&json!({ "data": {} })).is_err());
        assert!(render(&json!({ "kind": "growth", "data": { "times": "no" } })).is_err());
        assert!(render(&json!({ "kind": "mystery", "data": {} })).is_err());
        assert!(histogram_chart("h", &[0.0, 1.0], &[0.5, 0.5], None).is_err());
    }

    #[test]
    fn histogram_draws_bars_and_bound() {
        let svg = histogram_chart("h", &[0.0, 1.0, 2.0], &[0.25, 0.75], Some((0.5, 0.8))).unwrap();
        assert!(svg.matches("<rect").count() >= 3);
        assert!(svg.contains("density bound"));
    }
}
