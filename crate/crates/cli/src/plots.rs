//! SVG figures. Presentation only: the data files next to them are the
//! contract, so a failed plot is reported as a warning by the caller.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

const SIZE: (u32, u32) = (900, 540);
const PALETTE: [RGBColor; 4] = [BLUE, RED, GREEN, MAGENTA];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("plot: {e}")
}

/// Stem plot, e.g. impulse-response taps against delay.
pub fn stem(path: &Path, title: &str, x_desc: &str, y_desc: &str, x: &[f64], y: &[f64]) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let (x0, x1) = span(x.iter().copied());
    let (y0, y1) = span(y.iter().copied().chain([0.0]));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(err)?;
    chart
        .draw_series(
            x.iter()
                .zip(y)
                .map(|(&a, &b)| PathElement::new(vec![(a, 0.0), (a, b)], BLUE)),
        )
        .map_err(err)?;
    chart
        .draw_series(x.iter().zip(y).map(|(&a, &b)| Circle::new((a, b), 3, BLUE.filled())))
        .map_err(err)?;
    root.present().map_err(err)
}

/// Line plot against a logarithmic x axis, e.g. gain against frequency.
pub fn log_x(path: &Path, title: &str, x_desc: &str, y_desc: &str, series: &[Series]) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let xs = series.iter().flat_map(|s| s.x.iter().copied()).filter(|&v| v > 0.0);
    let (x0, x1) = xs.fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
    let (x0, x1) = if x0.is_finite() && x1 > x0 { (x0, x1) } else { (1.0, 10.0) };
    let (y0, y1) = span(series.iter().flat_map(|s| s.y.iter().copied()));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d((x0..x1).log_scale(), y0..y1)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(err)?;
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                s.x.iter().zip(s.y).filter(|(x, y)| **x > 0.0 && y.is_finite()).map(|(&x, &y)| (x, y)),
                color.stroke_width(2),
            ))
            .map_err(err)?
            .label(s.label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(err)?;
    root.present().map_err(err)
}

/// Line plot with linear axes, e.g. a power-delay profile in dB.
pub fn linear(path: &Path, title: &str, x_desc: &str, y_desc: &str, x: &[f64], y: &[f64]) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let (x0, x1) = span(x.iter().copied());
    let (y0, y1) = span(y.iter().copied());
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(err)?;
    chart
        .draw_series(LineSeries::new(
            x.iter().zip(y).filter(|(_, y)| y.is_finite()).map(|(&a, &b)| (a, b)),
            BLUE.stroke_width(2),
        ))
        .map_err(err)?;
    root.present().map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_svg_files() {
        let dir = tempfile::tempdir().unwrap();
        let x = [1e4, 1e5, 1e6];
        let y = [-60.0, -50.0, -44.0];
        let p = dir.path().join("a.svg");
        log_x(&p, "gain", "Hz", "dB", &[Series { label: "model", x: &x, y: &y }]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("<svg") && text.contains("gain"));
        stem(&dir.path().join("b.svg"), "cir", "s", "tap", &[0.0, 1.0], &[1.0, -0.2]).unwrap();
        linear(&dir.path().join("c.svg"), "pdp", "s", "dB", &[0.0, 1.0], &[0.0, f64::NEG_INFINITY]).unwrap();
    }
}
