use std::path::Path;

use plotters::prelude::*;

use crate::report::{Report, Sweep};
use crate::CliError;

const SIZE: (u32, u32) = (900, 560);

fn err(e: impl std::fmt::Display) -> CliError {
    CliError::Plot(e.to_string())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9 + hi.abs() * 0.01);
    (lo - pad, hi + pad)
}

/// Mean utility against the counter, one line per algorithm.
pub fn curves(report: &Report, path: &Path) -> Result<(), CliError> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let x_hi = report.max_nclo.max(1) as f64;
    let (y_lo, y_hi) = bounds(report.summaries.iter().flat_map(|s| s.curve.iter().copied()));
    let mut chart = ChartBuilder::on(&root)
        .caption("Mean utility by NCLO", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..x_hi, y_lo..y_hi)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc("NCLO")
        .y_desc("utility")
        .draw()
        .map_err(err)?;
    for (i, s) in report.summaries.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let points = std::iter::once((0.0, s.curve[0]))
            .chain(report.edges.iter().copied().zip(s.curve.iter().copied()));
        chart
            .draw_series(LineSeries::new(points, color.stroke_width(2)))
            .map_err(err)?
            .label(s.algorithm.as_str())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(err)?;
    root.present().map_err(err)
}

/// Mean final utility against one knowledge level.
pub fn sweep(sweep: &Sweep, path: &Path) -> Result<(), CliError> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let (y_lo, y_hi) = bounds(sweep.points.iter().map(|p| p.mean));
    let caption = format!(
        "{} final utility by {} ({})",
        sweep.algorithm,
        sweep.level.name(),
        sweep.file_stem()
    );
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(-0.02..1.02, y_lo..y_hi)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc(sweep.level.name())
        .y_desc("mean final utility")
        .draw()
        .map_err(err)?;
    let pts: Vec<(f64, f64)> = sweep.points.iter().map(|p| (p.p, p.mean)).collect();
    chart
        .draw_series(LineSeries::new(pts.iter().copied(), BLUE.stroke_width(2)))
        .map_err(err)?;
    chart
        .draw_series(pts.iter().map(|&p| Circle::new(p, 4, BLUE.filled())))
        .map_err(err)?;
    root.present().map_err(err)
}
