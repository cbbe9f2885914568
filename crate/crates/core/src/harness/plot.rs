use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::rows::Experiment;

use super::{HarnessError, SummaryRow};

type Points = Vec<(u64, f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// (episode, mean, std), sorted by episode.
    pub points: Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub name: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub n_seeds: usize,
}

impl Figure {
    pub fn n_points(&self) -> usize {
        self.series.iter().map(|s| s.points.len()).sum()
    }

    pub fn title(&self) -> String {
        format!("{} ({} points, {} seeds)", self.name, self.n_points(), self.n_seeds)
    }
}

/// One figure per metric with a line per variant, except that all `mw_*`
/// metrics share a single figure with a line per (variant, metric).
pub fn figures(experiment: Experiment, summary: &[SummaryRow]) -> Vec<Figure> {
    let mut grouped: BTreeMap<String, BTreeMap<String, Points>> = BTreeMap::new();
    let mut seeds: BTreeMap<String, usize> = BTreeMap::new();
    for r in summary.iter().filter(|r| r.experiment == experiment) {
        let (figure, label) = if r.metric.starts_with("mw_") {
            ("mw".to_owned(), format!("{} {}", r.variant, r.metric))
        } else {
            (r.metric.clone(), r.variant.clone())
        };
        let n = seeds.entry(figure.clone()).or_default();
        *n = (*n).max(r.n_seeds);
        grouped.entry(figure).or_default().entry(label).or_default().push((r.episode, r.mean, r.std));
    }
    grouped
        .into_iter()
        .map(|(metric, lines)| Figure {
            name: format!("{experiment}_{metric}"),
            n_seeds: seeds[&metric],
            y_label: metric,
            series: lines
                .into_iter()
                .map(|(label, mut points)| {
                    points.sort_by_key(|p| p.0);
                    Series { label, points }
                })
                .collect(),
        })
        .collect()
}

/// Write `<name>.svg` for every figure into `dir`.
pub fn render_figures(figs: &[Figure], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    figs.iter()
        .map(|f| {
            let path = dir.join(format!("{}.svg", f.name));
            render(f, &path).map_err(|msg| HarnessError::Plot { path: path.clone(), msg })?;
            Ok(path)
        })
        .collect()
}

fn bounds(fig: &Figure) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for &(e, m, s) in fig.series.iter().flat_map(|s| &s.points) {
        x = (x.0.min(e as f64), x.1.max(e as f64));
        y = (y.0.min(m - s), y.1.max(m + s));
    }
    if !x.0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    if x.1 <= x.0 {
        x.1 = x.0 + 1.0;
    }
    let pad = ((y.1 - y.0) * 0.05).max(1e-3);
    ((0.0_f64.min(x.0), x.1), (y.0 - pad, y.1 + pad))
}

fn render(fig: &Figure, path: &Path) -> Result<(), String> {
    let root = SVGBackend::new(path, (900, 540)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let ((x0, x1), (y0, y1)) = bounds(fig);
    let mut chart = ChartBuilder::on(&root)
        .caption(fig.title(), ("sans-serif", 20))
        .margin(14)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .x_desc("episode")
        .y_desc(fig.y_label.as_str())
        .draw()
        .map_err(|e| e.to_string())?;

    for (i, s) in fig.series.iter().enumerate() {
        let color = Palette99::pick(i);
        let upper = s.points.iter().map(|&(e, m, sd)| (e as f64, m + sd));
        let lower = s.points.iter().rev().map(|&(e, m, sd)| (e as f64, m - sd));
        let band: Vec<(f64, f64)> = upper.chain(lower).collect();
        chart
            .draw_series(std::iter::once(Polygon::new(band, color.mix(0.18).filled())))
            .map_err(|e| e.to_string())?;
        let line_color = color.to_rgba();
        chart
            .draw_series(LineSeries::new(
                s.points.iter().map(|&(e, m, _)| (e as f64, m)),
                line_color.stroke_width(2),
            ))
            .map_err(|e| e.to_string())?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], line_color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(|e| e.to_string())?;
    root.present().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, metric: &str, episode: u64, mean: f64) -> SummaryRow {
        SummaryRow {
            experiment: Experiment::Exp4,
            variant: variant.into(),
            episode,
            metric: metric.into(),
            mean,
            std: 0.01,
            n_seeds: 3,
        }
    }

    #[test]
    fn mw_metrics_share_a_figure() {
        let s = vec![
            row("frac=0.00", "mw_anchor", 500, 0.5),
            row("frac=0.00", "mw_hitchhiker", 500, 0.5),
            row("frac=0.00", "mw_anchor", 1000, 0.5),
            row("frac=0.00", "rho", 500, 0.2),
        ];
        let f = figures(Experiment::Exp4, &s);
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].name, "exp4_mw");
        assert_eq!(f[0].series.len(), 2);
        assert_eq!(f[0].n_points(), 3);
        assert_eq!(f[0].title(), "exp4_mw (3 points, 3 seeds)");
        assert_eq!(f[1].series[0].label, "frac=0.00");
    }
}
