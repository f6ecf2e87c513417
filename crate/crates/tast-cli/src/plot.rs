//! Static SVG line plots of `tast run` datasets.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::error::CliError;

/// Axes and scales of one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub log_x: bool,
    pub log_y: bool,
    pub title: String,
}

impl PlotSpec {
    /// Named layouts for the three complexity figures: nodes against block
    /// length, nodes against SNR, and QR flops against block length.
    pub fn preset(name: &str) -> Result<PlotSpec, CliError> {
        let spec = |x: &str, y: &str, log_x, log_y, title: &str| PlotSpec {
            x: x.into(),
            y: y.into(),
            log_x,
            log_y,
            title: title.into(),
        };
        match name {
            "nodes-vs-k" => Ok(spec(
                "K",
                "mean_nodes",
                false,
                true,
                "Fano nodes visited vs. block length",
            )),
            "nodes-vs-snr" => Ok(spec(
                "snr_db",
                "mean_nodes",
                false,
                true,
                "Fano nodes visited vs. SNR",
            )),
            "flops-vs-k" => Ok(spec(
                "K",
                "mean_qr_flops",
                true,
                true,
                "QR flops vs. block length",
            )),
            other => Err(CliError::Config(format!(
                "unknown figure {other:?} (nodes-vs-k, nodes-vs-snr, flops-vs-k)"
            ))),
        }
    }
}

/// Columns that label a series unless they move with the x axis.
const SERIES_KEYS: [&str; 6] = ["code_family", "M", "N", "L", "snr_db", "decoder"];

/// Points grouped by series label, each sorted by x.
pub type Series = BTreeMap<String, Vec<(f64, f64)>>;

/// Reads a dataset and groups it for plotting.
pub fn load_series(csv_text: &str, spec: &PlotSpec) -> Result<Series, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("dataset has no column {name:?}")))
    };
    let xi = col(&spec.x)?;
    let yi = col(&spec.y)?;
    let block_axis = ["K", "L", "T"].contains(&spec.x.as_str());
    let keys: Vec<(usize, &str)> = SERIES_KEYS
        .iter()
        .filter(|&&k| k != spec.x && !(block_axis && ["K", "L", "T"].contains(&k)))
        .filter_map(|&k| headers.iter().position(|h| h == k).map(|i| (i, k)))
        .collect();

    // Only keep label parts that actually vary, so labels stay short.
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    if records.is_empty() {
        return Err(CliError::Config("dataset has no rows".into()));
    }
    let varying: Vec<(usize, &str)> = keys
        .into_iter()
        .filter(|&(i, name)| {
            name == "code_family" || records.iter().any(|r| r.get(i) != records[0].get(i))
        })
        .collect();

    let mut series = Series::new();
    for r in &records {
        let parse = |i: usize, name: &str| -> Result<Option<f64>, CliError> {
            let s = r.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("column {name:?}: {s:?} is not a number")))
        };
        let (Some(x), Some(y)) = (parse(xi, &spec.x)?, parse(yi, &spec.y)?) else {
            continue;
        };
        let label = varying
            .iter()
            .map(|&(i, name)| {
                let v = r.get(i).unwrap_or("");
                if name == "code_family" {
                    v.to_string()
                } else {
                    format!("{name}={v}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        series.entry(label).or_default().push((x, y));
    }
    if series.is_empty() {
        return Err(CliError::Config(format!(
            "column {:?} has no values to plot",
            spec.y
        )));
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

fn range(vals: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| !log || *v > 0.0) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (1.0, 10.0);
    }
    if log {
        (lo / 1.5, hi * 1.5)
    } else {
        let pad = ((hi - lo) * 0.05).max(0.5);
        (lo - pad, hi + pad)
    }
}

/// Renders `series` to an SVG string.
pub fn render_svg(series: &Series, spec: &PlotSpec) -> Result<String, CliError> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 560)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let xs = range(series.values().flatten().map(|p| p.0), spec.log_x);
        let ys = range(series.values().flatten().map(|p| p.1), spec.log_y);
        // The four axis-scale combinations are distinct chart types.
        match (spec.log_x, spec.log_y) {
            (false, false) => draw(&root, series, spec, xs.0..xs.1, ys.0..ys.1)?,
            (false, true) => draw(&root, series, spec, xs.0..xs.1, (ys.0..ys.1).log_scale())?,
            (true, false) => draw(&root, series, spec, (xs.0..xs.1).log_scale(), ys.0..ys.1)?,
            (true, true) => draw(
                &root,
                series,
                spec,
                (xs.0..xs.1).log_scale(),
                (ys.0..ys.1).log_scale(),
            )?,
        }
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

fn draw<DB, X, Y>(
    root: &DrawingArea<DB, plotters::coord::Shift>,
    series: &Series,
    spec: &PlotSpec,
    x: X,
    y: Y,
) -> Result<(), CliError>
where
    DB: DrawingBackend,
    DB::ErrorType: 'static,
    X: plotters::coord::ranged1d::AsRangedCoord<Value = f64>,
    Y: plotters::coord::ranged1d::AsRangedCoord<Value = f64>,
    X::CoordDescType: plotters::coord::ranged1d::ValueFormatter<f64>,
    Y::CoordDescType: plotters::coord::ranged1d::ValueFormatter<f64>,
{
    let mut chart = ChartBuilder::on(root)
        .caption(&spec.title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(72)
        .build_cartesian_2d(x, y)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(spec.x.as_str())
        .y_desc(spec.y.as_str())
        .draw()
        .map_err(plot_err)?;
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(lx, ly)| {
                PathElement::new(vec![(lx, ly), (lx + 18, ly)], color.stroke_width(2))
            });
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

/// Reads `input`, renders, and writes `output`.
pub fn plot_file(input: &Path, output: &Path, spec: &PlotSpec) -> Result<usize, CliError> {
    let text = std::fs::read_to_string(input)?;
    let series = load_series(&text, spec)?;
    let svg = render_svg(&series, spec)?;
    std::fs::write(output, svg)?;
    Ok(series.len())
}
