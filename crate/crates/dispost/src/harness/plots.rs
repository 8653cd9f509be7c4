//! Self-contained SVG summaries of toy-grid results.
//!
//! Two figure kinds, both plain strings with no external references:
//!
//! * a **winner grid** — one colored cell per (slope, size) pair naming the
//!   method with the lowest mean perplexity (requires at least two methods);
//! * **perplexity curves** — per slope, mean perplexity against training-set
//!   size (log-2 spaced) for every method, with a bootstrap confidence band
//!   once a cell has at least two successful repeats.
//!
//! Machine-checkable hooks: every winner cell carries `data-slope`,
//! `data-n`, and `data-winner` attributes, and every curve carries a
//! `data-method` attribute. Runs with nothing to plot produce a
//! `plots_notice.txt` instead of figures.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::eval::bootstrap_ci;
use crate::harness::grid::{GridMethod, GridResults, Winner};
use crate::seeding::derive_seed;

/// Confidence level of the curve bands.
pub const BAND_LEVEL: f64 = 0.95;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn method_color(method: GridMethod) -> &'static str {
    match method {
        GridMethod::JointMcmc => "#1f77b4",
        GridMethod::DiscMcmc => "#d62728",
        GridMethod::BayesReg => "#2ca02c",
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// One colored cell per (slope, size) pair, labeled with the winning method.
pub fn winner_grid_svg(results: &GridResults) -> String {
    let rows = results.slopes.len();
    let cols = results.dataset_sizes.len();
    let cell_w = 92.0;
    let cell_h = 48.0;
    let left = 90.0;
    let top = 50.0;
    let width = left + cols as f64 * cell_w + 180.0;
    let height = top + rows as f64 * cell_h + 40.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{left}\" y=\"24\" font-size=\"15\">Lowest mean perplexity per \
         (slope, training size) cell</text>\n"
    ));
    for (ci, n) in results.dataset_sizes.iter().enumerate() {
        let x = left + (ci as f64 + 0.5) * cell_w;
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">n={n}</text>\n",
            top - 8.0
        ));
    }
    let winners = results.winners();
    for (ri, &slope) in results.slopes.iter().enumerate() {
        let y = top + (ri as f64 + 0.5) * cell_h;
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" dominant-baseline=\"middle\">\
             slope={slope}</text>\n",
            left - 10.0,
            y
        ));
        for (ci, &n) in results.dataset_sizes.iter().enumerate() {
            let row = winners
                .iter()
                .find(|w| w.slope.to_bits() == slope.to_bits() && w.n_train == n)
                .expect("winners covers every (slope, size) pair");
            let (fill, label) = match row.winner {
                Winner::Method(m) => (method_color(m), m.name().to_string()),
                Winner::Tie => ("#999999", "tie".to_string()),
                Winner::NoData => ("#ffffff", "n/a".to_string()),
            };
            let x0 = left + ci as f64 * cell_w;
            let y0 = top + ri as f64 * cell_h;
            svg.push_str(&format!(
                "  <rect x=\"{x0}\" y=\"{y0}\" width=\"{cell_w}\" height=\"{cell_h}\" \
                 fill=\"{fill}\" fill-opacity=\"0.55\" stroke=\"#333\" \
                 data-slope=\"{slope}\" data-n=\"{n}\" data-winner=\"{label}\"/>\n"
            ));
            svg.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" \
                 dominant-baseline=\"middle\">{label}</text>\n",
                x0 + cell_w / 2.0,
                y0 + cell_h / 2.0
            ));
        }
    }
    let legend_x = left + cols as f64 * cell_w + 20.0;
    for (i, &m) in results.methods.iter().enumerate() {
        let y = top + i as f64 * 22.0;
        svg.push_str(&format!(
            "  <rect x=\"{legend_x}\" y=\"{y}\" width=\"14\" height=\"14\" \
             fill=\"{}\" fill-opacity=\"0.55\" stroke=\"#333\"/>\n",
            method_color(m)
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">{m}</text>\n",
            legend_x + 20.0,
            y + 12.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

struct CurvePoint {
    n: usize,
    mean: f64,
    band: Option<(f64, f64)>,
}

/// Mean perplexity against training size for one slope, one curve per
/// method, with bootstrap bands where at least two repeats succeeded.
pub fn perplexity_curves_svg(results: &GridResults, slope_index: usize) -> String {
    let slope = results.slopes[slope_index];
    let mut curves: Vec<(GridMethod, Vec<CurvePoint>)> = Vec::new();
    for (mi, &method) in results.methods.iter().enumerate() {
        let mut points = Vec::new();
        for (ni, &n) in results.dataset_sizes.iter().enumerate() {
            let values: Vec<f64> = results
                .cells
                .iter()
                .filter(|c| {
                    c.method == method
                        && c.n_train == n
                        && c.slope.to_bits() == slope.to_bits()
                        && c.error.is_none()
                })
                .filter_map(|c| c.perplexity)
                .collect();
            if values.is_empty() {
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let band = if values.len() >= 2 {
                let seed =
                    derive_seed(0x504c_4f54, &[slope_index as u64, ni as u64, mi as u64]);
                bootstrap_ci(&values, BAND_LEVEL, seed)
                    .ok()
                    .map(|ci| (ci.lower, ci.upper))
            } else {
                None
            };
            points.push(CurvePoint { n, mean, band });
        }
        if !points.is_empty() {
            curves.push((method, points));
        }
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{MARGIN_LEFT}\" y=\"24\" font-size=\"15\">Test perplexity vs training \
         size (slope {slope})</text>\n"
    ));
    if curves.is_empty() {
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no successful cells at this \
             slope</text>\n",
            WIDTH / 2.0,
            HEIGHT / 2.0
        ));
        svg.push_str("</svg>\n");
        return svg;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let xs: Vec<f64> = results.dataset_sizes.iter().map(|&n| (n as f64).log2()).collect();
    let (xmin, xmax) = (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, points) in &curves {
        for p in points {
            let (lo, hi) = p.band.unwrap_or((p.mean, p.mean));
            ymin = ymin.min(lo);
            ymax = ymax.max(hi);
        }
    }
    let pad = 0.05 * (ymax - ymin).max(0.1);
    ymin -= pad;
    ymax += pad;
    let x = |n: usize| MARGIN_LEFT + ((n as f64).log2() - xmin) / xspan * plot_w;
    let y = |v: f64| MARGIN_TOP + (ymax - v) / (ymax - ymin) * plot_h;

    // Axes and ticks.
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{}\" \
         stroke=\"#333\"/>\n",
        HEIGHT - MARGIN_BOTTOM
    ));
    for &n in &results.dataset_sizes {
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{n}</text>\n",
            x(n),
            HEIGHT - MARGIN_BOTTOM + 20.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">training documents (log scale)\
         </text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    for i in 0..=4 {
        let v = ymin + (ymax - ymin) * i as f64 / 4.0;
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}\
             </text>\n",
            MARGIN_LEFT - 8.0,
            y(v),
            fmt(v)
        ));
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
            y(v),
            WIDTH - MARGIN_RIGHT,
            y(v)
        ));
    }

    for (method, points) in &curves {
        let color = method_color(*method);
        let banded: Vec<&CurvePoint> = points.iter().filter(|p| p.band.is_some()).collect();
        if banded.len() >= 2 {
            let mut outline = String::new();
            for p in &banded {
                outline.push_str(&format!("{},{} ", fmt(x(p.n)), fmt(y(p.band.unwrap().1))));
            }
            for p in banded.iter().rev() {
                outline.push_str(&format!("{},{} ", fmt(x(p.n)), fmt(y(p.band.unwrap().0))));
            }
            svg.push_str(&format!(
                "  <polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" \
                 stroke=\"none\" data-band=\"{method}\"/>\n",
                outline.trim_end()
            ));
        }
        let line: Vec<String> =
            points.iter().map(|p| format!("{},{}", fmt(x(p.n)), fmt(y(p.mean)))).collect();
        svg.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" \
             data-method=\"{method}\"/>\n",
            line.join(" ")
        ));
        for p in points {
            svg.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                fmt(x(p.n)),
                fmt(y(p.mean))
            ));
        }
    }

    let legend_x = WIDTH - MARGIN_RIGHT + 16.0;
    for (i, (method, _)) in curves.iter().enumerate() {
        let ly = MARGIN_TOP + i as f64 * 22.0;
        svg.push_str(&format!(
            "  <line x1=\"{legend_x}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" \
             stroke-width=\"2\"/>\n",
            legend_x + 18.0,
            method_color(*method)
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\">{method}</text>\n",
            legend_x + 24.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn slope_file_tag(slope: f64) -> String {
    let mut tag = format!("{slope}");
    tag = tag.replace('-', "m").replace('.', "p");
    tag
}

/// Writes every applicable figure under `dir` and returns the paths.
///
/// * No successful cells at all: a `plots_notice.txt` explaining why no
///   figures exist.
/// * A single method: perplexity curves only (a winner grid would be
///   vacuous).
/// * Two or more methods: `winner_grid.svg` plus one
///   `perplexity_slope_<slope>.svg` per slope.
pub fn emit_plots(results: &GridResults, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let any_success = results.cells.iter().any(|c| c.error.is_none());
    if results.cells.is_empty() || !any_success {
        let notice = dir.join("plots_notice.txt");
        std::fs::write(
            &notice,
            "No figures were produced: the run has no successful cells to plot.\n",
        )?;
        written.push(notice);
        return Ok(written);
    }
    if results.methods.len() >= 2 {
        let path = dir.join("winner_grid.svg");
        std::fs::write(&path, winner_grid_svg(results))?;
        written.push(path);
    }
    for si in 0..results.slopes.len() {
        let path = dir.join(format!(
            "perplexity_slope_{}.svg",
            slope_file_tag(results.slopes[si])
        ));
        std::fs::write(&path, perplexity_curves_svg(results, si))?;
        written.push(path);
    }
    Ok(written)
}
