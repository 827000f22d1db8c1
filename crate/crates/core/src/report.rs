//! Report rendering: correlation tables as Markdown or CSV with color
//! annotations, and per-company scatter plots as SVG with axes shared
//! across a company's windows.

use std::fmt::Write as _;

use crate::correlation::{classify, display_rounded, CorrelationRow, CorrelationTable, PriceField};
use crate::model::{CompanySeries, WindowLabel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

fn csv_escape(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn cell_text<T: Scalar>(value: Option<T>, format: TableFormat) -> String {
    match value {
        None => "N/A".to_string(),
        Some(v) => match format {
            TableFormat::Csv => display_rounded(v),
            TableFormat::Markdown => {
                format!("{} {}", display_rounded(v), classify(v).color.token())
            }
        },
    }
}

fn push_row<T: Scalar>(out: &mut String, row: &CorrelationRow<T>, format: TableFormat) {
    let cells: Vec<String> = PriceField::ALL
        .iter()
        .map(|&field| cell_text(row.cell(field), format))
        .chain(std::iter::once(cell_text(row.avg(), format)))
        .collect();
    match format {
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} | {} |", row.company(), cells.join(" | "));
        }
        TableFormat::Csv => {
            let _ = writeln!(out, "{},{}", csv_escape(row.company()), cells.join(","));
        }
    }
}

/// Renders a correlation table. Markdown cells carry the `[G]`/`[O]`/`[R]`
/// color token derived from the unrounded value; CSV output is annotation
/// free. Byte output is deterministic.
pub fn render_table<T: Scalar>(table: &CorrelationTable<T>, format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("| Company | Open | Close | High | Low | Avg. |\n");
            out.push_str("| --- | --- | --- | --- | --- | --- |\n");
        }
        TableFormat::Csv => out.push_str("Company,Open,Close,High,Low,Avg\n"),
    }
    for row in table.rows() {
        push_row(&mut out, row, format);
    }
    push_row(&mut out, table.average_row(), format);
    out
}

/// Shared plot geometry for one company: trend scores span the fixed
/// 0..100 range and the price axis tops out at the smallest multiple of 25
/// covering the company's full-window maximum close. Reusing one spec for
/// the full, pre, and post plots keeps them visually comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl AxisSpec {
    /// Ceiling rule applied to the full-window series. An empty series
    /// falls back to one price band so the plot stays drawable.
    pub fn for_company<T: Scalar>(full: &CompanySeries<T>) -> Self {
        let max_close = full
            .records()
            .iter()
            .filter_map(|r| r.close().to_f64())
            .fold(0.0f64, f64::max);
        let y_max = if max_close <= 0.0 {
            25.0
        } else {
            (max_close / 25.0).ceil() * 25.0
        };
        Self {
            x_min: 0.0,
            x_max: 100.0,
            y_min: 0.0,
            y_max,
        }
    }
}

/// The (score, close) cloud for one company and window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPlot {
    pub company: String,
    pub window: WindowLabel,
    pub points: Vec<(f64, f64)>,
    pub axes: AxisSpec,
}

impl ScatterPlot {
    /// One point per record of the plotted window.
    pub fn new<T: Scalar>(series: &CompanySeries<T>, window: WindowLabel, axes: AxisSpec) -> Self {
        let points = series
            .records()
            .iter()
            .map(|r| {
                (
                    r.score().to_f64().unwrap_or(0.0),
                    r.close().to_f64().unwrap_or(0.0),
                )
            })
            .collect();
        Self {
            company: series.company().to_string(),
            window,
            points,
            axes,
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn px(value: f64) -> String {
    format!("{value:.2}")
}

/// Renders a scatter plot as standalone SVG 1.1.
///
/// Identical input yields identical bytes, and the `<g class="axes">` block
/// depends only on the axis spec, so plots sharing a spec share axis
/// geometry verbatim. An empty point set still renders axes and title.
pub fn render_scatter(plot: &ScatterPlot) -> String {
    let axes = &plot.axes;
    let plot_left = MARGIN_LEFT;
    let plot_right = WIDTH - MARGIN_RIGHT;
    let plot_top = MARGIN_TOP;
    let plot_bottom = HEIGHT - MARGIN_BOTTOM;
    let x_span = axes.x_max - axes.x_min;
    let y_span = axes.y_max - axes.y_min;

    let to_x = |score: f64| plot_left + (score - axes.x_min) / x_span * (plot_right - plot_left);
    let to_y = |price: f64| plot_bottom - (price - axes.y_min) / y_span * (plot_bottom - plot_top);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let title = xml_escape(&format!("{} — {}", plot.company, plot.window));
    let _ = writeln!(svg, "<title>{title}</title>");
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        px(WIDTH / 2.0),
    );

    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        px(plot_left),
        px(plot_bottom),
        px(plot_right),
        px(plot_bottom),
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        px(plot_left),
        px(plot_top),
        px(plot_left),
        px(plot_bottom),
    );
    let mut x_tick = axes.x_min;
    while x_tick <= axes.x_max {
        let x = to_x(x_tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
            px(x),
            px(plot_bottom),
            px(plot_bottom + 5.0),
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" stroke="none">{}</text>"#,
            px(x),
            px(plot_bottom + 18.0),
            x_tick,
        );
        x_tick += 25.0;
    }
    let mut y_tick = axes.y_min;
    while y_tick <= axes.y_max {
        let y = to_y(y_tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}"/>"#,
            px(y),
            px(plot_left - 5.0),
            px(plot_left),
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" stroke="none">{}</text>"#,
            px(plot_left - 8.0),
            px(y + 4.0),
            y_tick,
        );
        y_tick += 25.0;
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="points" fill="steelblue">"#);
    for &(score, close) in &plot.points {
        let _ = writeln!(
            svg,
            r#"<circle cx="{}" cy="{}" r="3"/>"#,
            px(to_x(score)),
            px(to_y(close)),
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}

/// The axis geometry block of a rendered plot, for equality checks across
/// a company's windows.
pub fn axes_fragment(svg: &str) -> Option<&str> {
    let start = svg.find(r#"<g class="axes""#)?;
    let end = svg[start..].find("</g>")? + start;
    Some(&svg[start..end])
}
