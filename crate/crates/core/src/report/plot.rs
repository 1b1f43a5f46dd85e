//! Cluster ladder plot: one row per item, ALASSO estimate with interval
//! whiskers, colored by cluster.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::{decimal, ConsensusReport, ReportRow};

const ROW_HEIGHT: f64 = 14.0;
const MARGIN: f64 = 40.0;
const LABEL_WIDTH: f64 = 80.0;
const PLOT_WIDTH: f64 = 480.0;
const AXIS_HEIGHT: f64 = 24.0;
const DOT_RADIUS: f64 = 3.5;

/// Rows ordered top to bottom: decreasing ALASSO ability, then decreasing
/// MLE, then item id.
fn ladder_order(report: &ConsensusReport) -> Vec<&ReportRow> {
    let mut rows: Vec<&ReportRow> = report.rows.iter().collect();
    rows.sort_by(|a, b| {
        b.alasso
            .total_cmp(&a.alasso)
            .then(b.mle.total_cmp(&a.mle))
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
    rows
}

/// Fill color of a 1-based cluster id; neighbouring clusters get distant hues.
pub fn cluster_color(cluster_id: usize) -> String {
    let hue = (cluster_id.saturating_sub(1) as f64 * 137.508) % 360.0;
    format!("hsl({},65%,42%)", hue.round() as u32)
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Tick spacing from the 1-2-5 series giving at most ten intervals.
fn tick_step(span: f64) -> f64 {
    let mut magnitude = 10f64.powf((span / 10.0).log10().floor());
    loop {
        for factor in [1.0, 2.0, 5.0] {
            if span / (factor * magnitude) <= 10.0 {
                return factor * magnitude;
            }
        }
        magnitude *= 10.0;
    }
}

fn px(value: f64) -> String {
    format!("{value:.2}")
}

/// Renders the plot as a standalone SVG document.
pub fn render_svg(report: &ConsensusReport) -> String {
    let rows = ladder_order(report);
    let mut lo = rows
        .iter()
        .flat_map(|r| [r.alasso, r.alasso_ci.0])
        .fold(0.0f64, f64::min);
    let mut hi = rows
        .iter()
        .flat_map(|r| [r.alasso, r.alasso_ci.1])
        .fold(0.0f64, f64::max);
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let step = tick_step(hi - lo);
    lo = (lo / step).floor() * step;
    hi = (hi / step).ceil() * step;

    let left = MARGIN + LABEL_WIDTH;
    let top = MARGIN;
    let height = rows.len() as f64 * ROW_HEIGHT;
    let width = left + PLOT_WIDTH + MARGIN;
    let total_height = top + height + AXIS_HEIGHT + MARGIN;
    let x = |value: f64| left + (value - lo) / (hi - lo) * PLOT_WIDTH;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="10">"#,
        px(width),
        px(total_height),
        px(width),
        px(total_height)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="gray" stroke-dasharray="3,3"/>"#,
        px(x(0.0)),
        px(top),
        px(top + height)
    );

    let axis_y = top + height + 4.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{2}" x2="{}" y2="{2}" stroke="black"/>"#,
        px(left),
        px(left + PLOT_WIDTH),
        px(axis_y)
    );
    let ticks = ((hi - lo) / step).round() as i64;
    for k in 0..=ticks {
        let value = lo + k as f64 * step;
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
            px(x(value)),
            px(axis_y),
            px(axis_y + 4.0),
            px(axis_y + 14.0),
            format_tick(value, step)
        );
    }

    for (row_index, row) in rows.iter().enumerate() {
        let y = top + (row_index as f64 + 0.5) * ROW_HEIGHT;
        let color = cluster_color(row.cluster_id);
        let _ = writeln!(
            svg,
            r#"<g class="item" data-item="{id}" data-cluster="{cluster}"><text x="{lx}" y="{ty}" text-anchor="end">{id}</text><line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="{color}"/><circle cx="{cx}" cy="{y}" r="{r}" fill="{color}"><title>{label}: {value}</title></circle></g>"#,
            id = escape(&row.item_id),
            cluster = row.cluster_id,
            lx = px(left - 6.0),
            ty = px(y + 3.5),
            x1 = px(x(row.alasso_ci.0)),
            x2 = px(x(row.alasso_ci.1)),
            y = px(y),
            color = color,
            cx = px(x(row.alasso)),
            r = px(DOT_RADIUS),
            label = escape(&row.label),
            value = decimal(row.alasso),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(value: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let text = format!("{value:.decimals$}");
    if text.starts_with('-') && text.trim_start_matches(['-', '0', '.']).is_empty() {
        text[1..].to_string()
    } else {
        text
    }
}

/// `item_id,mu,lower,upper,cluster_id`, in ladder order.
pub fn write_plot_data<W: Write>(report: &ConsensusReport, sink: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["item_id", "mu", "lower", "upper", "cluster_id"])?;
    for row in ladder_order(report) {
        writer.write_record([
            row.item_id.clone(),
            decimal(row.alasso),
            decimal(row.alasso_ci.0),
            decimal(row.alasso_ci.1),
            row.cluster_id.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the SVG and its plot-data CSV.
pub fn emit_cluster_plot<W1: Write, W2: Write>(
    report: &ConsensusReport,
    svg: W1,
    data: W2,
) -> io::Result<()> {
    let mut svg = svg;
    svg.write_all(render_svg(report).as_bytes())?;
    write_plot_data(report, data)?;
    Ok(())
}
