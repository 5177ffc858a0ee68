use std::collections::BTreeSet;

use super::canvas::{star, Canvas, Color, BLACK, WHITE};
use super::{Layout, PixelBox, GRID_COLOR};
use crate::generators::{ClusterMetadata, HistogramMetadata, MultiSeriesMetadata, SeriesMetadata};
use crate::sample::{MarkerKind, PlotColor, PlotStyle, SampleMetadata};
use crate::stats::{std_dev, SeriesStats};

const PALETTE: [Color; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
];
const NOISE: Color = [70, 70, 70];
const AXIS_TEXT: Color = [40, 40, 40];

pub(super) fn draw(c: &mut Canvas, meta: &SampleMetadata, style: &PlotStyle, mut layout: Layout, s: f64) -> Layout {
    if style.grid {
        grid(c, &layout);
    }
    match meta {
        SampleMetadata::Series(m) => series(c, &layout, m, style, s),
        SampleMetadata::Clusters(m) => layout.legend = clusters(c, &layout, m, style, s),
        SampleMetadata::Histogram(m) => histogram(c, &layout, m, style),
        SampleMetadata::Boxplot(m) => boxplot(c, &layout, m, style, s),
        SampleMetadata::Violin(m) => violin(c, &layout, m, style, s),
    }
    frame(c, &layout, s);
    layout
}

fn color_of(style: &PlotStyle) -> Color {
    style.color.unwrap_or(PlotColor::Blue).rgb()
}

fn lighten(col: Color, alpha: f64) -> Color {
    let f = |v: u8| (alpha * v as f64 + (1.0 - alpha) * 255.0).round() as u8;
    [f(col[0]), f(col[1]), f(col[2])]
}

fn grid(c: &mut Canvas, l: &Layout) {
    let a = l.plot_area;
    for &t in &l.axes.x.ticks {
        let x = l.px_x(t).round() as i64;
        if x > a.left && x < a.right {
            c.vline(x, a.top, a.bottom, GRID_COLOR);
        }
    }
    for &t in &l.axes.y.ticks {
        let y = l.px_y(t).round() as i64;
        if y > a.top && y < a.bottom {
            c.hline(a.left, a.right, y, GRID_COLOR);
        }
    }
}

/// Clears the margins, then draws the frame, ticks and tick labels.
fn frame(c: &mut Canvas, l: &Layout, s: f64) {
    let a = l.plot_area;
    let (w, h) = (c.width(), c.height());
    c.fill_rect(0, 0, w - 1, a.top - 1, WHITE);
    c.fill_rect(0, a.bottom + 1, w - 1, h - 1, WHITE);
    c.fill_rect(0, 0, a.left - 1, h - 1, WHITE);
    c.fill_rect(a.right + 1, 0, w - 1, h - 1, WHITE);
    c.stroke_rect(a.left, a.top, a.right, a.bottom, BLACK);

    let scale = (2.0 * s).round().max(1.0) as i64;
    let tick = (6.0 * s).round() as i64;
    let th = Canvas::text_height(scale);
    for &t in &l.axes.x.ticks {
        let x = l.px_x(t).round() as i64;
        c.vline(x, a.bottom, a.bottom + tick, BLACK);
        let label = l.axes.x.format_tick(t);
        let tw = Canvas::text_width(&label, scale);
        c.text(x - tw / 2, a.bottom + tick + 4, &label, scale, AXIS_TEXT);
    }
    for &t in &l.axes.y.ticks {
        let y = l.px_y(t).round() as i64;
        c.hline(a.left - tick, a.left, y, BLACK);
        let label = l.axes.y.format_tick(t);
        let tw = Canvas::text_width(&label, scale);
        c.text(a.left - tick - 4 - tw, y - th / 2, &label, scale, AXIS_TEXT);
    }
}

fn series(c: &mut Canvas, l: &Layout, m: &SeriesMetadata, style: &PlotStyle, s: f64) {
    let pts: Vec<(i64, i64)> = m
        .x_values
        .iter()
        .zip(&m.y_values)
        .map(|(&x, &y)| (l.px_x(x).round() as i64, l.px_y(y).round() as i64))
        .collect();
    c.polyline(&pts, (2.0 * s).round().max(1.0) as i64, color_of(style));
}

fn marker(c: &mut Canvas, kind: MarkerKind, x: f64, y: f64, r: f64, col: Color) {
    match kind {
        MarkerKind::Circle => c.fill_circle(x, y, r, col),
        MarkerKind::Square => c.fill_polygon(&[(x - r, y - r), (x + r, y - r), (x + r, y + r), (x - r, y + r)], col, 1.0),
        MarkerKind::Triangle => c.fill_polygon(&[(x, y - r * 1.2), (x + r * 1.1, y + r * 0.8), (x - r * 1.1, y + r * 0.8)], col, 1.0),
        MarkerKind::Diamond => c.fill_polygon(&[(x, y - r * 1.3), (x + r, y), (x, y + r * 1.3), (x - r, y)], col, 1.0),
        MarkerKind::Cross => {
            let (xi, yi, ri) = (x.round() as i64, y.round() as i64, r.round() as i64);
            c.line(xi - ri, yi - ri, xi + ri, yi + ri, 2, col);
            c.line(xi - ri, yi + ri, xi + ri, yi - ri, 2, col);
        }
        MarkerKind::Plus => {
            let (xi, yi, ri) = (x.round() as i64, y.round() as i64, r.round() as i64 + 1);
            c.line(xi - ri, yi, xi + ri, yi, 2, col);
            c.line(xi, yi - ri, xi, yi + ri, 2, col);
        }
        MarkerKind::Star => c.fill_polygon(&star(x, y, r * 1.5, r * 0.6, 5), col, 1.0),
    }
}

/// Convex hull (monotone chain), counter-clockwise, no collinear points.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

fn group_color(label: i64) -> Color {
    if label < 0 {
        NOISE
    } else {
        PALETTE[label as usize % PALETTE.len()]
    }
}

fn clusters(c: &mut Canvas, l: &Layout, m: &ClusterMetadata, style: &PlotStyle, s: f64) -> Option<PixelBox> {
    let groups: BTreeSet<i64> = m.displayed_labels.iter().copied().collect();
    let px: Vec<(f64, f64)> = m.points.iter().map(|p| (l.px_x(p.x), l.px_y(p.y))).collect();
    let unique = style.unique_markers.unwrap_or(false);
    let base = style.marker.unwrap_or(MarkerKind::Circle);
    let kind_of = |label: i64| if unique && label >= 0 { MarkerKind::ALL[label as usize % MarkerKind::ALL.len()] } else { base };

    if style.fill.unwrap_or(false) {
        for &g in groups.iter().filter(|&&g| g >= 0) {
            let member: Vec<(f64, f64)> = px.iter().zip(&m.displayed_labels).filter(|(_, &lab)| lab == g).map(|(p, _)| *p).collect();
            let hull = convex_hull(&member);
            c.fill_polygon(&hull, group_color(g), 0.3);
        }
    }
    let r = 3.5 * s;
    for (p, &lab) in px.iter().zip(&m.displayed_labels) {
        marker(c, kind_of(lab), p.0, p.1, r, group_color(lab));
    }
    if !style.legend.unwrap_or(false) {
        return None;
    }
    let scale = (2.0 * s).round().max(1.0) as i64;
    let labels: Vec<(i64, String)> = groups
        .iter()
        .map(|&g| (g, if g < 0 { "noise".to_string() } else { format!("cluster {}", g + 1) }))
        .collect();
    let row = Canvas::text_height(scale) + (8.0 * s) as i64;
    let text_w = labels.iter().map(|(_, t)| Canvas::text_width(t, scale)).max().unwrap_or(0);
    let pad = (8.0 * s) as i64;
    let sw = (16.0 * s) as i64;
    let a = l.plot_area;
    let bx = PixelBox {
        right: a.right - pad,
        left: a.right - pad - (pad * 3 + sw + text_w),
        top: a.top + pad,
        bottom: a.top + pad + pad * 2 + row * labels.len() as i64 - (8.0 * s) as i64,
    };
    c.fill_rect(bx.left, bx.top, bx.right, bx.bottom, WHITE);
    c.stroke_rect(bx.left, bx.top, bx.right, bx.bottom, [120, 120, 120]);
    for (i, (g, text)) in labels.iter().enumerate() {
        let y = bx.top + pad + i as i64 * row;
        let cy = y as f64 + Canvas::text_height(scale) as f64 / 2.0;
        marker(c, kind_of(*g), (bx.left + pad + sw / 2) as f64, cy, r, group_color(*g));
        c.text(bx.left + pad * 2 + sw, y, text, scale, BLACK);
    }
    Some(bx)
}

fn histogram(c: &mut Canvas, l: &Layout, h: &HistogramMetadata, style: &PlotStyle) {
    let col = color_of(style);
    let edge = if style.color == Some(PlotColor::Black) { [110, 110, 110] } else { BLACK };
    let y0 = l.px_y(0.0).round() as i64;
    for i in 0..h.n_bins() {
        let count = h.bin_counts[i];
        if count == 0 {
            continue;
        }
        let x0 = l.px_x(h.bin_edges[i]).round() as i64;
        let x1 = l.px_x(h.bin_edges[i + 1]).round() as i64;
        let y1 = l.px_y(count as f64).round() as i64;
        c.fill_rect(x0, y1, x1, y0, col);
        c.stroke_rect(x0, y1, x1, y0, edge);
    }
}

fn slot_px(l: &Layout, half_width: f64) -> f64 {
    (l.px_x(1.0 + half_width) - l.px_x(1.0)).abs()
}

fn boxplot(c: &mut Canvas, l: &Layout, m: &MultiSeriesMetadata, style: &PlotStyle, s: f64) {
    let col = color_of(style);
    let fill = lighten(col, 0.5);
    let hw = slot_px(l, 0.25);
    let lw = (2.0 * s).round().max(1.0) as i64;
    for (ser, st) in m.series.iter().zip(&m.per_series_stats) {
        let x = l.px_x(ser.position as f64);
        let (xl, xr) = ((x - hw).round() as i64, (x + hw).round() as i64);
        let xi = x.round() as i64;
        let py = |v: f64| l.px_y(v).round() as i64;
        // whiskers reach the most extreme values within 1.5 IQR of the box
        let reach = 1.5 * st.iqr();
        let lo_w = ser.values.iter().copied().filter(|&v| v >= st.q25 - reach).fold(f64::INFINITY, f64::min);
        let hi_w = ser.values.iter().copied().filter(|&v| v <= st.q75 + reach).fold(f64::NEG_INFINITY, f64::max);
        c.line(xi, py(st.q25), xi, py(lo_w), 1, BLACK);
        c.line(xi, py(st.q75), xi, py(hi_w), 1, BLACK);
        let cap = (hw / 2.0).round() as i64;
        c.hline(xi - cap, xi + cap, py(lo_w), BLACK);
        c.hline(xi - cap, xi + cap, py(hi_w), BLACK);
        c.fill_rect(xl, py(st.q75), xr, py(st.q25), fill);
        c.stroke_rect(xl, py(st.q75), xr, py(st.q25), BLACK);
        for dy in 0..lw {
            c.hline(xl, xr, py(st.median) + dy - lw / 2, BLACK);
        }
        for &v in ser.values.iter().filter(|&&v| v < lo_w || v > hi_w) {
            c.stroke_circle(x, l.px_y(v), 3.0 * s, BLACK);
        }
    }
}

/// Gaussian kernel density estimate with Silverman's rule-of-thumb bandwidth.
pub(crate) fn kde(values: &[f64], at: &[f64]) -> Vec<f64> {
    let st = SeriesStats::of(values);
    let n = values.len() as f64;
    let spread = std_dev(values).min(st.iqr() / 1.34);
    let spread = if spread > 0.0 { spread } else { std_dev(values) };
    let mut h = 0.9 * spread * n.powf(-0.2);
    if !(h > 0.0) {
        h = (st.range() * 0.05).max(1e-3);
    }
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    at.iter()
        .map(|&y| values.iter().map(|&v| (-0.5 * ((y - v) / h).powi(2)).exp()).sum::<f64>() * norm)
        .collect()
}

fn violin(c: &mut Canvas, l: &Layout, m: &MultiSeriesMetadata, style: &PlotStyle, s: f64) {
    let col = color_of(style);
    let fill = lighten(col, 0.55);
    let max_hw = slot_px(l, 0.4);
    for (ser, st) in m.series.iter().zip(&m.per_series_stats) {
        let x = l.px_x(ser.position as f64);
        let steps = 120;
        let ys: Vec<f64> = (0..=steps)
            .map(|i| st.min + (st.max - st.min) * i as f64 / steps as f64)
            .collect();
        let d = kde(&ser.values, &ys);
        let dmax = d.iter().cloned().fold(0.0, f64::max);
        let half: Vec<f64> = d.iter().map(|v| if dmax > 0.0 { v / dmax * max_hw } else { 1.0 }).collect();
        let mut poly: Vec<(f64, f64)> = ys.iter().zip(&half).map(|(&y, &w)| (x + w.max(0.5), l.px_y(y))).collect();
        poly.extend(ys.iter().zip(&half).rev().map(|(&y, &w)| (x - w.max(0.5), l.px_y(y))));
        c.fill_polygon(&poly, fill, 1.0);
        let outline: Vec<(i64, i64)> = poly.iter().map(|p| (p.0.round() as i64, p.1.round() as i64)).collect();
        c.polyline(&outline, 1, col);
        c.line(outline[outline.len() - 1].0, outline[outline.len() - 1].1, outline[0].0, outline[0].1, 1, col);

        let xi = x.round() as i64;
        let py = |v: f64| l.px_y(v).round() as i64;
        let cap = (max_hw / 4.0).round() as i64;
        c.vline(xi, py(st.max), py(st.min), BLACK);
        c.hline(xi - cap, xi + cap, py(st.min), BLACK);
        c.hline(xi - cap, xi + cap, py(st.max), BLACK);
        let bar = (2.0 * s).round().max(1.0) as i64;
        c.fill_rect(xi - bar, py(st.q75), xi + bar, py(st.q25), BLACK);
        c.fill_circle(x, l.px_y(st.median), 3.0 * s, WHITE);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0), (1.0, 1.0), (1.0, 0.0)];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(!h.contains(&(1.0, 1.0)));
    }

    #[test]
    fn kde_integrates_to_one() {
        let v: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let grid: Vec<f64> = (0..=4000).map(|i| -10.0 + i as f64 * 0.005).collect();
        let area: f64 = kde(&v, &grid).iter().sum::<f64>() * 0.005;
        assert!((area - 1.0).abs() < 1e-3, "{area}");
    }

}
