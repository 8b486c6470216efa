//! Static SVG renderings: cluster heat maps and ED histograms.

use std::fmt::Write;

use crate::cluster::EdHistogram;
use crate::metrics::fmt_sig6;

const CELL: f64 = 24.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// White-to-red ramp over `t` in [0, 1].
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let g = (255.0 * (1.0 - t)).round() as u8;
    let r = 255u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heat map of a square matrix, rows drawn top to bottom.
///
/// Colors scale from 0 to the largest finite value; non-finite cells are
/// drawn grey.
pub fn heatmap_svg(matrix: &[Vec<f64>], title: &str) -> String {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let max = matrix
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max);
    let width = MARGIN * 2.0 + CELL * cols as f64;
    let height = MARGIN * 2.0 + CELL * rows as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN / 2.0,
        escape(title)
    );
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                ramp(if max > 0.0 { v / max } else { 0.0 })
            } else {
                "#bbbbbb".to_string()
            };
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ffffff" stroke-width="0.5"><title>({i},{j}) {}</title></rect>"##,
                MARGIN + CELL * j as f64,
                MARGIN + CELL * i as f64,
                fmt_sig6(v)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">max {}</text>"#,
        height - MARGIN / 3.0,
        fmt_sig6(max)
    );
    s.push_str("</svg>\n");
    s
}

/// Bar chart of histogram bins.
pub fn histogram_svg(h: &EdHistogram, title: &str) -> String {
    let plot_w = 640.0;
    let plot_h = 320.0;
    let width = plot_w + MARGIN * 2.0;
    let height = plot_h + MARGIN * 2.0;
    let max_count = h.bins.iter().map(|b| b.1).max().unwrap_or(0).max(1) as f64;
    let bar_w = plot_w / h.bins.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN / 2.0,
        escape(title)
    );
    let base = MARGIN + plot_h;
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="#000000"/>"##,
        MARGIN + plot_w
    );
    for (k, &(lo, count)) in h.bins.iter().enumerate() {
        let bh = plot_h * count as f64 / max_count;
        let _ = writeln!(
            s,
            r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#3b6ea5"><title>[{lo}, {}) {count}</title></rect>"##,
            MARGIN + bar_w * k as f64,
            base - bh,
            bar_w,
            bh,
            lo + h.bin_width
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">ED 0 .. {} (bin {}), mean {}, n = {}</text>"#,
        base + MARGIN / 2.0,
        h.max_ed,
        h.bin_width,
        fmt_sig6(h.mean_ed),
        h.total_count
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let m = vec![vec![0.0, 1.0], vec![0.5, f64::INFINITY]];
        let svg = heatmap_svg(&m, "NED <test>");
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.contains("NED &lt;test&gt;"));
        assert!(svg.contains("#bbbbbb"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn histogram_bars() {
        let h = EdHistogram {
            bin_width: 2,
            bins: vec![(0, 3), (2, 1)],
            total_count: 4,
            min_ed: 0,
            max_ed: 3,
            mean_ed: 1.0,
        };
        let svg = histogram_svg(&h, "ED");
        assert_eq!(svg.matches("<rect").count(), 2);
    }
}
