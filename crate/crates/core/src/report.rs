//! Static SVG scatter of preference features.

use std::fmt::Write as _;

use crate::stats::FeatureMatrix;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Scatter of count variance (x) against top share (y), one circle per
/// student, coloured by cluster.
pub fn scatter_svg(features: &FeatureMatrix, clusters: &[usize], title: &str) -> String {
    assert_eq!(features.len(), clusters.len(), "one cluster per student");
    let x_max = features.rows.iter().map(|r| r[0]).fold(0.0f64, f64::max);
    let x_max = if x_max > 0.0 { x_max * 1.05 } else { 1.0 };
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + x / x_max * pw;
    let sy = |y: f64| HEIGHT - MARGIN - y * ph;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g font-family="sans-serif" font-size="11">"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (tx, ty) = (sx(f * x_max), sy(f));
        let _ = writeln!(out, r#"<text x="{tx:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#, y0 + 16.0, f * x_max);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{f:.2}</text>"#, x0 - 6.0, ty + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">variance</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">top_share</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g fill-opacity="0.7">"#);
    for ((row, &c), id) in features.rows.iter().zip(clusters).zip(&features.students) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" data-student="{}" data-cluster="{c}"/>"#,
            sx(row[0]),
            sy(row[1]),
            PALETTE[c % PALETTE.len()],
            escape(id)
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::PreferenceDimension;

    fn fm(rows: Vec<[f64; 2]>) -> FeatureMatrix {
        FeatureMatrix {
            dimension: PreferenceDimension::School,
            students: (0..rows.len()).map(|i| format!("student:{i}")).collect(),
            rows,
        }
    }

    #[test]
    fn one_circle_per_student() {
        let f = fm(vec![[0.0, 1.0], [2.5, 0.4], [1.0, 0.7]]);
        let svg = scatter_svg(&f, &[0, 1, 2], "a < b & c");
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let circles: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("circle")).collect();
        assert_eq!(circles.len(), 3);
        assert_eq!(circles[1].attribute("data-cluster"), Some("1"));
        let top = circles[0].attribute("cy").unwrap().parse::<f64>().unwrap();
        assert!((top - MARGIN).abs() < 1e-9);
    }

    #[test]
    fn all_zero_variance_is_finite() {
        let svg = scatter_svg(&fm(vec![[0.0, 0.5], [0.0, 0.5]]), &[0, 0], "t");
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
