//! Standalone SVG rendering of ROC curves.

use std::fmt::Write;

use iotids_core::RocCurve;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PLOT: f64 = SIZE - 2.0 * MARGIN;

fn px(fpr: f64) -> f64 {
    MARGIN + fpr * PLOT
}

fn py(tpr: f64) -> f64 {
    SIZE - MARGIN - tpr * PLOT
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// The curve as a polyline on the unit square with the chance diagonal and
/// an `AUC = x.xx` annotation.
pub fn render_roc_svg(curve: &RocCurve, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="15">{}</text>"#,
        SIZE / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = f64::from(i) / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#,
            px(v),
            SIZE - MARGIN + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            MARGIN - 8.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
        SIZE / 2.0,
        SIZE - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">True positive rate</text>"#,
        SIZE / 2.0
    );
    let _ = writeln!(
        s,
        r##"<line class="diagonal" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="6 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let points: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline class="roc" points="{}" fill="none" stroke="#c0392b" stroke-width="2"/>"##,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text class="auc" x="{:.1}" y="{:.1}" text-anchor="end" font-size="14">AUC = {:.2}</text>"#,
        px(1.0) - 10.0,
        py(0.0) - 12.0,
        curve.auc
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use iotids_core::eval::roc_curve;

    #[test]
    fn perfect_curve_reaches_top_left() {
        let roc = roc_curve(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap();
        let svg = render_roc_svg(&roc, "Perfect");
        assert!(svg.contains("AUC = 1.00"));
        assert!(svg.contains(&format!("{:.2},{:.2}", px(0.0), py(1.0))));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn annotations() {
        let diagonal = roc_curve(&[0, 1], &[0.5, 0.5]).unwrap();
        assert!(render_roc_svg(&diagonal, "d").contains("AUC = 0.50"));
        let partial = roc_curve(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).unwrap();
        assert_eq!(partial.auc, 0.75);
        assert!(render_roc_svg(&partial, "p").contains("AUC = 0.75"));
    }

    #[test]
    fn title_is_escaped() {
        let roc = roc_curve(&[0, 1], &[0.2, 0.7]).unwrap();
        let svg = render_roc_svg(&roc, "a<b & \"c\"");
        assert!(svg.contains("a&lt;b &amp; &quot;c&quot;"));
        assert!(!svg.contains("a<b"));
    }
}
