//! Minimal self-contained SVG output.

use std::fmt::Write;
use std::path::Path;

use crate::config::Method;
use crate::report::{write_file, EvaluationReport, Split};
use crate::rotation::RotationSeries;
use crate::{HarnessError, Result};

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, title: &str, frame: &Frame, xlabel: &str, ylabel: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>
"#,
        W / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (frame.px(frame.x.0), frame.px(frame.x.1), frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let fx = frame.x.0 + (frame.x.1 - frame.x.0) * i as f64 / 4.0;
        let fy = frame.y.0 + (frame.y.1 - frame.y.0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            frame.px(fx),
            y0 + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            frame.py(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="xlabel" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text class="ylabel" x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Uncertainty against rotation angle, one circle per point.
pub fn rotation_svg(series: &[RotationSeries]) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(HarnessError::Precondition("cannot plot an empty series".into()));
    }
    let y_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.uncertainty))
        .fold(0.0, f64::max);
    let frame = Frame {
        x: (0.0, 360.0),
        y: (0.0, if y_max > 0.0 { y_max * 1.1 } else { 1.0 }),
    };
    let mut out = String::new();
    open(&mut out, "Uncertainty under rotation", &frame, "rotation angle (degrees)", "uncertainty u");
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", frame.px(p.angle), frame.py(p.uncertainty)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="{color}" fill="none"/>"#,
            path.join(" ")
        );
        for p in &s.points {
            let _ = writeln!(
                out,
                r#"<circle class="point" cx="{:.1}" cy="{:.1}" r="3" fill="{color}"><title>{}: {} deg, class {}, u = {}</title></circle>"#,
                frame.px(p.angle),
                frame.py(p.uncertainty),
                escape(&s.image_id),
                p.angle,
                p.predicted_class,
                p.uncertainty
            );
        }
        legend(&mut out, i, color, &s.image_id);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn legend(out: &mut String, i: usize, color: &str, label: &str) {
    let y = TOP + 8.0 + 16.0 * i as f64;
    let x = W - RIGHT - 150.0;
    let _ = writeln!(
        out,
        r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text class="legend" x="{:.1}" y="{:.1}">{}</text>"#,
        y - 9.0,
        x + 14.0,
        y,
        escape(label)
    );
}

/// Per-split histograms of `log10(u)` for one method, one trace per split.
pub fn histogram_svg(report: &EvaluationReport, method: Method) -> Result<String> {
    let splits: Vec<_> = Split::ALL.iter().filter_map(|&s| report.split(method, s)).collect();
    if splits.is_empty() {
        return Err(HarnessError::Precondition(format!("report has no `{}` results", method.name())));
    }
    let first = &splits[0].histogram;
    let bins = first.counts.len();
    let fractions: Vec<Vec<f64>> = splits
        .iter()
        .map(|s| {
            let total = s.histogram.total().max(1) as f64;
            s.histogram.counts.iter().map(|&c| c as f64 / total).collect()
        })
        .collect();
    let y_max = fractions.iter().flatten().copied().fold(0.0, f64::max);
    let frame = Frame {
        x: (first.log10_min, first.log10_min + first.bin_width * bins as f64),
        y: (0.0, if y_max > 0.0 { y_max * 1.1 } else { 1.0 }),
    };
    let mut out = String::new();
    let title = format!("{} uncertainty by split", method.name());
    open(&mut out, &title, &frame, "log10 uncertainty", "fraction of samples");
    for (i, (s, f)) in splits.iter().zip(&fractions).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for (b, &v) in f.iter().enumerate() {
            let x0 = frame.px(first.log10_min + first.bin_width * b as f64);
            let x1 = frame.px(first.log10_min + first.bin_width * (b + 1) as f64);
            let y = frame.py(v);
            let _ = write!(d, "{x0:.1},{y:.1} {x1:.1},{y:.1} ");
        }
        let _ = writeln!(
            out,
            r#"<polyline class="trace" data-split="{}" points="{}" stroke="{color}" fill="none"/>"#,
            s.split.name(),
            d.trim_end()
        );
        legend(&mut out, i, color, &format!("{} (median {:.3e})", s.split.name(), s.median_uncertainty));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg(path: impl AsRef<Path>, svg: &str) -> Result<()> {
    write_file(path.as_ref(), svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::RotationPoint;

    fn series(n: usize) -> RotationSeries {
        RotationSeries {
            image_id: "digit <0>".into(),
            points: (0..n)
                .map(|i| RotationPoint {
                    angle: 30.0 * i as f64,
                    predicted_class: 0,
                    uncertainty: 0.1 * i as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn rotation_plot_has_one_circle_per_point() {
        let svg = rotation_svg(&[series(13)]).unwrap();
        assert_eq!(svg.matches(r#"<circle class="point""#).count(), 13);
        assert!(svg.contains("rotation angle (degrees)"));
        assert!(svg.contains("uncertainty u"));
        assert!(svg.contains("digit &lt;0&gt;"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_series_is_rejected() {
        assert!(rotation_svg(&[]).is_err());
        assert!(rotation_svg(&[series(0)]).is_err());
    }

    #[test]
    fn histogram_has_four_labeled_traces() {
        let report = crate::report::tests::sample_report();
        let svg = histogram_svg(&report, Method::Dbue).unwrap();
        assert_eq!(svg.matches(r#"class="trace""#).count(), 4);
        for split in ["train", "test", "noisy", "ood"] {
            assert!(svg.contains(&format!(r#"data-split="{split}""#)));
        }
        assert_eq!(svg.matches(r#"class="legend" "#).count(), 4);
        assert!(histogram_svg(&report, Method::Iad).is_err());
    }
}
