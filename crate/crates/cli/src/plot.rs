//! Static log-log SVG of error-versus-t curves with ±1 std bands.

use std::fmt::Write as _;

use crate::output::AggregateRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Points of one curve, in CSV order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

/// Groups rows into series by method label, keeping first-appearance order.
pub fn group_series(rows: &[AggregateRow]) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let label = r.series_label();
        let point = (r.t as f64, r.mean_error, r.std_error);
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                label,
                points: vec![point],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders the series. Values that are not positive cannot be shown on a log
/// axis and are clamped to the smallest positive value in the data.
pub fn render_svg(series: &[Series], title: &str) -> String {
    let positive = series
        .iter()
        .flat_map(|s| s.points.iter())
        .flat_map(|&(_, m, sd)| [m, m - sd])
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if positive.is_finite() {
        positive
    } else {
        1e-12
    };
    let clamp = |v: f64| v.max(floor);

    let (mut tmin, mut tmax, mut ymin, mut ymax) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    for &(t, m, sd) in series.iter().flat_map(|s| s.points.iter()) {
        tmin = tmin.min(t);
        tmax = tmax.max(t);
        ymin = ymin.min(clamp(m - sd)).min(clamp(m));
        ymax = ymax.max(clamp(m + sd));
    }
    let (lx0, mut lx1) = (tmin.log10().floor(), tmax.log10().ceil());
    let (ly0, mut ly1) = (ymin.log10().floor(), ymax.log10().ceil());
    if lx1 <= lx0 {
        lx1 = lx0 + 1.0;
    }
    if ly1 <= ly0 {
        ly1 = ly0 + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |t: f64| LEFT + (t.log10() - lx0) / (lx1 - lx0) * pw;
    let py = |y: f64| TOP + ph - (clamp(y).log10() - ly0) / (ly1 - ly0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    // Decade grid and tick labels.
    for d in (lx0 as i32)..=(lx1 as i32) {
        let x = px(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            TOP + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#,
            TOP + ph + 18.0
        );
    }
    for d in (ly0 as i32)..=(ly1 as i32) {
        let y = TOP + ph - (d as f64 - ly0) / (ly1 - ly0) * ph;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">L2(p^alpha) error</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band: Vec<String> = ser
            .points
            .iter()
            .map(|&(t, m, sd)| format!("{:.2},{:.2}", px(t), py(m + sd)))
            .collect();
        band.extend(
            ser.points
                .iter()
                .rev()
                .map(|&(t, m, sd)| format!("{:.2},{:.2}", px(t), py(m - sd))),
        );
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = ser
            .points
            .iter()
            .map(|&(t, m, _)| format!("{:.2},{:.2}", px(t), py(m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for &(t, m, _) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(t),
                py(m)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, alpha: f64, t: u64, mean: f64, std: f64) -> AggregateRow {
        AggregateRow {
            scenario: "exp1".into(),
            method: method.into(),
            alpha,
            beta: (method == "olre").then_some(0.5),
            t,
            mean_error: mean,
            std_error: std,
            n_trials: 2,
        }
    }

    #[test]
    fn one_method_one_curve() {
        let rows = [
            row("olre", 0.1, 10, 1.0, 0.1),
            row("olre", 0.1, 100, 0.1, 0.01),
        ];
        let series = group_series(&rows);
        assert_eq!(series.len(), 1);
        let svg = render_svg(&series, "exp1");
        assert_eq!(svg.matches("class=\"curve\"").count(), 1);
        assert_eq!(svg.matches("class=\"band\"").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn legend_follows_csv_order() {
        let rows = [
            row("rulsif", 0.1, 10, 1.0, 0.5),
            row("olre", 0.1, 10, 2.0, 3.0),
            row("rulsif", 0.1, 100, 0.5, 0.1),
            row("olre", 0.1, 100, 0.2, 0.0),
        ];
        let series = group_series(&rows);
        let labels: Vec<_> = series.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["rulsif(alpha=0.1)", "olre(alpha=0.1, beta=0.5)"]);
        let svg = render_svg(&series, "t");
        let first = svg.find("rulsif(alpha=0.1)").unwrap();
        let second = svg.find("olre(alpha=0.1, beta=0.5)").unwrap();
        assert!(first < second);
        // std larger than mean must not produce NaN coordinates
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
