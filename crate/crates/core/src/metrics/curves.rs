//! Per-recall curve export: CSV table and a minimal SVG line plot.

use std::fmt::Write as _;

use super::SweepEntry;

pub const CURVE_HEADER: &str = "recall,threshold,fp,fn,ids,mota,smota,motp";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMetric {
    Mota,
    Smota,
    Motp,
}

impl CurveMetric {
    fn value(self, e: &SweepEntry) -> f64 {
        match self {
            CurveMetric::Mota => e.mota_r,
            CurveMetric::Smota => e.smota_r,
            CurveMetric::Motp => e.motp_r,
        }
    }

    fn name(self) -> &'static str {
        match self {
            CurveMetric::Mota => "MOTA",
            CurveMetric::Smota => "sMOTA",
            CurveMetric::Motp => "MOTP",
        }
    }
}

/// One row per sweep entry, ascending recall. Unreachable rows keep their
/// zeroed integrands.
pub fn curves_csv(entries: &[SweepEntry]) -> String {
    let mut sorted: Vec<&SweepEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.target_recall.total_cmp(&b.target_recall));
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for e in sorted {
        let threshold = e
            .threshold
            .map_or_else(|| "nan".to_string(), |t| format!("{t:.6}"));
        let _ = writeln!(
            out,
            "{:.6},{},{},{},{},{:.6},{:.6},{:.6}",
            e.target_recall,
            threshold,
            e.score.fp,
            e.score.fn_,
            e.score.ids,
            e.mota_r,
            e.smota_r,
            e.motp_r
        );
    }
    out
}

/// Metric vs recall on a unit square, y clipped to `[-1, 1]`.
pub fn curves_svg(entries: &[SweepEntry], metric: CurveMetric) -> String {
    const W: f64 = 400.0;
    const H: f64 = 300.0;
    const PAD: f64 = 40.0;
    let x = |r: f64| PAD + r.clamp(0.0, 1.0) * (W - 2.0 * PAD);
    // y range [-1, 1] so negative MOTA stays visible
    let y = |v: f64| PAD + (1.0 - v.clamp(-1.0, 1.0)) / 2.0 * (H - 2.0 * PAD);

    let mut sorted: Vec<&SweepEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.target_recall.total_cmp(&b.target_recall));
    let points: Vec<String> = sorted
        .iter()
        .map(|e| format!("{:.2},{:.2}", x(e.target_recall), y(metric.value(e))))
        .collect();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        x(0.0),
        y(-1.0),
        x(0.0),
        y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">recall</text>"#,
        W / 2.0,
        H - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{:.2}" font-size="12" transform="rotate(-90 12 {:.2})" text-anchor="middle">{}</text>"#,
        H / 2.0,
        H / 2.0,
        metric.name()
    );
    if !points.is_empty() {
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
