//! Minimal static SVG drawing for sweep artifacts. The CSV is the
//! authoritative output; these are quick-look plots built from string
//! templates, with no drawing dependencies.

use crate::sweep::{SweepRecord, TemporalSummary};
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;

struct Frame {
    svg: String,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Frame {
        let mut svg = String::new();
        let _ = write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{tx}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>
<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>
<text x="{tx}" y="{lb}" font-family="sans-serif" font-size="12" text-anchor="middle">{x_label}</text>
<text x="16" y="{my}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {my})">{y_label}</text>
"#,
            m = MARGIN,
            r = W - MARGIN,
            t = MARGIN,
            b = H - MARGIN,
            tx = W / 2.0,
            lb = H - 16.0,
            my = H / 2.0,
        );
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).abs().max(1e-9);
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x_min, x_max) = pad(x.0, x.1);
        let (y_min, y_max) = pad(y.0, y.1);
        Frame { svg, x_min, x_max, y_min, y_max }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (H - 2.0 * MARGIN)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let mut d = String::new();
        for &(x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        let _ = write!(
            self.svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            d.trim_end()
        );
    }

    fn bar(&mut self, x: f64, width: f64, y: f64, color: &str) {
        let x0 = self.px(x - width / 2.0);
        let x1 = self.px(x + width / 2.0);
        let y0 = self.py(y.max(0.0));
        let y1 = self.py(0.0f64.min(y).max(self.y_min));
        let _ = write!(
            self.svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\"/>\n",
            x0,
            y0,
            (x1 - x0).max(0.5),
            (y1 - y0).abs().max(0.5),
        );
    }

    fn tick_labels(&mut self, xs: &[f64], ys: &[f64]) {
        for &x in xs {
            let _ = write!(
                self.svg,
                "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
                self.px(x),
                H - MARGIN + 16.0,
                trim_num(x)
            );
        }
        for &y in ys {
            let _ = write!(
                self.svg,
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
                MARGIN - 6.0,
                self.py(y) + 4.0,
                trim_num(y)
            );
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn trim_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Percent gains in descending order against candidate rank.
pub fn sorted_percent_curve(records: &[SweepRecord], title: &str) -> String {
    let mut gains: Vec<f64> = records.iter().filter_map(|r| r.percent).collect();
    gains.sort_by(|a, b| b.partial_cmp(a).expect("finite percent"));
    if gains.is_empty() {
        gains.push(0.0);
    }
    let y_lo = gains.last().copied().unwrap().min(0.0);
    let y_hi = gains[0].max(0.0);
    let mut f = Frame::new(title, "candidate rank", "index increase (%)", (0.0, gains.len() as f64), (y_lo, y_hi));
    let pts: Vec<(f64, f64)> = gains.iter().enumerate().map(|(i, &g)| (i as f64 + 1.0, g)).collect();
    f.polyline(&pts, "#1f77b4");
    f.tick_labels(&[1.0, gains.len() as f64], &[y_lo, 0.0, y_hi]);
    f.finish()
}

/// Best percent gain per bus as bars.
pub fn bus_summary_bars(summaries: &[TemporalSummary], title: &str) -> String {
    let y_hi = summaries.iter().map(|s| s.max_percent).fold(1.0, f64::max);
    let y_lo = summaries.iter().map(|s| s.min_percent).fold(0.0, f64::min);
    let n = summaries.len().max(1) as f64;
    let mut f = Frame::new(title, "bus", "best index increase (%)", (0.0, n + 1.0), (y_lo, y_hi));
    for (i, s) in summaries.iter().enumerate() {
        f.bar(i as f64 + 1.0, 0.6, s.max_percent, "#ff7f0e");
        let x = f.px(i as f64 + 1.0);
        let _ = write!(
            f.svg,
            "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            x,
            H - MARGIN + 16.0,
            s.bus
        );
    }
    f.tick_labels(&[], &[y_lo, 0.0, y_hi]);
    f.finish()
}

/// Index-vs-epsilon curve for budget sweeps.
pub fn epsilon_curve(records: &[SweepRecord], title: &str) -> String {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| match (r.epsilon, r.percent) {
            (Some(e), Some(p)) => Some((e, p)),
            _ => None,
        })
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite epsilon"));
    if pts.is_empty() {
        pts.push((0.0, 0.0));
    }
    let (x_lo, x_hi) = (pts[0].0, pts.last().unwrap().0);
    let y_lo = pts.iter().map(|p| p.1).fold(0.0, f64::min);
    let y_hi = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut f = Frame::new(title, "epsilon", "index increase vs unconstrained (%)", (x_lo, x_hi), (y_lo, y_hi));
    f.polyline(&pts, "#2ca02c");
    f.tick_labels(&[x_lo, x_hi], &[y_lo, 0.0, y_hi]);
    f.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, percent: Option<f64>, eps: Option<f64>) -> SweepRecord {
        SweepRecord {
            id,
            kind: "spatial".into(),
            bus_a: Some(1),
            t_a: None,
            bus_b: Some(2),
            t_b: None,
            epsilon: eps,
            status: "ok".into(),
            base_index: 1.0,
            index: percent.map(|p| 1.0 + p / 100.0),
            percent,
            note: String::new(),
        }
    }

    #[test]
    fn curves_are_valid_svg_shells() {
        let recs = vec![rec(0, Some(40.0), None), rec(1, Some(-10.0), None), rec(2, None, None)];
        let svg = sorted_percent_curve(&recs, "sorted");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));

        let eps = vec![rec(0, Some(-100.0), Some(0.0)), rec(1, Some(-20.0), Some(0.1))];
        let svg = epsilon_curve(&eps, "eps");
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn bars_name_the_buses() {
        let s = TemporalSummary {
            bus: 7,
            candidates: 3,
            min_percent: 0.0,
            median_percent: 5.0,
            max_percent: 30.0,
        };
        let svg = bus_summary_bars(&[s], "bars");
        assert!(svg.contains(">7</text>"));
        assert!(svg.contains("<rect"));
    }

    #[test]
    fn empty_records_do_not_panic() {
        let svg = sorted_percent_curve(&[], "empty");
        assert!(svg.contains("</svg>"));
    }
}
