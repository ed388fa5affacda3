//! Result tables, markdown reports and log-log plots.

use std::fmt::Write as _;

/// One row of `results.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub case: String,
    pub param: String,
    pub param_value: f64,
    pub quantity: String,
    pub index: usize,
    pub value: f64,
    pub reference: Option<f64>,
}

impl Row {
    pub fn new(case: impl Into<String>, param: impl Into<String>, param_value: f64, quantity: impl Into<String>, index: usize, value: f64) -> Self {
        Self { case: case.into(), param: param.into(), param_value, quantity: quantity.into(), index, value, reference: None }
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    AtLeast,
}

/// A tolerance row in `report.md`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, comparison: Comparison::AtMost, tolerance }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, comparison: Comparison::AtLeast, tolerance }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        match self.comparison {
            Comparison::AtMost => self.value <= self.tolerance,
            Comparison::AtLeast => self.value >= self.tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub plot: Option<Plot>,
    /// Extra files written next to the standard outputs.
    pub extra: Vec<(String, String)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn results_csv(experiment: &str, rows: &[Row]) -> String {
    let mut out = String::from("experiment,case,param,param_value,quantity,index,value,reference,abs_err\n");
    for r in rows {
        let (reference, err) = match r.reference {
            Some(x) => (num(x), num((r.value - x).abs())),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{experiment},{},{},{},{},{},{},{reference},{err}",
            r.case,
            r.param,
            num(r.param_value),
            r.quantity,
            r.index,
            num(r.value)
        );
    }
    out
}

pub fn report_md(experiment: &str, header: &[(String, String)], outcome: &Outcome) -> String {
    let mut out = format!("# nldtn {experiment}\n\n");
    for (k, v) in header {
        let _ = writeln!(out, "- {k}: {v}");
    }
    out.push_str("\n## Tolerances\n\n| check | value | requirement | status |\n|---|---|---|---|\n");
    for c in &outcome.checks {
        let op = match c.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        let status = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "| {} | {:.6e} | {op} {:.3e} | {status} |", c.name, c.value, c.tolerance);
    }
    let verdict = if outcome.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "\nOverall: **{verdict}** ({} of {} checks passed)", outcome.checks.iter().filter(|c| c.passed()).count(), outcome.checks.len());
    if !outcome.notes.is_empty() {
        out.push_str("\n## Notes\n\n");
        for n in &outcome.notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log line plot. Non-positive points are dropped.
pub fn svg_loglog(plot: &Plot) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 60.0);
    let pts: Vec<(f64, f64)> = plot.series.iter().flat_map(|s| s.points.iter().copied()).filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()).collect();
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n");
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(out, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>", (left + w - right) / 2.0, escape(&plot.title));
    if pts.is_empty() {
        out.push_str("<text x=\"320\" y=\"210\" text-anchor=\"middle\">no positive data</text>\n</svg>\n");
        return out;
    }
    let decades = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).log10().floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).log10().ceil();
        if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) }
    };
    let (x0, x1) = decades(|p| p.0);
    let (y0, y1) = decades(|p| p.1);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let sx = |x: f64| left + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y.log10() - y0) / (y1 - y0) * ph;
    let _ = writeln!(out, "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>");
    for d in (x0 as i32)..=(x1 as i32) {
        let x = left + (d as f64 - x0) / (x1 - x0) * pw;
        let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"{top}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/>", top + ph);
        let _ = writeln!(out, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">1e{d}</text>", top + ph + 16.0);
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = top + ph - (d as f64 - y0) / (y1 - y0) * ph;
        let _ = writeln!(out, "<line x1=\"{left}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>", left + pw);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>", left - 6.0, y + 4.0);
    }
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", left + pw / 2.0, h - 18.0, escape(&plot.x_label));
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&plot.y_label)
    );
    for (n, s) in plot.series.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let good: Vec<(f64, f64)> = s.points.iter().copied().filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()).collect();
        let path: Vec<String> = good.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        if !path.is_empty() {
            let _ = writeln!(out, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        }
        for &(x, y) in &good {
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>", sx(x), sy(y));
        }
        let ly = top + 14.0 + 18.0 * n as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(out, "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>", lx + 20.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", lx + 26.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
