//! Static SVG figures drawn from JSON reports.
//!
//! Layouts are fixed and every coordinate is printed with two decimals, so
//! the same report always produces the same bytes.

use std::fmt::{self, Write};

use serde_json::Value;

use super::{ReportError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// L against F, one point per model, Tier 1 cut-offs dashed.
    Tiered,
    /// r(KEEP, correct) per model.
    Sensitivity,
    /// KEEP × BET counts per model.
    Contingency,
    /// Mean indices per synthetic policy with verdicts.
    Synthetic,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Tiered, Figure::Sensitivity, Figure::Contingency, Figure::Synthetic];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Tiered => "tiered",
            Figure::Sensitivity => "sensitivity",
            Figure::Contingency => "contingency",
            Figure::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Figure {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Figure, String> {
        Figure::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown figure `{s}` (tiered, sensitivity, contingency, synthetic)"))
    }
}

const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tier_color(tier: &str) -> &'static str {
    match tier {
        "Valid" => "#2b83ba",
        "Tier2-Elevated" => "#fdae61",
        "Tier2-Marked" => "#f46d43",
        "Tier1-Invalid" => "#d7191c",
        _ => "#999999",
    }
}

/// Linear blend between two `#rrggbb` colours.
fn blend(a: &str, b: &str, t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let channel = |s: &str, i: usize| u8::from_str_radix(&s[1 + 2 * i..3 + 2 * i], 16).unwrap_or(0) as f64;
    let mix: Vec<String> = (0..3)
        .map(|i| format!("{:02x}", (channel(a, i) + (channel(b, i) - channel(a, i)) * t).round() as u8))
        .collect();
    format!("#{}", mix.concat())
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Svg {
        Svg { body: String::new(), width, height }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\"{extra}/>"
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ =
            writeln!(self.body, "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"/>");
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"{size:.0}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
            escape(s)
        );
    }

    fn finish(self, title: &str, meta: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">",
            w = self.width,
            h = self.height
        );
        let _ = writeln!(out, "<title>{}</title>", escape(title));
        let _ = writeln!(out, "<desc>{}</desc>", escape(&meta.join("; ")));
        let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn meta(report: &Value) -> Vec<String> {
    let e = &report["envelope"];
    let mut m = Vec::new();
    for key in ["tool", "version", "command", "seed", "input_digest"] {
        if !e[key].is_null() {
            m.push(format!("{key}={}", e[key].to_string().trim_matches('"')));
        }
    }
    if let Some(t) = e["thresholds"].as_object() {
        m.extend(t.iter().map(|(k, v)| format!("{k}={v}")));
    }
    m
}

fn threshold(report: &Value, key: &str, default: f64) -> f64 {
    report["envelope"]["thresholds"][key].as_f64().unwrap_or(default)
}

fn tiers(report: &Value) -> Vec<(String, String)> {
    report["classification"]["assignments"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|x| {
                    (x["model_id"].as_str().unwrap_or("").to_string(), x["tier"].as_str().unwrap_or("").to_string())
                })
                .collect()
        })
        .unwrap_or_default()
}

fn tier_of<'a>(tiers: &'a [(String, String)], model: &str) -> &'a str {
    tiers.iter().find(|(m, _)| m == model).map(|(_, t)| t.as_str()).unwrap_or("")
}

pub fn render_figure(report: &Value, figure: Figure) -> Result<String> {
    match figure {
        Figure::Tiered => tiered(report),
        Figure::Sensitivity => sensitivity(report),
        Figure::Contingency => contingency(report),
        Figure::Synthetic => synthetic(report),
    }
}

fn tiered(report: &Value) -> Result<String> {
    let profiles = report["profiles"].as_array().ok_or_else(|| ReportError::MissingSection("profiles".into()))?;
    let tiers = tiers(report);
    let (l_min, f_min) = (threshold(report, "l_min", 0.95), threshold(report, "f_min", 0.50));
    let (left, top, size) = (70.0, 40.0, 420.0);
    let mut svg = Svg::new(left + size + 190.0, top + size + 60.0);
    let x = |v: f64| left + v.clamp(0.0, 1.0) * size;
    let y = |v: f64| top + (1.0 - v.clamp(0.0, 1.0)) * size;

    svg.text(left + size / 2.0, 24.0, 15.0, "middle", "Validity profile: L versus F");
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        svg.line(x(v), y(0.0), x(v), y(0.0) + 5.0, "#333333", "");
        svg.line(x(0.0) - 5.0, y(v), x(0.0), y(v), "#333333", "");
        svg.text(x(v), y(0.0) + 18.0, 11.0, "middle", &format!("{v:.2}"));
        svg.text(x(0.0) - 8.0, y(v) + 4.0, 11.0, "end", &format!("{v:.2}"));
    }
    svg.line(x(0.0), y(0.0), x(1.0), y(0.0), "#333333", "");
    svg.line(x(0.0), y(0.0), x(0.0), y(1.0), "#333333", "");
    svg.text(left + size / 2.0, top + size + 42.0, 12.0, "middle", "L = P(KEEP | incorrect)");
    let _ = writeln!(
        svg.body,
        "<text x=\"18.00\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18.00 {:.2})\" {FONT}>F = P(WITHDRAW | consensus item)</text>",
        top + size / 2.0,
        top + size / 2.0
    );
    let dash = |index: &str, value: f64| {
        format!(" stroke-dasharray=\"6 4\" class=\"threshold\" data-index=\"{index}\" data-value=\"{value}\"")
    };
    svg.line(x(l_min), y(0.0), x(l_min), y(1.0), "#d7191c", &dash("L", l_min));
    svg.line(x(0.0), y(f_min), x(1.0), y(f_min), "#d7191c", &dash("F", f_min));

    for p in profiles {
        let model = p["model_id"].as_str().unwrap_or("");
        let (Some(l), Some(f)) = (p["L"].as_f64(), p["F"].as_f64()) else { continue };
        let color = tier_color(tier_of(&tiers, model));
        let _ = writeln!(
            svg.body,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{color}\" stroke=\"#222222\" stroke-width=\"0.5\"><title>{}</title></circle>",
            x(l),
            y(f),
            escape(model)
        );
        svg.text(x(l) + 7.0, y(f) - 6.0, 9.0, "start", model);
    }

    let legend_x = left + size + 25.0;
    for (i, tier) in ["Valid", "Tier2-Elevated", "Tier2-Marked", "Tier1-Invalid"].iter().enumerate() {
        let ly = top + 10.0 + 20.0 * i as f64;
        let _ =
            writeln!(svg.body, "<circle cx=\"{legend_x:.2}\" cy=\"{ly:.2}\" r=\"5\" fill=\"{}\"/>", tier_color(tier));
        svg.text(legend_x + 12.0, ly + 4.0, 11.0, "start", tier);
    }
    Ok(svg.finish("tiered", &meta(report)))
}

fn sensitivity(report: &Value) -> Result<String> {
    let per_model = report["psychometrics"]["item_sensitivity"]["per_model"]
        .as_object()
        .ok_or_else(|| ReportError::MissingSection("psychometrics.item_sensitivity".into()))?;
    let tiers = tiers(report);
    let mut rows: Vec<(&str, f64)> =
        per_model.iter().filter_map(|(m, c)| Some((m.as_str(), c["r"].as_f64()?))).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));

    let (left, top, width, bar) = (180.0, 40.0, 400.0, 18.0);
    let mut svg = Svg::new(left + width + 40.0, top + bar * rows.len() as f64 + 60.0);
    let x = |r: f64| left + (r.clamp(-1.0, 1.0) + 1.0) / 2.0 * width;
    svg.text(left + width / 2.0, 24.0, 15.0, "middle", "Item sensitivity: r(KEEP, correct) by model");
    for (i, (model, r)) in rows.iter().enumerate() {
        let y = top + bar * i as f64;
        let (x0, x1) = if *r >= 0.0 { (x(0.0), x(*r)) } else { (x(*r), x(0.0)) };
        svg.rect(x0, y + 2.0, (x1 - x0).max(0.5), bar - 4.0, tier_color(tier_of(&tiers, model)));
        svg.text(left - 8.0, y + bar - 5.0, 11.0, "end", model);
        svg.text(
            if *r >= 0.0 { x1 + 4.0 } else { x0 - 4.0 },
            y + bar - 5.0,
            10.0,
            if *r >= 0.0 { "start" } else { "end" },
            &format!("{r:+.3}"),
        );
    }
    let bottom = top + bar * rows.len() as f64;
    svg.line(x(0.0), top - 4.0, x(0.0), bottom, "#333333", "");
    svg.line(x(-1.0), bottom, x(1.0), bottom, "#333333", "");
    for i in 0..=4 {
        let r = -1.0 + 0.5 * i as f64;
        svg.line(x(r), bottom, x(r), bottom + 5.0, "#333333", "");
        svg.text(x(r), bottom + 18.0, 11.0, "middle", &format!("{r:.1}"));
    }
    Ok(svg.finish("sensitivity", &meta(report)))
}

fn contingency(report: &Value) -> Result<String> {
    let tables = report["psychometrics"]["contingency"]
        .as_object()
        .ok_or_else(|| ReportError::MissingSection("psychometrics.contingency".into()))?;
    let per_row = 4usize;
    let (cell, pad, label) = (60.0, 30.0, 36.0);
    let block_w = 2.0 * cell + pad;
    let block_h = 2.0 * cell + label + pad;
    let n_rows = tables.len().div_ceil(per_row).max(1);
    let mut svg = Svg::new(80.0 + per_row as f64 * block_w, 50.0 + n_rows as f64 * block_h);
    svg.text(40.0 + per_row as f64 * block_w / 2.0, 24.0, 15.0, "middle", "KEEP × BET contingency (all items)");
    for (i, (model, t)) in tables.iter().enumerate() {
        let all = &t["all"];
        let counts = [
            ("KEEP+BET", all["keep_bet"].as_u64().unwrap_or(0)),
            ("KEEP+NO BET", all["keep_no_bet"].as_u64().unwrap_or(0)),
            ("WD+BET", all["withdraw_bet"].as_u64().unwrap_or(0)),
            ("WD+NO BET", all["withdraw_no_bet"].as_u64().unwrap_or(0)),
        ];
        let n: u64 = counts.iter().map(|c| c.1).sum();
        let bx = 60.0 + (i % per_row) as f64 * block_w;
        let by = 40.0 + (i / per_row) as f64 * block_h;
        svg.text(bx + cell, by + 14.0, 11.0, "middle", model);
        for (k, (name, count)) in counts.iter().enumerate() {
            let cx = bx + (k % 2) as f64 * cell;
            let cy = by + label - 14.0 + (k / 2) as f64 * cell;
            let share = if n > 0 { *count as f64 / n as f64 } else { 0.0 };
            let fill = if k == 2 { blend("#fff5f0", "#cb181d", share) } else { blend("#f7fbff", "#2171b5", share) };
            svg.rect(cx, cy, cell - 2.0, cell - 2.0, &fill);
            svg.text(cx + cell / 2.0 - 1.0, cy + cell / 2.0, 12.0, "middle", &count.to_string());
            svg.text(cx + cell / 2.0 - 1.0, cy + cell / 2.0 + 14.0, 8.0, "middle", name);
        }
    }
    Ok(svg.finish("contingency", &meta(report)))
}

fn synthetic(report: &Value) -> Result<String> {
    let policies =
        report["matrix"]["policies"].as_array().ok_or_else(|| ReportError::MissingSection("matrix.policies".into()))?;
    let columns = ["L", "K", "F", "Fp", "RBS", "TRIN", "withdraw_delta"];
    let (left, top, cw, ch) = (170.0, 60.0, 70.0, 26.0);
    let mut svg = Svg::new(left + cw * (columns.len() as f64 + 2.0) + 20.0, top + ch * policies.len() as f64 + 30.0);
    svg.text(left + cw * 4.5, 24.0, 15.0, "middle", "Synthetic policy validation (iteration means)");
    for (j, c) in columns.iter().chain(["verdict", "expected"].iter()).enumerate() {
        svg.text(
            left + cw * j as f64 + cw / 2.0,
            top - 10.0,
            11.0,
            "middle",
            if *c == "withdraw_delta" { "Δw" } else { c },
        );
    }
    for (i, p) in policies.iter().enumerate() {
        let y = top + ch * i as f64;
        svg.text(left - 8.0, y + ch / 2.0 + 4.0, 11.0, "end", p["policy"].as_str().unwrap_or(""));
        let summaries = p["summaries"].as_array().cloned().unwrap_or_default();
        for (j, c) in columns.iter().enumerate() {
            let mean = summaries.iter().find(|s| s["index"] == *c).and_then(|s| s["mean"].as_f64());
            let x = left + cw * j as f64;
            let fill = match mean {
                None => "#eeeeee".to_string(),
                Some(v) if *c == "RBS" || *c == "withdraw_delta" => {
                    if v >= 0.0 {
                        blend("#f7f7f7", if *c == "RBS" { "#ca0020" } else { "#0571b0" }, v)
                    } else {
                        blend("#f7f7f7", if *c == "RBS" { "#0571b0" } else { "#ca0020" }, -v)
                    }
                }
                Some(v) => blend("#f7f7f7", "#525252", v),
            };
            svg.rect(x + 1.0, y + 1.0, cw - 2.0, ch - 2.0, &fill);
            let label = mean.map(|v| format!("{v:.3}")).unwrap_or_else(|| "—".into());
            let ink = if mean.is_some_and(|v| v.abs() > 0.6) { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                svg.body,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" fill=\"{ink}\" {FONT}>{label}</text>",
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
        let pass = p["pass"].as_bool().unwrap_or(false);
        let verdict = p["verdict"].as_str().unwrap_or("");
        let vx = left + cw * columns.len() as f64;
        svg.rect(vx + 1.0, y + 1.0, cw - 2.0, ch - 2.0, if pass { "#a6dba0" } else { "#f4a582" });
        svg.text(vx + cw / 2.0, y + ch / 2.0 + 4.0, 11.0, "middle", verdict);
        svg.text(vx + cw * 1.5, y + ch / 2.0 + 4.0, 11.0, "middle", p["expected"].as_str().unwrap_or(""));
    }
    Ok(svg.finish("synthetic", &meta(report)))
}
