use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use super::{BifurcationDiagram, CurveSample};
use crate::error::{Error, Result};
use crate::singular::{Rank0Type, Rank1Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Svg,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "svg" => Ok(ExportFormat::Svg),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::validation(
                "format",
                format!("unknown export format `{s}` (csv, svg, json)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExportOptions {
    /// Samples with `|k|` above this are left out of CSV and SVG output.
    pub k_max: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            k_max: 1e3,
            width: 800.0,
            height: 600.0,
        }
    }
}

fn rank1_name(t: Rank1Type) -> &'static str {
    match t {
        Rank1Type::Elliptic => "elliptic",
        Rank1Type::Hyperbolic => "hyperbolic",
        Rank1Type::Degenerate => "degenerate",
    }
}

fn rank0_name(t: Rank0Type) -> &'static str {
    match t {
        Rank0Type::CenterCenter => "center-center",
        Rank0Type::FocusFocus => "focus-focus",
        Rank0Type::Degenerate => "degenerate",
    }
}

/// `x,k,h,branch,type` rows for every curve sample and isolated point.
pub fn to_csv(d: &BifurcationDiagram, opts: &ExportOptions) -> String {
    let mut out = String::from("x,k,h,branch,type\n");
    for c in &d.curves {
        for s in c.samples.iter().filter(|s| s.k.abs() <= opts.k_max) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.x,
                s.k,
                s.h,
                c.branch.name(),
                rank1_name(s.kind)
            );
        }
    }
    for p in &d.isolated_points {
        let _ = writeln!(out, "{},{},{},isolated,degenerate", p.x0, p.k, p.h);
    }
    out
}

pub fn to_json(d: &BifurcationDiagram) -> Result<String> {
    serde_json::to_string_pretty(d).map_err(|e| Error::Config(format!("JSON encoding failed: {e}")))
}

struct Frame {
    h: (f64, f64),
    k: (f64, f64),
    width: f64,
    height: f64,
}

const MARGIN: f64 = 40.0;

impl Frame {
    fn fit(d: &BifurcationDiagram, opts: &ExportOptions) -> Frame {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for c in &d.curves {
            pts.extend(
                c.samples
                    .iter()
                    .filter(|s| s.k.abs() <= opts.k_max)
                    .map(|s| (s.h, s.k)),
            );
        }
        pts.extend(d.z_points.iter().map(|z| (z.h, z.k)));
        pts.extend(d.isolated_points.iter().map(|p| (p.h, p.k)));
        pts.extend(d.special_point.iter().map(|p| (p.h, p.k)));
        pts.retain(|p| p.0.is_finite() && p.1.is_finite() && p.1.abs() <= opts.k_max);
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            });
            if lo > hi {
                (-1.0, 1.0)
            } else if hi - lo < 1e-9 {
                (lo - 1.0, hi + 1.0)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Frame {
            h: span(&mut pts.iter().map(|p| p.0)),
            k: span(&mut pts.iter().map(|p| p.1)),
            width: opts.width,
            height: opts.height,
        }
    }

    fn map(&self, h: f64, k: f64) -> (f64, f64) {
        let px = MARGIN + (h - self.h.0) / (self.h.1 - self.h.0) * (self.width - 2.0 * MARGIN);
        let py = self.height
            - MARGIN
            - (k - self.k.0) / (self.k.1 - self.k.0) * (self.height - 2.0 * MARGIN);
        (px, py)
    }
}

fn path_data(frame: &Frame, pts: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = String::new();
    for (i, (h, k)) in pts.enumerate() {
        let (px, py) = frame.map(h, k);
        let _ = write!(out, "{}{px:.3},{py:.3}", if i == 0 { "M" } else { " L" });
    }
    out
}

/// Splits one branch into runs of equal type that stay inside `|k| <= k_max`.
fn runs(samples: &[CurveSample], k_max: f64) -> Vec<&[CurveSample]> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, s) in samples.iter().enumerate() {
        let ok = s.k.abs() <= k_max;
        match start {
            Some(st) => {
                let prev: &CurveSample = &samples[i - 1];
                if !ok || prev.kind != s.kind {
                    if i - st >= 2 {
                        out.push(&samples[st..i]);
                    }
                    start = ok.then_some(i);
                }
            }
            None if ok => start = Some(i),
            None => {}
        }
    }
    if let Some(st) = start {
        if samples.len() - st >= 2 {
            out.push(&samples[st..]);
        }
    }
    out
}

pub fn to_svg(d: &BifurcationDiagram, opts: &ExportOptions) -> String {
    let frame = Frame::fit(d, opts);
    let (w, h) = (opts.width, opts.height);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        "<style>.curve{{fill:none;stroke-width:1.5}} .elliptic{{stroke:#1f4e9c}} \
         .hyperbolic{{stroke:#b8321a;stroke-dasharray:6 4}} .degenerate{{stroke:#777;stroke-dasharray:1 3}} \
         .parabola{{fill:none;stroke:#2a7f3b;stroke-width:1}} .axis{{stroke:#bbb}} text{{font:12px sans-serif}}</style>"
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" class="axis"/>"#,
        w - 2.0 * MARGIN,
        h - 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">h</text>"#,
        w - MARGIN + 8.0,
        h - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">k</text>"#,
        MARGIN,
        MARGIN - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{}">h: [{:.4}, {:.4}]  k: [{:.4}, {:.4}]</text>"#,
        h - 12.0,
        frame.h.0,
        frame.h.1,
        frame.k.0,
        frame.k.1
    );

    if let Some(pa) = d.parabola {
        let n = 200;
        let pts = (0..=n).map(|i| {
            let k = frame.k.0 + (frame.k.1 - frame.k.0) * i as f64 / n as f64;
            (pa.value(k), k)
        });
        let _ = writeln!(
            out,
            r#"<path class="parabola" d="{}"/>"#,
            path_data(&frame, pts)
        );
    }
    for c in &d.curves {
        for run in runs(&c.samples, opts.k_max) {
            let _ = writeln!(
                out,
                r#"<path class="curve {}" data-branch="{}" d="{}"/>"#,
                rank1_name(run[0].kind),
                c.branch.name(),
                path_data(&frame, run.iter().map(|s| (s.h, s.k)))
            );
        }
    }
    for p in &d.isolated_points {
        let (px, py) = frame.map(p.h, p.k);
        let _ = writeln!(
            out,
            r#"<circle class="isolated-point" cx="{px:.3}" cy="{py:.3}" r="3" fill="gray"/>"#
        );
    }
    if let Some(sp) = d.special_point {
        let (px, py) = frame.map(sp.h, sp.k);
        let _ = writeln!(
            out,
            r#"<rect class="special-point" x="{:.3}" y="{:.3}" width="7" height="7" fill="green"/>"#,
            px - 3.5,
            py - 3.5
        );
    }
    for z in &d.z_points {
        let (px, py) = frame.map(z.h, z.k);
        let _ = writeln!(
            out,
            r#"<circle class="z-point" cx="{px:.3}" cy="{py:.3}" r="4" fill="black"/><text x="{:.3}" y="{:.3}">Z{} {}</text>"#,
            px + 6.0,
            py - 6.0,
            z.pole.symbol(),
            rank0_name(z.kind)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn export<W: Write>(
    d: &BifurcationDiagram,
    format: ExportFormat,
    opts: &ExportOptions,
    mut out: W,
) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => to_csv(d, opts),
        ExportFormat::Svg => to_svg(d, opts),
        ExportFormat::Json => to_json(d)?,
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_diagram, DiagramOptions};
    use crate::e3::{OrbitParams, Preset};

    fn empty() -> BifurcationDiagram {
        BifurcationDiagram {
            orbit: OrbitParams::new(1.0, 0.0).unwrap(),
            z_points: Vec::new(),
            curves: Vec::new(),
            isolated_points: Vec::new(),
            special_point: None,
            parabola: None,
        }
    }

    #[test]
    fn empty_diagram_exports() {
        let d = empty();
        assert_eq!(to_csv(&d, &ExportOptions::default()), "x,k,h,branch,type\n");
        let svg = to_svg(&d, &ExportOptions::default());
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
        let back: BifurcationDiagram = serde_json::from_str(&to_json(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn lagrange_exports() {
        let sys = Preset::Lagrange.system();
        let d = build_diagram(
            &sys,
            &OrbitParams::new(1.0, 0.0).unwrap(),
            &DiagramOptions::default(),
        )
        .unwrap();
        let svg = to_svg(&d, &ExportOptions::default());
        assert_eq!(svg.matches("<path class=\"curve").count(), 2);
        assert_eq!(svg.matches("class=\"z-point\"").count(), 2);
        let csv = to_csv(&d, &ExportOptions::default());
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 5));
        assert!(csv.lines().skip(1).all(|l| l
            .split(',')
            .nth(1)
            .unwrap()
            .parse::<f64>()
            .unwrap()
            .abs()
            <= 1e3));
        let back: BifurcationDiagram = serde_json::from_str(&to_json(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn format_names() {
        assert_eq!("svg".parse::<ExportFormat>().unwrap(), ExportFormat::Svg);
        assert!("png".parse::<ExportFormat>().is_err());
    }
}
