//! Run configuration, read from TOML.
//!
//! ```toml
//! [system]
//! preset = "lagrange"   # optional base; explicit fields below override it
//! beta = 1.0
//! g1 = "0"
//! g2 = "0"
//! g3 = "0"
//! V = "-x"
//!
//! [system.lagrange]     # preset parameters, all optional
//! A = 2.0
//! B = 2.0
//! p = 1.0
//!
//! [orbit]
//! a = 1.0
//! g = 0.0
//!
//! [grids]
//! x_steps = 2048
//! samples_per_interval = 512
//! fiber_grid = 512
//!
//! [tol]
//! q = 1e-9
//! D = 1e-10
//! W = 1e-9
//!
//! [output]
//! dir = "out"
//! stem = "diagram"
//! formats = ["csv", "svg", "json"]
//! k_max = 1000.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::diagram::{DiagramOptions, ExportFormat, ExportOptions};
use crate::e3::{kirchhoff, lagrange, leggett, KirchhoffParams, OrbitParams, Preset, SystemSpec};
use crate::error::{Error, Result};
use crate::expr::parse;
use crate::tol::Tolerances;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    orbit: RawOrbit,
    #[serde(default)]
    grids: RawGrids,
    #[serde(default)]
    tol: RawTol,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    preset: Option<String>,
    beta: Option<f64>,
    g1: Option<String>,
    g2: Option<String>,
    g3: Option<String>,
    #[serde(rename = "V")]
    v: Option<String>,
    lagrange: Option<RawLagrange>,
    leggett: Option<RawLeggett>,
    kirchhoff: Option<RawKirchhoff>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLagrange {
    #[serde(rename = "A")]
    big_a: Option<f64>,
    #[serde(rename = "B")]
    big_b: Option<f64>,
    p: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLeggett {
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKirchhoff {
    #[serde(rename = "A")]
    big_a: Option<f64>,
    a: Option<f64>,
    #[serde(rename = "B")]
    big_b: Option<f64>,
    b: Option<f64>,
    #[serde(rename = "C")]
    big_c: Option<f64>,
    c: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOrbit {
    a: f64,
    g: f64,
}

impl Default for RawOrbit {
    fn default() -> Self {
        RawOrbit { a: 1.0, g: 0.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawGrids {
    x_steps: usize,
    samples_per_interval: usize,
    fiber_grid: usize,
}

impl Default for RawGrids {
    fn default() -> Self {
        let g = Grids::default();
        RawGrids {
            x_steps: g.x_steps,
            samples_per_interval: g.samples_per_interval,
            fiber_grid: g.fiber_grid,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTol {
    q: Option<f64>,
    #[serde(rename = "D")]
    d: Option<f64>,
    #[serde(rename = "W")]
    w: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    stem: Option<String>,
    formats: Option<Vec<String>>,
    k_max: Option<f64>,
}

/// Grid sizes for the discriminant scan, curve tracing and fiber analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grids {
    pub x_steps: usize,
    pub samples_per_interval: usize,
    pub fiber_grid: usize,
}

impl Default for Grids {
    fn default() -> Self {
        let d = DiagramOptions::default();
        Grids {
            x_steps: d.x_steps,
            samples_per_interval: d.samples_per_interval,
            fiber_grid: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub stem: String,
    pub formats: Vec<ExportFormat>,
    pub export: ExportOptions,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            stem: "diagram".to_string(),
            formats: vec![ExportFormat::Csv, ExportFormat::Svg, ExportFormat::Json],
            export: ExportOptions::default(),
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub system: SystemSpec,
    pub orbit: OrbitParams,
    pub grids: Grids,
    pub tol: Tolerances,
    pub output: OutputConfig,
}

impl RunConfig {
    /// A preset on the orbit `a = 1, g = 0` with default grids.
    pub fn from_preset(preset: Preset) -> RunConfig {
        RunConfig {
            preset: Some(preset),
            system: preset.system(),
            orbit: OrbitParams::new(1.0, 0.0).expect("unit orbit"),
            grids: Grids::default(),
            tol: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn diagram_options(&self) -> DiagramOptions {
        DiagramOptions {
            x_steps: self.grids.x_steps,
            samples_per_interval: self.grids.samples_per_interval,
            tol: self.tol,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(
            field,
            format!("must be a finite positive number, got {v}"),
        ))
    }
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("must be finite, got {v}")))
    }
}

fn base_system(raw: &RawSystem) -> Result<(Option<Preset>, SystemSpec)> {
    let Some(name) = &raw.preset else {
        return Ok((None, SystemSpec::from_strs(1.0, "0", "0", "0", "0")?));
    };
    let preset: Preset = name.parse().map_err(|_| {
        Error::validation(
            "system.preset",
            format!("unknown preset `{name}` (lagrange, leggett, kirchhoff)"),
        )
    })?;
    let prefix = |field: &str, e: Error| match e {
        Error::Validation { field: f, reason } => Error::validation(format!("{field}.{f}"), reason),
        other => other,
    };
    let sys = match preset {
        Preset::Lagrange => {
            let p = raw.lagrange.as_ref();
            let get = |f: fn(&RawLagrange) -> Option<f64>, d: f64| p.and_then(f).unwrap_or(d);
            lagrange(
                get(|r| r.big_a, 2.0),
                get(|r| r.big_b, 2.0),
                get(|r| r.p, 1.0),
            )
            .map_err(|e| prefix("system.lagrange", e))?
        }
        Preset::Leggett => leggett(raw.leggett.as_ref().and_then(|r| r.gamma).unwrap_or(1.0))
            .map_err(|e| prefix("system.leggett", e))?,
        Preset::Kirchhoff => {
            let d = KirchhoffParams::default();
            let r = raw.kirchhoff.as_ref();
            let get = |f: fn(&RawKirchhoff) -> Option<f64>, v: f64| r.and_then(f).unwrap_or(v);
            kirchhoff(KirchhoffParams {
                big_a: get(|r| r.big_a, d.big_a),
                a: get(|r| r.a, d.a),
                big_b: get(|r| r.big_b, d.big_b),
                b: get(|r| r.b, d.b),
                big_c: get(|r| r.big_c, d.big_c),
                c: get(|r| r.c, d.c),
            })
            .map_err(|e| prefix("system.kirchhoff", e))?
        }
    };
    let stray = [
        (
            raw.lagrange.is_some() && preset != Preset::Lagrange,
            "lagrange",
        ),
        (
            raw.leggett.is_some() && preset != Preset::Leggett,
            "leggett",
        ),
        (
            raw.kirchhoff.is_some() && preset != Preset::Kirchhoff,
            "kirchhoff",
        ),
    ];
    if let Some((_, table)) = stray.iter().find(|(bad, _)| *bad) {
        return Err(Error::validation(
            format!("system.{table}"),
            format!("parameters given for `{table}` but the preset is `{preset}`"),
        ));
    }
    Ok((Some(preset), sys))
}

fn build_system(raw: &RawSystem) -> Result<(Option<Preset>, SystemSpec)> {
    if raw.preset.is_none()
        && (raw.lagrange.is_some() || raw.leggett.is_some() || raw.kirchhoff.is_some())
    {
        return Err(Error::validation(
            "system.preset",
            "preset parameters given without a preset",
        ));
    }
    let (preset, base) = base_system(raw)?;
    let beta = match raw.beta {
        Some(b) => positive("system.beta", b)?,
        None => base.beta,
    };
    let expr = |field: &str, src: &Option<String>, current: &crate::e3::SystemFn| match src {
        Some(text) => {
            parse(text).map_err(|e| Error::validation(format!("system.{field}"), e.to_string()))
        }
        None => Ok(current.expr().clone()),
    };
    let sys = SystemSpec::new(
        beta,
        expr("g1", &raw.g1, &base.g1)?,
        expr("g2", &raw.g2, &base.g2)?,
        expr("g3", &raw.g3, &base.g3)?,
        expr("V", &raw.v, &base.v)?,
    )?;
    Ok((preset, sys))
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let (preset, system) = build_system(&raw.system)?;
    let orbit = OrbitParams::new(
        positive("orbit.a", raw.orbit.a)?,
        finite("orbit.g", raw.orbit.g)?,
    )?;

    let g = &raw.grids;
    if g.x_steps < 100 {
        return Err(Error::validation("grids.x_steps", "must be at least 100"));
    }
    if g.samples_per_interval < 2 {
        return Err(Error::validation(
            "grids.samples_per_interval",
            "must be at least 2",
        ));
    }
    if g.fiber_grid < 256 {
        return Err(Error::validation(
            "grids.fiber_grid",
            "must be at least 256",
        ));
    }
    let grids = Grids {
        x_steps: g.x_steps,
        samples_per_interval: g.samples_per_interval,
        fiber_grid: g.fiber_grid,
    };

    let d = Tolerances::default();
    let tol = Tolerances {
        q: raw
            .tol
            .q
            .map(|v| positive("tol.q", v))
            .transpose()?
            .unwrap_or(d.q),
        d: raw
            .tol
            .d
            .map(|v| positive("tol.D", v))
            .transpose()?
            .unwrap_or(d.d),
        w: raw
            .tol
            .w
            .map(|v| positive("tol.W", v))
            .transpose()?
            .unwrap_or(d.w),
    };

    let mut output = OutputConfig::default();
    if let Some(dir) = raw.output.dir {
        output.dir = dir;
    }
    if let Some(stem) = raw.output.stem {
        if stem.is_empty() || stem.contains(['/', '\\']) {
            return Err(Error::validation(
                "output.stem",
                "must be a non-empty file name",
            ));
        }
        output.stem = stem;
    }
    if let Some(formats) = raw.output.formats {
        output.formats = formats
            .iter()
            .map(|f| {
                f.parse().map_err(|_| {
                    Error::validation("output.formats", format!("unknown format `{f}`"))
                })
            })
            .collect::<Result<_>>()?;
    }
    if let Some(k_max) = raw.output.k_max {
        output.export.k_max = positive("output.k_max", k_max)?;
    }

    Ok(RunConfig {
        preset,
        system,
        orbit,
        grids,
        tol,
        output,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
