use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use liouville::config::{load_config, RunConfig};
use liouville::diagram::{build_diagram, export, ExportFormat};
use liouville::dynamics::{conservation_report, integrate, write_trajectory_csv};
use liouville::e3::{OrbitParams, PhasePoint, Pole, Preset};
use liouville::fibers::{fiber_analyze_with, isoenergy_classify};
use liouville::singular::{rank0_classify, rank1_classify, rank1_solve_k, theta_decomposition};
use liouville::verify::run_suite;
use liouville::Error;

/// Bifurcation diagrams, singular points and Liouville fibers of integrable
/// systems on e(3)* with the integral K = S3.
///
/// The system comes from a TOML file (--config) or a named preset
/// (--preset lagrange|leggett|kirchhoff); without either the Lagrange top is
/// used. Defaults: orbit a = 1, g = 0; grids x_steps = 2048,
/// samples_per_interval = 512, fiber_grid = 512; tolerances tol.q = 1e-9,
/// tol.D = 1e-10, tol.W = 1e-9.
///
/// Exit status: 0 on success, 1 on a domain or validation error, 2 when
/// `verify` finds a failing check.
#[derive(Debug, Parser)]
#[command(name = "liouville", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named system: lagrange, leggett or kirchhoff.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override the orbit parameter a = <R, R>.
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Override the orbit parameter g = <S, R>.
    #[arg(long, global = true, allow_hyphen_values = true)]
    g: Option<f64>,
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the two rank-0 points over the poles.
    Rank0,
    /// Decompose the rank-1 set and tabulate critical circles.
    Rank1 {
        /// Table rows per interval.
        #[arg(long, default_value_t = 9)]
        rows: usize,
    },
    /// Build the bifurcation diagram and write the exports.
    Diagram {
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated formats among csv, svg, json (overrides output.formats).
        #[arg(long, value_delimiter = ',')]
        format: Option<Vec<String>>,
    },
    /// Analyze the fiber over (h, k).
    Fiber {
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, allow_hyphen_values = true)]
        k: f64,
    },
    /// Classify the isoenergy surface H = h.
    Isoenergy {
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
    },
    /// Integrate the Euler equations with RK4; CSV rows go to stdout or --out.
    Simulate {
        /// Initial point S1,S2,S3,R1,R2,R3. Its Casimirs override the orbit.
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle-agreement suite on the presets and the configured system.
    Verify {
        #[arg(long, default_value_t = 20_260_411)]
        seed: u64,
    },
}

enum Failure {
    Error(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => RunConfig::from_preset(name.parse::<Preset>()?),
        (None, None) => RunConfig::from_preset(Preset::Lagrange),
    };
    if cli.a.is_some() || cli.g.is_some() {
        cfg.orbit = OrbitParams::new(cli.a.unwrap_or(cfg.orbit.a), cli.g.unwrap_or(cfg.orbit.g))?;
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(out: &mut impl Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("JSON encoding failed: {e}")))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve_config(cli)?;
    let (sys, orb) = (&cfg.system, &cfg.orbit);
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());

    match &cli.command {
        Command::Rank0 => {
            let reports = [Pole::Plus, Pole::Minus]
                .map(|p| rank0_classify(sys, orb, p, &cfg.tol))
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            if cli.json {
                print_json(&mut out, &reports)?;
            } else {
                writeln!(out, "orbit a = {}, g = {}", orb.a, orb.g)?;
                for r in &reports {
                    writeln!(
                        out,
                        "P{}  R3 = {:+.6}  q = {:.9}  p = {:.9}  {:?}",
                        r.pole.symbol(),
                        r.point.r.z,
                        r.q,
                        r.p,
                        r.kind
                    )?;
                    let spec: Vec<String> = r
                        .spectrum()
                        .iter()
                        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
                        .collect();
                    writeln!(out, "    spectrum {}", spec.join(", "))?;
                }
            }
        }
        Command::Rank1 { rows } => {
            let theta = theta_decomposition(sys, orb, cfg.grids.x_steps, &cfg.tol)?;
            let mut table = Vec::new();
            for iv in &theta.intervals {
                let n = (*rows).max(2);
                for i in 0..n {
                    let x = iv.lo + iv.len() * (i as f64 + 0.5) / n as f64;
                    for k in rank1_solve_k(sys, orb, x, &cfg.tol)?.to_vec() {
                        if let Ok(p) = rank1_classify(sys, orb, k, x, &cfg.tol) {
                            table.push(p);
                        }
                    }
                }
            }
            for &x in &theta.isolated {
                for k in rank1_solve_k(sys, orb, x, &cfg.tol)?.to_vec() {
                    if let Ok(p) = rank1_classify(sys, orb, k, x, &cfg.tol) {
                        table.push(p);
                    }
                }
            }
            if cli.json {
                #[derive(Serialize)]
                struct Rank1Output<'a> {
                    theta: &'a liouville::singular::ThetaDecomposition,
                    critical: &'a [liouville::singular::Rank1Point],
                }
                print_json(
                    &mut out,
                    &Rank1Output {
                        theta: &theta,
                        critical: &table,
                    },
                )?;
            } else {
                writeln!(
                    out,
                    "orbit a = {}, g = {}; equator: {:?}",
                    orb.a, orb.g, theta.equator
                )?;
                for iv in &theta.intervals {
                    writeln!(
                        out,
                        "interval {}{:.9}, {:.9}{}{}",
                        if iv.lo_closed { "[" } else { "(" },
                        iv.lo,
                        iv.hi,
                        if iv.hi_closed { "]" } else { ")" },
                        if iv.degenerate_family {
                            "  degenerate family"
                        } else {
                            ""
                        }
                    )?;
                }
                for x in &theta.isolated {
                    writeln!(out, "isolated x = {x:.9}")?;
                }
                writeln!(
                    out,
                    "{:>13} {:>13} {:>13} {:>13} {:>11}  type",
                    "x", "k", "h", "w_xx", "|mu|"
                )?;
                for p in &table {
                    writeln!(
                        out,
                        "{:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>11.4e}  {:?}",
                        p.x,
                        p.k,
                        p.h,
                        p.w_dxx,
                        p.mu[0].norm(),
                        p.kind
                    )?;
                }
            }
        }
        Command::Diagram { out: dir, format } => {
            let d = build_diagram(sys, orb, &cfg.diagram_options())?;
            let dir = dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
            let formats: Vec<ExportFormat> = match format {
                Some(list) => list.iter().map(|f| f.parse()).collect::<Result<_, _>>()?,
                None => cfg.output.formats.clone(),
            };
            fs::create_dir_all(&dir)?;
            for f in formats {
                let ext = match f {
                    ExportFormat::Csv => "csv",
                    ExportFormat::Svg => "svg",
                    ExportFormat::Json => "json",
                };
                let path = dir.join(format!("{}.{ext}", cfg.output.stem));
                let mut w = BufWriter::new(File::create(&path)?);
                export(&d, f, &cfg.output.export, &mut w)?;
                w.flush()?;
                eprintln!("wrote {}", path.display());
            }
            let samples: usize = d.curves.iter().map(|c| c.samples.len()).sum();
            writeln!(
                out,
                "{} branches, {} samples, {} rank-0 images, {} isolated points, special point: {}, parabola: {}",
                d.curves.len(),
                samples,
                d.z_points.len(),
                d.isolated_points.len(),
                d.special_point.map_or("none".to_string(), |p| format!("({}, {})", p.h, p.k)),
                d.parabola.map_or("none".to_string(), |p| format!("h = k^2/(2 beta) + {} k + {}", p.linear, p.constant)),
            )?;
            for c in &d.curves {
                writeln!(
                    out,
                    "  {} on ({:.6}, {:.6}): {} samples, ends {} / {}",
                    c.branch.name(),
                    c.interval.0,
                    c.interval.1,
                    c.samples.len(),
                    serde_json::to_string(&c.endpoint_tags[0]).unwrap_or_default(),
                    serde_json::to_string(&c.endpoint_tags[1]).unwrap_or_default()
                )?;
            }
        }
        Command::Fiber { h, k } => {
            let r = fiber_analyze_with(sys, orb, *h, *k, cfg.grids.fiber_grid, &[], &cfg.tol)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            if cli.json {
                print_json(&mut out, &r)?;
            } else {
                writeln!(
                    out,
                    "fiber over (h, k) = ({h}, {k}): {} component(s)",
                    r.components
                )?;
                for (lo, hi) in &r.regions {
                    writeln!(out, "  x in [{lo:.9}, {hi:.9}]")?;
                }
                for c in &r.critical {
                    writeln!(
                        out,
                        "  critical circle x = {:.9} ({:?}, w_xx = {:.6e})",
                        c.x, c.kind, c.w_dxx
                    )?;
                }
                match r.atom {
                    Some(a) => writeln!(out, "  atom {a}")?,
                    None if r.is_regular() => writeln!(out, "  regular value")?,
                    None => writeln!(out, "  atom not classified")?,
                }
            }
        }
        Command::Isoenergy { h } => {
            let r = isoenergy_classify(sys, orb, *h, cfg.grids.fiber_grid)?;
            if cli.json {
                print_json(&mut out, &r)?;
            } else if r.pieces.is_empty() {
                writeln!(out, "H = {h}: empty")?;
            } else {
                let names: Vec<String> = r.pieces.iter().map(|p| format!("{p:?}")).collect();
                writeln!(out, "H = {h}: {}", names.join(" + "))?;
                for (lo, hi) in &r.image_intervals {
                    writeln!(out, "  x in [{lo:.9}, {hi:.9}]")?;
                }
            }
        }
        Command::Simulate {
            from,
            dt,
            steps,
            out: path,
        } => {
            let from: Vec<f64> = from
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Config(format!("--from: {e}")))?;
            if from.len() != 6 {
                return Err(Error::Config(
                    "--from needs six numbers S1,S2,S3,R1,R2,R3".to_string(),
                )
                .into());
            }
            if !(*dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("--dt must be positive, got {dt}")).into());
            }
            let p0 = PhasePoint::new([from[0], from[1], from[2]], [from[3], from[4], from[5]]);
            let traj = integrate(sys, p0, *dt, *steps);
            match path {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(p)?);
                    write_trajectory_csv(sys, &traj, &mut w)?;
                    w.flush()?;
                }
                None => write_trajectory_csv(sys, &traj, &mut out)?,
            }
            let rep = conservation_report(sys, &traj)?;
            eprintln!(
                "{} steps of {} with dt = {dt}; drift H {:.3e}, K {:.3e}, F1 {:.3e}, F2 {:.3e}",
                traj.samples.len() - 1,
                traj.method,
                rep.h,
                rep.k,
                rep.f1,
                rep.f2
            );
            if let Some(reason) = &traj.aborted {
                return Err(
                    Error::Precondition(format!("integration stopped early: {reason}")).into(),
                );
            }
        }
        Command::Verify { seed } => {
            let rep = run_suite(Some((sys, orb)), *seed);
            if cli.json {
                print_json(&mut out, &rep)?;
            } else {
                for c in &rep.checks {
                    writeln!(
                        out,
                        "{} {}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    )?;
                }
            }
            out.flush()?;
            if !rep.all_passed() {
                return Err(Failure::Verification);
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
    }
}
