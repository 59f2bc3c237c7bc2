//! Fibers of the momentum map and isoenergy surfaces.
//!
//! On an orbit the fiber over `(h, k)` is, in the chart `(x, m, phi)`, the
//! set `(m + u g1)^2 / (2u) = h - W(k, x)` times the circle in `phi`. Its
//! projection to `x` is `{h >= W}`; each connected piece of the planar curve
//! gives one Liouville torus, and the circles where `h - W` has a double zero
//! are the critical circles of the fiber.

mod isoenergy;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::CurveSample;
use crate::e3::{OrbitParams, Pole, SystemSpec};
use crate::error::{Error, Result};
use crate::numeric::{bisect_boundary, golden_max};
use crate::singular::{rank0_classify, Rank0Type, Rank1Type};
use crate::tol::Tolerances;

pub use isoenergy::{isoenergy_classify, isoenergy_potential, IsoenergyReport, Piece};

/// Bifurcation type of a singular fiber component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Atom {
    /// A torus shrinking onto one elliptic circle.
    A,
    /// One hyperbolic circle: same as `V(1)`.
    B,
    /// `c >= 2` hyperbolic circles in one connected component.
    V(usize),
}

impl Atom {
    fn with_circles(c: usize) -> Atom {
        if c == 1 {
            Atom::B
        } else {
            Atom::V(c)
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::A => f.write_str("A"),
            Atom::B => f.write_str("B"),
            Atom::V(c) => write!(f, "V{c}"),
        }
    }
}

impl FromStr for Atom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Atom::A),
            "B" | "V1" => Ok(Atom::B),
            _ => s
                .strip_prefix('V')
                .and_then(|c| c.parse::<usize>().ok())
                .filter(|&c| c >= 2)
                .map(Atom::V)
                .ok_or_else(|| Error::validation("atom", format!("unknown atom `{s}`"))),
        }
    }
}

impl From<Atom> for String {
    fn from(a: Atom) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Atom {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A critical circle of the fiber: `h = W` and `dW/dx = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCircle {
    pub x: f64,
    pub w_dxx: f64,
    #[serde(rename = "type")]
    pub kind: Rank1Type,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberReport {
    pub h: f64,
    pub k: f64,
    /// `x`-intervals where `h >= W(k, x)`, one per component. An endpoint at
    /// `+-sqrt(a)` means the curve closes through that pole.
    pub regions: Vec<(f64, f64)>,
    pub critical_x: Vec<f64>,
    pub critical: Vec<CriticalCircle>,
    /// Connected components, that is Liouville tori for a regular value.
    pub components: usize,
    pub atom: Option<Atom>,
    pub warnings: Vec<String>,
}

impl FiberReport {
    pub fn is_regular(&self) -> bool {
        self.critical.is_empty()
    }
}

/// Relative gaps at which the pole limits are sampled.
const POLE_OFFSETS: [f64; 2] = [1e-7, 1e-10];
const X_TOL: f64 = 1e-13;
/// Half-width, relative to `sqrt(a)`, and size of the local grid around a seed.
const SEED_WIDTH: f64 = 0.02;
const SEED_POINTS: usize = 256;

struct Level<'a> {
    sys: &'a SystemSpec,
    orb: &'a OrbitParams,
    h: f64,
    k: f64,
}

impl Level<'_> {
    /// `h - W(k, x)`, `-inf` where the system is undefined.
    fn f(&self, x: f64) -> f64 {
        self.sys
            .w(self.orb, self.k, x)
            .ok()
            .filter(|w| w.is_finite())
            .map_or(f64::NEG_INFINITY, |w| self.h - w)
    }

    /// Newton on `dW/dx` from `x0`, kept inside `[lo, hi]`.
    fn polish(&self, x0: f64, lo: f64, hi: f64) -> f64 {
        let mut x = x0;
        let Ok(mut best) = self
            .sys
            .reduced_potential(self.orb, self.k, x)
            .map(|w| w.w_dx.abs())
        else {
            return x0;
        };
        for _ in 0..8 {
            let Ok(w) = self.sys.reduced_potential(self.orb, self.k, x) else {
                break;
            };
            if w.w_dxx == 0.0 {
                break;
            }
            let next = x - w.w_dx / w.w_dxx;
            if !(lo..=hi).contains(&next) {
                break;
            }
            match self.sys.reduced_potential(self.orb, self.k, next) {
                Ok(wn) if wn.w_dx.abs() < best => {
                    best = wn.w_dx.abs();
                    x = next;
                }
                _ => break,
            }
        }
        x
    }

    /// The pole limit of the curve exists only when `g - k x` vanishes there;
    /// otherwise `W` blows up.
    fn pole_reachable(&self, pole: f64) -> bool {
        let g = self.orb.g;
        (g - self.k * pole).abs() <= 1e-9 * (1.0 + g.abs() + (self.k * pole).abs())
    }
}

/// Grid in the open interval, dense near the poles.
fn chebyshev(pole: f64, n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n)
        .map(|i| -pole * (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos())
        .collect();
    for eps in POLE_OFFSETS {
        xs.push(-pole * (1.0 - eps));
        xs.push(pole * (1.0 - eps));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Clone, Copy)]
struct Node {
    x: f64,
    f: f64,
    critical: Option<CriticalCircle>,
    /// A double zero of `h - W`: part of the fiber even if `f` rounds below 0.
    touch: bool,
}

pub fn fiber_analyze(
    sys: &SystemSpec,
    orb: &OrbitParams,
    h: f64,
    k: f64,
    n_grid: usize,
) -> Result<FiberReport> {
    fiber_analyze_with(sys, orb, h, k, n_grid, &[], &Tolerances::default())
}

/// Like [`fiber_analyze`], with the grid refined around each of `seeds`,
/// where critical circles are expected.
pub fn fiber_analyze_with(
    sys: &SystemSpec,
    orb: &OrbitParams,
    h: f64,
    k: f64,
    n_grid: usize,
    seeds: &[f64],
    tol: &Tolerances,
) -> Result<FiberReport> {
    if n_grid < 256 {
        return Err(Error::validation("n_grid", "must be at least 256"));
    }
    if !h.is_finite() || !k.is_finite() {
        return Err(Error::validation("(h, k)", "must be finite"));
    }
    let level = Level { sys, orb, h, k };
    let pole = orb.pole();
    let mut xs = chebyshev(pole, n_grid);
    for &s in seeds.iter().filter(|s| s.abs() < pole) {
        let w = SEED_WIDTH * pole;
        let (lo, hi) = ((s - w).max(xs[0]), (s + w).min(xs[xs.len() - 1]));
        xs.extend((0..=SEED_POINTS).map(|i| lo + (hi - lo) * i as f64 / SEED_POINTS as f64));
        xs.push(s);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let fs: Vec<f64> = xs.par_iter().map(|&x| level.f(x)).collect();
    let tol_f = 1e-9 * (1.0 + h.abs());
    let tau_w = tol.tau_w(k);

    let mut nodes: Vec<Node> = xs
        .iter()
        .zip(&fs)
        .map(|(&x, &f)| Node {
            x,
            f,
            critical: None,
            touch: false,
        })
        .collect();

    // Refine every interior extremum of f; the double zeros of h - W are
    // exactly the extrema with f = 0.
    let mut extra = Vec::new();
    for j in 1..xs.len() - 1 {
        let (l, c, r) = (fs[j - 1], fs[j], fs[j + 1]);
        if !(l.is_finite() && c.is_finite() && r.is_finite()) {
            continue;
        }
        let is_max = c >= l && c >= r;
        let is_min = c <= l && c <= r;
        if !(is_max || is_min) || (l == c && c == r) {
            continue;
        }
        let sign = if is_max { 1.0 } else { -1.0 };
        let (xe, _) = golden_max(|x| sign * level.f(x), xs[j - 1], xs[j + 1], X_TOL);
        let xe = level.polish(xe, xs[j - 1], xs[j + 1]);
        let fe = level.f(xe);
        let mut node = Node {
            x: xe,
            f: fe,
            critical: None,
            touch: false,
        };
        if fe.abs() <= tol_f {
            if let Ok(w) = sys.reduced_potential(orb, k, xe) {
                let kind = if w.w_dxx > tau_w {
                    Rank1Type::Elliptic
                } else if w.w_dxx < -tau_w {
                    Rank1Type::Hyperbolic
                } else {
                    Rank1Type::Degenerate
                };
                node.critical = Some(CriticalCircle {
                    x: xe,
                    w_dxx: w.w_dxx,
                    kind,
                });
                node.touch = true;
            }
        }
        extra.push(node);
    }
    nodes.extend(extra);
    nodes.sort_by(|a, b| a.x.total_cmp(&b.x));
    nodes.dedup_by(|a, b| {
        if (a.x - b.x).abs() <= X_TOL {
            b.critical = b.critical.or(a.critical);
            b.touch |= a.touch;
            true
        } else {
            false
        }
    });
    // One circle found from two starts shows up twice; keep one node.
    let cluster = 1e-6 * pole;
    let mut last_crit: Option<usize> = None;
    for j in 0..nodes.len() {
        if nodes[j].critical.is_none() {
            continue;
        }
        if let Some(p) = last_crit {
            let between_off = nodes[p + 1..j].iter().any(|n| n.f < -tol_f);
            if nodes[j].x - nodes[p].x <= cluster && !between_off {
                nodes[j].critical = None;
                continue;
            }
        }
        last_crit = Some(j);
    }
    let on = |n: &Node| n.f > 0.0 || (n.touch && n.f >= -tol_f);

    let lo_reach = level.pole_reachable(-pole);
    let hi_reach = level.pole_reachable(pole);
    let mut warnings = Vec::new();
    let mut regions = Vec::new();
    let mut critical = Vec::new();
    let mut atoms: Vec<(usize, Atom)> = Vec::new();
    let mut suppressed = false;
    let last = nodes.len() - 1;
    let mut i = 0;
    while i < nodes.len() {
        if !on(&nodes[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < last && on(&nodes[i + 1]) {
            i += 1;
        }
        let end = i;
        i += 1;

        let run = &nodes[start..=end];
        let singleton = run.len() == 1 && run[0].touch;
        let lo = if singleton {
            run[0].x
        } else if start == 0 {
            if lo_reach {
                -pole
            } else {
                nodes[0].x
            }
        } else {
            bisect_boundary(
                |x| level.f(x) >= 0.0,
                nodes[start].x,
                nodes[start - 1].x,
                X_TOL,
            )
        };
        let hi = if singleton {
            run[0].x
        } else if end == last {
            if hi_reach {
                pole
            } else {
                nodes[last].x
            }
        } else {
            bisect_boundary(|x| level.f(x) >= 0.0, nodes[end].x, nodes[end + 1].x, X_TOL)
        };
        regions.push((lo, hi));

        let circles: Vec<CriticalCircle> = run.iter().filter_map(|n| n.critical).collect();
        if circles.is_empty() {
            continue;
        }
        if let Some(c) = circles.iter().find(|c| c.kind == Rank1Type::Degenerate) {
            warnings.push(format!(
                "degenerate tangency at x = {}: h - W has a zero of order > 2, classification suppressed",
                c.x
            ));
            suppressed = true;
        } else if singleton && circles[0].kind == Rank1Type::Elliptic {
            atoms.push((1, Atom::A));
        } else {
            let hyperbolic = circles
                .iter()
                .filter(|c| c.kind == Rank1Type::Hyperbolic)
                .count();
            atoms.push((hyperbolic, Atom::with_circles(hyperbolic)));
        }
        critical.extend(circles);
    }

    // A value on a rank-0 image: the pole itself is a critical point.
    for (p, reach, x_near) in [
        (Pole::Minus, lo_reach, nodes[0].x),
        (Pole::Plus, hi_reach, nodes[last].x),
    ] {
        if !reach || level.f(x_near).abs() > 1e-6 * (1.0 + h.abs()) {
            continue;
        }
        if let Ok(r0) = rank0_classify(sys, orb, p, tol) {
            match r0.kind {
                Rank0Type::FocusFocus => {
                    warnings
                        .push("focus-focus value, fiber classification out of scope".to_string());
                    suppressed = true;
                }
                Rank0Type::CenterCenter => {
                    warnings.push(format!("rank-0 value at the pole Z{}", p.symbol()));
                    if !regions
                        .iter()
                        .any(|r| r.0 == p.sign() * pole || r.1 == p.sign() * pole)
                    {
                        regions.push((p.sign() * pole, p.sign() * pole));
                    }
                }
                Rank0Type::Degenerate => {
                    warnings.push(format!(
                        "degenerate rank-0 value at the pole Z{}",
                        p.symbol()
                    ));
                    suppressed = true;
                }
            }
        }
    }
    regions.sort_by(|l, r| l.0.total_cmp(&r.0));

    let atom = if suppressed {
        None
    } else {
        atoms.iter().max_by_key(|(c, _)| *c).map(|(_, a)| *a)
    };
    if atoms.len() > 1 {
        warnings.push(format!(
            "{} singular components; reporting the largest atom",
            atoms.len()
        ));
    }
    Ok(FiberReport {
        h,
        k,
        components: regions.len(),
        critical_x: critical.iter().map(|c| c.x).collect(),
        critical,
        regions,
        atom,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub x: f64,
    pub h: f64,
    pub k: f64,
    pub atom: Option<Atom>,
    pub delta: f64,
    /// Torus counts at `h - delta` and `h + delta`.
    pub below: usize,
    pub above: usize,
    pub fiber: FiberReport,
    pub warnings: Vec<String>,
}

/// Classifies the bifurcation across a point of a rank-1 curve.
pub fn atom_at_diagram_point(
    sys: &SystemSpec,
    orb: &OrbitParams,
    sample: &CurveSample,
    n_grid: usize,
) -> Result<AtomReport> {
    let delta = 1e-4 * (1.0 + sample.h.abs());
    let tol = Tolerances::default();
    let seeds = [sample.x];
    let analyze = |h: f64| fiber_analyze_with(sys, orb, h, sample.k, n_grid, &seeds, &tol);
    let fiber = analyze(sample.h)?;
    let below = analyze(sample.h - delta)?.components;
    let above = analyze(sample.h + delta)?.components;
    let mut warnings = fiber.warnings.clone();
    let atom = if sample.kind == Rank1Type::Degenerate {
        warnings.push(format!(
            "degenerate sample at x = {}: classification refused",
            sample.x
        ));
        None
    } else {
        if !fiber
            .critical_x
            .iter()
            .any(|&x| (x - sample.x).abs() <= 1e-6)
        {
            warnings.push(format!(
                "the fiber has no critical circle at x = {}",
                sample.x
            ));
        }
        fiber.atom
    };
    if atom.is_some() && below == above {
        warnings.push(format!(
            "torus count {below} unchanged across h +- {delta:e}: the critical circle is within delta of a cusp"
        ));
    }
    Ok(AtomReport {
        x: sample.x,
        h: sample.h,
        k: sample.k,
        atom,
        delta,
        below,
        above,
        fiber,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_diagram, DiagramOptions};
    use crate::e3::Preset;
    use crate::singular::rank1_classify;

    fn orbit(a: f64, g: f64) -> OrbitParams {
        OrbitParams::new(a, g).unwrap()
    }

    #[test]
    fn lagrange_origin_is_one_torus() {
        let sys = Preset::Lagrange.system();
        let r = fiber_analyze(&sys, &orbit(1.0, 0.0), 0.0, 0.0, 512).unwrap();
        assert_eq!(r.components, 1);
        assert!(r.is_regular() && r.atom.is_none());
        let (lo, hi) = r.regions[0];
        assert!(lo.abs() < 1e-12 && hi == 1.0, "{:?}", r.regions);
    }

    #[test]
    fn small_torus_near_the_upper_pole() {
        let sys = Preset::Lagrange.system();
        let r = fiber_analyze(&sys, &orbit(1.0, 0.0), -1.0 + 1e-3, 0.0, 512).unwrap();
        assert_eq!(r.components, 1);
        assert!((r.regions[0].0 - (1.0 - 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn equal_maxima_give_v2() {
        let sys = SystemSpec::from_strs(1.0, "0", "0", "0", "-(x^2-1/4)^2").unwrap();
        let r = fiber_analyze(&sys, &orbit(1.0, 0.0), 0.0, 0.0, 512).unwrap();
        assert_eq!(r.components, 1, "{r:?}");
        assert_eq!(r.atom, Some(Atom::V(2)));
        assert_eq!(r.critical_x.len(), 2);
        assert!(r.critical_x.iter().all(|x| (x.abs() - 0.5).abs() < 1e-6));
    }

    #[test]
    fn elliptic_sample_is_atom_a() {
        let sys = Preset::Lagrange.system();
        let orb = orbit(1.0, 0.0);
        let x = 1.0 / 3.0;
        let sample = CurveSample {
            x,
            k: (1.0 - x * x) / x.sqrt(),
            h: (1.0 - 3.0 * x * x) / (2.0 * x),
            kind: Rank1Type::Elliptic,
            cusp: false,
        };
        let r = atom_at_diagram_point(&sys, &orb, &sample, 512).unwrap();
        assert_eq!(r.atom, Some(Atom::A));
        assert_eq!((r.below, r.above), (0, 1));
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }

    #[test]
    fn hyperbolic_sample_is_atom_b() {
        let sys = SystemSpec::from_strs(1.0, "0", "0", "0", "-x^2").unwrap();
        let orb = orbit(1.0, 0.1);
        let d = build_diagram(&sys, &orb, &DiagramOptions::default()).unwrap();
        let hyperbolic: Vec<CurveSample> = d
            .curves
            .iter()
            .flat_map(|c| &c.samples)
            .filter(|s| s.kind == Rank1Type::Hyperbolic && s.k.abs() < 10.0)
            .filter(|s| {
                rank1_classify(&sys, &orb, s.k, s.x, &Tolerances::default())
                    .unwrap()
                    .w_dxx
                    < -0.3
            })
            .copied()
            .collect();
        assert!(!hyperbolic.is_empty());
        for sample in hyperbolic.iter().step_by(hyperbolic.len() / 8 + 1) {
            let r = atom_at_diagram_point(&sys, &orb, sample, 512).unwrap();
            assert_eq!(r.atom, Some(Atom::B), "{r:?}");
            assert_eq!((r.below, r.above), (2, 1), "{r:?}");
        }
    }

    #[test]
    fn degenerate_sample_is_refused() {
        let sys = Preset::Lagrange.system();
        let sample = CurveSample {
            x: 0.5,
            k: 1.0,
            h: 0.0,
            kind: Rank1Type::Degenerate,
            cusp: false,
        };
        let r = atom_at_diagram_point(&sys, &orbit(1.0, 0.0), &sample, 256).unwrap();
        assert!(r.atom.is_none() && !r.warnings.is_empty());
    }

    #[test]
    fn atom_names_round_trip() {
        for a in [Atom::A, Atom::B, Atom::V(3)] {
            assert_eq!(a.to_string().parse::<Atom>().unwrap(), a);
        }
        assert_eq!("V1".parse::<Atom>().unwrap(), Atom::B);
        assert!("V0".parse::<Atom>().is_err());
        assert_eq!(serde_json::to_string(&Atom::V(2)).unwrap(), "\"V2\"");
    }

    #[test]
    fn rejects_coarse_grid() {
        let sys = Preset::Lagrange.system();
        assert!(fiber_analyze(&sys, &orbit(1.0, 0.0), 0.0, 0.0, 100).is_err());
    }
}
