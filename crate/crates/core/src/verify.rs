//! Oracle-agreement suite: each check compares a closed-form result with an
//! independent numerical computation, or tests an identity that must hold
//! for every system, on seeded random samples.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagram::{build_diagram, envelope_residual, BifurcationDiagram, DiagramOptions};
use crate::dynamics::{
    conservation_report, eigen_residual, integrate, integrate_k, linearize_reduced,
    LinearizationBase,
};
use crate::e3::{directional, OrbitParams, PhasePoint, Pole, Preset, ReducedPoint, SystemSpec};
use crate::error::Result;
use crate::fibers::{fiber_analyze_with, isoenergy_classify, Piece};
use crate::singular::{
    critical_circle, proportionality_residual, rank0_classify, rank0_point, rank1_classify,
    Rank0Type, Rank1Type,
};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn bound(name: &'static str, worst: f64, limit: f64) -> Check {
        Check {
            name,
            passed: worst <= limit,
            detail: format!("worst {worst:.3e} (limit {limit:.0e})"),
        }
    }

    fn failed(name: &'static str, detail: impl Into<String>) -> Check {
        Check {
            name,
            passed: false,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// A random polynomial in `x` of degree at most `deg`, as source text.
pub fn random_polynomial(rng: &mut impl Rng, deg: usize) -> String {
    (0..=deg)
        .map(|i| {
            let c = (rng.gen_range(-1.0..1.0) * 1000.0f64).round() / 1000.0;
            match i {
                0 => format!("({c})"),
                1 => format!("({c})*x"),
                _ => format!("({c})*x^{i}"),
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// `beta` in `[0.5, 2]` and polynomial `g1, g2, g3, V` of degree at most 3.
pub fn random_system(rng: &mut impl Rng) -> SystemSpec {
    let beta = rng.gen_range(0.5..2.0);
    let mut poly = || random_polynomial(rng, 3);
    let (g1, g2, g3, v) = (poly(), poly(), poly(), poly());
    SystemSpec::from_strs(beta, &g1, &g2, &g3, &v).expect("generated polynomials parse")
}

pub fn random_orbit(rng: &mut impl Rng) -> OrbitParams {
    OrbitParams::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)).expect("positive a")
}

/// A chart point with `x^2 <= 0.9 a`.
pub fn random_chart_point(rng: &mut impl Rng, orb: &OrbitParams) -> ReducedPoint {
    let x = rng.gen_range(-0.95..0.95) * orb.pole();
    ReducedPoint::new(
        x,
        rng.gen_range(-1.0..1.0),
        rng.gen_range(0.0..TAU),
        rng.gen_range(-2.0..2.0),
        orb.a,
        orb.g,
    )
}

/// `dH(sgrad K)`, `dF1(sgrad H)`, `dF2(sgrad H)`, each divided by
/// `1 + |grad H|`, at `p`.
pub fn bracket_residuals(sys: &SystemSpec, p: &PhasePoint) -> Result<[f64; 3]> {
    let (hs, hr) = sys.gradient(p)?;
    let scale = 1.0 + (hs.norm_squared() + hr.norm_squared()).sqrt();
    let xh = sys.sgrad_h(p)?;
    let dh_xk = directional(&hs, &hr, &p.sgrad_k());
    let df1 = directional(&Vector3::zeros(), &(p.r * 2.0), &xh);
    let df2 = directional(&p.r, &p.s, &xh);
    Ok([dh_xk.abs() / scale, df1.abs() / scale, df2.abs() / scale])
}

struct Case {
    sys: SystemSpec,
    orb: OrbitParams,
    diagram: Option<BifurcationDiagram>,
}

fn worst<I: IntoIterator<Item = Result<f64>>>(values: I) -> Result<f64> {
    values.into_iter().try_fold(0.0f64, |acc, v| {
        v.map(|v| {
            if v.is_nan() {
                f64::INFINITY
            } else {
                acc.max(v)
            }
        })
    })
}

fn check_or_error(name: &'static str, limit: f64, value: Result<f64>) -> Check {
    match value {
        Ok(w) => Check::bound(name, w, limit),
        Err(e) => Check::failed(name, e.to_string()),
    }
}

/// Runs every check on the presets, `extra` (typically the configured
/// system) and seeded random systems.
pub fn run_suite(extra: Option<(&SystemSpec, &OrbitParams)>, seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<Case> = Preset::ALL
        .iter()
        .flat_map(|p| {
            [(1.0, 0.0), (1.0, 0.5)].map(|(a, g)| Case {
                sys: p.system(),
                orb: OrbitParams::new(a, g).expect("valid orbit"),
                diagram: None,
            })
        })
        .collect();
    if let Some((sys, orb)) = extra {
        cases.push(Case {
            sys: sys.clone(),
            orb: *orb,
            diagram: None,
        });
    }
    let random: Vec<(SystemSpec, OrbitParams)> = (0..5)
        .map(|_| (random_system(&mut rng), random_orbit(&mut rng)))
        .collect();
    let tol = Tolerances::default();
    let opts = DiagramOptions::default();
    for c in &mut cases {
        c.diagram = build_diagram(&c.sys, &c.orb, &opts).ok();
    }

    let mut checks = Vec::new();

    // Identities on random chart points.
    let mut bracket = Vec::new();
    let mut chart = Vec::new();
    let mut field = Vec::new();
    for (sys, orb) in random
        .iter()
        .map(|(s, o)| (s, o))
        .chain(cases.iter().map(|c| (&c.sys, &c.orb)))
    {
        for _ in 0..100 {
            let r = random_chart_point(&mut rng, orb);
            let Ok(p) = r.to_phase() else { continue };
            bracket.push(bracket_residuals(sys, &p).map(|v| v.into_iter().fold(0.0, f64::max)));
            chart.push(ReducedPoint::from_phase(&p).map(|back| {
                let d = [
                    back.x - r.x,
                    back.m - r.m,
                    angle_gap(back.phi, r.phi),
                    back.k - r.k,
                ];
                d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }));
            field.push((|| {
                let direct = sys.reduced_sgrad_h(&r)?;
                let pushed = crate::e3::pushforward(&p, &sys.sgrad_h(&p)?)?;
                let scale = 1.0 + direct.iter().map(|v| v * v).sum::<f64>().sqrt();
                Ok(direct
                    .iter()
                    .zip(pushed)
                    .fold(0.0f64, |m, (d, p)| m.max((d - p).abs()))
                    / scale)
            })());
        }
    }
    checks.push(check_or_error(
        "commutation_and_casimirs",
        1e-9,
        worst(bracket),
    ));
    checks.push(check_or_error("chart_round_trip", 1e-9, worst(chart)));
    checks.push(check_or_error(
        "reduced_field_pushforward",
        1e-9,
        worst(field),
    ));

    // Rank 0: equilibria and closed-form spectra against finite differences.
    let mut eq = Vec::new();
    let mut spec = Vec::new();
    let mut pairs = Vec::new();
    for c in &cases {
        for pole in [Pole::Plus, Pole::Minus] {
            eq.push(c.sys.sgrad_h(&rank0_point(&c.orb, pole)).map(|v| v.norm()));
            let Ok(rep) = rank0_classify(&c.sys, &c.orb, pole, &tol) else {
                continue;
            };
            if rep.kind == Rank0Type::Degenerate {
                continue;
            }
            spec.push((|| {
                let lin = linearize_reduced(
                    &c.sys,
                    &c.orb,
                    LinearizationBase::Pole(pole),
                    Some((1.0, 0.0)),
                    None,
                )?;
                let pred = rep.spectrum();
                let scale = pred.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-12);
                pairs.push(pairing(&lin.eigenvalues));
                Ok(eigen_residual(&pred, &lin.eigenvalues) / scale)
            })());
        }
    }
    checks.push(check_or_error("rank0_equilibria", 1e-10, worst(eq)));
    checks.push(check_or_error("rank0_spectrum", 1e-5, worst(spec)));

    // Rank 1: envelope, proportionality, spectra.
    let mut env = Vec::new();
    let mut prop = Vec::new();
    let mut mu = Vec::new();
    let mut consistency = Vec::new();
    for c in &cases {
        let Some(d) = &c.diagram else {
            env.push(Err(crate::error::Error::Precondition(
                "diagram failed".to_string(),
            )));
            continue;
        };
        for curve in &d.curves {
            for s in &curve.samples {
                env.push(
                    envelope_residual(&c.sys, &c.orb, s.h, s.k, s.x)
                        .map(|(r1, r2)| r1.abs().max(r2.abs())),
                );
            }
            let n = curve.samples.len();
            for s in curve
                .samples
                .iter()
                .step_by(n / 6 + 1)
                .filter(|s| s.k.abs() < 50.0)
            {
                let Ok(p1) = rank1_classify(&c.sys, &c.orb, s.k, s.x, &tol) else {
                    continue;
                };
                let phi = rng.gen_range(0.0..TAU);
                prop.push(
                    critical_circle(&c.sys, &c.orb, s.x, s.k, phi)
                        .and_then(|p| proportionality_residual(&c.sys, &p, p1.lambda)),
                );
                if p1.kind == Rank1Type::Degenerate
                    || p1.w_dxx.abs() < 1e-2
                    || s.x.abs() > 0.95 * c.orb.pole()
                {
                    continue;
                }
                mu.push((|| {
                    let base = LinearizationBase::Reduced {
                        x: s.x,
                        m: p1.m,
                        k: s.k,
                    };
                    let lin = linearize_reduced(&c.sys, &c.orb, base, None, None)?;
                    pairs.push(pairing(&lin.eigenvalues));
                    let pred = [p1.mu[0], p1.mu[1]];
                    Ok(eigen_residual(&pred, &lin.eigenvalues) / (1.0 + p1.mu[0].norm()))
                })());
                consistency.push((|| {
                    let f = fiber_analyze_with(&c.sys, &c.orb, s.h, s.k, 512, &[s.x], &tol)?;
                    Ok(f.critical_x
                        .iter()
                        .map(|x| (x - s.x).abs())
                        .fold(f64::INFINITY, f64::min))
                })());
            }
        }
    }
    checks.push(check_or_error("envelope_residuals", 1e-9, worst(env)));
    checks.push(check_or_error("rank1_proportionality", 1e-9, worst(prop)));
    checks.push(check_or_error("rank1_spectrum", 1e-5, worst(mu)));
    checks.push(check_or_error(
        "spectrum_pairing",
        1e-6,
        worst(pairs.into_iter().map(Ok)),
    ));
    checks.push(check_or_error(
        "fiber_diagram_consistency",
        1e-6,
        worst(consistency),
    ));

    // Isoenergy topology on random (system, h).
    let mut iso_bad = Vec::new();
    for i in 0..20 {
        let (sys, orb) = if i < random.len() {
            random[i].clone()
        } else {
            (random_system(&mut rng), random_orbit(&mut rng))
        };
        let h = rng.gen_range(-2.0..3.0);
        match isoenergy_classify(&sys, &orb, h, 512) {
            Ok(r) => {
                let spheres = r.pieces.iter().filter(|p| **p == Piece::S3).count();
                let rp3_alone = !r.pieces.contains(&Piece::RP3) || r.pieces.len() == 1;
                if spheres > 2 || !rp3_alone {
                    iso_bad.push(format!("h = {h}: {:?}", r.pieces));
                }
            }
            Err(e) => iso_bad.push(e.to_string()),
        }
    }
    checks.push(Check {
        name: "isoenergy_pieces",
        passed: iso_bad.is_empty(),
        detail: if iso_bad.is_empty() {
            "20 cases: at most two S3, RP3 only alone".to_string()
        } else {
            iso_bad.join("; ")
        },
    });

    // Integrator.
    let lag = Preset::Lagrange.system();
    let p0 = lagrange_reference_point();
    let drift =
        |dt: f64, n: usize| conservation_report(&lag, &integrate(&lag, p0, dt, n)).map(|r| r.max());
    checks.push(check_or_error(
        "rk4_conservation",
        1e-8,
        drift(1e-3, 10_000),
    ));
    checks.push(match (drift(1e-2, 1000), drift(5e-3, 2000)) {
        (Ok(coarse), Ok(fine)) => {
            let ratio = coarse / fine;
            Check {
                name: "rk4_order",
                passed: (12.0..=20.0).contains(&ratio),
                detail: format!("drift ratio {ratio:.2} under dt halving (1e-2 -> 5e-3)"),
            }
        }
        (Err(e), _) | (_, Err(e)) => Check::failed("rk4_order", e.to_string()),
    });
    let traj = integrate_k(p0, TAU / 2000.0, 2000);
    checks.push(Check::bound(
        "k_flow_periodic",
        (traj.last().to_vector() - p0.to_vector()).amax(),
        1e-6,
    ));

    VerifyReport { seed, checks }
}

/// The Lagrange-top trajectory used for the integrator checks.
pub fn lagrange_reference_point() -> PhasePoint {
    PhasePoint::new([0.3, 0.0, 0.5], [0.0, 0.6, 0.8])
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Largest distance from an eigenvalue to the nearest negated eigenvalue,
/// relative to the spectral radius.
fn pairing(eig: &[Complex64]) -> f64 {
    let scale = 1.0 + eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    eig.iter()
        .map(|z| {
            eig.iter()
                .map(|w| (z + w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_systems_are_reproducible() {
        let a = random_system(&mut ChaCha8Rng::seed_from_u64(7));
        let b = random_system(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn pairing_of_symmetric_spectra() {
        let z = [Complex64::new(0.0, 2.0), Complex64::new(0.0, -2.0)];
        assert!(pairing(&z) < 1e-15);
        assert!(pairing(&[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]) > 0.1);
    }

    #[test]
    fn angle_gap_wraps() {
        assert!((angle_gap(0.01, TAU - 0.01) - 0.02).abs() < 1e-12);
    }
}
