//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test --release --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liouville::diagram::{
    build_diagram, envelope_residual, BifurcationDiagram, CurveSample, DiagramOptions,
};
use liouville::dynamics::{
    conservation_report, integrate, integrate_k, linearize_reduced, match_spectra,
    LinearizationBase,
};
use liouville::e3::{OrbitParams, Pole, Preset, SystemSpec};
use liouville::fibers::{
    atom_at_diagram_point, fiber_analyze, isoenergy_classify, isoenergy_potential, Atom, Piece,
};
use liouville::singular::{
    quad_coeffs, rank0_classify, rank1_classify, rank1_m, rank1_solve_k, theta_decomposition,
    Rank0Type, Rank1Type,
};
use liouville::tol::Tolerances;
use liouville::verify::{
    bracket_residuals, lagrange_reference_point, random_chart_point, random_orbit, random_system,
};
use liouville::Result;

const SEED: u64 = 0x5eed_2026;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn orbit(a: f64, g: f64) -> OrbitParams {
    OrbitParams::new(a, g).unwrap()
}

fn sys(v: &str) -> SystemSpec {
    SystemSpec::from_strs(1.0, "0", "0", "0", v).unwrap()
}

fn lag() -> SystemSpec {
    Preset::Lagrange.system()
}

fn diagram(s: &SystemSpec, o: &OrbitParams) -> BifurcationDiagram {
    build_diagram(s, o, &DiagramOptions::default()).unwrap()
}

fn samples(d: &BifurcationDiagram) -> impl Iterator<Item = &CurveSample> {
    d.curves.iter().flat_map(|c| c.samples.iter())
}

/// Largest distance between a predicted spectrum and the computed one,
/// relative to the predicted spectral radius.
fn spectrum_gap(predicted: &[Complex64], computed: &[Complex64]) -> f64 {
    let radius = predicted.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match_spectra(predicted, computed).1 / radius.max(1e-300)
}

/// The two eigenvalues of largest modulus in the reduced chart at a critical circle.
fn transverse_pair(s: &SystemSpec, o: &OrbitParams, x: f64, k: f64) -> Result<Vec<Complex64>> {
    let m = rank1_m(s, o, x)?;
    let lin = linearize_reduced(s, o, LinearizationBase::Reduced { x, m, k }, None, None)?;
    let mut eig = lin.eigenvalues;
    eig.sort_by(|l, r| r.norm().total_cmp(&l.norm()));
    eig.truncate(2);
    Ok(eig)
}

fn fmt_pair(p: &[Complex64]) -> String {
    p.iter()
        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}

fn commutation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut points = 0;
    for _ in 0..5 {
        let s = random_system(&mut rng);
        let o = random_orbit(&mut rng);
        for _ in 0..100 {
            let p = random_chart_point(&mut rng, &o).to_phase().unwrap();
            worst = bracket_residuals(&s, &p)
                .unwrap()
                .into_iter()
                .fold(worst, f64::max);
            points += 1;
        }
    }
    outcome(
        worst <= 1e-9,
        format!("{points} points, worst scaled residual {worst:.3e}"),
    )
}

fn rank0() -> Outcome {
    let tol = Tolerances::default();
    let mut vanish = 0.0f64;
    let mut spec = 0.0f64;
    for preset in Preset::ALL {
        for o in [orbit(1.0, 0.0), orbit(1.0, 0.5)] {
            let s = preset.system();
            for pole in Pole::BOTH {
                let r = rank0_classify(&s, &o, pole, &tol).unwrap();
                vanish = vanish.max(s.sgrad_h(&r.point).unwrap().amax());
                let lin = linearize_reduced(
                    &s,
                    &o,
                    LinearizationBase::Pole(pole),
                    Some((1.0, 0.0)),
                    None,
                )
                .unwrap();
                spec = spec.max(spectrum_gap(&r.spectrum(), &lin.eigenvalues));
            }
        }
    }
    let o = orbit(1.0, 0.0);
    let plus = rank0_classify(&lag(), &o, Pole::Plus, &tol).unwrap();
    let minus = rank0_classify(&lag(), &o, Pole::Minus, &tol).unwrap();
    let types = (plus.q - 1.0).abs() < 1e-9
        && plus.kind == Rank0Type::CenterCenter
        && (minus.q + 1.0).abs() < 1e-9
        && minus.kind == Rank0Type::FocusFocus;
    outcome(
        vanish <= 1e-10 && spec <= 1e-5 && types,
        format!(
            "|sgrad H(P)| {vanish:.1e}; spectrum rel gap {spec:.2e}; LAG q+ = {:.9} {:?}, q- = {:.9} {:?}",
            plus.q, plus.kind, minus.q, minus.kind
        ),
    )
}

fn rank1_closed_form() -> Outcome {
    let o = orbit(1.0, 0.0);
    let d = diagram(&lag(), &o);
    let mut worst = 0.0f64;
    let mut n = 0;
    for c in &d.curves {
        for s in c.samples.iter().filter(|s| (0.05..=0.95).contains(&s.x)) {
            let k = c.branch.sign() * (1.0 - s.x * s.x) / s.x.sqrt();
            let h = (1.0 - 3.0 * s.x * s.x) / (2.0 * s.x);
            worst = worst.max((s.k - k).abs()).max((s.h - h).abs());
            n += 1;
        }
    }

    let mut envelope = 0.0f64;
    for preset in Preset::ALL {
        for o in [orbit(1.0, 0.0), orbit(1.0, 0.5)] {
            let s = preset.system();
            let d = diagram(&s, &o);
            for p in samples(&d) {
                let (r0, r1) = envelope_residual(&s, &o, p.h, p.k, p.x).unwrap();
                envelope = envelope.max(r0.abs()).max(r1.abs());
            }
        }
    }

    // Find x with k+(x) = 1e3 by bisection on the library's roots.
    let tol = Tolerances::default();
    let k_plus = |x: f64| {
        rank1_solve_k(&lag(), &o, x, &tol)
            .unwrap()
            .to_vec()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (mut lo, mut hi) = (1e-9, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if k_plus(mid) > 1e3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = k_plus(lo);
    let pt = rank1_classify(&lag(), &o, k, lo, &tol).unwrap();
    let ratio = pt.h / (k * k);
    let asym = (ratio - 0.5 / lag().beta).abs();

    outcome(
        worst <= 1e-9 && envelope <= 1e-9 && asym <= 1e-3,
        format!(
            "{n} samples, closed-form gap {worst:.2e}; envelope residual {envelope:.2e}; h/k^2 = {ratio:.6} at k = {k:.1}"
        ),
    )
}

fn rank1_spectrum() -> Outcome {
    let o = orbit(1.0, 0.0);
    let tol = Tolerances::default();
    let (x, k) = (1.0 / 3.0, 8.0 / 9.0 * 3f64.sqrt());
    let pt = rank1_classify(&lag(), &o, k, x, &tol).unwrap();
    let w_ok = (pt.w_dxx - 4.5).abs() <= 1e-9;
    let type_ok = pt.kind == Rank1Type::Elliptic;
    let numeric = transverse_pair(&lag(), &o, x, k).unwrap();
    let stated = [
        Complex64::new(0.0, 2.121320),
        Complex64::new(0.0, -2.121320),
    ];
    let mu_gap = spectrum_gap(&stated, &numeric);

    let oh = orbit(1.0, 0.1);
    let sh = sys("-x^2");
    let d = diagram(&sh, &oh);
    let hyp = samples(&d)
        .find(|s| s.kind == Rank1Type::Hyperbolic)
        .copied();
    let (hyp_ok, hyp_detail) = match hyp {
        None => (false, "no hyperbolic sample".to_string()),
        Some(s) => {
            let p = rank1_classify(&sh, &oh, s.k, s.x, &tol).unwrap();
            let numeric = transverse_pair(&sh, &oh, s.x, s.k).unwrap();
            let r = (-p.w_dxx).sqrt();
            let stated = [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)];
            let gap = spectrum_gap(&stated, &numeric);
            (
                gap <= 1e-5,
                format!(
                    "hyperbolic x = {:.4}: numeric {} vs ±{r:.6} (rel gap {gap:.2e}; ±sqrt(-u w_xx) = ±{:.6})",
                    s.x,
                    fmt_pair(&numeric),
                    ((1.0 - s.x * s.x) * -p.w_dxx).sqrt()
                ),
            )
        }
    };
    outcome(
        w_ok && type_ok && mu_gap <= 1e-5 && hyp_ok,
        format!(
            "w_xx = {:.12} {:?}; numeric mu {} vs ±2.121320i (rel gap {mu_gap:.2e}; ±sqrt(-u w_xx) = ±{:.6}i); {hyp_detail}",
            pt.w_dxx,
            pt.kind,
            fmt_pair(&numeric),
            ((1.0 - x * x) * pt.w_dxx).sqrt()
        ),
    )
}

fn case_coverage() -> Outcome {
    let d = diagram(&lag(), &orbit(1.0, 0.5));
    let special = d.special_point.map(|p| (p.h, p.k));
    let special_ok =
        special.is_some_and(|(h, k)| (h - 2.125).abs() <= 1e-10 && (k + 2.0).abs() <= 1e-10);

    let parabola_ok = |v: &str| {
        diagram(&sys(v), &orbit(1.0, 0.0))
            .parabola
            .is_some_and(|p| {
                [-3.0, -0.5, 0.0, 1.0, 4.0]
                    .iter()
                    .all(|&k| (p.value(k) - k * k / 2.0).abs() <= 1e-12)
            })
    };
    let parabolas = (parabola_ok("0"), parabola_ok("-x^2"));

    // V' = (x - 1/2)^2 makes the discriminant touch zero from below at 1/2.
    let si = sys("(x - 0.5)^3/3");
    let oi = orbit(1.0, 0.0);
    let tol = Tolerances::default();
    let theta = theta_decomposition(&si, &oi, 2048, &tol).unwrap();
    let di = diagram(&si, &oi);
    let isolated = di.isolated_points.first().map(|p| {
        let q = quad_coeffs(&si, &oi, p.x0).unwrap();
        (p.x0, q.d, tol.tau_d(q.b_prime))
    });
    let isolated_ok =
        isolated.is_some_and(|(_, d, tau)| d.abs() <= tau) && !theta.isolated.is_empty();

    outcome(
        special_ok && parabolas == (true, true) && isolated_ok,
        format!(
            "special {special:?}; parabolas {parabolas:?}; isolated (x0, D, tau_D) {isolated:?}"
        ),
    )
}

fn atoms() -> Outcome {
    let tol = Tolerances::default();
    let o = orbit(1.0, 0.0);
    let regular = fiber_analyze(&lag(), &o, 0.0, 0.0, 512).unwrap();
    let regular_ok = regular.is_regular() && regular.components == 1;

    let x: f64 = 1.0 / 3.0;
    let p = rank1_classify(&lag(), &o, (1.0 - x * x) / x.sqrt(), x, &tol).unwrap();
    let sample = CurveSample {
        x,
        k: p.k,
        h: p.h,
        kind: p.kind,
        cusp: false,
    };
    let ell = atom_at_diagram_point(&lag(), &o, &sample, 512).unwrap();
    let ell_counts = (ell.below.min(ell.above), ell.below.max(ell.above));
    let ell_ok = ell.atom == Some(Atom::A) && ell_counts == (0, 1);

    let sh = sys("-x^2");
    let oh = orbit(1.0, 0.1);
    let d = diagram(&sh, &oh);
    let hyp = samples(&d)
        .find(|s| {
            s.kind == Rank1Type::Hyperbolic && !s.cusp && s.k.abs() < 10.0 && {
                rank1_classify(&sh, &oh, s.k, s.x, &tol).is_ok_and(|p| p.w_dxx < -0.3)
            }
        })
        .map(|s| atom_at_diagram_point(&sh, &oh, s, 512).unwrap());
    let hyp_counts = hyp
        .as_ref()
        .map(|r| (r.below.min(r.above), r.below.max(r.above)));
    let hyp_ok =
        hyp.as_ref().is_some_and(|r| r.atom == Some(Atom::B)) && hyp_counts == Some((1, 2));

    let v2 = fiber_analyze(&sys("-(x^2 - 1/4)^2"), &o, 0.0, 0.0, 512).unwrap();
    let v2_ok = v2.atom == Some(Atom::V(2)) && v2.components == 1 && v2.critical.len() == 2;

    outcome(
        regular_ok && ell_ok && hyp_ok && v2_ok,
        format!(
            "regular {} torus; elliptic {:?} {ell_counts:?}; hyperbolic {:?} {hyp_counts:?}; double well {:?} with {} circles",
            regular.components,
            ell.atom.map(|a| a.to_string()),
            hyp.as_ref().and_then(|r| r.atom).map(|a| a.to_string()),
            v2.atom.map(|a| a.to_string()),
            v2.critical.len()
        ),
    )
}

fn isoenergy() -> Outcome {
    let o = orbit(1.0, 0.0);
    let pieces = |s: &SystemSpec, h: f64| isoenergy_classify(s, &o, h, 512).unwrap().pieces;
    let named = pieces(&lag(), 0.0) == [Piece::S3]
        && pieces(&lag(), 2.0) == [Piece::RP3]
        && pieces(&sys("x^2"), 0.5) == [Piece::S1xS2];

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut violations = 0;
    let mut seen = std::collections::BTreeMap::new();
    for _ in 0..20 {
        let s = random_system(&mut rng);
        let o = random_orbit(&mut rng);
        let phi: Vec<f64> = (1..64)
            .map(|i| isoenergy_potential(&s, &o, o.pole() * (i as f64 / 32.0 - 1.0)).unwrap())
            .collect();
        let (lo, hi) = phi
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        let h = rng.gen_range(lo..hi + 0.5 * (hi - lo));
        let r = isoenergy_classify(&s, &o, h, 512).unwrap();
        let spheres = r.pieces.iter().filter(|&&p| p == Piece::S3).count();
        let rp3 = r.pieces.contains(&Piece::RP3);
        if spheres > 2 || (rp3 && r.pieces.len() != 1) {
            violations += 1;
        }
        *seen.entry(format!("{:?}", r.pieces)).or_insert(0) += 1;
    }
    outcome(
        named && violations == 0,
        format!("named cases {named}; sweep violations {violations}; seen {seen:?}"),
    )
}

fn oracles() -> Outcome {
    let s = lag();
    let p0 = lagrange_reference_point();
    let drift = conservation_report(&s, &integrate(&s, p0, 1e-3, 10_000))
        .unwrap()
        .max();
    let coarse = conservation_report(&s, &integrate(&s, p0, 1e-2, 1_000))
        .unwrap()
        .h;
    let fine = conservation_report(&s, &integrate(&s, p0, 5e-3, 2_000))
        .unwrap()
        .h;
    let ratio = coarse / fine;
    let traj = integrate_k(p0, TAU / 2000.0, 2000);
    let period = (traj.last().to_vector() - p0.to_vector()).amax();
    outcome(
        drift <= 1e-8 && (12.0..=20.0).contains(&ratio) && period <= 1e-6,
        format!("drift {drift:.2e} at dt 1e-3; H drift ratio {ratio:.2} (1e-2 vs 5e-3); K flow gap {period:.1e}"),
    )
}

fn determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/lagrange.toml");
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_liouville"))
            .arg("--config")
            .arg(&config)
            .args(["diagram", "--format", "csv,json", "--out"])
            .arg(&dir)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        (
            std::fs::read(dir.join("diagram.csv")).unwrap(),
            std::fs::read(dir.join("diagram.json")).unwrap(),
        )
    };
    let first = run("one");
    let second = run("two");
    outcome(
        first == second && !first.0.is_empty(),
        format!(
            "csv {} bytes, json {} bytes, identical: {}",
            first.0.len(),
            first.1.len(),
            first == second
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("commutation and Casimirs", commutation),
        ("rank-0 points", rank0),
        ("rank-1 closed form", rank1_closed_form),
        ("rank-1 spectrum", rank1_spectrum),
        ("case coverage", case_coverage),
        ("atoms", atoms),
        ("isoenergy surfaces", isoenergy),
        ("oracle integrity", oracles),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    println!();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "{} {} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
