use itertools::Itertools;
use nalgebra::{DMatrix, Schur, Vector6, QR};
use num_complex::Complex64;
use serde::Serialize;

use crate::e3::{pushforward, OrbitParams, PhasePoint, Pole, ReducedPoint, SystemSpec};
use crate::error::{Error, Result};

/// Where to linearize `c_H sgrad H + c_K sgrad K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearizationBase {
    /// The point `S = (0, 0, g/R3)`, `R = (0, 0, +-sqrt(a))`.
    Pole(Pole),
    /// A point of the circle `(x, m, *, k)` of the chart, taken at `phi = 0`.
    Reduced { x: f64, m: f64, k: f64 },
}

/// Coordinates in which the Jacobian is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// `(S1, S2, R1, R2)` on the orbit near a pole.
    Polar,
    /// `(x, m, phi, k)` at fixed `(a, g)`.
    Reduced,
    /// All six coordinates of R^6.
    Ambient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationReport {
    pub base: PhasePoint,
    pub chart: Chart,
    /// The coefficients `(c_H, c_K)` of the linearized field.
    pub combo: (f64, f64),
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub fd_step: f64,
}

const VANISHING: f64 = 1e-8;

fn base_point(orb: &OrbitParams, base: LinearizationBase) -> Result<PhasePoint> {
    match base {
        LinearizationBase::Pole(pole) => {
            let r3 = pole.sign() * orb.pole();
            Ok(PhasePoint::new([0.0, 0.0, orb.g / r3], [0.0, 0.0, r3]))
        }
        LinearizationBase::Reduced { x, m, k } => {
            ReducedPoint::new(x, m, 0.0, k, orb.a, orb.g).to_phase()
        }
    }
}

fn combined(sys: &SystemSpec, combo: (f64, f64), p: &PhasePoint) -> Result<Vector6<f64>> {
    Ok(sys.sgrad_h(p)? * combo.0 + p.sgrad_k() * combo.1)
}

/// `(1, -lambda)` with `lambda` the least-squares ratio of `sgrad H` to `sgrad K`.
fn auto_combo(sys: &SystemSpec, p: &PhasePoint) -> Result<(f64, f64)> {
    let xh = sys.sgrad_h(p)?;
    let xk = p.sgrad_k();
    let nk = xk.norm_squared();
    Ok(if nk > 0.0 {
        (1.0, -xh.dot(&xk) / nk)
    } else {
        (1.0, 0.0)
    })
}

fn jacobian<F>(field: F, y0: &[f64], rel_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = y0.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut y = y0.to_vec();
    for j in 0..n {
        let h = rel_step * (1.0 + y0[j].abs());
        y[j] = y0[j] + h;
        let plus = field(&y)?;
        y[j] = y0[j] - h;
        let minus = field(&y)?;
        y[j] = y0[j];
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Eigenvalues via a real Schur decomposition with a bounded iteration count.
/// The unshifted-exceptional QR sweep can cycle on the very structured
/// Jacobians met at equilibria, so a stalled attempt is retried on a few
/// fixed orthogonal conjugates of the matrix.
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = matrix.nrows();
    let eps = f64::EPSILON * matrix.amax().max(1.0);
    let attempt = |m: DMatrix<f64>| Schur::try_new(m, eps, 10_000).map(|s| s.complex_eigenvalues());
    let mut found = attempt(matrix.clone());
    for seed in 1..=4 {
        if found.is_some() {
            break;
        }
        let q = QR::new(DMatrix::from_fn(n, n, |i, j| {
            ((i * 7 + j * 3 + seed) as f64 * 0.61).sin()
        }))
        .q();
        found = attempt(q.transpose() * matrix * &q);
    }
    let mut ev: Vec<Complex64> = found
        .ok_or_else(|| Error::Precondition("eigenvalue iteration did not converge".into()))?
        .iter()
        .copied()
        .collect();
    ev.sort_by(|l, r| l.re.total_cmp(&r.re).then(l.im.total_cmp(&r.im)));
    Ok(ev)
}

fn finish(
    base: PhasePoint,
    chart: Chart,
    combo: (f64, f64),
    matrix: DMatrix<f64>,
    fd_step: f64,
) -> Result<LinearizationReport> {
    let eigenvalues = eigenvalues(&matrix)?;
    Ok(LinearizationReport {
        base,
        chart,
        combo,
        matrix,
        eigenvalues,
        fd_step,
    })
}

fn check_vanishing(sys: &SystemSpec, combo: (f64, f64), p: &PhasePoint) -> Result<()> {
    let residual = combined(sys, combo, p)?.amax();
    if residual > VANISHING {
        return Err(Error::Precondition(format!(
            "field {:?} does not vanish at the base point (|X| = {residual:e})",
            combo
        )));
    }
    Ok(())
}

/// Linearizes on the orbit `M(a, g)`: in `(S1, S2, R1, R2)` at a pole and in
/// `(x, m, phi, k)` at a chart point. `combo = None` picks `(1, -lambda)`
/// with `sgrad H = lambda sgrad K` at the base point.
pub fn linearize_reduced(
    sys: &SystemSpec,
    orb: &OrbitParams,
    base: LinearizationBase,
    combo: Option<(f64, f64)>,
    fd_step: Option<f64>,
) -> Result<LinearizationReport> {
    let p0 = base_point(orb, base)?;
    let combo = match combo {
        Some(c) => c,
        None => auto_combo(sys, &p0)?,
    };
    check_vanishing(sys, combo, &p0)?;
    let step = fd_step.unwrap_or(1e-5);

    match base {
        LinearizationBase::Pole(pole) => {
            let (a, g) = (orb.a, orb.g);
            let s = pole.sign();
            let field = |y: &[f64]| -> Result<Vec<f64>> {
                let (s1, s2, r1, r2) = (y[0], y[1], y[2], y[3]);
                let rest = a - r1 * r1 - r2 * r2;
                if !(rest > 0.0) {
                    return Err(Error::OffDomain { x: 0.0, a });
                }
                let r3 = s * rest.sqrt();
                let s3 = (g - s1 * r1 - s2 * r2) / r3;
                let v = combined(sys, combo, &PhasePoint::new([s1, s2, s3], [r1, r2, r3]))?;
                Ok(vec![v[0], v[1], v[3], v[4]])
            };
            let m = jacobian(field, &[0.0; 4], step)?;
            finish(p0, Chart::Polar, combo, m, step)
        }
        LinearizationBase::Reduced { x, m, k } => {
            let field = |y: &[f64]| -> Result<Vec<f64>> {
                let p = ReducedPoint::new(y[0], y[1], y[2], y[3], orb.a, orb.g).to_phase()?;
                let v = pushforward(&p, &combined(sys, combo, &p)?)?;
                Ok(v[..4].to_vec())
            };
            let mat = jacobian(field, &[x, m, 0.0, k], step)?;
            finish(p0, Chart::Reduced, combo, mat, step)
        }
    }
}

/// The 6x6 Jacobian of `c_H sgrad H + c_K sgrad K` on R^6. Besides the
/// orbit spectrum it carries two zeros from the Casimir directions.
pub fn linearize_ambient(
    sys: &SystemSpec,
    p0: &PhasePoint,
    combo: Option<(f64, f64)>,
    fd_step: Option<f64>,
) -> Result<LinearizationReport> {
    let combo = match combo {
        Some(c) => c,
        None => auto_combo(sys, p0)?,
    };
    check_vanishing(sys, combo, p0)?;
    let step = fd_step.unwrap_or(1e-5);
    let field = |y: &[f64]| -> Result<Vec<f64>> {
        let p = PhasePoint::from_vector(&Vector6::from_column_slice(y));
        Ok(combined(sys, combo, &p)?.iter().copied().collect())
    };
    let y0: Vec<f64> = p0.to_vector().iter().copied().collect();
    let m = jacobian(field, &y0, step)?;
    finish(*p0, Chart::Ambient, combo, m, step)
}

/// Pairs each `predicted` eigenvalue with a distinct `computed` one so that
/// the largest distance is minimal. Returns the indices into `computed` and
/// that distance. Needs `predicted.len() <= computed.len()`.
pub fn match_spectra(predicted: &[Complex64], computed: &[Complex64]) -> (Vec<usize>, f64) {
    assert!(
        predicted.len() <= computed.len(),
        "more predicted than computed eigenvalues"
    );
    (0..computed.len())
        .permutations(predicted.len())
        .map(|perm| {
            let worst = perm
                .iter()
                .zip(predicted)
                .map(|(&j, p)| (computed[j] - p).norm())
                .fold(0.0, f64::max);
            (perm, worst)
        })
        .min_by(|l, r| l.1.total_cmp(&r.1))
        .unwrap_or((Vec::new(), 0.0))
}

/// `max |computed_j - predicted_j|` after the best matching.
pub fn eigen_residual(predicted: &[Complex64], computed: &[Complex64]) -> f64 {
    match_spectra(predicted, computed).1
}
