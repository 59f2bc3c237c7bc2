use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::e3::{OrbitParams, PhasePoint, ReducedPoint, SystemSpec};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rank1Type {
    Elliptic,
    Hyperbolic,
    Degenerate,
}

/// A critical circle, identified by its chart coordinates `(x, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rank1Point {
    pub x: f64,
    pub k: f64,
    pub m: f64,
    /// `dH/dk`, so that `sgrad H = lambda sgrad K` on the circle.
    pub lambda: f64,
    /// Value of `H` on the circle.
    pub h: f64,
    pub w_dxx: f64,
    /// Non-zero eigenvalues of the linearization of `sgrad (H - lambda K)`.
    pub mu: [Complex64; 2],
    #[serde(rename = "type")]
    pub kind: Rank1Type,
}

/// Coefficients of the critical condition `A k^2 + B' k + C' = 0` at one `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs {
    pub x: f64,
    /// `a x / (a - x^2)^2`
    pub quad_a: f64,
    pub b_prime: f64,
    pub c_prime: f64,
    /// `B'^2 - 4 A C'`
    pub d: f64,
}

impl QuadCoeffs {
    /// The root on branch `sigma = +-1`, `(-B' + sigma sqrt(D)) / (2A)`,
    /// with `D` clamped at zero. Avoids cancellation by switching to the
    /// product form `2C' / (-B' - sigma sqrt(D))` when needed.
    pub fn branch_root(&self, sigma: f64) -> f64 {
        let root = self.d.max(0.0).sqrt() * sigma;
        if -self.b_prime * root >= 0.0 {
            (-self.b_prime + root) / (2.0 * self.quad_a)
        } else {
            2.0 * self.c_prime / (-self.b_prime - root)
        }
    }

    /// The double root `-B' / (2A)`.
    pub fn double_root(&self) -> f64 {
        -self.b_prime / (2.0 * self.quad_a)
    }
}

pub fn quad_coeffs(sys: &SystemSpec, orb: &OrbitParams, x: f64) -> Result<QuadCoeffs> {
    let (a, g) = (orb.a, orb.g);
    let u = a - x * x;
    if !(u > 0.0) {
        return Err(Error::OffDomain { x, a });
    }
    let j = sys.jets(a, x)?;
    let u2 = u * u;
    let quad_a = a * x / u2;
    let b_prime = j.g3.dx - g * (a + x * x) / u2;
    let c_prime =
        g * g * x / u2 + x * j.g1.v * j.g1.v - u * j.g1.v * j.g1.dx + g * j.g2.dx + j.v.dx;
    let d = b_prime * b_prime - 4.0 * quad_a * c_prime;
    Ok(QuadCoeffs {
        x,
        quad_a,
        b_prime,
        c_prime,
        d,
    })
}

/// Real solutions `k` of the critical condition at one `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRoots {
    None,
    One(f64),
    /// `(k-, k+)` with `k- <= k+`.
    Two(f64, f64),
    /// `x = 0` with `B'(0) = C'(0) = 0`: every `k` is critical.
    WholeLine,
}

impl KRoots {
    pub fn to_vec(self) -> Vec<f64> {
        match self {
            KRoots::None | KRoots::WholeLine => Vec::new(),
            KRoots::One(k) => vec![k],
            KRoots::Two(lo, hi) => vec![lo, hi],
        }
    }
}

/// `m = -(a - x^2) g1(a, x)` on the critical set.
pub fn rank1_m(sys: &SystemSpec, orb: &OrbitParams, x: f64) -> Result<f64> {
    let u = orb.a - x * x;
    if !(u > 0.0) {
        return Err(Error::OffDomain { x, a: orb.a });
    }
    Ok(-u * sys.g1.value(orb.a, x)?)
}

pub fn rank1_solve_k(
    sys: &SystemSpec,
    orb: &OrbitParams,
    x: f64,
    tol: &Tolerances,
) -> Result<KRoots> {
    let c = quad_coeffs(sys, orb, x)?;
    if x == 0.0 {
        let zero = tol.tau_d(0.0);
        return Ok(match (c.b_prime.abs() <= zero, c.c_prime.abs() <= zero) {
            (false, _) => KRoots::One(-c.c_prime / c.b_prime),
            (true, true) => KRoots::WholeLine,
            (true, false) => KRoots::None,
        });
    }
    let tau = tol.tau_d(c.b_prime);
    Ok(if c.d < -tau {
        KRoots::None
    } else if c.d <= tau {
        KRoots::One(c.double_root())
    } else {
        let (r1, r2) = (c.branch_root(1.0), c.branch_root(-1.0));
        KRoots::Two(r1.min(r2), r1.max(r2))
    })
}

/// `lambda = dH/dk` at a critical point with `m = -(a - x^2) g1`.
fn lambda_at(sys: &SystemSpec, orb: &OrbitParams, k: f64, x: f64) -> Result<f64> {
    let u = orb.a - x * x;
    Ok(-x * (orb.g - k * x) / u + k / sys.beta + sys.g3.value(orb.a, x)?)
}

pub fn rank1_classify(
    sys: &SystemSpec,
    orb: &OrbitParams,
    k: f64,
    x: f64,
    tol: &Tolerances,
) -> Result<Rank1Point> {
    let w = sys.reduced_potential(orb, k, x)?;
    let tau = tol.tau_w(k);
    if w.w_dx.abs() > tau {
        return Err(Error::Precondition(format!(
            "(k, x) = ({k}, {x}) is not critical: dW/dx = {:e}",
            w.w_dx
        )));
    }
    let u = orb.a - x * x;
    let (kind, mu) = if w.w_dxx.abs() <= tau {
        (Rank1Type::Degenerate, [Complex64::new(0.0, 0.0); 2])
    } else if w.w_dxx > 0.0 {
        let s = (u * w.w_dxx).sqrt();
        (
            Rank1Type::Elliptic,
            [Complex64::new(0.0, s), Complex64::new(0.0, -s)],
        )
    } else {
        let s = (-u * w.w_dxx).sqrt();
        (
            Rank1Type::Hyperbolic,
            [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
        )
    };
    Ok(Rank1Point {
        x,
        k,
        m: rank1_m(sys, orb, x)?,
        lambda: lambda_at(sys, orb, k, x)?,
        h: w.w,
        w_dxx: w.w_dxx,
        mu,
        kind,
    })
}

/// The point of the critical circle over `(x, k)` at angle `phi`.
pub fn critical_circle(
    sys: &SystemSpec,
    orb: &OrbitParams,
    x: f64,
    k: f64,
    phi: f64,
) -> Result<PhasePoint> {
    let m = rank1_m(sys, orb, x)?;
    ReducedPoint::new(x, m, phi, k, orb.a, orb.g).to_phase()
}

/// `|sgrad H - lambda sgrad K| / (1 + |sgrad H|)` at `p`.
pub fn proportionality_residual(sys: &SystemSpec, p: &PhasePoint, lambda: f64) -> Result<f64> {
    let xh = sys.sgrad_h(p)?;
    Ok((xh - p.sgrad_k() * lambda).norm() / (1.0 + xh.norm()))
}
