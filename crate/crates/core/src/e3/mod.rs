//! Geometry of the dual of the Lie algebra e(3).
//!
//! The Lie–Poisson bracket is `{S_i, S_j} = e_ijk S_k`, `{S_i, R_j} = e_ijk R_k`,
//! `{R_i, R_j} = 0`. Its Casimirs `F1 = <R, R>` and `F2 = <S, R>` cut out the
//! four-dimensional symplectic leaves (orbits) `M(a, g)`.

mod presets;
mod reduced;
mod system;

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use presets::{kirchhoff, lagrange, leggett, KirchhoffParams, Preset};
pub use reduced::{from_reduced, pushforward, to_reduced, PotentialJet, ReducedPoint};
pub use system::{FunctionJets, Jet, SystemFn, SystemSpec};

/// A point `(S, R)` of e(3)* = R^6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub s: Vector3<f64>,
    pub r: Vector3<f64>,
}

/// Which pole `R = (0, 0, +-sqrt(a))` of the Poisson sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pole {
    Plus,
    Minus,
}

impl Pole {
    pub const BOTH: [Pole; 2] = [Pole::Plus, Pole::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Pole::Plus => 1.0,
            Pole::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Pole::Plus => "+",
            Pole::Minus => "-",
        }
    }
}

/// Values `(a, g)` of the Casimirs selecting an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub a: f64,
    pub g: f64,
}

impl OrbitParams {
    pub fn new(a: f64, g: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::validation(
                "a",
                format!("must be a finite positive number, got {a}"),
            ));
        }
        if !g.is_finite() {
            return Err(Error::validation("g", "must be finite"));
        }
        Ok(OrbitParams { a, g })
    }

    /// `sqrt(a)`, the value of `R3` at the poles of the Poisson sphere.
    pub fn pole(&self) -> f64 {
        self.a.sqrt()
    }

    /// Strict membership in the chart domain `x^2 < a`.
    pub fn contains(&self, x: f64) -> bool {
        x * x < self.a
    }
}

impl PhasePoint {
    pub fn new(s: [f64; 3], r: [f64; 3]) -> Self {
        PhasePoint {
            s: Vector3::from(s),
            r: Vector3::from(r),
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        PhasePoint::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.s.x, self.s.y, self.s.z, self.r.x, self.r.y, self.r.z)
    }

    pub fn is_finite(&self) -> bool {
        self.s.iter().chain(self.r.iter()).all(|v| v.is_finite())
    }

    /// `(F1, F2) = (<R, R>, <S, R>)`.
    pub fn casimirs(&self) -> (f64, f64) {
        (self.r.dot(&self.r), self.s.dot(&self.r))
    }

    /// The `S^1`-momentum `S1 R2 - S2 R1`.
    pub fn m(&self) -> f64 {
        self.s.x * self.r.y - self.s.y * self.r.x
    }

    /// `sgrad K` for `K = S3`: `(-S2, S1, 0, -R2, R1, 0)`.
    pub fn sgrad_k(&self) -> Vector6<f64> {
        Vector6::new(-self.s.y, self.s.x, 0.0, -self.r.y, self.r.x, 0.0)
    }
}

/// Skew-gradient of a function with partials `df_ds`, `df_dr` at `p`:
/// `(df/dS x S + df/dR x R, df/dS x R)`.
pub fn sgrad(p: &PhasePoint, df_ds: &Vector3<f64>, df_dr: &Vector3<f64>) -> Vector6<f64> {
    let top = df_ds.cross(&p.s) + df_dr.cross(&p.r);
    let bottom = df_ds.cross(&p.r);
    Vector6::new(top.x, top.y, top.z, bottom.x, bottom.y, bottom.z)
}

/// `sgrad K` as a free function.
pub fn sgrad_k(p: &PhasePoint) -> Vector6<f64> {
    p.sgrad_k()
}

/// Differential of a function along a tangent vector.
pub fn directional(df_ds: &Vector3<f64>, df_dr: &Vector3<f64>, v: &Vector6<f64>) -> f64 {
    df_ds.x * v[0]
        + df_ds.y * v[1]
        + df_ds.z * v[2]
        + df_dr.x * v[3]
        + df_dr.y * v[4]
        + df_dr.z * v[5]
}
