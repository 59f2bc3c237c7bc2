//! The bifurcation diagram `Sigma` of the momentum map `(H, K)` in the
//! `(h, k)`-plane: the images `Z+-` of the rank-0 points, the curves traced
//! by rank-1 circles, isolated points, and the equator contributions (a
//! special point or an exceptional parabola).
//!
//! Rank-1 images are the envelope of the parabolas
//! `h = (x^2/(2(a - x^2)) + 1/(2 beta)) k^2 + B(x) k + C(x)`.

mod export;
mod trace;

use serde::{Deserialize, Serialize};

use crate::e3::{OrbitParams, Pole, SystemSpec};
use crate::error::Result;
use crate::singular::{
    quad_coeffs, rank0_classify, theta_decomposition, EquatorCase, Rank0Type, Rank1Type,
    ThetaDecomposition,
};
use crate::tol::Tolerances;

pub use export::{export, to_csv, to_json, to_svg, ExportFormat, ExportOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZPoint {
    pub pole: Pole,
    pub h: f64,
    pub k: f64,
    pub q: f64,
    #[serde(rename = "type")]
    pub kind: Rank0Type,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndpointTag {
    #[serde(rename = "tends_to_Z+")]
    TendsToZPlus,
    #[serde(rename = "tends_to_Z-")]
    TendsToZMinus,
    #[serde(rename = "tends_to_infinity")]
    TendsToInfinity,
    #[serde(rename = "meets_special_point")]
    MeetsSpecialPoint,
    /// Finite limit on the exceptional parabola as `x -> 0`.
    #[serde(rename = "meets_parabola")]
    MeetsParabola,
    #[serde(rename = "interior_stop")]
    InteriorStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub x: f64,
    pub k: f64,
    pub h: f64,
    #[serde(rename = "type")]
    pub kind: Rank1Type,
    /// `k(x)` is stationary here: a possible cusp.
    pub cusp: bool,
}

/// One branch `k+-(x)` over one interval of `Theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBranch {
    pub branch: Branch,
    pub interval: (f64, f64),
    /// Ordered by increasing `x`.
    pub samples: Vec<CurveSample>,
    /// Tags at the low and the high end of the interval.
    pub endpoint_tags: [EndpointTag; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolatedPoint {
    pub h: f64,
    pub k: f64,
    pub x0: f64,
}

/// `(h0, k0)`, the image of the equatorial critical circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub h: f64,
    pub k: f64,
}

/// `h = k^2/(2 beta) + linear k + constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parabola {
    pub beta: f64,
    pub linear: f64,
    pub constant: f64,
}

impl Parabola {
    pub fn value(&self, k: f64) -> f64 {
        k * k / (2.0 * self.beta) + self.linear * k + self.constant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub orbit: OrbitParams,
    pub z_points: Vec<ZPoint>,
    pub curves: Vec<CurveBranch>,
    pub isolated_points: Vec<IsolatedPoint>,
    pub special_point: Option<SpecialPoint>,
    pub parabola: Option<Parabola>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramOptions {
    pub x_steps: usize,
    pub samples_per_interval: usize,
    pub tol: Tolerances,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        DiagramOptions {
            x_steps: 2048,
            samples_per_interval: 512,
            tol: Tolerances::default(),
        }
    }
}

/// `Z+-`: `h = g^2/(2 beta a) + g g2 +- (g/sqrt a) g3 + V` at `x = +-sqrt a`, `k = +-g/sqrt a`.
pub fn rank0_images(sys: &SystemSpec, orb: &OrbitParams, tol: &Tolerances) -> Result<Vec<ZPoint>> {
    Pole::BOTH
        .into_iter()
        .map(|pole| {
            let r3 = pole.sign() * orb.pole();
            let (a, g) = (orb.a, orb.g);
            let k = g / r3;
            let h = g * g / (2.0 * sys.beta * a)
                + g * sys.g2.value(a, r3)?
                + k * sys.g3.value(a, r3)?
                + sys.v.value(a, r3)?;
            let report = rank0_classify(sys, orb, pole, tol)?;
            Ok(ZPoint {
                pole,
                h,
                k,
                q: report.q,
                kind: report.kind,
            })
        })
        .collect()
}

/// `(h, k)` over each isolated point of `Theta`, with the double root `k`.
pub fn isolated_points(sys: &SystemSpec, theta: &ThetaDecomposition) -> Result<Vec<IsolatedPoint>> {
    theta
        .isolated
        .iter()
        .map(|&x0| {
            let c = quad_coeffs(sys, &theta.orbit, x0)?;
            let k = c.double_root();
            Ok(IsolatedPoint {
                h: sys.w(&theta.orbit, k, x0)?,
                k,
                x0,
            })
        })
        .collect()
}

pub fn special_point(
    sys: &SystemSpec,
    orb: &OrbitParams,
    theta: &ThetaDecomposition,
) -> Result<Option<SpecialPoint>> {
    match theta.equator {
        EquatorCase::Special { k0 } => Ok(Some(SpecialPoint {
            h: sys.w(orb, k0, 0.0)?,
            k: k0,
        })),
        _ => Ok(None),
    }
}

/// When every `k` is critical on the equator: `h = W(k, 0)`.
pub fn exceptional_parabola(
    sys: &SystemSpec,
    orb: &OrbitParams,
    theta: &ThetaDecomposition,
) -> Result<Option<Parabola>> {
    if theta.equator != EquatorCase::WholeLine {
        return Ok(None);
    }
    let (a, g) = (orb.a, orb.g);
    let g1 = sys.g1.value(a, 0.0)?;
    Ok(Some(Parabola {
        beta: sys.beta,
        linear: sys.g3.value(a, 0.0)?,
        constant: g * g / (2.0 * a) - 0.5 * a * g1 * g1
            + sys.g2.value(a, 0.0)? * g
            + sys.v.value(a, 0.0)?,
    }))
}

/// `(h - W(k, x), dW/dx(k, x))`.
pub fn envelope_residual(
    sys: &SystemSpec,
    orb: &OrbitParams,
    h: f64,
    k: f64,
    x: f64,
) -> Result<(f64, f64)> {
    let w = sys.reduced_potential(orb, k, x)?;
    Ok((h - w.w, w.w_dx))
}

pub fn trace_curves(
    sys: &SystemSpec,
    orb: &OrbitParams,
    theta: &ThetaDecomposition,
    samples_per_interval: usize,
    tol: &Tolerances,
) -> Result<Vec<CurveBranch>> {
    let z_points = rank0_images(sys, orb, tol)?;
    let ctx = trace::Context {
        sys,
        orb,
        tol,
        z_points: &z_points,
        special: special_point(sys, orb, theta)?,
        parabola: exceptional_parabola(sys, orb, theta)?,
    };
    ctx.trace_all(&theta.intervals, samples_per_interval)
}

pub fn build_diagram(
    sys: &SystemSpec,
    orb: &OrbitParams,
    opts: &DiagramOptions,
) -> Result<BifurcationDiagram> {
    let theta = theta_decomposition(sys, orb, opts.x_steps, &opts.tol)?;
    Ok(BifurcationDiagram {
        orbit: *orb,
        z_points: rank0_images(sys, orb, &opts.tol)?,
        curves: trace_curves(sys, orb, &theta, opts.samples_per_interval, &opts.tol)?,
        isolated_points: isolated_points(sys, &theta)?,
        special_point: special_point(sys, orb, &theta)?,
        parabola: exceptional_parabola(sys, orb, &theta)?,
    })
}
