use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::e3::{OrbitParams, SystemSpec};
use crate::error::{Error, Result};
use crate::numeric::bisect_boundary;

/// Topological type of one connected piece of `{H = h}` on an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Piece {
    RP3,
    S3,
    S1xS2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoenergyReport {
    pub h: f64,
    /// Components of `{x : Phi(x) <= h}`.
    pub image_intervals: Vec<(f64, f64)>,
    pub pieces: Vec<Piece>,
}

/// `Phi(x)`: the minimum of the reduced Hamiltonian over `(m, k)` at fixed
/// `x`. The form has no `k m` term, so both minima are explicit:
/// `m = -u g1` and `k = beta (g x - u g3) / (beta x^2 + u)`.
/// Defined on the closed interval, poles included.
pub fn isoenergy_potential(sys: &SystemSpec, orb: &OrbitParams, x: f64) -> Result<f64> {
    let (a, g, b) = (orb.a, orb.g, sys.beta);
    let u = a - x * x;
    if u < 0.0 {
        return Err(Error::OffDomain { x, a });
    }
    let g1 = sys.g1.value(a, x)?;
    let g2 = sys.g2.value(a, x)?;
    let g3 = sys.g3.value(a, x)?;
    let v = sys.v.value(a, x)?;
    Ok(
        (g * g + 2.0 * b * g * g3 * x - b * g3 * g3 * u) / (2.0 * (b * x * x + u))
            - 0.5 * g1 * g1 * u
            + g * g2
            + v,
    )
}

pub fn isoenergy_classify(
    sys: &SystemSpec,
    orb: &OrbitParams,
    h: f64,
    n_grid: usize,
) -> Result<IsoenergyReport> {
    if n_grid < 16 {
        return Err(Error::validation("n_grid", "must be at least 16"));
    }
    if !(sys.beta.is_finite() && sys.beta > 0.0) {
        return Err(Error::validation("beta", "must be finite and positive"));
    }
    let pole = orb.pole();
    let phi = |x: f64| isoenergy_potential(sys, orb, x).unwrap_or(f64::INFINITY);
    let below = |x: f64| phi(x) <= h;
    // Chebyshev points with both poles included.
    let xs: Vec<f64> = (0..n_grid)
        .map(|i| -pole * (std::f64::consts::PI * i as f64 / (n_grid - 1) as f64).cos())
        .collect();
    let inside: Vec<bool> = xs.par_iter().map(|&x| below(x)).collect();

    let last = xs.len() - 1;
    let mut intervals = Vec::new();
    let mut pieces = Vec::new();
    let mut i = 0;
    while i <= last {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < last && inside[i + 1] {
            i += 1;
        }
        let end = i;
        i += 1;
        let lo = if start == 0 {
            -pole
        } else {
            bisect_boundary(below, xs[start], xs[start - 1], 1e-13)
        };
        let hi = if end == last {
            pole
        } else {
            bisect_boundary(below, xs[end], xs[end + 1], 1e-13)
        };
        intervals.push((lo, hi));
        pieces.push(match (start == 0, end == last) {
            (true, true) => Piece::RP3,
            (true, false) | (false, true) => Piece::S3,
            (false, false) => Piece::S1xS2,
        });
    }
    Ok(IsoenergyReport {
        h,
        image_intervals: intervals,
        pieces,
    })
}
