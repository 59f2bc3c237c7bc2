use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rank1::{quad_coeffs, QuadCoeffs};
use crate::e3::{OrbitParams, SystemSpec};
use crate::error::{Error, Result};
use crate::numeric::{bisect_boundary, golden_max, smoothstep_grid};
use crate::tol::Tolerances;

/// A connected component of `{x^2 < a, x != 0, D(x) >= 0}` of positive length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaInterval {
    pub lo: f64,
    pub hi: f64,
    /// False when the endpoint is `0` or a pole.
    pub lo_closed: bool,
    pub hi_closed: bool,
    /// `|D| <= tau_D` along the whole interval: the two roots coincide.
    pub degenerate_family: bool,
}

impl ThetaInterval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }
}

/// What the critical condition looks like on the equator `x = 0`, where it
/// is linear in `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquatorCase {
    /// `B'(0) != 0`: the single root `k0 = -C'(0)/B'(0)`.
    Special { k0: f64 },
    /// `B'(0) = 0`, `C'(0) != 0`.
    NoRoot,
    /// `B'(0) = C'(0) = 0`.
    WholeLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaDecomposition {
    pub orbit: OrbitParams,
    pub intervals: Vec<ThetaInterval>,
    pub isolated: Vec<f64>,
    pub equator: EquatorCase,
}

impl ThetaDecomposition {
    pub fn quad_a(&self, sys: &SystemSpec, x: f64) -> Result<f64> {
        Ok(quad_coeffs(sys, &self.orbit, x)?.quad_a)
    }

    pub fn b_prime(&self, sys: &SystemSpec, x: f64) -> Result<f64> {
        Ok(quad_coeffs(sys, &self.orbit, x)?.b_prime)
    }

    pub fn c_prime(&self, sys: &SystemSpec, x: f64) -> Result<f64> {
        Ok(quad_coeffs(sys, &self.orbit, x)?.c_prime)
    }

    pub fn d(&self, sys: &SystemSpec, x: f64) -> Result<f64> {
        Ok(quad_coeffs(sys, &self.orbit, x)?.d)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.isolated.is_empty()
    }
}

pub fn equator_case(sys: &SystemSpec, orb: &OrbitParams, tol: &Tolerances) -> Result<EquatorCase> {
    let c = quad_coeffs(sys, orb, 0.0)?;
    let zero = tol.tau_d(0.0);
    Ok(if c.b_prime.abs() > zero {
        EquatorCase::Special {
            k0: -c.c_prime / c.b_prime,
        }
    } else if c.c_prime.abs() > zero {
        EquatorCase::NoRoot
    } else {
        EquatorCase::WholeLine
    })
}

const X_TOL: f64 = 1e-12;

struct Scanner<'a> {
    sys: &'a SystemSpec,
    orb: &'a OrbitParams,
    tol: &'a Tolerances,
}

impl Scanner<'_> {
    fn coeffs(&self, x: f64) -> Option<QuadCoeffs> {
        quad_coeffs(self.sys, self.orb, x)
            .ok()
            .filter(|c| c.d.is_finite())
    }

    /// `D` where defined, `-inf` elsewhere.
    fn d(&self, x: f64) -> f64 {
        self.coeffs(x).map_or(f64::NEG_INFINITY, |c| c.d)
    }

    fn inside(&self, x: f64) -> bool {
        self.coeffs(x)
            .is_some_and(|c| c.d >= -self.tol.tau_d(c.b_prime))
    }

    fn near_zero(&self, x: f64) -> bool {
        self.coeffs(x)
            .is_some_and(|c| c.d.abs() <= self.tol.tau_d(c.b_prime))
    }

    /// Boundary of a run between `inner` (inside) and `outer`. The exact
    /// sign of `D` is used when `inner` has `D >= 0`, so that the double root
    /// at the endpoint is critical to roundoff rather than to `tau_D`.
    fn edge(&self, inner: f64, d_inner: f64, outer: f64) -> f64 {
        if d_inner >= 0.0 {
            bisect_boundary(|x| self.d(x) >= 0.0, inner, outer, X_TOL)
        } else {
            bisect_boundary(|x| self.inside(x), inner, outer, X_TOL)
        }
    }

    /// Intervals and isolated points on one side of the equator. `xs` runs
    /// from the equator to the pole.
    fn side(
        &self,
        xs: &[f64],
        d: &[f64],
        inside: &[bool],
        pole: f64,
    ) -> (Vec<ThetaInterval>, Vec<f64>) {
        let n = xs.len();
        let mut intervals = Vec::new();
        let mut isolated = Vec::new();
        let short = 1e-3 * pole.abs();

        let mut i = 0;
        while i < n {
            if !inside[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < n && inside[i + 1] {
                i += 1;
            }
            let end = i;
            i += 1;

            let (near, near_open) = if start == 0 {
                (0.0, true)
            } else {
                (self.edge(xs[start], d[start], xs[start - 1]), false)
            };
            let (far, far_open) = if end == n - 1 {
                (pole, true)
            } else {
                (self.edge(xs[end], d[end], xs[end + 1]), false)
            };
            let flat = (start..=end).all(|j| self.near_zero(xs[j]));
            if flat && (far - near).abs() < short {
                // A short run inside the tolerance band: a tangential zero,
                // or, when it abuts the equator or a pole, just the halo of
                // a zero of D at an excluded point.
                if !near_open && !far_open {
                    let (lo, hi) = if near < far { (near, far) } else { (far, near) };
                    isolated.push(golden_max(|x| self.d(x), lo, hi, X_TOL).0);
                }
                continue;
            }
            intervals.push(oriented(near, near_open, far, far_open, flat));
        }

        // Tangential zeros that the grid stepped over: local maxima of D
        // with D slightly negative at every grid point.
        for j in 1..n.saturating_sub(1) {
            if inside[j]
                || inside[j - 1]
                || inside[j + 1]
                || !(d[j] >= d[j - 1] && d[j] >= d[j + 1])
            {
                continue;
            }
            let (lo, hi) = if xs[j - 1] < xs[j + 1] {
                (xs[j - 1], xs[j + 1])
            } else {
                (xs[j + 1], xs[j - 1])
            };
            let (x_star, _) = golden_max(|x| self.d(x), lo, hi, X_TOL);
            if !self.inside(x_star) {
                continue;
            }
            if self.near_zero(x_star) {
                isolated.push(x_star);
            } else {
                let a = self.edge(x_star, self.d(x_star), lo);
                let b = self.edge(x_star, self.d(x_star), hi);
                intervals.push(oriented(a, false, b, false, false));
            }
        }
        (intervals, isolated)
    }
}

fn oriented(p: f64, p_open: bool, q: f64, q_open: bool, flat: bool) -> ThetaInterval {
    let ((lo, lo_open), (hi, hi_open)) = if p <= q {
        ((p, p_open), (q, q_open))
    } else {
        ((q, q_open), (p, p_open))
    };
    ThetaInterval {
        lo,
        hi,
        lo_closed: !lo_open,
        hi_closed: !hi_open,
        degenerate_family: flat,
    }
}

/// Splits `{x^2 < a, x != 0, D(x) >= 0}` into intervals and isolated
/// points from a scan of `n_grid` points per side, refined by bisection and
/// golden-section search.
pub fn theta_decomposition(
    sys: &SystemSpec,
    orb: &OrbitParams,
    n_grid: usize,
    tol: &Tolerances,
) -> Result<ThetaDecomposition> {
    if n_grid < 100 {
        return Err(Error::validation("n_grid", "must be at least 100"));
    }
    let scanner = Scanner { sys, orb, tol };
    let ts = smoothstep_grid(n_grid);
    let sqrt_a = orb.pole();

    let mut intervals = Vec::new();
    let mut isolated = Vec::new();
    for sign in [-1.0, 1.0] {
        let xs: Vec<f64> = ts.iter().map(|t| sign * sqrt_a * t).collect();
        let (d, inside): (Vec<f64>, Vec<bool>) = xs
            .par_iter()
            .map(|&x| (scanner.d(x), scanner.inside(x)))
            .unzip();
        let (iv, iso) = scanner.side(&xs, &d, &inside, sign * sqrt_a);
        intervals.extend(iv);
        isolated.extend(iso);
    }
    intervals.sort_by(|l, r| l.lo.total_cmp(&r.lo));
    isolated.sort_by(f64::total_cmp);
    isolated.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    isolated.retain(|&x| !intervals.iter().any(|iv| iv.lo < x && x < iv.hi));

    Ok(ThetaDecomposition {
        orbit: *orb,
        intervals,
        isolated,
        equator: equator_case(sys, orb, tol)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e3::Preset;

    fn decompose(sys: &SystemSpec, a: f64, g: f64) -> ThetaDecomposition {
        theta_decomposition(
            sys,
            &OrbitParams::new(a, g).unwrap(),
            2048,
            &Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn lagrange_has_one_open_interval() {
        let sys = Preset::Lagrange.system();
        let th = decompose(&sys, 1.0, 0.0);
        assert_eq!(th.intervals.len(), 1, "{:?}", th.intervals);
        let iv = th.intervals[0];
        assert_eq!(
            (iv.lo, iv.hi, iv.lo_closed, iv.hi_closed),
            (0.0, 1.0, false, false)
        );
        assert!(th.isolated.is_empty());
        assert_eq!(th.equator, EquatorCase::NoRoot);
        let x: f64 = 0.5;
        assert!((th.d(&sys, x).unwrap() - 4.0 * x / (1.0 - x * x).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn free_system_is_a_degenerate_family() {
        let sys = SystemSpec::from_strs(1.0, "0", "0", "0", "0").unwrap();
        let th = decompose(&sys, 1.0, 0.0);
        assert_eq!(th.intervals.len(), 2);
        assert!(th.intervals.iter().all(|iv| iv.degenerate_family));
        assert_eq!(th.equator, EquatorCase::WholeLine);
    }

    #[test]
    fn confining_potential_has_no_rank1() {
        let sys = SystemSpec::from_strs(1.0, "0", "0", "0", "x^2").unwrap();
        let th = decompose(&sys, 1.0, 0.0);
        assert!(th.is_empty(), "{th:?}");
    }

    #[test]
    fn closed_endpoints_are_roots_of_d() {
        // With g != 0 the Lagrange interval starts away from the equator.
        let sys = Preset::Lagrange.system();
        let th = decompose(&sys, 1.0, 1.5);
        assert!(!th.intervals.is_empty());
        for iv in &th.intervals {
            for (x, closed) in [(iv.lo, iv.lo_closed), (iv.hi, iv.hi_closed)] {
                if closed {
                    let c = quad_coeffs(&sys, &th.orbit, x).unwrap();
                    assert!(
                        c.d.abs() < 1e-6 * (1.0 + c.b_prime * c.b_prime),
                        "D({x}) = {}",
                        c.d
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_coarse_grid() {
        let sys = Preset::Lagrange.system();
        assert!(theta_decomposition(
            &sys,
            &OrbitParams::new(1.0, 0.0).unwrap(),
            10,
            &Tolerances::default()
        )
        .is_err());
    }
}
