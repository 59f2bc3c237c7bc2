//! The chart `(x, m, phi, k, a, g)` on `{R1^2 + R2^2 != 0}` and everything
//! expressed in it: the reduced Hamiltonian and the reduced potential `W`.

use std::f64::consts::TAU;

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use super::{FunctionJets, OrbitParams, PhasePoint, SystemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    /// `R3`
    pub x: f64,
    /// `S1 R2 - S2 R1`
    pub m: f64,
    /// `arg(R1 + i R2)` in `[0, 2 pi)`
    pub phi: f64,
    /// `S3`
    pub k: f64,
    pub a: f64,
    pub g: f64,
}

fn normalize_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl ReducedPoint {
    pub fn new(x: f64, m: f64, phi: f64, k: f64, a: f64, g: f64) -> Self {
        ReducedPoint {
            x,
            m,
            phi: normalize_angle(phi),
            k,
            a,
            g,
        }
    }

    pub fn orbit(&self) -> OrbitParams {
        OrbitParams {
            a: self.a,
            g: self.g,
        }
    }

    /// Chart coordinates of `p`; fails on the axis `R1 = R2 = 0`.
    pub fn from_phase(p: &PhasePoint) -> Result<Self> {
        if p.r.x == 0.0 && p.r.y == 0.0 {
            return Err(Error::Chart("R1 = R2 = 0"));
        }
        let (a, g) = p.casimirs();
        Ok(ReducedPoint::new(
            p.r.z,
            p.m(),
            p.r.y.atan2(p.r.x),
            p.s.z,
            a,
            g,
        ))
    }

    /// Inverse chart.
    pub fn to_phase(&self) -> Result<PhasePoint> {
        let u = self.a - self.x * self.x;
        if !(u > 0.0) {
            return Err(Error::OffDomain {
                x: self.x,
                a: self.a,
            });
        }
        let rho = u.sqrt();
        let (sin, cos) = self.phi.sin_cos();
        let gk = self.g - self.k * self.x;
        Ok(PhasePoint::new(
            [
                (gk * cos + self.m * sin) / rho,
                (gk * sin - self.m * cos) / rho,
                self.k,
            ],
            [rho * cos, rho * sin, self.x],
        ))
    }
}

/// `to_reduced` as a free function.
pub fn to_reduced(p: &PhasePoint) -> Result<ReducedPoint> {
    ReducedPoint::from_phase(p)
}

/// `from_reduced` as a free function.
pub fn from_reduced(r: &ReducedPoint) -> Result<PhasePoint> {
    r.to_phase()
}

/// Pushes a tangent vector `v` at `p` forward to the chart: returns the
/// rates `(x', m', phi', k', a', g')`.
pub fn pushforward(p: &PhasePoint, v: &Vector6<f64>) -> Result<[f64; 6]> {
    let (s, r) = (&p.s, &p.r);
    let rho2 = r.x * r.x + r.y * r.y;
    if rho2 == 0.0 {
        return Err(Error::Chart("R1 = R2 = 0"));
    }
    let dm = r.y * v[0] - r.x * v[1] - s.y * v[3] + s.x * v[4];
    let dphi = (r.x * v[4] - r.y * v[3]) / rho2;
    let da = 2.0 * (r.x * v[3] + r.y * v[4] + r.z * v[5]);
    let dg = r.x * v[0] + r.y * v[1] + r.z * v[2] + s.x * v[3] + s.y * v[4] + s.z * v[5];
    Ok([v[5], dm, dphi, v[2], da, dg])
}

/// `W` and its first two `x`-partials at fixed `(a, g, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialJet {
    pub w: f64,
    pub w_dx: f64,
    pub w_dxx: f64,
}

fn check_domain(a: f64, x: f64) -> Result<f64> {
    let u = a - x * x;
    if u > 0.0 {
        Ok(u)
    } else {
        Err(Error::OffDomain { x, a })
    }
}

impl SystemSpec {
    /// The Hamiltonian in chart coordinates:
    /// `((g - kx)^2 + m^2) / (2(a - x^2)) + k^2/(2 beta) + g1 m + g2 g + g3 k + V`.
    pub fn reduced_hamiltonian(&self, r: &ReducedPoint) -> Result<f64> {
        let u = check_domain(r.a, r.x)?;
        let gk = r.g - r.k * r.x;
        Ok((gk * gk + r.m * r.m) / (2.0 * u)
            + r.k * r.k / (2.0 * self.beta)
            + self.g1.value(r.a, r.x)? * r.m
            + self.g2.value(r.a, r.x)? * r.g
            + self.g3.value(r.a, r.x)? * r.k
            + self.v.value(r.a, r.x)?)
    }

    /// `(dH/dm, dH/dx, dH/dk)` of the chart Hamiltonian.
    pub fn reduced_partials(&self, r: &ReducedPoint) -> Result<[f64; 3]> {
        let u = check_domain(r.a, r.x)?;
        let j = self.jets(r.a, r.x)?;
        let gk = r.g - r.k * r.x;
        let h_m = r.m / u + j.g1.v;
        let h_x = -r.k * gk / u
            + r.x * (gk * gk + r.m * r.m) / (u * u)
            + r.m * j.g1.dx
            + r.g * j.g2.dx
            + r.k * j.g3.dx
            + j.v.dx;
        let h_k = -r.x * gk / u + r.k / self.beta + j.g3.v;
        Ok([h_m, h_x, h_k])
    }

    /// `sgrad H` in the chart: `((a - x^2) dH/dm, -(a - x^2) dH/dx, dH/dk, 0, 0, 0)`.
    pub fn reduced_sgrad_h(&self, r: &ReducedPoint) -> Result<[f64; 6]> {
        let u = check_domain(r.a, r.x)?;
        let [h_m, h_x, h_k] = self.reduced_partials(r)?;
        Ok([u * h_m, -u * h_x, h_k, 0.0, 0.0, 0.0])
    }

    /// The reduced potential
    /// `W = (g - kx)^2/(2(a - x^2)) + k^2/(2 beta) - g1^2 (a - x^2)/2 + g2 g + g3 k + V`
    /// with exact first and second `x`-partials.
    pub fn reduced_potential(&self, orb: &OrbitParams, k: f64, x: f64) -> Result<PotentialJet> {
        let u = check_domain(orb.a, x)?;
        let j = self.jets(orb.a, x)?;
        Ok(potential_from_jets(self.beta, orb, k, x, u, &j))
    }

    /// `W` only.
    pub fn w(&self, orb: &OrbitParams, k: f64, x: f64) -> Result<f64> {
        Ok(self.reduced_potential(orb, k, x)?.w)
    }
}

fn potential_from_jets(
    beta: f64,
    orb: &OrbitParams,
    k: f64,
    x: f64,
    u: f64,
    j: &FunctionJets,
) -> PotentialJet {
    let (a, g) = (orb.a, orb.g);
    let gk = g - k * x;
    let (g1, g1x, g1xx) = (j.g1.v, j.g1.dx, j.g1.dxx);

    let w = gk * gk / (2.0 * u) + k * k / (2.0 * beta) - 0.5 * g1 * g1 * u
        + j.g2.v * g
        + j.g3.v * k
        + j.v.v;

    let w_dx = (k * x - g) * (k * a - g * x) / (u * u) + x * g1 * g1 - u * g1 * g1x
        + g * j.g2.dx
        + k * j.g3.dx
        + j.v.dx;

    let w_dxx = ((g * g + a * k * k) * (a + 3.0 * x * x) - 2.0 * g * k * x * (x * x + 3.0 * a))
        / (u * u * u)
        - (g1x * g1x + g1 * g1xx) * u
        + 4.0 * x * g1 * g1x
        + g1 * g1
        + g * j.g2.dxx
        + k * j.g3.dxx
        + j.v.dxx;

    PotentialJet { w, w_dx, w_dxx }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e3::Preset;

    #[test]
    fn chart_examples() {
        let p = PhasePoint::new([0.0; 3], [1.0, 0.0, 0.0]);
        let r = to_reduced(&p).unwrap();
        assert_eq!(r, ReducedPoint::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0));
        assert_eq!(from_reduced(&r).unwrap(), p);

        let p = PhasePoint::new([0.0, 1.0, 0.0], [1.0, 0.0, 0.0]);
        let r = to_reduced(&p).unwrap();
        assert_eq!((r.m, r.phi, r.k, r.a, r.g), (-1.0, 0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn inverse_chart_by_hand() {
        let p = from_reduced(&ReducedPoint::new(0.6, 0.0, 0.0, 0.5, 1.0, 0.4)).unwrap();
        let expect = [0.125, 0.0, 0.5, 0.8, 0.0, 0.6];
        for (got, want) in p.to_vector().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn axis_is_off_chart() {
        let p = PhasePoint::new([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert!(matches!(to_reduced(&p), Err(Error::Chart(_))));
        let r = ReducedPoint::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert!(matches!(from_reduced(&r), Err(Error::OffDomain { .. })));
    }

    #[test]
    fn angle_is_normalized() {
        let r = ReducedPoint::new(0.0, 0.0, -0.5, 0.0, 1.0, 0.0);
        assert!((r.phi - (TAU - 0.5)).abs() < 1e-15);
        let r = ReducedPoint::new(0.0, 0.0, 3.0 * TAU + 0.25, 0.0, 1.0, 0.0);
        assert!((r.phi - 0.25).abs() < 1e-12);
    }

    #[test]
    fn reduced_hamiltonian_examples() {
        let lag = Preset::Lagrange.system();
        let r = ReducedPoint::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(lag.reduced_hamiltonian(&r).unwrap(), 0.0);

        let free = SystemSpec::from_strs(1.0, "0", "0", "0", "0").unwrap();
        let r = ReducedPoint::new(0.0, 1.0, 0.0, 2.0, 1.0, 0.0);
        assert_eq!(free.reduced_hamiltonian(&r).unwrap(), 2.5);
    }

    #[test]
    fn lagrange_potential() {
        let lag = Preset::Lagrange.system();
        let orb = OrbitParams::new(1.0, 0.0).unwrap();
        let w = lag.reduced_potential(&orb, 0.0, 0.3).unwrap();
        assert!((w.w + 0.3).abs() < 1e-15);

        // W = k^2 x^2 / (2(1 - x^2)) + k^2/2 - x.
        let (k, x) = (1.1, -0.4);
        let w = lag.reduced_potential(&orb, k, x).unwrap();
        let u: f64 = 1.0 - x * x;
        let closed = k * k * x * x / (2.0 * u) + k * k / 2.0 - x;
        assert!((w.w - closed).abs() < 1e-14);
        assert!((w.w_dx - (k * k * x / (u * u) - 1.0)).abs() < 1e-13);
        assert!((w.w_dxx - k * k * (1.0 + 3.0 * x * x) / u.powi(3)).abs() < 1e-13);
    }
}
