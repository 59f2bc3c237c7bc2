//! Numerical oracle: fixed-step RK4 integration of the Euler equations,
//! conservation checks and finite-difference linearizations.
//!
//! Nothing here uses the closed-form results of [`crate::singular`]; the
//! two are compared in tests and in [`crate::verify`].

mod linearize;

use std::io::Write;

use nalgebra::Vector6;

use crate::e3::{PhasePoint, SystemSpec};
use crate::error::Result;

pub use linearize::{
    eigen_residual, eigenvalues, linearize_ambient, linearize_reduced, match_spectra, Chart,
    LinearizationBase, LinearizationReport,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhasePoint)>,
    pub dt: f64,
    pub method: &'static str,
    /// Set when integration stopped early on a domain error.
    pub aborted: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &PhasePoint {
        &self
            .samples
            .last()
            .expect("trajectory has at least the initial point")
            .1
    }
}

fn rk4_step<F>(field: &F, y: &Vector6<f64>, dt: f64) -> Result<Vector6<f64>>
where
    F: Fn(&PhasePoint) -> Result<Vector6<f64>>,
{
    let f = |v: &Vector6<f64>| field(&PhasePoint::from_vector(v));
    let k1 = f(y)?;
    let k2 = f(&(y + k1 * (dt / 2.0)))?;
    let k3 = f(&(y + k2 * (dt / 2.0)))?;
    let k4 = f(&(y + k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Integrates an arbitrary vector field with classical RK4.
pub fn integrate_field<F>(field: F, p0: PhasePoint, dt: f64, n: usize) -> Trajectory
where
    F: Fn(&PhasePoint) -> Result<Vector6<f64>>,
{
    assert!(dt > 0.0, "time step must be positive");
    let mut samples = Vec::with_capacity(n + 1);
    samples.push((0.0, p0));
    let mut y = p0.to_vector();
    let mut aborted = None;
    for i in 1..=n {
        match rk4_step(&field, &y, dt) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => {
                y = next;
                samples.push((i as f64 * dt, PhasePoint::from_vector(&y)));
            }
            Ok(_) => {
                aborted = Some(format!("non-finite state at step {i}"));
                break;
            }
            Err(e) => {
                aborted = Some(format!("step {i}: {e}"));
                break;
            }
        }
    }
    Trajectory {
        samples,
        dt,
        method: "rk4",
        aborted,
    }
}

/// Trajectory of `sgrad H` (the Euler equations).
pub fn integrate(sys: &SystemSpec, p0: PhasePoint, dt: f64, n: usize) -> Trajectory {
    integrate_field(|p| sys.sgrad_h(p), p0, dt, n)
}

/// Trajectory of `sgrad K`, the rotation about the third axis.
pub fn integrate_k(p0: PhasePoint, dt: f64, n: usize) -> Trajectory {
    integrate_field(|p| Ok(p.sgrad_k()), p0, dt, n)
}

/// Sup-norm drift of each conserved quantity from its initial value.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ConservationReport {
    pub h: f64,
    pub k: f64,
    pub f1: f64,
    pub f2: f64,
}

impl ConservationReport {
    pub fn max(&self) -> f64 {
        self.h.max(self.k).max(self.f1).max(self.f2)
    }
}

fn invariants(sys: &SystemSpec, p: &PhasePoint) -> Result<[f64; 4]> {
    let (f1, f2) = p.casimirs();
    Ok([sys.hamiltonian(p)?, p.s.z, f1, f2])
}

pub fn conservation_report(sys: &SystemSpec, traj: &Trajectory) -> Result<ConservationReport> {
    let start = invariants(sys, &traj.samples[0].1)?;
    let mut drift = [0.0f64; 4];
    for (_, p) in &traj.samples {
        let now = invariants(sys, p)?;
        for i in 0..4 {
            drift[i] = drift[i].max((now[i] - start[i]).abs());
        }
    }
    Ok(ConservationReport {
        h: drift[0],
        k: drift[1],
        f1: drift[2],
        f2: drift[3],
    })
}

/// Writes `t,S1,S2,S3,R1,R2,R3,H,K,F1,F2` rows.
pub fn write_trajectory_csv<W: Write>(
    sys: &SystemSpec,
    traj: &Trajectory,
    mut out: W,
) -> Result<()> {
    writeln!(out, "t,S1,S2,S3,R1,R2,R3,H,K,F1,F2")?;
    for (t, p) in &traj.samples {
        let [h, k, f1, f2] = invariants(sys, p)?;
        writeln!(
            out,
            "{t},{},{},{},{},{},{},{h},{k},{f1},{f2}",
            p.s.x, p.s.y, p.s.z, p.r.x, p.r.y, p.r.z
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e3::Preset;
    use std::f64::consts::TAU;

    #[test]
    fn equilibrium_stays_put() {
        let sys = Preset::Lagrange.system();
        let p0 = PhasePoint::new([0.0, 0.0, 0.7], [0.0, 0.0, 1.0]);
        let traj = integrate(&sys, p0, 1e-2, 1000);
        assert!(traj.aborted.is_none());
        let worst = traj
            .samples
            .iter()
            .map(|(_, p)| (p.to_vector() - p0.to_vector()).amax())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn k_flow_is_two_pi_periodic() {
        let p0 = PhasePoint::new([0.3, -0.2, 0.5], [0.1, 0.6, 0.8]);
        let n = 2000;
        let traj = integrate_k(p0, TAU / n as f64, n);
        let err = (traj.last().to_vector() - p0.to_vector()).amax();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn domain_errors_abort_with_partial_trajectory() {
        let sys = SystemSpec::from_strs(1.0, "0", "0", "0", "sqrt(x)").unwrap();
        // R3 is driven negative by the rotation of S.
        let p0 = PhasePoint::new([0.0, 3.0, 0.0], [0.0, 0.0, 0.05]);
        let traj = integrate(&sys, p0, 0.05, 1000);
        let reason = traj.aborted.as_deref().expect("aborted");
        assert!(reason.contains("square root"), "{reason}");
        assert!(traj.samples.len() > 1 && traj.samples.len() < 1001);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let sys = Preset::Lagrange.system();
        let traj = integrate(
            &sys,
            PhasePoint::new([0.3, 0.0, 0.5], [0.0, 0.6, 0.8]),
            0.01,
            3,
        );
        let mut buf = Vec::new();
        write_trajectory_csv(&sys, &traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,S1,S2,S3,R1,R2,R3,H,K,F1,F2");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1].split(',').count(), 11);
    }
}
