use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::e3::{OrbitParams, PhasePoint, Pole, SystemSpec};
use crate::error::Result;
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rank0Type {
    CenterCenter,
    FocusFocus,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank0Report {
    pub pole: Pole,
    pub point: PhasePoint,
    pub q: f64,
    pub p: f64,
    pub h11: f64,
    pub h12: Complex64,
    pub h22: f64,
    #[serde(rename = "type")]
    pub kind: Rank0Type,
}

impl Rank0Report {
    /// `{+-i (p + sqrt q), +-i (p - sqrt q)}` with a complex square root.
    pub fn spectrum(&self) -> [Complex64; 4] {
        let i = Complex64::i();
        let root = Complex64::new(self.q, 0.0).sqrt();
        let p = Complex64::new(self.p, 0.0);
        [
            i * (p + root),
            -i * (p + root),
            i * (p - root),
            -i * (p - root),
        ]
    }

    /// `p^2 + R3^2 (H11 H22 - |H12|^2)`, the general form of `q`.
    pub fn q_from_hessian(&self) -> f64 {
        let r3 = self.point.r.z;
        self.p * self.p + r3 * r3 * (self.h11 * self.h22 - self.h12.norm_sqr())
    }
}

/// `P = (0, 0, +-g/sqrt a, 0, 0, +-sqrt a)`.
pub fn rank0_point(orb: &OrbitParams, pole: Pole) -> PhasePoint {
    let r3 = pole.sign() * orb.pole();
    PhasePoint::new([0.0, 0.0, orb.g / r3], [0.0, 0.0, r3])
}

/// Both rank-0 points, `(P+, P-)`.
pub fn rank0_points(orb: &OrbitParams) -> (PhasePoint, PhasePoint) {
    (rank0_point(orb, Pole::Plus), rank0_point(orb, Pole::Minus))
}

pub fn rank0_classify(
    sys: &SystemSpec,
    orb: &OrbitParams,
    pole: Pole,
    tol: &Tolerances,
) -> Result<Rank0Report> {
    let point = rank0_point(orb, pole);
    let (a, g) = (orb.a, orb.g);
    let r3 = point.r.z;
    let j = sys.jets(a, r3)?;

    let dh_ds3 = g / (sys.beta * r3) + j.g3.v;
    let p = (g / r3) * (0.5 - 1.0 / sys.beta) - j.g3.v;
    let h12 = Complex64::new(-dh_ds3 / r3, -j.g1.v);
    let h22 = g / r3.powi(3) * dh_ds3 - (g * j.g2.dx + g / r3 * j.g3.dx + j.v.dx) / r3;
    let q = g * g / (4.0 * r3 * r3)
        - r3 * r3 * j.g1.v * j.g1.v
        - g * r3 * j.g2.dx
        - g * j.g3.dx
        - r3 * j.v.dx;

    let kind = if q.abs() <= tol.tau_q(p) {
        Rank0Type::Degenerate
    } else if q > 0.0 {
        Rank0Type::CenterCenter
    } else {
        Rank0Type::FocusFocus
    };
    Ok(Rank0Report {
        pole,
        point,
        q,
        p,
        h11: 1.0,
        h12,
        h22,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e3::Preset;

    #[test]
    fn points_by_substitution() {
        let (plus, minus) = rank0_points(&OrbitParams::new(1.0, 0.0).unwrap());
        assert_eq!(plus.to_vector().as_slice(), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            minus.to_vector().as_slice(),
            &[0.0, 0.0, -0.0, 0.0, 0.0, -1.0]
        );
        let (plus, minus) = rank0_points(&OrbitParams::new(4.0, 2.0).unwrap());
        assert_eq!(plus.to_vector().as_slice(), &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0]);
        assert_eq!(
            minus.to_vector().as_slice(),
            &[0.0, 0.0, -1.0, 0.0, 0.0, -2.0]
        );
    }

    #[test]
    fn lagrange_types() {
        let sys = Preset::Lagrange.system();
        let orb = OrbitParams::new(1.0, 0.0).unwrap();
        let tol = Tolerances::default();
        let up = rank0_classify(&sys, &orb, Pole::Plus, &tol).unwrap();
        let down = rank0_classify(&sys, &orb, Pole::Minus, &tol).unwrap();
        assert_eq!((up.q, up.kind), (1.0, Rank0Type::CenterCenter));
        assert_eq!((down.q, down.kind), (-1.0, Rank0Type::FocusFocus));
    }

    #[test]
    fn closed_q_agrees_with_hessian_form() {
        let sys = SystemSpec::from_strs(0.6, "0.3*x + a", "x^2", "sin(x)", "x^3 - a*x").unwrap();
        let orb = OrbitParams::new(2.0, 0.7).unwrap();
        for pole in Pole::BOTH {
            let r = rank0_classify(&sys, &orb, pole, &Tolerances::default()).unwrap();
            assert!(
                (r.q - r.q_from_hessian()).abs() < 1e-12,
                "{} vs {}",
                r.q,
                r.q_from_hessian()
            );
        }
    }

    #[test]
    fn zero_q_is_degenerate() {
        // V = x/4 at a = 1, g = 1 on the upper pole: q = 1/4 - 1/4 = 0.
        let sys = SystemSpec::from_strs(1.0, "0", "0", "0", "x/4").unwrap();
        let orb = OrbitParams::new(1.0, 1.0).unwrap();
        let r = rank0_classify(&sys, &orb, Pole::Plus, &Tolerances::default()).unwrap();
        assert_eq!(r.kind, Rank0Type::Degenerate);
    }
}
