//! Classical systems with the integral `K = S3`, rescaled to the normal form
//! used by [`SystemSpec`].

use std::fmt;
use std::str::FromStr;

use super::SystemSpec;
use crate::error::Error;
use crate::expr::{BinOp, Expr, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Lagrange,
    Leggett,
    Kirchhoff,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Lagrange, Preset::Leggett, Preset::Kirchhoff];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Lagrange => "lagrange",
            Preset::Leggett => "leggett",
            Preset::Kirchhoff => "kirchhoff",
        }
    }

    /// The preset with its default parameters.
    pub fn system(self) -> SystemSpec {
        match self {
            Preset::Lagrange => lagrange(2.0, 2.0, 1.0),
            Preset::Leggett => leggett(1.0),
            Preset::Kirchhoff => kirchhoff(KirchhoffParams::default()),
        }
        .expect("default preset parameters are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::validation(
                    "preset",
                    format!("unknown preset `{s}` (lagrange, leggett, kirchhoff)"),
                )
            })
    }
}

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn x() -> Expr {
    Expr::Var(Var::X)
}

fn times(coef: f64, e: Expr) -> Expr {
    match coef {
        0.0 => c(0.0),
        1.0 => e,
        -1.0 => Expr::Neg(Box::new(e)),
        _ => Expr::Binary(BinOp::Mul, Box::new(c(coef)), Box::new(e)),
    }
}

fn sum(l: Expr, r: Expr) -> Expr {
    match (l.as_const(), r.as_const()) {
        (Some(0.0), _) => r,
        (_, Some(0.0)) => l,
        _ => Expr::Binary(BinOp::Add, Box::new(l), Box::new(r)),
    }
}

fn square(e: Expr) -> Expr {
    Expr::Binary(BinOp::Pow, Box::new(e), Box::new(c(2.0)))
}

/// Lagrange top `H = (S1^2 + S2^2)/A + S3^2/B - p R3`, multiplied by `A/2`:
/// `beta = B/A`, `V = -(p A / 2) x`.
pub fn lagrange(a_inertia: f64, b_inertia: f64, p: f64) -> Result<SystemSpec, Error> {
    if !(a_inertia > 0.0) {
        return Err(Error::validation("A", "must be positive"));
    }
    SystemSpec::new(
        b_inertia / a_inertia,
        c(0.0),
        c(0.0),
        c(0.0),
        times(-p * a_inertia / 2.0, x()),
    )
}

/// Leggett case `H = S^2 - gamma S3 - R3^2`, halved:
/// `beta = 1`, `g3 = -gamma/2`, `V = -x^2/2`.
pub fn leggett(gamma: f64) -> Result<SystemSpec, Error> {
    SystemSpec::new(
        1.0,
        c(0.0),
        c(0.0),
        c(-gamma / 2.0),
        times(-0.5, square(x())),
    )
}

/// Coefficients of the Kirchhoff case
/// `H = A(S1^2 + S2^2) + a S3^2 + 2(B(S1 R1 + S2 R2) + b S3 R3) + C(R1^2 + R2^2) + c R3^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KirchhoffParams {
    pub big_a: f64,
    pub a: f64,
    pub big_b: f64,
    pub b: f64,
    pub big_c: f64,
    pub c: f64,
}

impl Default for KirchhoffParams {
    fn default() -> Self {
        KirchhoffParams {
            big_a: 1.0,
            a: 0.7,
            big_b: 0.2,
            b: 0.5,
            big_c: 1.0,
            c: 0.4,
        }
    }
}

/// Kirchhoff case divided by `2A`: `beta = A/a`, `g2 = B/A`,
/// `g3 = ((b - B)/A) x`, `V = (C (a - x^2) + c x^2) / (2A)` with `a = <R, R>`.
pub fn kirchhoff(k: KirchhoffParams) -> Result<SystemSpec, Error> {
    if !(k.big_a > 0.0) {
        return Err(Error::validation("A", "must be positive"));
    }
    if !(k.a > 0.0) {
        return Err(Error::validation("a", "must be positive"));
    }
    let v = sum(
        times(
            k.big_c / (2.0 * k.big_a),
            Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::Var(Var::A)),
                Box::new(square(x())),
            ),
        ),
        times(k.c / (2.0 * k.big_a), square(x())),
    );
    SystemSpec::new(
        k.big_a / k.a,
        c(0.0),
        c(k.big_b / k.big_a),
        times((k.b - k.big_b) / k.big_a, x()),
        v,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e3::PhasePoint;

    #[test]
    fn lagrange_default_is_the_unit_top() {
        let sys = Preset::Lagrange.system();
        assert_eq!(sys.beta, 1.0);
        assert_eq!(sys.v.expr().to_string(), "-x");
        assert!(sys.g1.is_zero() && sys.g2.is_zero() && sys.g3.is_zero());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("euler".parse::<Preset>().is_err());
    }

    #[test]
    fn rescaled_hamiltonians_agree_with_originals() {
        let p = PhasePoint::new([0.3, -0.4, 0.9], [0.5, 0.2, -0.7]);
        let (s, r) = (p.s, p.r);

        let (ai, bi, pc) = (1.5, 0.8, 2.0);
        let orig = (s.x * s.x + s.y * s.y) / ai + s.z * s.z / bi - pc * r.z;
        let h = lagrange(ai, bi, pc).unwrap().hamiltonian(&p).unwrap();
        assert!((h - orig * ai / 2.0).abs() < 1e-14);

        let gamma = 0.6;
        let orig = s.dot(&s) - gamma * s.z - r.z * r.z;
        let h = leggett(gamma).unwrap().hamiltonian(&p).unwrap();
        assert!((h - orig / 2.0).abs() < 1e-14);

        let k = KirchhoffParams::default();
        let orig = k.big_a * (s.x * s.x + s.y * s.y)
            + k.a * s.z * s.z
            + 2.0 * (k.big_b * (s.x * r.x + s.y * r.y) + k.b * s.z * r.z)
            + k.big_c * (r.x * r.x + r.y * r.y)
            + k.c * r.z * r.z;
        let h = kirchhoff(k).unwrap().hamiltonian(&p).unwrap();
        assert!((h - orig / (2.0 * k.big_a)).abs() < 1e-14);
    }
}
