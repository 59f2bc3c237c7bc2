use nalgebra::{Vector3, Vector6};

use super::{sgrad, PhasePoint};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};

/// One of the coefficient functions `g1, g2, g3, V` together with the
/// derivative trees the analysis needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemFn {
    expr: Expr,
    dx: Expr,
    dxx: Expr,
    da: Expr,
}

/// Value and first two `x`-derivatives at a fixed `(a, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dxx: f64,
}

impl SystemFn {
    pub fn new(expr: Expr) -> Self {
        let dx = expr.diff_x();
        let dxx = dx.diff_x();
        let da = expr.diff_a();
        SystemFn { expr, dx, dxx, da }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn value(&self, a: f64, x: f64) -> Result<f64> {
        Ok(self.expr.eval(a, x)?)
    }

    pub fn dx(&self, a: f64, x: f64) -> Result<f64> {
        Ok(self.dx.eval(a, x)?)
    }

    pub fn dxx(&self, a: f64, x: f64) -> Result<f64> {
        Ok(self.dxx.eval(a, x)?)
    }

    pub fn da(&self, a: f64, x: f64) -> Result<f64> {
        Ok(self.da.eval(a, x)?)
    }

    pub fn jet(&self, a: f64, x: f64) -> Result<Jet> {
        Ok(Jet {
            v: self.value(a, x)?,
            dx: self.dx(a, x)?,
            dxx: self.dxx(a, x)?,
        })
    }

    /// Whether the function is identically zero as written.
    pub fn is_zero(&self) -> bool {
        self.expr.as_const() == Some(0.0)
    }
}

/// Jets of all four coefficient functions at one `(a, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FunctionJets {
    pub g1: Jet,
    pub g2: Jet,
    pub g3: Jet,
    pub v: Jet,
}

/// The Hamiltonian
///
/// ```text
/// H = (S1^2 + S2^2 + S3^2 / beta) / 2 + g1 (S1 R2 - S2 R1) + g2 <S, R> + g3 S3 + V
/// ```
///
/// with `g1, g2, g3, V` functions of `(a, x) = (<R, R>, R3)`. It commutes
/// with `K = S3` for every choice of the four functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub beta: f64,
    pub g1: SystemFn,
    pub g2: SystemFn,
    pub g3: SystemFn,
    pub v: SystemFn,
}

impl SystemSpec {
    pub fn new(beta: f64, g1: Expr, g2: Expr, g3: Expr, v: Expr) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::validation(
                "beta",
                format!("must be a finite positive number, got {beta}"),
            ));
        }
        Ok(SystemSpec {
            beta,
            g1: SystemFn::new(g1),
            g2: SystemFn::new(g2),
            g3: SystemFn::new(g3),
            v: SystemFn::new(v),
        })
    }

    /// Builds a system from expression source text, naming the offending
    /// field on parse errors.
    pub fn from_strs(beta: f64, g1: &str, g2: &str, g3: &str, v: &str) -> Result<Self> {
        let field =
            |name: &str, src: &str| parse(src).map_err(|e| Error::validation(name, e.to_string()));
        SystemSpec::new(
            beta,
            field("g1", g1)?,
            field("g2", g2)?,
            field("g3", g3)?,
            field("V", v)?,
        )
    }

    pub fn jets(&self, a: f64, x: f64) -> Result<FunctionJets> {
        Ok(FunctionJets {
            g1: self.g1.jet(a, x)?,
            g2: self.g2.jet(a, x)?,
            g3: self.g3.jet(a, x)?,
            v: self.v.jet(a, x)?,
        })
    }

    pub fn hamiltonian(&self, p: &PhasePoint) -> Result<f64> {
        let (a, g) = p.casimirs();
        let x = p.r.z;
        let s = &p.s;
        let kinetic = 0.5 * (s.x * s.x + s.y * s.y + s.z * s.z / self.beta);
        Ok(kinetic
            + self.g1.value(a, x)? * p.m()
            + self.g2.value(a, x)? * g
            + self.g3.value(a, x)? * s.z
            + self.v.value(a, x)?)
    }

    /// `(dH/dS, dH/dR)`. The R-partials go through the chain rule with
    /// `da/dR = 2R` and `dx/dR = e3`.
    pub fn gradient(&self, p: &PhasePoint) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let (a, g) = p.casimirs();
        let x = p.r.z;
        let (s, r) = (&p.s, &p.r);
        let g1 = self.g1.value(a, x)?;
        let g2 = self.g2.value(a, x)?;
        let g3 = self.g3.value(a, x)?;

        let d_s = Vector3::new(
            s.x + g1 * r.y + g2 * r.x,
            s.y - g1 * r.x + g2 * r.y,
            s.z / self.beta + g2 * r.z + g3,
        );

        // Explicit R-dependence of the momenta: dM/dR = (-S2, S1, 0), d<S,R>/dR = S.
        let mut d_r = Vector3::new(-s.y, s.x, 0.0) * g1 + s * g2;
        let coefficients = [
            (&self.g1, p.m()),
            (&self.g2, g),
            (&self.g3, s.z),
            (&self.v, 1.0),
        ];
        for (f, c) in coefficients {
            if c == 0.0 || f.is_zero() {
                continue;
            }
            let fa = f.da(a, x)?;
            let fx = f.dx(a, x)?;
            d_r += (r * (2.0 * fa) + Vector3::new(0.0, 0.0, fx)) * c;
        }
        Ok((d_s, d_r))
    }

    pub fn sgrad_h(&self, p: &PhasePoint) -> Result<Vector6<f64>> {
        let (d_s, d_r) = self.gradient(p)?;
        Ok(sgrad(p, &d_s, &d_r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e3::Preset;

    #[test]
    fn lagrange_value_at_top_pole() {
        let sys = Preset::Lagrange.system();
        let p = PhasePoint::new([0.0; 3], [0.0, 0.0, 1.0]);
        assert_eq!(sys.hamiltonian(&p).unwrap(), -1.0);
    }

    #[test]
    fn free_kinetic_energy() {
        let sys = SystemSpec::from_strs(1.0, "0", "0", "0", "0").unwrap();
        let p = PhasePoint::new([1.0, 2.0, 3.0], [0.3, -0.2, 0.5]);
        assert_eq!(sys.hamiltonian(&p).unwrap(), 7.0);
    }

    #[test]
    fn leggett_value() {
        let sys = Preset::Leggett.system();
        let p = PhasePoint::new([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        assert!((sys.hamiltonian(&p).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn lagrange_sgrad_vanishes_at_pole() {
        let sys = Preset::Lagrange.system();
        let p = PhasePoint::new([0.0; 3], [0.0, 0.0, 1.0]);
        assert_eq!(sys.sgrad_h(&p).unwrap(), Vector6::zeros());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let sys = SystemSpec::from_strs(0.7, "a*x + 0.3", "x^2 - a", "sin(x)*a", "exp(-a)*x^3 + x")
            .unwrap();
        let p = PhasePoint::new([0.3, -0.8, 0.5], [0.6, -0.4, 0.35]);
        let (d_s, d_r) = sys.gradient(&p).unwrap();
        let exact: Vec<f64> = d_s.iter().chain(d_r.iter()).copied().collect();
        let base = p.to_vector();
        let h = 1e-6;
        for i in 0..6 {
            let mut plus = base;
            let mut minus = base;
            plus[i] += h;
            minus[i] -= h;
            let fd = (sys.hamiltonian(&PhasePoint::from_vector(&plus)).unwrap()
                - sys.hamiltonian(&PhasePoint::from_vector(&minus)).unwrap())
                / (2.0 * h);
            assert!(
                (fd - exact[i]).abs() < 1e-6,
                "component {i}: fd {fd} vs {}",
                exact[i]
            );
        }
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(SystemSpec::from_strs(-1.0, "0", "0", "0", "0").is_err());
        assert!(SystemSpec::from_strs(0.0, "0", "0", "0", "0").is_err());
    }

    #[test]
    fn parse_errors_name_the_field() {
        let err = SystemSpec::from_strs(1.0, "0", "0", "0", "x +").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("V") && text.contains("byte 3"), "{text}");
    }
}
