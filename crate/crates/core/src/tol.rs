use serde::{Deserialize, Serialize};

/// Scale-aware zero tests used by the classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `tau_q = q * (1 + p^2)`
    pub q: f64,
    /// `tau_D = d * (1 + B'^2)`
    pub d: f64,
    /// `tau_W = w * (1 + k^2)`
    pub w: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            q: 1e-9,
            d: 1e-10,
            w: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn tau_q(&self, p: f64) -> f64 {
        self.q * (1.0 + p * p)
    }

    pub fn tau_d(&self, b_prime: f64) -> f64 {
        self.d * (1.0 + b_prime * b_prime)
    }

    pub fn tau_w(&self, k: f64) -> f64 {
        self.w * (1.0 + k * k)
    }
}
