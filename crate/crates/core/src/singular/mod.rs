//! Singular points of the momentum map `(H, K)` on an orbit `M(a, g)`.
//!
//! Rank 0: the two points over the poles of the Poisson sphere, typed by the
//! sign of `q`. Rank 1: circles `(x, k)` solving `dW/dx = 0`, a quadratic
//! in `k` for `x != 0`, typed by the sign of `d^2W/dx^2`.

mod rank0;
mod rank1;
mod theta;

pub use rank0::{rank0_classify, rank0_point, rank0_points, Rank0Report, Rank0Type};
pub use rank1::{
    critical_circle, proportionality_residual, quad_coeffs, rank1_classify, rank1_m, rank1_solve_k,
    KRoots, QuadCoeffs, Rank1Point, Rank1Type,
};
pub use theta::{
    equator_case, theta_decomposition, EquatorCase, ThetaDecomposition, ThetaInterval,
};
