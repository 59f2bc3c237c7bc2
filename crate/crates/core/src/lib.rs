//! Topology of integrable Hamiltonian systems on e(3)* with the periodic
//! integral `K = S3`.
//!
//! Given a Hamiltonian in the normal form
//!
//! ```text
//! H = (S1^2 + S2^2 + S3^2/beta)/2 + g1 (S1 R2 - S2 R1) + g2 <S, R> + g3 S3 + V
//! ```
//!
//! the crate locates and classifies the singular points of the momentum map
//! `(H, K)` on an orbit `<R, R> = a`, `<S, R> = g`, traces the bifurcation
//! diagram, counts Liouville tori, classifies atoms and isoenergy surfaces,
//! and checks the closed-form results against a numerical oracle
//! ([`dynamics`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagram;
pub mod dynamics;
pub mod e3;
pub mod error;
pub mod expr;
pub mod fibers;
pub mod numeric;
pub mod singular;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
