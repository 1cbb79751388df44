//! Variational solver and numerical checks for sublinear Dirichlet problems
//! driven by `-Δ_p + (-Δ)^s_p` on the unit interval.

// `!(x > 0.0)` style guards are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod eigen;
pub mod forms;
pub mod mesh;
pub mod minimize;
pub mod nonlinearity;
pub mod quadrature;
pub mod verify;
