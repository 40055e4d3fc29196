//! Symbolic toolkit for local conservation laws of evolution equations
//! `u_t = F(t, x, u, u_1, ..., u_n)` in one space dimension.

pub mod conslaw;
pub mod discover;
pub mod error;
pub mod expr;
pub mod integrate;
pub mod jet;
pub mod linalg;
pub mod linear;
pub mod transform;

pub use error::{Error, Result};
pub use expr::{Context, Expr, Var};
