//! Numerical toolkit for interior blow-up solutions of the fractional
//! absorption problem
//!
//! ```text
//! (−Δ)^α u + |u|^{p−1} u = 0   in (−1, 1) ∖ {0},
//! u = 0                        outside (−1, 1),
//! u → +∞                       as x → 0.
//! ```
//!
//! The crate is layered bottom-up: [`quad`] evaluates the singular
//! integrals behind the special functions in [`specfun`]; [`mesh`] and
//! [`operator`] discretise (−Δ)^α on a graded grid; [`profiles`] builds the
//! comparison functions; [`solver`] runs the exhaustion iteration and
//! [`analysis`] fits rates and audits the residual-sign constructions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Gauss-Kronrod nodes are tabulated to the digits of their source.
#![allow(clippy::excessive_precision)]

pub mod analysis;
pub mod error;
pub mod export;
pub mod mesh;
pub mod operator;
pub mod profiles;
pub mod quad;
pub mod solver;
pub mod specfun;

pub use error::{Error, ErrorKind, Result};

pub use mesh::{Exterior, Grid, GridFunction};
pub use quad::{Integrand, Orders, QuadResult};
pub use specfun::{Alpha, CriticalExponents, Regime, RegimeKind, Tau};
