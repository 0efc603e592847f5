//! Desk-scale laboratory for completely multiplicative functions that track
//! Archimedean characters stage by stage, and for the stationary systems
//! their empirical measures converge to.
//!
//! The crate is organized around the experiment pipeline:
//!
//! - [`prime_arith`]: sieves, factor-count statistics, and certified density
//!   bounds for integers with many small prime factors.
//! - [`mrt`]: the staged construction of the multiplicative function, its
//!   exact evaluation, and the discrepancy against the surrogate `n^{is}`.
//! - [`polyfam`]: exact monomial pairs and integer polynomials behind the
//!   coordinate ratios, and the phase functions `f_d = log(P_d/Q_d)`.
//! - [`expsum`]: certified exponential sums and Kusmin-Landau certificates.
//! - [`furstenberg`]: empirical measures, moment statistics, the truncated
//!   weak-* metric, and the quasi-genericity criterion.
//! - [`unipotent`]: the limit measures themselves - exact 0/1 moment
//!   oracle, bit-reproducible samplers, torus maps, stationarity and
//!   quasi-eigenfunction checks.
//! - [`archimedean`]: Fourier statistics of `n^{it}`, the explicit limit
//!   density, and the zero-entropy companion sequence.
//!
//! Phases live in 128-bit fixed point ([`xprec::Phase`]), which makes the
//! algebraic identities between products of sequence values exact; sums are
//! compensated and order-deterministic ([`accum`]), so every table the crate
//! emits is bit-reproducible across thread counts.

pub mod accum;
pub mod archimedean;
pub mod error;
pub mod expsum;
pub mod furstenberg;
pub mod intpoly;
pub mod mrt;
pub mod polyfam;
pub mod prime_arith;
pub mod seq;
pub mod unipotent;
pub mod xprec;

pub use error::{Error, Result};
