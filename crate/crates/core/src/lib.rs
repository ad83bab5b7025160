//! Numerical laboratory for the value statistics of degree-2 and degree-3
//! L-functions on the critical line.
//!
//! The crate is organized bottom-up:
//!
//! - [`arith`] — prime sieve, factorization, Möbius function, multinomial
//!   coefficients for prime-sum power expansions.
//! - [`qexp`] — exact integer q-expansions of the built-in modular forms
//!   (eta products and Eisenstein series) via NTT-based polynomial arithmetic.
//! - [`forms`] — normalized Dirichlet coefficient tables: Ramanujan Δ, the
//!   weight-16 level-1 eigenform, symmetric-square lifts, synthetic
//!   Satake-parameter models.
//! - [`lfunc`] — gamma factors, the smoothing function V, and evaluation of
//!   L(f, σ+it) via the approximate functional equation.
//! - [`dirpoly`] — parameter schedules, prime Dirichlet polynomials,
//!   mollifiers, and truncated exponentials.
//! - [`moments`] — mixed moments of prime sums by exact expansion and
//!   quadrature, Gaussian moment predictions, mollifier consistency checks,
//!   and completed-L identity checks.
//! - [`stats`] — Monte Carlo sampling of log|L| with empirical normality and
//!   independence reports.
//!
//! Everything is deterministic: sampling uses a counter-based generator, and
//! parallel reductions use fixed-order merges, so identical inputs produce
//! bit-identical outputs regardless of thread count.

pub mod arith;
pub mod cache;
pub mod dirpoly;
pub mod error;
pub mod forms;
pub mod lfunc;
pub mod moments;
pub mod qexp;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
