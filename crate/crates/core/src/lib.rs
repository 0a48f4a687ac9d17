//! Symbolic exterior calculus for the equivalence problem of monic
//! fifth-order linear differential operators on the line.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`expr`] — exact rational expressions with rational exponents,
//!    the coefficient field for everything else;
//! 2. [`forms`] — sparse one- and two-forms, wedge products, exterior
//!    derivatives, and exact symbolic linear solving;
//! 3. [`problem`] — the operator, its base coframe for the direct and
//!    gauge equivalence problem, the 15-parameter structure group, the
//!    lifted coframe, and the Maurer-Cartan basis;
//! 4. [`reduction`] — the normalization loop: structure equations,
//!    torsion absorption, plan-driven normalization, and the trace of
//!    the run down to the {e}-structure;
//! 5. [`invariants`] — extraction and specialization of the fundamental
//!    invariants plus numeric fingerprint comparison of operators;
//! 6. [`oracle`] — independent finite-difference validation of every
//!    derived structure equation.

pub mod error;
pub mod expr;
pub mod forms;
pub mod invariants;
pub mod oracle;
pub mod problem;
pub mod reduction;

pub use error::{Error, Result};
pub use expr::{Expr, JetCoord, Symbol};
pub use problem::{OperatorSpec, Variant};
