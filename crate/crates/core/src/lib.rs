//! Exact enumeration and asymptotics for weighted multiplicative models
//! `f(z) = prod_k S(a_k z^k)^{b_k}`.
//!
//! The crate computes the coefficients `c_n` exactly in high precision,
//! solves Khintchine's tilt equation for `delta_n`, evaluates the residue
//! expansion of `log f(e^{-delta})`, checks the gcd-support and weight-mass
//! conditions for the normal local limit theorem, and compares asymptotic
//! estimates of `c_n` against the exact values.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod asymptotics;
pub mod dirichlet;
pub mod error;
pub mod models;
pub mod nllt;
pub mod precision;
pub mod quadrature;
pub mod saddle;
pub mod series;

pub use dirichlet::{AsymptoticProfile, DirichletValue, Pole};
pub use error::{Error, Result};
pub use models::{
    builtin, InnerKind, InnerSeriesSpec, SequenceSpec, SingularityDescriptor, SingularityKind,
    TailRule, WeightedModel,
};
pub use precision::PrecisionContext;
pub use series::{Enumeration, LambdaSequence, LogCoefficients, PowerSeriesReal};
