//! Generalized Bayes shrinkage estimators of a multivariate normal mean
//! under the mixing priors
//! `π(g; a, b, c) = (g+1)^a (g/(g+1))^b L(g)^c`, `L(g) = log(g+1) + 1`.
//!
//! The crate evaluates marginals and estimators by quadrature, classifies
//! admissibility, builds dominating estimators in the inadmissible regime,
//! evaluates Blyth-sequence risk differences in the admissible regime, and
//! estimates frequentist risk by seeded Monte Carlo.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blyth;
pub mod classify;
pub mod cli;
pub mod config;
pub mod dominate;
pub mod error;
pub mod estimator;
pub mod interp;
pub mod marginal;
pub mod priors;
pub mod quad;
pub mod risk;

pub use blyth::{BlythKind, BlythSequence};
pub use classify::{classify, Admissibility, Verdict};
pub use dominate::DominatorConstruction;
pub use error::{Error, Result};
pub use estimator::{GeneralizedBayes, ShrinkageEstimator};
pub use marginal::{MarginalEvaluator, Weight};
pub use priors::MixingParams;
pub use quad::QuadratureConfig;
pub use risk::{RiskPoint, RiskReport};
