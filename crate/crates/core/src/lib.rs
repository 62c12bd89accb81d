//! Cross-validation laboratory.
//!
//! K-fold cross-validation instrumented with the exact oracle decomposition
//!
//! ```text
//! CV = CV* + 2 Z + Δ²
//! ```
//!
//! where `CV*` is the training error of the true conditional mean, `Z` the
//! cross term between response noise and held-out prediction error, and `Δ²`
//! the held-out excess error. Data-generating processes with a known mean make
//! all three terms computable, and the [`analysis`] module runs seeded Monte
//! Carlo studies over them: risk-estimation behaviour of CV for a single
//! learner, selection behaviour for a pair of learners, and the scaling of
//! each term with `n`.

pub mod analysis;
pub mod config;
pub mod crossval;
pub mod dgp;
pub mod error;
pub mod learners;
pub mod rng;
pub mod stats;

pub use crossval::{
    cross_validate, decompose, make_folds, oracle_excess_risk, CvDecomposition, ExcessRisk,
    FoldAssignment,
};
pub use dgp::{Dataset, Dgp, MeanFn, XLaw};
pub use error::{Error, Result};
pub use learners::{DeclaredRate, FittedRule, Learner, LearnerSpec};
