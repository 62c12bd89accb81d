//! Learning algorithms: a [`Learner`] maps a dataset and a seed to a
//! [`FittedRule`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dgp::{Dataset, Dgp};
use crate::error::{Error, Result};

mod forest;
mod kernel;
mod knn;
mod stumps;
mod synthetic;

pub use forest::{oob_error, Forest, ForestRule, OobReport, Tree};
pub use kernel::{BandwidthRule, KernelLearner, KernelRule};
pub use knn::{KRule, KnnLearner, KnnRule};
pub use stumps::{best_stump, BoostedStumps, Stump, StumpEnsemble};
pub use synthetic::{SyntheticLearner, SyntheticRule};

/// A fitted predictor `x -> y_hat`. Deterministic and total on `R^p`.
pub trait FittedRule: Send + Sync {
    fn predict(&self, x: &[f64]) -> f64;

    /// Number of samples the rule was fit on.
    fn training_n(&self) -> usize;
}

/// Known excess-risk rate: `n^gamma * RMSE` is asymptotically in
/// `(c_minus, c_plus]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredRate {
    pub gamma: f64,
    pub c_minus: f64,
    pub c_plus: f64,
}

impl DeclaredRate {
    pub fn new(gamma: f64, c_minus: f64, c_plus: f64) -> Result<Self> {
        if !(gamma > 0.25 && gamma < 0.5) {
            return Err(Error::InvalidRate { gamma });
        }
        if !(c_minus >= 0.0 && c_minus <= c_plus && c_plus.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "rate constants must satisfy 0 <= C- <= C+ < inf, got ({c_minus}, {c_plus})"
            )));
        }
        Ok(DeclaredRate {
            gamma,
            c_minus,
            c_plus,
        })
    }

    /// Population-level ordering: true when a learner with `self` eventually
    /// beats one with `other`.
    pub fn dominates(&self, other: &DeclaredRate) -> bool {
        self.gamma > other.gamma || (self.gamma == other.gamma && self.c_plus < other.c_minus)
    }
}

/// Fit of a learner on a full dataset, with its out-of-bag error when the
/// learner supports one.
pub struct FullFit {
    pub rule: Box<dyn FittedRule>,
    pub oob: Option<OobReport>,
}

pub trait Learner: Send + Sync {
    fn name(&self) -> &str;

    fn declared_rate(&self) -> Option<DeclaredRate> {
        None
    }

    /// Fit on `data`. Must be a pure function of `(data, seed)`.
    fn fit(&self, data: &Dataset, seed: u64) -> Result<Box<dyn FittedRule>>;

    fn fit_full(&self, data: &Dataset, seed: u64) -> Result<FullFit> {
        Ok(FullFit {
            rule: self.fit(data, seed)?,
            oob: None,
        })
    }
}

/// Predicts a fixed value everywhere, ignoring the data.
#[derive(Debug, Clone)]
pub struct ConstantLearner {
    name: String,
    value: f64,
}

impl ConstantLearner {
    pub fn new(value: f64) -> Self {
        ConstantLearner {
            name: format!("constant({value})"),
            value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstantRule {
    value: f64,
    n: usize,
}

impl FittedRule for ConstantRule {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn training_n(&self) -> usize {
        self.n
    }
}

impl Learner for ConstantLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, data: &Dataset, _seed: u64) -> Result<Box<dyn FittedRule>> {
        Ok(Box::new(ConstantRule {
            value: self.value,
            n: data.n(),
        }))
    }
}

/// Learner configuration block: a name plus a per-kind hyperparameter table.
///
/// ```toml
/// name = "forest"
/// kind = "forest"
/// num_trees = 100
/// min_leaf = 5
/// subsample = 0.5
/// mtry = 10
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: LearnerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerKind {
    /// `mu(x) + c n^-gamma u.x` with a random unit direction `u`.
    Synthetic { gamma: f64, c: f64 },
    Constant { value: f64 },
    Knn { k: KRule },
    Kernel { bandwidth: BandwidthRule },
    BoostedStumps {
        max_rounds: usize,
        learning_rate: f64,
        internal_cv_folds: usize,
        patience: usize,
    },
    Forest {
        num_trees: usize,
        min_leaf: usize,
        subsample: f64,
        mtry: usize,
        #[serde(default)]
        replace: bool,
    },
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerSpec { name: None, kind }
    }

    pub fn named(name: impl Into<String>, kind: LearnerKind) -> Self {
        LearnerSpec {
            name: Some(name.into()),
            kind,
        }
    }

    /// Resolved learner name: the explicit name, or the kind.
    pub fn label(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match &self.kind {
            LearnerKind::Synthetic { gamma, c } => format!("synthetic(gamma={gamma},c={c})"),
            LearnerKind::Constant { value } => format!("constant({value})"),
            LearnerKind::Knn { .. } => "knn".into(),
            LearnerKind::Kernel { .. } => "kernel".into(),
            LearnerKind::BoostedStumps { .. } => "boosted_stumps".into(),
            LearnerKind::Forest { .. } => "forest".into(),
        }
    }

    /// Instantiate against `dgp`. Only the synthetic learner uses the DGP
    /// (for its mean function and feature law).
    pub fn build(&self, dgp: &Dgp) -> Result<Arc<dyn Learner>> {
        let label = self.label();
        let learner: Arc<dyn Learner> = match &self.kind {
            LearnerKind::Synthetic { gamma, c } => {
                Arc::new(SyntheticLearner::new(*gamma, *c, dgp.clone())?.with_name(label))
            }
            LearnerKind::Constant { value } => Arc::new(ConstantLearner {
                name: label,
                value: *value,
            }),
            LearnerKind::Knn { k } => Arc::new(KnnLearner::new(k.clone())?.with_name(label)),
            LearnerKind::Kernel { bandwidth } => {
                Arc::new(KernelLearner::new(bandwidth.clone())?.with_name(label))
            }
            LearnerKind::BoostedStumps {
                max_rounds,
                learning_rate,
                internal_cv_folds,
                patience,
            } => Arc::new(
                BoostedStumps::new(*max_rounds, *learning_rate, *internal_cv_folds, *patience)?
                    .with_name(label),
            ),
            LearnerKind::Forest {
                num_trees,
                min_leaf,
                subsample,
                mtry,
                replace,
            } => Arc::new(
                Forest::new(*num_trees, *min_leaf, *subsample, *mtry)?
                    .with_replacement(*replace)
                    .with_name(label),
            ),
        };
        Ok(learner)
    }
}

pub(crate) fn check_nonempty(data: &Dataset) -> Result<()> {
    if data.n() == 0 {
        return Err(Error::InvalidInput("cannot fit on an empty dataset".into()));
    }
    Ok(())
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}
