#![allow(dead_code)]

use std::sync::Arc;

use cvlab_core::learners::{BandwidthRule, KRule, LearnerKind};
use cvlab_core::{Dataset, Dgp, Learner, LearnerSpec};
use proptest::prelude::*;

/// A learner together with the spec it was built from, for readable
/// counterexamples.
pub struct Built {
    pub spec: LearnerSpec,
    learner: Arc<dyn Learner>,
}

impl Built {
    pub fn as_ref(&self) -> &dyn Learner {
        self.learner.as_ref()
    }
}

impl std::ops::Deref for Built {
    type Target = dyn Learner;
    fn deref(&self) -> &Self::Target {
        self.learner.as_ref()
    }
}

impl std::fmt::Debug for Built {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.spec.kind)
    }
}

/// One of every learner family, with small hyperparameters.
pub fn any_learner(p: usize) -> impl Strategy<Value = Built> {
    let kinds = prop_oneof![
        (-2.0..2.0f64).prop_map(|value| LearnerKind::Constant { value }),
        (1usize..6).prop_map(|k| LearnerKind::Knn { k: KRule::Fixed(k) }),
        (0.2..3.0f64).prop_map(|h| LearnerKind::Kernel { bandwidth: BandwidthRule::Fixed(h) }),
        (0.26..0.49f64, 0.0..2.0f64).prop_map(|(gamma, c)| LearnerKind::Synthetic { gamma, c }),
        (1usize..20).prop_map(|max_rounds| LearnerKind::BoostedStumps {
            max_rounds,
            learning_rate: 0.3,
            internal_cv_folds: 2,
            patience: 3,
        }),
        (1usize..6, 1usize..=p).prop_map(|(num_trees, mtry)| LearnerKind::Forest {
            num_trees,
            min_leaf: 2,
            subsample: 0.7,
            mtry,
            replace: false,
        }),
    ];
    let dgp = Dgp::rt(p).unwrap();
    kinds.prop_map(move |kind| {
        let spec = LearnerSpec::new(kind);
        let learner = spec.build(&dgp).unwrap();
        Built { spec, learner }
    })
}

/// A draw from the standard design with `n` samples in `p` dimensions.
pub fn rt_data(n: usize, p: usize, seed: u64) -> Dataset {
    Dgp::rt(p).unwrap().sample(n, seed).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
