//! Fixtures shared by the benchmarks.

use cvlab_core::learners::LearnerKind;
use cvlab_core::{Dataset, Dgp, LearnerSpec};

/// A draw of `n` samples from the indicator-sigmoid design in 10 dimensions.
pub fn rt_sample(n: usize, seed: u64) -> Dataset {
    Dgp::rt(10)
        .expect("p >= 2")
        .sample(n, seed)
        .expect("n >= 1")
}

/// The forest and boosting learners of the figure preset.
pub fn figure_learners() -> [LearnerSpec; 2] {
    [
        LearnerSpec::named(
            "boosting",
            LearnerKind::BoostedStumps {
                max_rounds: 1000,
                learning_rate: 0.1,
                internal_cv_folds: 5,
                patience: 10,
            },
        ),
        LearnerSpec::named(
            "forest",
            LearnerKind::Forest {
                num_trees: 100,
                min_leaf: 7,
                subsample: 0.5,
                mtry: 2,
                replace: false,
            },
        ),
    ]
}
