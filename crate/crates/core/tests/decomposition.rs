mod common;

use common::{any_learner, rel_close, rt_data};
use cvlab_core::crossval::held_out_predictions;
use cvlab_core::dgp::mu_rt;
use cvlab_core::learners::{BandwidthRule, KernelLearner};
use cvlab_core::rng::derive;
use cvlab_core::{cross_validate, decompose, make_folds, Dataset, Learner};
use proptest::prelude::*;

fn mu(x: &[f64]) -> f64 {
    mu_rt(x).unwrap()
}

/// Fit each fold by hand and accumulate every term from its definition.
fn terms_by_definition(learner: &dyn Learner, data: &Dataset, fold_of: &[usize], k: usize, seed: u64) -> [f64; 4] {
    let n = data.n();
    let mut sums = [0.0; 4];
    for fold in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let rule = learner.fit(&data.subset(&train).unwrap(), derive(seed, fold as u64)).unwrap();
        for i in (0..n).filter(|&i| fold_of[i] == fold) {
            let (x, y) = (data.row(i), data.y(i));
            let (pred, m) = (rule.predict(x), mu(x));
            sums[0] += (y - pred).powi(2);
            sums[1] += (y - m).powi(2);
            sums[2] += (y - m) * (m - pred);
            sums[3] += (m - pred).powi(2);
        }
    }
    sums.map(|s| s / n as f64)
}

#[test]
fn kernel_instance_matches_definition() {
    let data = rt_data(40, 3, 11);
    let folds = make_folds(40, 4, 12).unwrap();
    let learner = KernelLearner::new(BandwidthRule::Fixed(0.8)).unwrap();
    let d = decompose(&learner, &data, &folds, &mu, 13).unwrap();
    let fold_of: Vec<usize> = (0..40).map(|i| folds.fold_of(i)).collect();
    let want = terms_by_definition(&learner, &data, &fold_of, 4, 13);
    for (got, want) in [d.cv_total, d.cv_star, d.z, d.delta_sq].into_iter().zip(want) {
        assert!(rel_close(got, want, 1e-12), "{got} vs {want}");
    }
    assert!(rel_close(d.cv_total, d.recombined(), 1e-10));
}

#[test]
fn constant_zero_on_alternating_responses() {
    let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, 0.0]).collect();
    let data = Dataset::from_rows(&rows, vec![1.0, -1.0, 1.0, -1.0]).unwrap();
    let folds = make_folds(4, 2, 0).unwrap();
    let zero = cvlab_core::learners::ConstantLearner::new(0.0);
    assert_eq!(cross_validate(&zero, &data, &folds, 0).unwrap(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_holds(
        learner in any_learner(3),
        n in 8usize..80,
        k_frac in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let k = 2 + ((n - 2) as f64 * k_frac) as usize;
        let data = rt_data(n, 3, seed);
        let folds = make_folds(n, k, seed ^ 1).unwrap();
        let d = decompose(learner.as_ref(), &data, &folds, &mu, seed ^ 2).unwrap();
        prop_assert!(rel_close(d.cv_total, d.recombined(), 1e-10));
        prop_assert!(d.delta_sq >= 0.0);
        let cv = cross_validate(learner.as_ref(), &data, &folds, seed ^ 2).unwrap();
        prop_assert_eq!(cv.to_bits(), d.cv_total.to_bits());
        let fold_sum: f64 = d.per_fold.iter().map(|f| f.cv).sum();
        prop_assert!(rel_close(fold_sum, d.cv_total, 1e-12));
    }

    #[test]
    fn cv_star_cancels_between_learners(
        a in any_learner(3),
        b in any_learner(3),
        n in 10usize..60,
        seed in any::<u64>(),
    ) {
        let data = rt_data(n, 3, seed);
        let folds = make_folds(n, 5, seed ^ 1).unwrap();
        let da = decompose(a.as_ref(), &data, &folds, &mu, seed ^ 2).unwrap();
        let db = decompose(b.as_ref(), &data, &folds, &mu, seed ^ 2).unwrap();
        prop_assert_eq!(da.cv_star.to_bits(), db.cv_star.to_bits());
        let lhs = da.cv_total - db.cv_total;
        let rhs = 2.0 * (da.z - db.z) + (da.delta_sq - db.delta_sq);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * da.cv_total.max(db.cv_total));
    }

    #[test]
    fn held_out_fold_is_never_seen(
        learner in any_learner(2),
        n in 10usize..50,
        target in 0usize..5,
        shift in -50.0..50.0f64,
        seed in any::<u64>(),
    ) {
        let data = rt_data(n, 2, seed);
        let folds = make_folds(n, 5, seed ^ 1).unwrap();
        let before = held_out_predictions(learner.as_ref(), &data, &folds, seed ^ 2).unwrap();
        let mut y = data.responses().to_vec();
        for &i in folds.fold(target) {
            y[i] += shift;
        }
        let mutated = Dataset::new(data.features().to_vec(), y, 2).unwrap();
        let after = held_out_predictions(learner.as_ref(), &mutated, &folds, seed ^ 2).unwrap();
        for &i in folds.fold(target) {
            prop_assert_eq!(before[i].to_bits(), after[i].to_bits());
        }
    }

    #[test]
    fn decomposition_is_deterministic(
        learner in any_learner(3),
        n in 10usize..40,
        seed in any::<u64>(),
    ) {
        let data = rt_data(n, 3, seed);
        let folds = make_folds(n, 4, seed).unwrap();
        let d1 = decompose(learner.as_ref(), &data, &folds, &mu, seed).unwrap();
        let d2 = decompose(learner.as_ref(), &data, &folds, &mu, seed).unwrap();
        prop_assert_eq!(d1, d2);
    }

    #[test]
    fn folds_partition_evenly(n in 2usize..300, k_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let k = 2 + ((n - 2) as f64 * k_frac) as usize;
        let folds = make_folds(n, k, seed).unwrap();
        let mut seen = vec![0usize; n];
        for f in 0..k {
            for &i in folds.fold(f) {
                seen[i] += 1;
                prop_assert_eq!(folds.fold_of(i), f);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes = folds.sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for (s, t) in sizes.iter().zip(folds.training_sizes()) {
            prop_assert_eq!(t, n - s);
        }
    }
}
