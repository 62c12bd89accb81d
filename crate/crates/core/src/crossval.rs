//! K-fold cross-validation and its oracle decomposition
//! `CV = CV* + 2 Z + Δ²`.

use rand::seq::SliceRandom;

use crate::dgp::{Dataset, Dgp};
use crate::error::{Error, Result};
use crate::learners::{FittedRule, Learner};
use crate::rng;

/// Partition of `0..n` into `K` folds whose sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl FoldAssignment {
    /// Build from 0-based fold labels. Every fold must be non-empty.
    pub fn from_labels(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        let n = fold_of.len();
        if k < 2 || k > n {
            return Err(Error::InvalidFolds { n, k });
        }
        let mut members = vec![Vec::new(); k];
        for (i, &f) in fold_of.iter().enumerate() {
            if f >= k {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has fold label {f} outside 0..{k}"
                )));
            }
            members[f].push(i);
        }
        if members.iter().any(Vec::is_empty) {
            return Err(Error::InvalidInput("every fold must be non-empty".into()));
        }
        Ok(FoldAssignment { fold_of, members })
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    /// 0-based fold label of sample `i`.
    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    /// Members of fold `k`, ascending.
    pub fn fold(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// Training-set size `n - |S_k|` for each fold.
    pub fn training_sizes(&self) -> Vec<usize> {
        self.members.iter().map(|m| self.n() - m.len()).collect()
    }

    /// Every sample outside fold `k`, ascending.
    pub fn train_indices(&self, k: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != k).collect()
    }
}

/// Random balanced folds: a seeded uniform permutation of `0..n` dealt
/// round-robin into `k` folds. `k = n` is leave-one-out.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { n, k });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::rng(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    FoldAssignment::from_labels(fold_of, k)
}

fn check_sizes(data: &Dataset, folds: &FoldAssignment) -> Result<()> {
    if data.n() != folds.n() {
        return Err(Error::InvalidInput(format!(
            "folds cover {} samples but dataset has {}",
            folds.n(),
            data.n()
        )));
    }
    Ok(())
}

/// Prediction for every sample from the rule fit without its fold. Fold `k`
/// is fit with seed `derive(seed, k)`.
pub fn held_out_predictions(
    learner: &dyn Learner,
    data: &Dataset,
    folds: &FoldAssignment,
    seed: u64,
) -> Result<Vec<f64>> {
    check_sizes(data, folds)?;
    let mut pred = vec![f64::NAN; data.n()];
    for k in 0..folds.k() {
        let train = data.subset(&folds.train_indices(k))?;
        let rule = learner.fit(&train, rng::derive(seed, k as u64))?;
        for &i in folds.fold(k) {
            pred[i] = rule.predict(data.row(i));
        }
    }
    Ok(pred)
}

/// `(1/n) sum_k sum_{i in S_k} (y_i - pred_i)^2`, summed fold by fold.
fn cv_from_predictions(data: &Dataset, folds: &FoldAssignment, pred: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..folds.k() {
        for &i in folds.fold(k) {
            let e = data.y(i) - pred[i];
            total += e * e;
        }
    }
    total / data.n() as f64
}

/// K-fold cross-validation estimate of the learner's squared-error risk.
pub fn cross_validate(
    learner: &dyn Learner,
    data: &Dataset,
    folds: &FoldAssignment,
    seed: u64,
) -> Result<f64> {
    let pred = held_out_predictions(learner, data, folds, seed)?;
    Ok(cv_from_predictions(data, folds, &pred))
}

/// One fold's share of each term (already divided by `n`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldTerms {
    pub size: usize,
    pub train_size: usize,
    pub cv: f64,
    pub cv_star: f64,
    pub z: f64,
    pub delta_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvDecomposition {
    /// The K-fold estimate itself.
    pub cv_total: f64,
    /// Training error of the true mean, `(1/n) sum (y_i - mu(x_i))^2`.
    pub cv_star: f64,
    /// Cross term `(1/n) sum (y_i - mu(x_i)) (mu(x_i) - pred_i)`.
    pub z: f64,
    /// Held-out excess error `(1/n) sum (mu(x_i) - pred_i)^2`.
    pub delta_sq: f64,
    pub per_fold: Vec<FoldTerms>,
}

impl CvDecomposition {
    pub const CSV_HEADER: [&'static str; 8] = [
        "replication",
        "learner",
        "n",
        "K",
        "cv_total",
        "cv_star",
        "z",
        "delta_sq",
    ];

    /// `cv_star + 2 z + delta_sq`; equals `cv_total` up to rounding.
    pub fn recombined(&self) -> f64 {
        self.cv_star + 2.0 * self.z + self.delta_sq
    }

    pub fn csv_record(&self, replication: usize, learner: &str, n: usize, k: usize) -> Vec<String> {
        vec![
            replication.to_string(),
            learner.to_string(),
            n.to_string(),
            k.to_string(),
            self.cv_total.to_string(),
            self.cv_star.to_string(),
            self.z.to_string(),
            self.delta_sq.to_string(),
        ]
    }
}

/// Cross-validate and split the estimate into `CV* + 2 Z + Δ²` against the
/// true mean `mu`. Uses the same per-fold fits as [`cross_validate`] for the
/// same seed, so `cv_total` matches it bitwise.
pub fn decompose(
    learner: &dyn Learner,
    data: &Dataset,
    folds: &FoldAssignment,
    mu: &dyn Fn(&[f64]) -> f64,
    seed: u64,
) -> Result<CvDecomposition> {
    let pred = held_out_predictions(learner, data, folds, seed)?;
    Ok(decompose_predictions(data, folds, mu, &pred))
}

pub(crate) fn decompose_predictions(
    data: &Dataset,
    folds: &FoldAssignment,
    mu: &dyn Fn(&[f64]) -> f64,
    pred: &[f64],
) -> CvDecomposition {
    let n = data.n() as f64;
    let means: Vec<f64> = data.rows().map(mu).collect();
    let cv_star = data
        .responses()
        .iter()
        .zip(&means)
        .map(|(y, m)| (y - m) * (y - m))
        .sum::<f64>()
        / n;

    let mut per_fold = Vec::with_capacity(folds.k());
    let (mut z, mut delta_sq) = (0.0, 0.0);
    for k in 0..folds.k() {
        let mut t = FoldTerms {
            size: folds.fold(k).len(),
            train_size: folds.n() - folds.fold(k).len(),
            cv: 0.0,
            cv_star: 0.0,
            z: 0.0,
            delta_sq: 0.0,
        };
        for &i in folds.fold(k) {
            let noise = data.y(i) - means[i];
            let gap = means[i] - pred[i];
            let e = data.y(i) - pred[i];
            t.cv += e * e;
            t.cv_star += noise * noise;
            t.z += noise * gap;
            t.delta_sq += gap * gap;
        }
        z += t.z;
        delta_sq += t.delta_sq;
        t.cv /= n;
        t.cv_star /= n;
        t.z /= n;
        t.delta_sq /= n;
        per_fold.push(t);
    }
    CvDecomposition {
        cv_total: cv_from_predictions(data, folds, pred),
        cv_star,
        z: z / n,
        delta_sq: delta_sq / n,
        per_fold,
    }
}

/// Monte Carlo estimate of a conditional excess risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessRisk {
    pub mean: f64,
    /// Standard error of `mean`.
    pub se: f64,
    pub draws: usize,
}

/// `E[(rule(X) - mu(X))^2]` over `mc_draws` fresh feature draws from `dgp`.
pub fn oracle_excess_risk(
    rule: &dyn FittedRule,
    dgp: &Dgp,
    mc_draws: usize,
    seed: u64,
) -> Result<ExcessRisk> {
    if mc_draws == 0 {
        return Err(Error::InvalidInput("mc_draws must be >= 1".into()));
    }
    let mut rng = rng::rng(seed);
    let mut x = vec![0.0; dgp.p()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..mc_draws {
        dgp.draw_x(&mut rng, &mut x);
        let d = rule.predict(&x) - dgp.mu(&x);
        let d2 = d * d;
        sum += d2;
        sum_sq += d2 * d2;
    }
    let m = mc_draws as f64;
    let mean = sum / m;
    let se = if mc_draws > 1 {
        ((sum_sq - m * mean * mean).max(0.0) / (m - 1.0) / m).sqrt()
    } else {
        f64::NAN
    };
    Ok(ExcessRisk {
        mean,
        se,
        draws: mc_draws,
    })
}
