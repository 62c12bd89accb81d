use super::{FittedRule, Learner};
use crate::crossval::make_folds;
use crate::dgp::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Depth-one regression tree. `split = None` is a constant leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub split: Option<(usize, f64)>,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.split {
            Some((j, t)) if x[j] > t => self.right,
            _ => self.left,
        }
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.left *= factor;
        self.right *= factor;
        self
    }
}

/// Row indices sorted by each feature (ties by index).
fn sort_orders(data: &Dataset) -> Vec<Vec<u32>> {
    (0..data.p())
        .map(|j| {
            let mut o: Vec<u32> = (0..data.n() as u32).collect();
            o.sort_by(|&a, &b| {
                data.row(a as usize)[j]
                    .total_cmp(&data.row(b as usize)[j])
                    .then(a.cmp(&b))
            });
            o
        })
        .collect()
}

/// Least-squares stump fit to `target`.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// values of each feature; rows with `x[j] <= t` go left. Equal gains resolve
/// to the lowest feature index, then the smallest threshold.
pub fn best_stump(data: &Dataset, target: &[f64]) -> Stump {
    best_stump_sorted(data, &sort_orders(data), target)
}

fn best_stump_sorted(data: &Dataset, orders: &[Vec<u32>], target: &[f64]) -> Stump {
    let n = target.len();
    let total: f64 = target.iter().sum();
    let base = total * total / n as f64;
    let mut best: Option<(f64, usize, f64, f64, f64)> = None;
    for (j, order) in orders.iter().enumerate() {
        let mut left_sum = 0.0;
        for w in 0..n.saturating_sub(1) {
            let i = order[w] as usize;
            left_sum += target[i];
            let lo = data.row(i)[j];
            let hi = data.row(order[w + 1] as usize)[j];
            if lo >= hi {
                continue;
            }
            let nl = (w + 1) as f64;
            let nr = (n - w - 1) as f64;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
            if best.is_none_or(|b| gain > b.0) {
                let mut t = 0.5 * (lo + hi);
                if t >= hi {
                    t = lo;
                }
                best = Some((gain, j, t, left_sum / nl, right_sum / nr));
            }
        }
    }
    match best {
        Some((gain, j, t, left, right)) if gain > 0.0 => Stump {
            split: Some((j, t)),
            left,
            right,
        },
        _ => {
            let mean = total / n as f64;
            Stump {
                split: None,
                left: mean,
                right: mean,
            }
        }
    }
}

/// `base + sum of stumps` (stump leaves already carry the learning rate).
#[derive(Debug, Clone)]
pub struct StumpEnsemble {
    pub base: f64,
    pub stumps: Vec<Stump>,
    n: usize,
}

impl FittedRule for StumpEnsemble {
    fn predict(&self, x: &[f64]) -> f64 {
        self.stumps
            .iter()
            .fold(self.base, |acc, s| acc + s.predict(x))
    }

    fn training_n(&self) -> usize {
        self.n
    }
}

/// Incremental boosting on one training set.
struct Booster<'a> {
    data: &'a Dataset,
    orders: Vec<Vec<u32>>,
    residual: Vec<f64>,
    ensemble: StumpEnsemble,
}

impl<'a> Booster<'a> {
    fn new(data: &'a Dataset) -> Self {
        let base = data.mean_response();
        Booster {
            data,
            orders: sort_orders(data),
            residual: data.responses().iter().map(|y| y - base).collect(),
            ensemble: StumpEnsemble {
                base,
                stumps: Vec::new(),
                n: data.n(),
            },
        }
    }

    fn step(&mut self, learning_rate: f64) -> Stump {
        let stump = best_stump_sorted(self.data, &self.orders, &self.residual).scaled(learning_rate);
        for (i, r) in self.residual.iter_mut().enumerate() {
            *r -= stump.predict(self.data.row(i));
        }
        self.ensemble.stumps.push(stump);
        stump
    }
}

/// Least-squares gradient boosting with depth-one trees. The number of
/// rounds is chosen by internal K-fold CV with early stopping.
#[derive(Debug, Clone)]
pub struct BoostedStumps {
    name: String,
    max_rounds: usize,
    learning_rate: f64,
    internal_cv_folds: usize,
    patience: usize,
}

impl BoostedStumps {
    pub fn new(
        max_rounds: usize,
        learning_rate: f64,
        internal_cv_folds: usize,
        patience: usize,
    ) -> Result<Self> {
        if max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be >= 1".into()));
        }
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must lie in (0, 1], got {learning_rate}"
            )));
        }
        if internal_cv_folds < 2 {
            return Err(Error::InvalidConfig("internal_cv_folds must be >= 2".into()));
        }
        if patience == 0 {
            return Err(Error::InvalidConfig("patience must be >= 1".into()));
        }
        Ok(BoostedStumps {
            name: "boosted_stumps".into(),
            max_rounds,
            learning_rate,
            internal_cv_folds,
            patience,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Boost for exactly `rounds` rounds, no tuning.
    pub fn fit_rounds(&self, data: &Dataset, rounds: usize) -> StumpEnsemble {
        let mut booster = Booster::new(data);
        for _ in 0..rounds {
            booster.step(self.learning_rate);
        }
        booster.ensemble
    }

    /// Round count chosen by internal CV: the first minimiser of pooled
    /// held-out MSE, stopping once `patience` rounds pass without a strict
    /// improvement.
    pub fn select_rounds(&self, data: &Dataset, seed: u64) -> Result<usize> {
        let n = data.n();
        if n < self.internal_cv_folds {
            return Err(Error::InvalidConfig(format!(
                "{n} samples cannot fill {} internal folds",
                self.internal_cv_folds
            )));
        }
        let folds = make_folds(n, self.internal_cv_folds, rng::derive(seed, 0))?;
        let splits: Vec<(Dataset, Dataset)> = (0..folds.k())
            .map(|k| {
                Ok((
                    data.subset(&folds.train_indices(k))?,
                    data.subset(folds.fold(k))?,
                ))
            })
            .collect::<Result<_>>()?;
        let mut state: Vec<(Booster, Vec<f64>)> = splits
            .iter()
            .map(|(train, val)| {
                let b = Booster::new(train);
                let pred = vec![b.ensemble.base; val.n()];
                (b, pred)
            })
            .collect();

        let (mut best_loss, mut best_round, mut stale) = (f64::INFINITY, 1, 0);
        for round in 1..=self.max_rounds {
            let mut sse = 0.0;
            for ((booster, pred), (_, val)) in state.iter_mut().zip(&splits) {
                let stump = booster.step(self.learning_rate);
                for (i, p) in pred.iter_mut().enumerate() {
                    *p += stump.predict(val.row(i));
                    let e = val.y(i) - *p;
                    sse += e * e;
                }
            }
            let loss = sse / n as f64;
            if loss < best_loss {
                best_loss = loss;
                best_round = round;
                stale = 0;
            } else {
                stale += 1;
                if stale >= self.patience {
                    break;
                }
            }
        }
        Ok(best_round)
    }
}

impl Learner for BoostedStumps {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, data: &Dataset, seed: u64) -> Result<Box<dyn FittedRule>> {
        super::check_nonempty(data)?;
        let rounds = self.select_rounds(data, seed)?;
        Ok(Box::new(self.fit_rounds(data, rounds)))
    }
}
