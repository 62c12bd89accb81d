use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FittedRule, Learner};
use crate::dgp::Dataset;
use crate::error::{Error, Result};

/// Neighbour count as a function of training size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    Fixed(usize),
    /// `k = round(scale * n^exponent)`, clamped to `[1, n]`.
    Power { scale: f64, exponent: f64 },
}

impl KRule {
    pub fn k(&self, n: usize) -> usize {
        match *self {
            KRule::Fixed(k) => k,
            KRule::Power { scale, exponent } => {
                let k = (scale * (n as f64).powf(exponent)).round();
                (k.max(1.0) as usize).min(n)
            }
        }
    }
}

/// k-nearest-neighbour regression under Euclidean distance.
#[derive(Debug, Clone)]
pub struct KnnLearner {
    name: String,
    rule: KRule,
}

impl KnnLearner {
    pub fn new(rule: KRule) -> Result<Self> {
        if let KRule::Power { scale, exponent } = rule {
            if !(scale > 0.0 && scale.is_finite() && exponent.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "knn power rule needs finite positive scale, got ({scale}, {exponent})"
                )));
            }
        }
        Ok(KnnLearner {
            name: "knn".into(),
            rule,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

#[derive(Debug, Clone)]
pub struct KnnRule {
    data: Arc<Dataset>,
    k: usize,
}

impl KnnRule {
    /// Indices of the `k` nearest training points, ties broken by lowest
    /// index, in ascending index order.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let mut dists: Vec<(f64, usize)> = self
            .data
            .rows()
            .enumerate()
            .map(|(i, row)| (super::sq_dist(row, x), i))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, by_dist);
            dists.truncate(self.k);
        }
        let mut idx: Vec<usize> = dists.into_iter().map(|(_, i)| i).collect();
        idx.sort_unstable();
        idx
    }
}

impl FittedRule for KnnRule {
    fn predict(&self, x: &[f64]) -> f64 {
        let idx = self.neighbours(x);
        idx.iter().map(|&i| self.data.y(i)).sum::<f64>() / idx.len() as f64
    }

    fn training_n(&self) -> usize {
        self.data.n()
    }
}

impl Learner for KnnLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, data: &Dataset, _seed: u64) -> Result<Box<dyn FittedRule>> {
        super::check_nonempty(data)?;
        let k = self.rule.k(data.n());
        if k == 0 || k > data.n() {
            return Err(Error::InvalidInput(format!(
                "knn needs 1 <= k <= n, got k = {k}, n = {}",
                data.n()
            )));
        }
        Ok(Box::new(KnnRule {
            data: Arc::new(data.clone()),
            k,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_rows(
            &[
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 2.0],
                vec![3.0, 3.0],
                vec![-1.0, -1.0],
            ],
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
        )
        .unwrap()
    }

    #[test]
    fn k_equal_n_is_global_mean() {
        let data = toy();
        let rule = KnnLearner::new(KRule::Fixed(5)).unwrap().fit(&data, 0).unwrap();
        for x in [[10.0, 10.0], [0.0, 0.0], [-4.0, 2.0]] {
            assert!((rule.predict(&x) - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn k_one_recovers_training_response() {
        let data = toy();
        let rule = KnnLearner::new(KRule::Fixed(1)).unwrap().fit(&data, 0).unwrap();
        for i in 0..data.n() {
            assert_eq!(rule.predict(data.row(i)), data.y(i));
        }
    }

    #[test]
    fn k_three_matches_exhaustive_scan() {
        // distances from (0.5, 0.5): pts 0,1 at 0.5; pt 4 at 4.5; pt 2 at 2.5; pt 3 at 12.5
        let data = toy();
        let rule = KnnLearner::new(KRule::Fixed(3)).unwrap().fit(&data, 0).unwrap();
        assert!((rule.predict(&[0.5, 0.5]) - (1.0 + 2.0 + 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_lowest_index() {
        let data = Dataset::from_rows(
            &[vec![1.0], vec![-1.0], vec![1.0], vec![5.0]],
            vec![10.0, 20.0, 30.0, 40.0],
        )
        .unwrap();
        let rule = KnnRule {
            data: Arc::new(data),
            k: 2,
        };
        assert_eq!(rule.neighbours(&[0.0]), vec![0, 1]);
    }

    #[test]
    fn invalid_k() {
        let data = toy();
        assert!(KnnLearner::new(KRule::Fixed(0)).unwrap().fit(&data, 0).is_err());
        assert!(KnnLearner::new(KRule::Fixed(6)).unwrap().fit(&data, 0).is_err());
    }

    #[test]
    fn power_rule_is_clamped() {
        let r = KRule::Power {
            scale: 1.0,
            exponent: 0.5,
        };
        assert_eq!(r.k(100), 10);
        assert_eq!(r.k(1), 1);
        let big = KRule::Power {
            scale: 10.0,
            exponent: 1.0,
        };
        assert_eq!(big.k(7), 7);
    }
}
