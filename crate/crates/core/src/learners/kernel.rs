use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FittedRule, Learner};
use crate::dgp::Dataset;
use crate::error::{Error, Result};

/// Bandwidth as a function of training size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed(f64),
    /// `h = scale * n^exponent`
    Power { scale: f64, exponent: f64 },
}

impl BandwidthRule {
    pub fn bandwidth(&self, n: usize) -> f64 {
        match *self {
            BandwidthRule::Fixed(h) => h,
            BandwidthRule::Power { scale, exponent } => scale * (n as f64).powf(exponent),
        }
    }
}

/// Nadaraya-Watson regression with a Gaussian kernel.
#[derive(Debug, Clone)]
pub struct KernelLearner {
    name: String,
    rule: BandwidthRule,
}

impl KernelLearner {
    pub fn new(rule: BandwidthRule) -> Result<Self> {
        let ok = match rule {
            BandwidthRule::Fixed(h) => h > 0.0 && h.is_finite(),
            BandwidthRule::Power { scale, exponent } => {
                scale > 0.0 && scale.is_finite() && exponent.is_finite()
            }
        };
        if !ok {
            return Err(Error::InvalidInput(format!("nonpositive bandwidth rule {rule:?}")));
        }
        Ok(KernelLearner {
            name: "kernel".into(),
            rule,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

#[derive(Debug, Clone)]
pub struct KernelRule {
    data: Arc<Dataset>,
    bandwidth: f64,
    global_mean: f64,
}

impl FittedRule for KernelRule {
    fn predict(&self, x: &[f64]) -> f64 {
        let scale = -0.5 / (self.bandwidth * self.bandwidth);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, row) in self.data.rows().enumerate() {
            let w = (scale * super::sq_dist(row, x)).exp();
            num += w * self.data.y(i);
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            self.global_mean
        }
    }

    fn training_n(&self) -> usize {
        self.data.n()
    }
}

impl Learner for KernelLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, data: &Dataset, _seed: u64) -> Result<Box<dyn FittedRule>> {
        super::check_nonempty(data)?;
        let bandwidth = self.rule.bandwidth(data.n());
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidInput(format!("nonpositive bandwidth {bandwidth}")));
        }
        Ok(Box::new(KernelRule {
            data: Arc::new(data.clone()),
            bandwidth,
            global_mean: data.mean_response(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_points() -> Dataset {
        Dataset::from_rows(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]],
            vec![1.0, -1.0, 2.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn huge_bandwidth_is_global_mean() {
        let data = four_points();
        let rule = KernelLearner::new(BandwidthRule::Fixed(1e9))
            .unwrap()
            .fit(&data, 0)
            .unwrap();
        assert!((rule.predict(&[5.0, -3.0]) - 0.625).abs() < 1e-6);
    }

    #[test]
    fn single_point_everywhere() {
        let data = Dataset::from_rows(&[vec![0.3, 0.1]], vec![4.2]).unwrap();
        let rule = KernelLearner::new(BandwidthRule::Fixed(0.5))
            .unwrap()
            .fit(&data, 0)
            .unwrap();
        assert_eq!(rule.predict(&[0.0, 0.0]), 4.2);
        assert_eq!(rule.predict(&[1.0, -2.0]), 4.2);
    }

    #[test]
    fn four_points_unit_bandwidth_by_hand() {
        // query (0,0): squared distances 0, 1, 1, 8
        let w = [1.0, (-0.5f64).exp(), (-0.5f64).exp(), (-4.0f64).exp()];
        let y = [1.0, -1.0, 2.0, 0.5];
        let expected = w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
        let rule = KernelLearner::new(BandwidthRule::Fixed(1.0))
            .unwrap()
            .fit(&four_points(), 0)
            .unwrap();
        assert!((rule.predict(&[0.0, 0.0]) - expected).abs() < 1e-14);
    }

    #[test]
    fn underflow_falls_back_to_mean() {
        let rule = KernelLearner::new(BandwidthRule::Fixed(1e-3))
            .unwrap()
            .fit(&four_points(), 0)
            .unwrap();
        assert_eq!(rule.predict(&[100.0, 100.0]), 0.625);
    }

    #[test]
    fn rejects_nonpositive_bandwidth() {
        assert!(KernelLearner::new(BandwidthRule::Fixed(0.0)).is_err());
        assert!(KernelLearner::new(BandwidthRule::Fixed(-1.0)).is_err());
    }
}
