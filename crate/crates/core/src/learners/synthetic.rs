use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

use super::{DeclaredRate, FittedRule, Learner};
use crate::dgp::{Dataset, Dgp, XLaw};
use crate::error::{Error, Result};
use crate::rng;

/// Learner with an exactly known excess risk.
///
/// Fitting on `n` samples draws a unit vector `u` from the fit seed and
/// returns `x -> mu(x) + c n^-gamma u.x`. Under `X ~ N(0, I)` we have
/// `E[(u.X)^2] = |u|^2 = 1`, so the conditional excess risk is exactly
/// `c^2 n^(-2 gamma)`. The training responses are ignored.
#[derive(Debug, Clone)]
pub struct SyntheticLearner {
    name: String,
    rate: DeclaredRate,
    dgp: Arc<Dgp>,
}

impl SyntheticLearner {
    pub fn new(gamma: f64, c: f64, dgp: Dgp) -> Result<Self> {
        if !(gamma > 0.25 && gamma < 0.5) {
            return Err(Error::InvalidRate { gamma });
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidInput(format!("amplitude must be >= 0, got {c}")));
        }
        if *dgp.x_law() != XLaw::StandardNormal {
            return Err(Error::UnsupportedLaw(dgp.x_law().to_string()));
        }
        Ok(SyntheticLearner {
            name: format!("synthetic(gamma={gamma},c={c})"),
            rate: DeclaredRate {
                gamma,
                c_minus: c,
                c_plus: c,
            },
            dgp: Arc::new(dgp),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `c^2 n^(-2 gamma)`, the exact conditional excess risk after fitting on
    /// `n` samples.
    pub fn excess_risk(&self, n: usize) -> f64 {
        let amp = self.amplitude(n);
        amp * amp
    }

    fn amplitude(&self, n: usize) -> f64 {
        self.rate.c_plus * (n as f64).powf(-self.rate.gamma)
    }

    fn fit_rule(&self, n: usize, seed: u64) -> SyntheticRule {
        let p = self.dgp.p();
        let mut rng = rng::rng(seed);
        let direction = loop {
            let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                break v.into_iter().map(|a| a / norm).collect();
            }
        };
        SyntheticRule {
            dgp: Arc::clone(&self.dgp),
            amplitude: self.amplitude(n),
            direction,
            n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticRule {
    dgp: Arc<Dgp>,
    amplitude: f64,
    direction: Vec<f64>,
    n: usize,
}

impl SyntheticRule {
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }
}

impl FittedRule for SyntheticRule {
    fn predict(&self, x: &[f64]) -> f64 {
        let proj: f64 = self.direction.iter().zip(x).map(|(u, v)| u * v).sum();
        self.dgp.mu(x) + self.amplitude * proj
    }

    fn training_n(&self) -> usize {
        self.n
    }
}

impl Learner for SyntheticLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn declared_rate(&self) -> Option<DeclaredRate> {
        Some(self.rate)
    }

    fn fit(&self, data: &Dataset, seed: u64) -> Result<Box<dyn FittedRule>> {
        super::check_nonempty(data)?;
        if data.p() != self.dgp.p() {
            return Err(Error::InvalidInput(format!(
                "dataset has p = {}, synthetic learner expects p = {}",
                data.p(),
                self.dgp.p()
            )));
        }
        Ok(Box::new(self.fit_rule(data.n(), seed)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::MeanFn;

    #[test]
    fn rejects_rates_outside_band() {
        let dgp = Dgp::rt(10).unwrap();
        for g in [0.25, 0.5, 0.1, 0.7] {
            assert!(matches!(
                SyntheticLearner::new(g, 1.0, dgp.clone()),
                Err(Error::InvalidRate { .. })
            ));
        }
    }

    #[test]
    fn rejects_non_gaussian_features() {
        let dgp = Dgp::new(3, MeanFn::Zero, 1.0, XLaw::Uniform { half_width: 1.0 }).unwrap();
        assert!(matches!(
            SyntheticLearner::new(0.3, 1.0, dgp),
            Err(Error::UnsupportedLaw(_))
        ));
    }

    #[test]
    fn zero_amplitude_is_the_true_mean() {
        let dgp = Dgp::rt(10).unwrap();
        let data = dgp.sample(30, 1).unwrap();
        let rule = SyntheticLearner::new(0.4, 0.0, dgp.clone())
            .unwrap()
            .fit(&data, 5)
            .unwrap();
        for x in data.rows() {
            assert_eq!(rule.predict(x), dgp.mu(x));
        }
    }

    #[test]
    fn excess_risk_power_law() {
        let learner = SyntheticLearner::new(0.4, 1.0, Dgp::rt(10).unwrap()).unwrap();
        assert!((learner.excess_risk(10_000) - 6.3096e-4).abs() < 1e-8);
    }

    #[test]
    fn direction_is_unit_and_seeded() {
        let learner = SyntheticLearner::new(0.3, 1.0, Dgp::rt(10).unwrap()).unwrap();
        let a = learner.fit_rule(100, 3);
        let b = learner.fit_rule(100, 3);
        let c = learner.fit_rule(100, 4);
        let norm: f64 = a.direction().iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(a.direction(), b.direction());
        assert_ne!(a.direction(), c.direction());
    }
}
