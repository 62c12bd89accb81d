//! Data-generating processes with a known conditional mean.

use std::io::{Read, Write};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// `1{x1 > 0} / (1 + exp(-2 x2))`.
///
/// The indicator is strict, so the mean is 0 on the boundary `x1 = 0`.
pub fn mu_rt(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "indicator-sigmoid mean needs at least 2 coordinates, got {}",
            x.len()
        )));
    }
    Ok(rt_unchecked(x))
}

#[inline]
fn rt_unchecked(x: &[f64]) -> f64 {
    if x[0] > 0.0 {
        1.0 / (1.0 + (-2.0 * x[1]).exp())
    } else {
        0.0
    }
}

/// Conditional mean function `mu(x) = E[Y | X = x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFn {
    /// Indicator-sigmoid signal on the first two coordinates.
    Rt,
    Zero,
    /// `mu(x) = coef . x`
    Linear(Vec<f64>),
}

impl MeanFn {
    /// Built-in mean presets addressable by name: `rt`, `zero`, and `linear`
    /// (`mu(x) = x1`).
    pub fn preset(name: &str, p: usize) -> Result<Self> {
        match name {
            "rt" => Ok(MeanFn::Rt),
            "zero" => Ok(MeanFn::Zero),
            "linear" => {
                let mut coef = vec![0.0; p];
                if let Some(c) = coef.first_mut() {
                    *c = 1.0;
                }
                Ok(MeanFn::Linear(coef))
            }
            other => Err(Error::InvalidInput(format!(
                "unknown mean preset `{other}` (expected rt, zero or linear)"
            ))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            MeanFn::Rt => "rt",
            MeanFn::Zero => "zero",
            MeanFn::Linear(_) => "linear",
        }
    }
}

/// Feature distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XLaw {
    /// `N(0, I_p)`
    StandardNormal,
    /// Independent `U(-half_width, half_width)` coordinates.
    Uniform { half_width: f64 },
}

impl std::fmt::Display for XLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            XLaw::StandardNormal => f.write_str("standard-normal"),
            XLaw::Uniform { half_width } => write!(f, "uniform(-{half_width}, {half_width})"),
        }
    }
}

impl XLaw {
    fn draw(&self, rng: &mut rng::Rng) -> f64 {
        match *self {
            XLaw::StandardNormal => StandardNormal.sample(rng),
            XLaw::Uniform { half_width } => rng.random_range(-half_width..=half_width),
        }
    }
}

/// Data-generating process `X ~ x_law`, `Y | X ~ N(mu(X), noise_sd^2)`.
///
/// Immutable once built; the conditional variance is `noise_sd^2` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dgp {
    p: usize,
    mean: MeanFn,
    noise_sd: f64,
    x_law: XLaw,
}

impl Dgp {
    pub fn new(p: usize, mean: MeanFn, noise_sd: f64, x_law: XLaw) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("feature dimension must be >= 1".into()));
        }
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise_sd must be finite and nonnegative, got {noise_sd}"
            )));
        }
        match &mean {
            MeanFn::Rt if p < 2 => {
                return Err(Error::InvalidInput(format!(
                    "indicator-sigmoid mean needs p >= 2, got p = {p}"
                )))
            }
            MeanFn::Linear(coef) if coef.len() != p => {
                return Err(Error::InvalidInput(format!(
                    "linear mean has {} coefficients for p = {p}",
                    coef.len()
                )))
            }
            MeanFn::Linear(coef) if coef.iter().any(|c| !c.is_finite()) => {
                return Err(Error::InvalidInput("linear mean coefficients must be finite".into()))
            }
            _ => {}
        }
        if let XLaw::Uniform { half_width } = x_law {
            if !(half_width.is_finite() && half_width > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "uniform half-width must be positive, got {half_width}"
                )));
            }
        }
        Ok(Dgp {
            p,
            mean,
            noise_sd,
            x_law,
        })
    }

    /// `X ~ N(0, I_p)`, `Y | X ~ N(mu_rt(X), 1)`.
    pub fn rt(p: usize) -> Result<Self> {
        Dgp::new(p, MeanFn::Rt, 1.0, XLaw::StandardNormal)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn mean(&self) -> &MeanFn {
        &self.mean
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn x_law(&self) -> &XLaw {
        &self.x_law
    }

    /// Evaluate the conditional mean. `x` must have length `p`.
    #[inline]
    pub fn mu(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.p);
        match &self.mean {
            MeanFn::Rt => rt_unchecked(x),
            MeanFn::Zero => 0.0,
            MeanFn::Linear(coef) => coef.iter().zip(x).map(|(c, v)| c * v).sum(),
        }
    }

    /// Irreducible error `E[(Y - mu(X))^2]`.
    pub fn true_err(&self) -> f64 {
        self.noise_sd * self.noise_sd
    }

    /// `Var[(Y - mu(X))^2] = 2 sigma^4` for Gaussian noise.
    pub fn cv_star_asymptotic_variance(&self) -> f64 {
        2.0 * self.noise_sd.powi(4)
    }

    /// Draw one feature vector into `out`.
    pub fn draw_x(&self, rng: &mut rng::Rng, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.x_law.draw(rng);
        }
    }

    /// `n` i.i.d. draws; a pure function of `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be >= 1".into()));
        }
        let mut rng = rng::rng(seed);
        let mut features = vec![0.0; n * self.p];
        let mut responses = Vec::with_capacity(n);
        for row in features.chunks_exact_mut(self.p) {
            self.draw_x(&mut rng, row);
            let eps: f64 = StandardNormal.sample(&mut rng);
            responses.push(self.mu(row) + self.noise_sd * eps);
        }
        Dataset::new(features, responses, self.p)
    }

    pub fn describe(&self) -> String {
        format!(
            "mean={} p={} noise_sd={} x_law={}",
            self.mean.name(),
            self.p,
            self.noise_sd,
            self.x_law
        )
    }
}

/// `n` samples of `(x in R^p, y)`, features stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    responses: Vec<f64>,
    p: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, responses: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("feature dimension must be >= 1".into()));
        }
        if responses.is_empty() {
            return Err(Error::InvalidInput("dataset must contain at least one sample".into()));
        }
        if features.len() != responses.len() * p {
            return Err(Error::InvalidInput(format!(
                "{} feature values do not form {} rows of width {p}",
                features.len(),
                responses.len()
            )));
        }
        Ok(Dataset {
            features,
            responses,
            p,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], responses: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("ragged feature rows".into()));
        }
        if rows.len() != responses.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} responses",
                rows.len(),
                responses.len()
            )));
        }
        Dataset::new(rows.concat(), responses, p)
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.responses[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.p)
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.p);
        let mut responses = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            responses.push(self.responses[i]);
        }
        Dataset::new(features, responses, self.p)
    }

    pub fn mean_response(&self) -> f64 {
        self.responses.iter().sum::<f64>() / self.n() as f64
    }

    /// Write as CSV with header `x1,...,xp,y`. Values use Rust's shortest
    /// round-trip decimal formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.p).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.p + 1);
        for i in 0..self.n() {
            record.clear();
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            record.push(self.responses[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        let cols = header.len();
        if cols < 2 {
            return Err(Error::InvalidInput("dataset CSV needs x1..xp and y columns".into()));
        }
        let p = cols - 1;
        for (j, name) in header.iter().enumerate() {
            let expected = if j == p { "y".to_string() } else { format!("x{}", j + 1) };
            if name.trim() != expected {
                return Err(Error::InvalidInput(format!(
                    "dataset CSV header column {} is `{name}`, expected `{expected}`",
                    j + 1
                )));
            }
        }
        let mut features = Vec::new();
        let mut responses = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidInput(format!(
                        "dataset CSV row {}: `{field}` is not a number",
                        line + 2
                    ))
                })?;
                if j == p {
                    responses.push(v);
                } else {
                    features.push(v);
                }
            }
        }
        Dataset::new(features, responses, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_rt_values() {
        let mut x = vec![0.0; 10];
        x[0] = 1.0;
        assert_eq!(mu_rt(&x).unwrap(), 0.5);
        x[0] = -0.3;
        x[1] = 5.0;
        assert_eq!(mu_rt(&x).unwrap(), 0.0);
        x[0] = 1.0;
        x[1] = 1.0;
        assert!((mu_rt(&x).unwrap() - 0.880_797).abs() < 1e-6);
        // strict indicator
        x[0] = 0.0;
        assert_eq!(mu_rt(&x).unwrap(), 0.0);
    }

    #[test]
    fn mu_rt_rejects_short_input() {
        assert!(matches!(mu_rt(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(Dgp::new(1, MeanFn::Rt, 1.0, XLaw::StandardNormal).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let dgp = Dgp::rt(10).unwrap();
        assert_eq!(dgp.sample(50, 9).unwrap(), dgp.sample(50, 9).unwrap());
        assert_ne!(dgp.sample(50, 9).unwrap(), dgp.sample(50, 10).unwrap());
    }

    #[test]
    fn noiseless_zero_mean_gives_zero_responses() {
        let dgp = Dgp::new(3, MeanFn::Zero, 0.0, XLaw::StandardNormal).unwrap();
        let data = dgp.sample(100, 1).unwrap();
        assert!(data.responses().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn true_err_and_asymptotic_variance() {
        assert_eq!(Dgp::rt(10).unwrap().true_err(), 1.0);
        let half = Dgp::new(2, MeanFn::Rt, 0.5, XLaw::StandardNormal).unwrap();
        assert_eq!(half.true_err(), 0.25);
        assert_eq!(Dgp::rt(10).unwrap().cv_star_asymptotic_variance(), 2.0);
        let two = Dgp::new(2, MeanFn::Rt, 2.0, XLaw::StandardNormal).unwrap();
        assert_eq!(two.cv_star_asymptotic_variance(), 32.0);
    }

    #[test]
    fn invalid_construction() {
        assert!(Dgp::new(0, MeanFn::Zero, 1.0, XLaw::StandardNormal).is_err());
        assert!(Dgp::new(2, MeanFn::Zero, -1.0, XLaw::StandardNormal).is_err());
        assert!(Dgp::new(2, MeanFn::Linear(vec![1.0]), 1.0, XLaw::StandardNormal).is_err());
        assert!(Dataset::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0], 2).is_err());
        assert!(Dataset::new(vec![], vec![], 2).is_err());
        assert!(Dgp::rt(10).unwrap().sample(0, 1).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = Dgp::rt(3).unwrap().sample(25, 4).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,x3,y\n"));
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), data);
    }

    #[test]
    fn csv_header_mismatch_is_rejected() {
        let err = Dataset::read_csv("a,b,y\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let err = Dataset::read_csv("x1,x2,y\n1,oops,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
