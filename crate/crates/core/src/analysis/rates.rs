use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use super::{cell_seed, run_with, ReplicationTable};
use crate::config::{DgpSpec, ExperimentConfig};
use crate::crossval::oracle_excess_risk;
use crate::dgp::Dgp;
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;
use crate::rng::{self, stream};
use crate::stats;

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate fits need at least 3 sample sizes, got {}",
            n_grid.len()
        )));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("n_grid must be strictly increasing".into()));
    }
    if n_grid[n_grid.len() - 1] < 8 * n_grid[0] {
        return Err(Error::InvalidInput(format!(
            "n_grid must span at least a factor of 8, got {}..{}",
            n_grid[0],
            n_grid[n_grid.len() - 1]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub n: usize,
    pub mean_excess_risk: f64,
    /// Standard error across replications.
    pub se: f64,
}

/// Power-law fit `mean excess risk ~ n^slope`, `gamma_hat = -slope / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub learner: String,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub gamma_hat: f64,
    pub gamma_se: f64,
    pub residuals: Vec<f64>,
}

impl RateReport {
    fn fit(learner: String, points: Vec<RatePoint>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !(p.mean_excess_risk > 0.0)) {
            return Err(Error::LogDomain(format!(
                "mean excess risk at n = {} is {} (learner reproduces the true mean exactly?)",
                p.n, p.mean_excess_risk
            )));
        }
        let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.mean_excess_risk.ln()).collect();
        let fit = stats::ols(&x, &y);
        Ok(RateReport {
            learner,
            points,
            slope: fit.slope,
            slope_se: fit.slope_se,
            intercept: fit.intercept,
            gamma_hat: -fit.slope / 2.0,
            gamma_se: fit.slope_se / 2.0,
            residuals: fit.residuals,
        })
    }

    /// `n,mean_excess_risk,se,log_residual`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "mean_excess_risk", "se", "log_residual"])?;
        for (p, r) in self.points.iter().zip(&self.residuals) {
            w.write_record([
                p.n.to_string(),
                p.mean_excess_risk.to_string(),
                p.se.to_string(),
                r.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "check = rates")?;
        writeln!(f, "learner = {}", self.learner)?;
        writeln!(f, "gamma_hat = {}", self.gamma_hat)?;
        writeln!(f, "gamma_se = {}", self.gamma_se)?;
        writeln!(f, "slope = {}", self.slope)?;
        writeln!(f, "slope_se = {}", self.slope_se)?;
        writeln!(f, "intercept = {}", self.intercept)?;
        for (p, r) in self.points.iter().zip(&self.residuals) {
            writeln!(
                f,
                "n{}.mean_excess_risk = {} (se {}, log residual {})",
                p.n, p.mean_excess_risk, p.se, r
            )?;
        }
        Ok(())
    }
}

fn summarize(n: usize, values: &[f64]) -> RatePoint {
    RatePoint {
        n,
        mean_excess_risk: stats::mean(values),
        se: (stats::variance(values) / values.len() as f64).sqrt(),
    }
}

/// Estimate the excess-risk exponent of a learner: for each `n`, the mean
/// over `reps` datasets of the full-data fit's Monte Carlo excess risk, then
/// a log-log least-squares fit. Uses the same seed streams as
/// [`run_replications`](super::run_replications), so the result matches
/// [`rate_from_table`] on a run with equal seed and oracle draws.
pub fn rate_estimate(
    spec: &LearnerSpec,
    dgp: &Dgp,
    n_grid: &[usize],
    reps: usize,
    master_seed: u64,
    mc_draws: usize,
) -> Result<RateReport> {
    check_grid(n_grid)?;
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be >= 1".into()));
    }
    let learner = spec.build(dgp)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let risks: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = cell_seed(master_seed, r, n);
                let data = dgp.sample(n, rng::derive(seed, stream::DATA))?;
                let full = learner.fit_full(&data, rng::derive(seed, stream::FULL_FIT))?;
                let risk = oracle_excess_risk(
                    full.rule.as_ref(),
                    dgp,
                    mc_draws,
                    rng::derive(seed, stream::ORACLE),
                )?;
                Ok(risk.mean)
            })
            .collect::<Result<_>>()?;
        points.push(summarize(n, &risks));
    }
    RateReport::fit(learner.name().to_string(), points)
}

/// Rate fit from the `oracle_excess_risk` column of a run.
pub fn rate_from_table(table: &ReplicationTable, learner: &str) -> Result<RateReport> {
    let sub = table.subset(Some(learner), None);
    let ns = sub.ns();
    check_grid(&ns)?;
    let points = ns
        .iter()
        .map(|&n| summarize(n, &sub.subset(None, Some(n)).column(|r| r.oracle_excess_risk)))
        .collect();
    RateReport::fit(learner.to_string(), points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub rms_z: f64,
    pub mean_delta_sq: f64,
}

/// Log-log slopes of `RMS(z)` and `mean(delta_sq)` against `n`, with their
/// targets `-(0.5 + gamma)` and `-2 gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub learner: String,
    pub gamma: f64,
    pub points: Vec<ScalingPoint>,
    /// `None` when degenerate.
    pub z_slope: Option<f64>,
    pub z_slope_se: Option<f64>,
    pub z_target: f64,
    pub delta_slope: Option<f64>,
    pub delta_slope_se: Option<f64>,
    pub delta_target: f64,
    /// `z` (and hence the excess terms) vanish identically.
    pub degenerate: bool,
}

impl ScalingReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "rms_z", "mean_delta_sq"])?;
        for p in &self.points {
            w.write_record([p.n.to_string(), p.rms_z.to_string(), p.mean_delta_sq.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ScalingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "degenerate".to_string(), |v| v.to_string());
        writeln!(f, "check = scaling")?;
        writeln!(f, "learner = {}", self.learner)?;
        writeln!(f, "gamma = {}", self.gamma)?;
        writeln!(f, "z_slope = {}", opt(self.z_slope))?;
        writeln!(f, "z_slope_se = {}", opt(self.z_slope_se))?;
        writeln!(f, "z_target = {}", self.z_target)?;
        writeln!(f, "delta_sq_slope = {}", opt(self.delta_slope))?;
        writeln!(f, "delta_sq_slope_se = {}", opt(self.delta_slope_se))?;
        writeln!(f, "delta_sq_target = {}", self.delta_target)?;
        writeln!(f, "degenerate = {}", self.degenerate)?;
        for p in &self.points {
            writeln!(f, "n{}.rms_z = {}", p.n, p.rms_z)?;
            writeln!(f, "n{}.mean_delta_sq = {}", p.n, p.mean_delta_sq)?;
        }
        Ok(())
    }
}

/// Scaling of the cross term and oracle term for one learner in a table.
pub fn z_scaling_from_table(table: &ReplicationTable, learner: &str, gamma: f64) -> Result<ScalingReport> {
    let sub = table.subset(Some(learner), None);
    let ns = sub.ns();
    check_grid(&ns)?;
    let points: Vec<ScalingPoint> = ns
        .iter()
        .map(|&n| {
            let cell = sub.subset(None, Some(n));
            let z_sq: Vec<f64> = cell.column(|r| r.z * r.z);
            ScalingPoint {
                n,
                rms_z: stats::mean(&z_sq).sqrt(),
                mean_delta_sq: stats::mean(&cell.column(|r| r.delta_sq)),
            }
        })
        .collect();
    let degenerate = points.iter().any(|p| p.rms_z == 0.0 || p.mean_delta_sq == 0.0);
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let (z_fit, d_fit) = if degenerate {
        (None, None)
    } else {
        let zy: Vec<f64> = points.iter().map(|p| p.rms_z.ln()).collect();
        let dy: Vec<f64> = points.iter().map(|p| p.mean_delta_sq.ln()).collect();
        (Some(stats::ols(&x, &zy)), Some(stats::ols(&x, &dy)))
    };
    Ok(ScalingReport {
        learner: learner.to_string(),
        gamma,
        z_slope: z_fit.as_ref().map(|f| f.slope),
        z_slope_se: z_fit.as_ref().map(|f| f.slope_se),
        z_target: -(0.5 + gamma),
        delta_slope: d_fit.as_ref().map(|f| f.slope),
        delta_slope_se: d_fit.as_ref().map(|f| f.slope_se),
        delta_target: -2.0 * gamma,
        degenerate,
        points,
    })
}

/// Run `reps` replications of K-fold decomposition over `n_grid` for a
/// learner with a declared rate and measure how `z` and `delta_sq` scale.
pub fn z_scaling_check(
    spec: &LearnerSpec,
    dgp: &Dgp,
    n_grid: &[usize],
    reps: usize,
    master_seed: u64,
    folds: usize,
) -> Result<ScalingReport> {
    check_grid(n_grid)?;
    let learner = spec.build(dgp)?;
    let Some(rate) = learner.declared_rate() else {
        return Err(Error::InvalidInput(format!(
            "learner `{}` has no declared rate",
            learner.name()
        )));
    };
    let config = ExperimentConfig {
        name: None,
        master_seed,
        folds,
        replications: reps,
        n_grid: n_grid.to_vec(),
        mc_draws_oracle: 0,
        reports: vec![],
        histogram_bins: 30,
        dgp: DgpSpec {
            mean: dgp.mean().clone(),
            p: dgp.p(),
            noise_sd: dgp.noise_sd(),
            x_law: dgp.x_law().clone(),
        },
        learners: vec![spec.clone()],
    };
    if let Err((key, msg)) = config.validate() {
        return Err(Error::InvalidInput(format!("{key}: {msg}")));
    }
    let table = run_with(&config, dgp, &[learner.clone()])?;
    z_scaling_from_table(&table, learner.name(), rate.gamma)
}
