use std::fmt;
use std::io::Write;

use super::{paired_rows, ReplicationTable};
use crate::error::{Error, Result};
use crate::stats::{self, Histogram};

pub const PAIRED_MIN_REPLICATIONS: usize = 10;

/// Location of two marginal distributions relative to their spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalStats {
    pub mean_a: f64,
    pub mean_b: f64,
    /// `sqrt((var_a + var_b) / 2)`
    pub pooled_sd: f64,
    /// `|mean_a - mean_b| / pooled_sd`; `None` when both are constant.
    pub gap_in_sd: Option<f64>,
}

impl MarginalStats {
    fn of(a: &[f64], b: &[f64]) -> Self {
        let (mean_a, mean_b) = (stats::mean(a), stats::mean(b));
        let pooled_sd = (0.5 * (stats::variance(a) + stats::variance(b))).sqrt();
        MarginalStats {
            mean_a,
            mean_b,
            pooled_sd,
            gap_in_sd: (pooled_sd > 0.0).then(|| (mean_a - mean_b).abs() / pooled_sd),
        }
    }
}

/// Paired comparison data for two learners at one `n`: marginal and
/// difference histograms of CV error and oracle excess risk, the paired
/// scatter, and the correlation of paired CV errors. Differences are
/// `b - a` in table learner order.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub learners: [String; 2],
    pub n: usize,
    pub replications: Vec<usize>,
    pub cv: [Vec<f64>; 2],
    pub oracle: [Vec<f64>; 2],
    pub oob: [Vec<Option<f64>>; 2],
    pub cv_diff: Vec<f64>,
    pub oracle_diff: Vec<f64>,
    /// Series: `cv_diff`, `oracle_diff`.
    pub diff_hist: Histogram,
    /// Series: `cv[0]`, `cv[1]`.
    pub cv_hist: Histogram,
    /// Series: `oracle[0]`, `oracle[1]`.
    pub oracle_hist: Histogram,
    /// Pearson correlation of `(cv[0], cv[1])`; `None` when degenerate,
    /// including when the two series are identical.
    pub correlation: Option<f64>,
    pub cv_marginals: MarginalStats,
    pub oracle_marginals: MarginalStats,
    /// Fraction of replications where learner `a` has the smaller oracle
    /// excess risk.
    pub a_better_fraction: f64,
}

impl FigureData {
    /// Fraction of replications won by whichever learner wins more often.
    pub fn oracle_order_fraction(&self) -> f64 {
        self.a_better_fraction.max(1.0 - self.a_better_fraction)
    }

    /// Per-replication marginals: `replication,<a>_oracle,<b>_oracle,<a>_cv,<b>_cv,<a>_oob,<b>_oob`.
    pub fn write_marginals_csv<W: Write>(&self, writer: W) -> Result<()> {
        let [a, b] = &self.learners;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "replication".to_string(),
            format!("{a}_oracle"),
            format!("{b}_oracle"),
            format!("{a}_cv"),
            format!("{b}_cv"),
            format!("{a}_oob"),
            format!("{b}_oob"),
        ])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for (i, r) in self.replications.iter().enumerate() {
            w.write_record([
                r.to_string(),
                self.oracle[0][i].to_string(),
                self.oracle[1][i].to_string(),
                self.cv[0][i].to_string(),
                self.cv[1][i].to_string(),
                opt(self.oob[0][i]),
                opt(self.oob[1][i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Marginal histograms: `panel,bin_lo,bin_hi,<a>,<b>` with panels `test`
    /// (oracle excess risk) and `cv`.
    pub fn write_marginal_hist_csv<W: Write>(&self, writer: W) -> Result<()> {
        let [a, b] = &self.learners;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["panel", "bin_lo", "bin_hi", a.as_str(), b.as_str()])?;
        for (panel, h) in [("test", &self.oracle_hist), ("cv", &self.cv_hist)] {
            for bin in 0..h.bins() {
                w.write_record([
                    panel.to_string(),
                    h.edges[bin].to_string(),
                    h.edges[bin + 1].to_string(),
                    h.counts[0][bin].to_string(),
                    h.counts[1][bin].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Difference histogram: `bin_lo,bin_hi,cv_diff,oracle_diff`.
    pub fn write_diff_hist_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_lo", "bin_hi", "cv_diff", "oracle_diff"])?;
        let h = &self.diff_hist;
        for bin in 0..h.bins() {
            w.write_record([
                h.edges[bin].to_string(),
                h.edges[bin + 1].to_string(),
                h.counts[0][bin].to_string(),
                h.counts[1][bin].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Scatter: `replication,<a>_cv,<b>_cv,cv_diff,oracle_diff`.
    pub fn write_scatter_csv<W: Write>(&self, writer: W) -> Result<()> {
        let [a, b] = &self.learners;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "replication".to_string(),
            format!("{a}_cv"),
            format!("{b}_cv"),
            "cv_diff".into(),
            "oracle_diff".into(),
        ])?;
        for (i, r) in self.replications.iter().enumerate() {
            w.write_record([
                r.to_string(),
                self.cv[0][i].to_string(),
                self.cv[1][i].to_string(),
                self.cv_diff[i].to_string(),
                self.oracle_diff[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for FigureData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "degenerate".to_string(), |v| v.to_string());
        writeln!(f, "check = figures")?;
        writeln!(f, "learner_a = {}", self.learners[0])?;
        writeln!(f, "learner_b = {}", self.learners[1])?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "replications = {}", self.replications.len())?;
        writeln!(f, "cv_correlation = {}", opt(self.correlation))?;
        writeln!(f, "cv_mean_a = {}", self.cv_marginals.mean_a)?;
        writeln!(f, "cv_mean_b = {}", self.cv_marginals.mean_b)?;
        writeln!(f, "cv_gap_in_pooled_sd = {}", opt(self.cv_marginals.gap_in_sd))?;
        writeln!(f, "oracle_mean_a = {}", self.oracle_marginals.mean_a)?;
        writeln!(f, "oracle_mean_b = {}", self.oracle_marginals.mean_b)?;
        writeln!(f, "oracle_gap_in_pooled_sd = {}", opt(self.oracle_marginals.gap_in_sd))?;
        writeln!(f, "oracle_a_better_fraction = {}", self.a_better_fraction)?;
        writeln!(f, "cv_diff_mean = {}", stats::mean(&self.cv_diff))?;
        writeln!(f, "oracle_diff_mean = {}", stats::mean(&self.oracle_diff))
    }
}

/// Figure data for two learners at sample size `n`.
pub fn paired_summary(table: &ReplicationTable, n: usize, bins: usize) -> Result<FigureData> {
    let at_n = table.subset(None, Some(n));
    let (names, pairs) = paired_rows(&at_n)?;
    if pairs.len() < PAIRED_MIN_REPLICATIONS {
        return Err(Error::InsufficientData {
            what: "paired replications",
            needed: PAIRED_MIN_REPLICATIONS,
            got: pairs.len(),
        });
    }
    if pairs
        .iter()
        .any(|(a, b)| a.oracle_excess_risk.is_nan() || b.oracle_excess_risk.is_nan())
    {
        return Err(Error::InvalidInput(
            "figure data needs oracle excess risks (mc_draws_oracle >= 1)".into(),
        ));
    }
    let col = |side: usize, f: fn(&super::ReplicationRow) -> f64| -> Vec<f64> {
        pairs.iter().map(|p| if side == 0 { f(p.0) } else { f(p.1) }).collect()
    };
    let cv = [col(0, |r| r.cv_total), col(1, |r| r.cv_total)];
    let oracle = [col(0, |r| r.oracle_excess_risk), col(1, |r| r.oracle_excess_risk)];
    let oob = [
        pairs.iter().map(|p| p.0.oob_error).collect(),
        pairs.iter().map(|p| p.1.oob_error).collect(),
    ];
    let cv_diff: Vec<f64> = cv[1].iter().zip(&cv[0]).map(|(b, a)| b - a).collect();
    let oracle_diff: Vec<f64> = oracle[1].iter().zip(&oracle[0]).map(|(b, a)| b - a).collect();
    // identical CV series carry no pairing information
    let identical = cv_diff.iter().all(|&d| d == 0.0);
    let a_better = oracle[0].iter().zip(&oracle[1]).filter(|(a, b)| a < b).count();

    Ok(FigureData {
        learners: [names[0].clone(), names[1].clone()],
        n,
        replications: pairs.iter().map(|p| p.0.replication).collect(),
        diff_hist: Histogram::shared(&[&cv_diff, &oracle_diff], bins),
        cv_hist: Histogram::shared(&[&cv[0], &cv[1]], bins),
        oracle_hist: Histogram::shared(&[&oracle[0], &oracle[1]], bins),
        correlation: if identical { None } else { stats::pearson(&cv[0], &cv[1]) },
        cv_marginals: MarginalStats::of(&cv[0], &cv[1]),
        oracle_marginals: MarginalStats::of(&oracle[0], &oracle[1]),
        a_better_fraction: a_better as f64 / pairs.len() as f64,
        cv,
        oracle,
        oob,
        cv_diff,
        oracle_diff,
    })
}
