//! Seeded Monte Carlo harness and the statistical checks run on its output.

use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::crossval::{decompose, make_folds, oracle_excess_risk, CvDecomposition};
use crate::dgp::Dgp;
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::rng::{self, stream};

mod checks;
mod figures;
mod rates;

pub use checks::{prop1_check, prop2_check, ComparisonAtN, ComparisonReport, NormalityReport};
pub use figures::{paired_summary, FigureData, MarginalStats};
pub use rates::{
    rate_estimate, rate_from_table, z_scaling_check, z_scaling_from_table, RatePoint, RateReport,
    ScalingPoint, ScalingReport,
};

/// One learner evaluated on one replicated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub replication: usize,
    pub n: usize,
    pub learner: String,
    pub k: usize,
    pub cv_total: f64,
    pub cv_star: f64,
    pub z: f64,
    pub delta_sq: f64,
    /// Excess risk of the rule fit on the full dataset (NaN when skipped).
    pub oracle_excess_risk: f64,
    pub oracle_se: f64,
    pub oob_error: Option<f64>,
}

/// Rows ordered by replication, then `n`, then learner (config order).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplicationTable {
    pub rows: Vec<ReplicationRow>,
}

const TABLE_HEADER: [&str; 11] = [
    "replication",
    "learner",
    "n",
    "K",
    "cv_total",
    "cv_star",
    "z",
    "delta_sq",
    "oracle_excess_risk",
    "oracle_se",
    "oob_error",
];

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

impl ReplicationTable {
    /// Learner names in first-appearance order.
    pub fn learners(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.learner) {
                out.push(r.learner.clone());
            }
        }
        out
    }

    /// Distinct sample sizes, ascending.
    pub fn ns(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    pub fn subset(&self, learner: Option<&str>, n: Option<usize>) -> ReplicationTable {
        ReplicationTable {
            rows: self
                .rows
                .iter()
                .filter(|r| learner.is_none_or(|l| r.learner == l))
                .filter(|r| n.is_none_or(|n| r.n == n))
                .cloned()
                .collect(),
        }
    }

    pub fn column(&self, f: impl Fn(&ReplicationRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    /// CSV with header
    /// `replication,learner,n,K,cv_total,cv_star,z,delta_sq,oracle_excess_risk,oracle_se,oob_error`;
    /// the first eight columns are the flat decomposition row. Missing values
    /// are empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(TABLE_HEADER)?;
        for r in &self.rows {
            let d = CvDecomposition {
                cv_total: r.cv_total,
                cv_star: r.cv_star,
                z: r.z,
                delta_sq: r.delta_sq,
                per_fold: vec![],
            };
            let mut rec = d.csv_record(r.replication, &r.learner, r.n, r.k);
            rec.push(fmt_opt(r.oracle_excess_risk));
            rec.push(fmt_opt(r.oracle_se));
            rec.push(r.oob_error.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        if r.headers()?.iter().collect::<Vec<_>>() != TABLE_HEADER {
            return Err(Error::InvalidInput(format!(
                "replication table header must be `{}`",
                TABLE_HEADER.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |col: &str| {
                Error::InvalidInput(format!("replication table row {}: bad `{col}`", line + 2))
            };
            let num = |i: usize| -> Result<f64> {
                let s = rec[i].trim();
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse().map_err(|_| bad(TABLE_HEADER[i]))
                }
            };
            let int = |i: usize| -> Result<usize> { rec[i].trim().parse().map_err(|_| bad(TABLE_HEADER[i])) };
            let oob = num(10)?;
            rows.push(ReplicationRow {
                replication: int(0)?,
                learner: rec[1].to_string(),
                n: int(2)?,
                k: int(3)?,
                cv_total: num(4)?,
                cv_star: num(5)?,
                z: num(6)?,
                delta_sq: num(7)?,
                oracle_excess_risk: num(8)?,
                oracle_se: num(9)?,
                oob_error: (!oob.is_nan()).then_some(oob),
            });
        }
        Ok(ReplicationTable { rows })
    }
}

/// Seed of the `(replication, n)` cell: `derive(derive(master, r), n)`.
pub fn cell_seed(master_seed: u64, replication: usize, n: usize) -> u64 {
    rng::derive(rng::derive(master_seed, replication as u64), n as u64)
}

/// Run the configured experiment.
///
/// For every replication `r` and sample size `n`: sample a dataset, draw one
/// fold assignment shared by all learners, decompose each learner's CV
/// estimate (all learners receive the same fit seeds), then fit each learner
/// on the full dataset and estimate its excess risk on common fresh draws.
/// The table is a pure function of the config; cells run in parallel on the
/// current rayon pool and are reassembled in index order.
pub fn run_replications(config: &ExperimentConfig) -> Result<ReplicationTable> {
    if let Err((key, msg)) = config.validate() {
        return Err(Error::InvalidConfig(format!("{key}: {msg}")));
    }
    let dgp = config.dgp.build()?;
    let learners: Vec<Arc<dyn Learner>> = config
        .learners
        .iter()
        .map(|s| s.build(&dgp))
        .collect::<Result<_>>()?;
    run_with(config, &dgp, &learners)
}

/// [`run_replications`] with pre-built learners.
pub fn run_with(
    config: &ExperimentConfig,
    dgp: &Dgp,
    learners: &[Arc<dyn Learner>],
) -> Result<ReplicationTable> {
    let cells: Vec<(usize, usize)> = (0..config.replications)
        .flat_map(|r| config.n_grid.iter().map(move |&n| (r, n)))
        .collect();
    let blocks: Vec<Vec<ReplicationRow>> = cells
        .par_iter()
        .map(|&(r, n)| run_cell(config, dgp, learners, r, n))
        .collect::<Result<_>>()?;
    Ok(ReplicationTable {
        rows: blocks.into_iter().flatten().collect(),
    })
}

fn run_cell(
    config: &ExperimentConfig,
    dgp: &Dgp,
    learners: &[Arc<dyn Learner>],
    r: usize,
    n: usize,
) -> Result<Vec<ReplicationRow>> {
    let seed = cell_seed(config.master_seed, r, n);
    let tag = |learner: &str, e: Error| Error::Replication {
        replication: r,
        n,
        learner: learner.to_string(),
        source: Box::new(e),
    };
    let data = dgp
        .sample(n, rng::derive(seed, stream::DATA))
        .map_err(|e| tag("-", e))?;
    let folds = make_folds(n, config.folds, rng::derive(seed, stream::FOLDS)).map_err(|e| tag("-", e))?;
    let mu = |x: &[f64]| dgp.mu(x);

    learners
        .iter()
        .map(|learner| {
            let name = learner.name();
            let d = decompose(learner.as_ref(), &data, &folds, &mu, rng::derive(seed, stream::CV_FITS))
                .map_err(|e| tag(name, e))?;
            let (oracle, oracle_se, oob) = if config.mc_draws_oracle > 0 {
                let full = learner
                    .fit_full(&data, rng::derive(seed, stream::FULL_FIT))
                    .map_err(|e| tag(name, e))?;
                let risk = oracle_excess_risk(
                    full.rule.as_ref(),
                    dgp,
                    config.mc_draws_oracle,
                    rng::derive(seed, stream::ORACLE),
                )
                .map_err(|e| tag(name, e))?;
                (risk.mean, risk.se, full.oob.map(|o| o.error))
            } else {
                (f64::NAN, f64::NAN, None)
            };
            Ok(ReplicationRow {
                replication: r,
                n,
                learner: name.to_string(),
                k: config.folds,
                cv_total: d.cv_total,
                cv_star: d.cv_star,
                z: d.z,
                delta_sq: d.delta_sq,
                oracle_excess_risk: oracle,
                oracle_se,
                oob_error: oob,
            })
        })
        .collect()
}

/// Rows of a two-learner table paired by `(replication, n)`.
pub(crate) fn paired_rows(
    table: &ReplicationTable,
) -> Result<(Vec<String>, Vec<(&ReplicationRow, &ReplicationRow)>)> {
    let names = table.learners();
    if names.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "paired analysis needs exactly two learners, table has {}",
            names.len()
        )));
    }
    let mut a_rows: Vec<&ReplicationRow> = table.rows.iter().filter(|r| r.learner == names[0]).collect();
    let mut b_rows: Vec<&ReplicationRow> = table.rows.iter().filter(|r| r.learner == names[1]).collect();
    a_rows.sort_by_key(|r| (r.n, r.replication));
    b_rows.sort_by_key(|r| (r.n, r.replication));
    if a_rows.len() != b_rows.len()
        || a_rows
            .iter()
            .zip(&b_rows)
            .any(|(a, b)| (a.n, a.replication) != (b.n, b.replication))
    {
        return Err(Error::InvalidInput(
            "learners are not evaluated on the same (replication, n) cells".into(),
        ));
    }
    Ok((names, a_rows.into_iter().zip(b_rows).collect()))
}
