use std::fmt;

use super::{paired_rows, ReplicationTable};
use crate::dgp::Dgp;
use crate::error::{Error, Result};
use crate::learners::DeclaredRate;
use crate::stats;

/// Minimum replications for the normality check.
pub const PROP1_MIN_REPLICATIONS: usize = 100;

/// Asymptotic 5% Kolmogorov-Smirnov critical constant; the distributional
/// check passes when the sup-distance is below `KS_CRITICAL / sqrt(R)`.
pub const KS_CRITICAL: f64 = 1.358;

/// Distribution of `sqrt(n) (cv_total - Err*)` across replications, against
/// the limit law `N(0, Var[(Y - mu(X))^2])`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub learner: String,
    pub n: usize,
    pub replications: usize,
    pub true_err: f64,
    pub target_variance: f64,
    pub mean: f64,
    pub mean_se: f64,
    /// `mean / mean_se`; `None` when every value is identical.
    pub mean_z: Option<f64>,
    pub variance: f64,
    pub variance_se: f64,
    /// `variance / target_variance`; `None` for a zero target.
    pub variance_ratio: Option<f64>,
    /// KS sup-distance to `N(0, target_variance)`; `None` for a zero target.
    pub ks_distance: Option<f64>,
    pub ks_threshold: f64,
    /// All values are exactly zero (noiseless data, exact learner).
    pub degenerate: bool,
}

impl NormalityReport {
    /// Half-width of a 95% normal-theory interval for `variance`.
    pub fn variance_ci95(&self) -> f64 {
        1.96 * self.variance_se
    }

    pub fn ks_pass(&self) -> Option<bool> {
        self.ks_distance.map(|d| d < self.ks_threshold)
    }
}

/// Check the limit law of the CV estimate for one learner at one `n`.
pub fn prop1_check(table: &ReplicationTable, dgp: &Dgp) -> Result<NormalityReport> {
    let learners = table.learners();
    let ns = table.ns();
    if learners.len() != 1 || ns.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "normality check needs one learner at one n, table has {} learners and {} sizes",
            learners.len(),
            ns.len()
        )));
    }
    let reps = table.rows.len();
    if reps < PROP1_MIN_REPLICATIONS {
        return Err(Error::InsufficientData {
            what: "replications",
            needed: PROP1_MIN_REPLICATIONS,
            got: reps,
        });
    }
    let n = ns[0];
    let true_err = dgp.true_err();
    let target = dgp.cv_star_asymptotic_variance();
    let root_n = (n as f64).sqrt();
    let scaled: Vec<f64> = table
        .rows
        .iter()
        .map(|r| root_n * (r.cv_total - true_err))
        .collect();

    let mean = stats::mean(&scaled);
    let variance = stats::variance(&scaled);
    let mean_se = (variance / reps as f64).sqrt();
    let degenerate = scaled.iter().all(|&v| v == 0.0);
    let has_target = target > 0.0;
    Ok(NormalityReport {
        learner: learners[0].clone(),
        n,
        replications: reps,
        true_err,
        target_variance: target,
        mean,
        mean_se,
        mean_z: (mean_se > 0.0).then(|| mean / mean_se),
        variance,
        variance_se: stats::variance_se(&scaled),
        variance_ratio: has_target.then(|| variance / target),
        ks_distance: has_target.then(|| stats::ks_distance_normal(&scaled, target)),
        ks_threshold: KS_CRITICAL / (reps as f64).sqrt(),
        degenerate,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "degenerate".to_string(), |v| format!("{v}"))
}

impl fmt::Display for NormalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "check = prop1")?;
        writeln!(f, "learner = {}", self.learner)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "replications = {}", self.replications)?;
        writeln!(f, "statistic = sqrt(n) * (cv_total - {})", self.true_err)?;
        writeln!(f, "mean = {}", self.mean)?;
        writeln!(f, "mean_se = {}", self.mean_se)?;
        writeln!(f, "mean_z = {}", opt(self.mean_z))?;
        writeln!(f, "variance = {}", self.variance)?;
        writeln!(f, "variance_ci95_halfwidth = {}", self.variance_ci95())?;
        writeln!(f, "target_variance = {}", self.target_variance)?;
        writeln!(f, "variance_ratio = {}", opt(self.variance_ratio))?;
        writeln!(f, "ks_distance = {}", opt(self.ks_distance))?;
        writeln!(f, "ks_threshold = {}", self.ks_threshold)?;
        match self.ks_pass() {
            Some(p) => writeln!(f, "ks_pass = {p}")?,
            None => writeln!(f, "ks_pass = degenerate")?,
        }
        writeln!(f, "degenerate = {}", self.degenerate)
    }
}

/// Replications whose oracle-term difference is this close to zero are
/// excluded from the ratio summary.
pub const RATIO_DENOMINATOR_EPS: f64 = 1e-15;

/// Selection behaviour of CV for two learners at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonAtN {
    pub n: usize,
    pub replications: usize,
    /// Replications where the two `delta_sq` values differ.
    pub decided: usize,
    /// Fraction of decided replications where the learner with the smaller
    /// `delta_sq` also has the smaller `cv_total`. `None` when no replication
    /// is decided (degenerate tie).
    pub accuracy: Option<f64>,
    /// Fraction of replications where CV picks the learner that dominates by
    /// declared rate, when one does.
    pub population_accuracy: Option<f64>,
    /// `(cv_b - cv_a) / (delta_sq_b - delta_sq_a)` per replication; `None`
    /// when flagged for a near-zero denominator.
    pub ratios: Vec<Option<f64>>,
    pub flagged: usize,
    pub median_ratio: Option<f64>,
}

impl ComparisonAtN {
    /// Binomial standard error of `accuracy`.
    pub fn accuracy_se(&self) -> Option<f64> {
        self.accuracy
            .map(|p| (p * (1.0 - p) / self.decided.max(1) as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub learners: [String; 2],
    pub per_n: Vec<ComparisonAtN>,
}

impl ComparisonReport {
    pub fn at(&self, n: usize) -> Option<&ComparisonAtN> {
        self.per_n.iter().find(|c| c.n == n)
    }

    /// Accuracy never drops between consecutive grid points by more than
    /// `z_crit` standard errors of the difference (one-sided).
    pub fn accuracy_monotone(&self, z_crit: f64) -> bool {
        self.per_n.windows(2).all(|w| match (w[0].accuracy, w[1].accuracy) {
            (Some(a), Some(b)) => {
                let se = (w[0].accuracy_se().unwrap().powi(2) + w[1].accuracy_se().unwrap().powi(2))
                    .sqrt();
                b >= a - z_crit * se
            }
            _ => true,
        })
    }
}

/// Compare two learners evaluated on shared data and folds. `declared`, when
/// given, are the learners' rates in table order and add a population-level
/// accuracy alongside the per-replication one.
pub fn prop2_check(
    table: &ReplicationTable,
    declared: Option<(DeclaredRate, DeclaredRate)>,
) -> Result<ComparisonReport> {
    let (names, pairs) = paired_rows(table)?;
    if let Some((a, _)) = pairs.iter().find(|(a, b)| a.cv_star != b.cv_star) {
        return Err(Error::InvalidInput(format!(
            "cv_star differs between learners at replication {}, n = {}: folds or data not shared",
            a.replication, a.n
        )));
    }
    let population_better = declared.and_then(|(a, b)| {
        if a.dominates(&b) {
            Some(0)
        } else if b.dominates(&a) {
            Some(1)
        } else {
            None
        }
    });

    let mut per_n = Vec::new();
    for n in table.ns() {
        let cell: Vec<_> = pairs.iter().filter(|(a, _)| a.n == n).collect();
        let (mut decided, mut correct, mut pop_correct) = (0, 0, 0);
        let mut ratios = Vec::with_capacity(cell.len());
        for (a, b) in &cell {
            if a.delta_sq != b.delta_sq {
                decided += 1;
                let a_better = a.delta_sq < b.delta_sq;
                if a_better == (a.cv_total < b.cv_total) {
                    correct += 1;
                }
            }
            if let Some(better) = population_better {
                let cv_picks = if a.cv_total < b.cv_total { 0 } else { 1 };
                if cv_picks == better && a.cv_total != b.cv_total {
                    pop_correct += 1;
                }
            }
            let den = b.delta_sq - a.delta_sq;
            ratios.push((den.abs() > RATIO_DENOMINATOR_EPS).then(|| (b.cv_total - a.cv_total) / den));
        }
        let kept: Vec<f64> = ratios.iter().flatten().copied().collect();
        per_n.push(ComparisonAtN {
            n,
            replications: cell.len(),
            decided,
            accuracy: (decided > 0).then(|| correct as f64 / decided as f64),
            population_accuracy: population_better.map(|_| pop_correct as f64 / cell.len() as f64),
            flagged: ratios.len() - kept.len(),
            median_ratio: stats::median(&kept),
            ratios,
        });
    }
    Ok(ComparisonReport {
        learners: [names[0].clone(), names[1].clone()],
        per_n,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "check = prop2")?;
        writeln!(f, "learner_a = {}", self.learners[0])?;
        writeln!(f, "learner_b = {}", self.learners[1])?;
        writeln!(f, "ratio = (cv_b - cv_a) / (delta_sq_b - delta_sq_a)")?;
        for c in &self.per_n {
            let p = format!("n{}", c.n);
            writeln!(f, "{p}.replications = {}", c.replications)?;
            writeln!(f, "{p}.decided = {}", c.decided)?;
            match c.accuracy {
                Some(a) => writeln!(f, "{p}.accuracy = {a}")?,
                None => writeln!(f, "{p}.accuracy = degenerate-tie")?,
            }
            if let Some(a) = c.population_accuracy {
                writeln!(f, "{p}.population_accuracy = {a}")?;
            }
            writeln!(f, "{p}.median_ratio = {}", opt(c.median_ratio))?;
            writeln!(f, "{p}.flagged = {}", c.flagged)?;
        }
        writeln!(f, "accuracy_monotone = {}", self.accuracy_monotone(1.645))
    }
}
