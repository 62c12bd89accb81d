//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "prop-suite"
//! master_seed = 20190712
//! folds = 10
//! replications = 1000
//! n_grid = [400, 1600, 6400]
//! mc_draws_oracle = 1000
//! reports = ["prop1", "prop2", "scaling", "figures"]
//!
//! [dgp]
//! mean = "rt"
//! p = 10
//! noise_sd = 1.0
//!
//! [[learners]]
//! name = "fast"
//! kind = "synthetic"
//! gamma = 0.35
//! c = 1.0
//! ```

use serde::{Deserialize, Serialize};

use crate::dgp::{Dgp, MeanFn, XLaw};
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub mean: MeanFn,
    pub p: usize,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    #[serde(default = "default_x_law")]
    pub x_law: XLaw,
}

fn default_noise_sd() -> f64 {
    1.0
}

fn default_x_law() -> XLaw {
    XLaw::StandardNormal
}

fn default_mc_draws() -> usize {
    100_000
}

fn default_bins() -> usize {
    30
}

impl DgpSpec {
    pub fn build(&self) -> Result<Dgp> {
        Dgp::new(self.p, self.mean.clone(), self.noise_sd, self.x_law.clone())
    }
}

/// Reports that a run can emit alongside its replication table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Prop1,
    Prop2,
    Scaling,
    Rates,
    Figures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub master_seed: u64,
    /// Fold count K shared by every learner.
    pub folds: usize,
    pub replications: usize,
    pub n_grid: Vec<usize>,
    /// Fresh draws per oracle excess-risk estimate; 0 skips the oracle.
    #[serde(default = "default_mc_draws")]
    pub mc_draws_oracle: usize,
    #[serde(default)]
    pub reports: Vec<ReportKind>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    pub dgp: DgpSpec,
    pub learners: Vec<LearnerSpec>,
}

impl ExperimentConfig {
    /// Parse and validate. Messages carry the 1-based line of the offending
    /// key when it can be located.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(anchored(error_line(text, &e), e.message())))?;
        cfg.validate()
            .map_err(|(key, msg)| Error::InvalidConfig(anchored(line_of_key(text, key), &msg)))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check invariants; on failure returns the offending key and a message.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.replications == 0 {
            return Err(("replications", "replications must be >= 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(("n_grid", "n_grid must not be empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(("n_grid", "n_grid must be strictly increasing".into()));
        }
        if self.folds < 2 || self.folds > self.n_grid[0] {
            return Err((
                "folds",
                format!(
                    "folds must satisfy 2 <= K <= min(n_grid) = {}, got {}",
                    self.n_grid[0], self.folds
                ),
            ));
        }
        if !(1..=2).contains(&self.learners.len()) {
            return Err((
                "learners",
                format!("expected one or two learners, got {}", self.learners.len()),
            ));
        }
        if self.learners.len() == 2 && self.learners[0].label() == self.learners[1].label() {
            return Err(("learners", "the two learners need distinct names".into()));
        }
        if let Err(e) = self.dgp.build() {
            return Err(("dgp", e.to_string()));
        }
        let dgp = self.dgp.build().expect("checked");
        for spec in &self.learners {
            if let Err(e) = spec.build(&dgp) {
                return Err(("learners", format!("learner `{}`: {e}", spec.label())));
            }
        }
        let needs_two = self
            .reports
            .iter()
            .any(|r| matches!(r, ReportKind::Prop2 | ReportKind::Figures));
        if needs_two && self.learners.len() != 2 {
            return Err(("reports", "prop2 and figures reports need two learners".into()));
        }
        if self.mc_draws_oracle == 0 && self.reports.contains(&ReportKind::Rates) {
            return Err(("mc_draws_oracle", "rates report needs mc_draws_oracle >= 1".into()));
        }
        Ok(())
    }
}

fn anchored(line: Option<usize>, msg: &str) -> String {
    match line {
        Some(l) => format!("line {l}: {msg}"),
        None => msg.to_string(),
    }
}

/// 1-based line of a TOML parse error. Errors inside internally tagged
/// tables are spanned to the tag, so an unknown or missing field is located
/// by key among the lines up to the next table header.
pub fn error_line(text: &str, e: &toml::de::Error) -> Option<usize> {
    let start = line_of_offset(text, e.span()?.start);
    let msg = e.message();
    let key = ["unknown field `", "missing field `"]
        .iter()
        .find_map(|p| msg.split_once(p))
        .and_then(|(_, rest)| rest.split('`').next());
    let within = |k: &str| {
        text.lines()
            .enumerate()
            .skip(start - 1)
            .take_while(|(i, l)| *i + 1 == start || !l.trim_start().starts_with('['))
            .find(|(_, l)| declares(l, k))
            .map(|(i, _)| i + 1)
    };
    Some(key.and_then(within).unwrap_or(start))
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| declares(l, key)).map(|i| i + 1)
}

/// `line` assigns `key` or opens a table named `key`.
fn declares(line: &str, key: &str) -> bool {
    let t = line.trim_start();
    t.starts_with(&format!("[{key}]"))
        || t.starts_with(&format!("[[{key}]]"))
        || t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
}
