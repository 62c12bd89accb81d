use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use super::{FittedRule, FullFit, Learner};
use crate::dgp::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART regression tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

struct Grower<'a> {
    data: &'a Dataset,
    min_leaf: usize,
    mtry: usize,
    rng: rng::Rng,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [u32]) -> usize {
        let at = self.nodes.len();
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.data.y(i as usize)).sum();
        let mean = sum / n as f64;
        self.nodes.push(Node::Leaf(mean));
        if n < 2 * self.min_leaf {
            return at;
        }
        let first = self.data.y(idx[0] as usize);
        if idx.iter().all(|&i| self.data.y(i as usize) == first) {
            return at;
        }

        // mtry candidate features, visited in ascending order
        self.features.shuffle(&mut self.rng);
        let mut candidates = self.features[..self.mtry].to_vec();
        candidates.sort_unstable();

        let base = sum * sum / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(n);
        for &j in &candidates {
            sorted.clear();
            sorted.extend(idx.iter().map(|&i| {
                let i = i as usize;
                (self.data.row(i)[j], self.data.y(i))
            }));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for w in 0..n - 1 {
                left_sum += sorted[w].1;
                let nl = w + 1;
                if nl < self.min_leaf || n - nl < self.min_leaf {
                    continue;
                }
                let (lo, hi) = (sorted[w].0, sorted[w + 1].0);
                if lo >= hi {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / nl as f64
                    + right_sum * right_sum / (n - nl) as f64
                    - base;
                if best.is_none_or(|b| gain > b.0) {
                    let mut t = 0.5 * (lo + hi);
                    if t >= hi {
                        t = lo;
                    }
                    best = Some((gain, j, t));
                }
            }
        }
        let Some((gain, feature, threshold)) = best else {
            return at;
        };
        if gain <= 0.0 {
            return at;
        }

        let mut split = 0;
        for w in 0..n {
            if self.data.row(idx[w] as usize)[feature] <= threshold {
                idx.swap(w, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Bagged CART forest.
///
/// Each tree is grown on a resample of `round(subsample * n)` rows (drawn
/// without replacement unless `replace` is set), considering `mtry` random
/// features per node, with at least `min_leaf` rows per leaf. Tree `t` is
/// seeded with `derive(fit_seed, t)`.
#[derive(Debug, Clone)]
pub struct Forest {
    name: String,
    num_trees: usize,
    min_leaf: usize,
    subsample: f64,
    mtry: usize,
    replace: bool,
}

impl Forest {
    pub fn new(num_trees: usize, min_leaf: usize, subsample: f64, mtry: usize) -> Result<Self> {
        if num_trees == 0 {
            return Err(Error::InvalidConfig("num_trees must be >= 1".into()));
        }
        if min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be >= 1".into()));
        }
        if !(subsample > 0.0 && subsample <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "subsample must lie in (0, 1], got {subsample}"
            )));
        }
        if mtry == 0 {
            return Err(Error::InvalidConfig("mtry must be >= 1".into()));
        }
        Ok(Forest {
            name: "forest".into(),
            num_trees,
            min_leaf,
            subsample,
            mtry,
            replace: false,
        })
    }

    /// Bootstrap (with replacement) instead of subsampling.
    pub fn with_replacement(mut self, replace: bool) -> Self {
        self.replace = replace;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn fit_forest(&self, data: &Dataset, seed: u64) -> Result<ForestRule> {
        super::check_nonempty(data)?;
        let (n, p) = (data.n(), data.p());
        if self.mtry > p {
            return Err(Error::InvalidConfig(format!(
                "mtry = {} exceeds feature dimension {p}",
                self.mtry
            )));
        }
        let m = ((self.subsample * n as f64).round() as usize).clamp(1, n);
        let grown: Vec<(Tree, Vec<bool>)> = (0..self.num_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::rng(rng::derive(seed, t as u64));
                let mut in_bag = vec![false; n];
                let mut idx: Vec<u32> = if self.replace {
                    (0..m).map(|_| rng.random_range(0..n as u32)).collect()
                } else {
                    let mut all: Vec<u32> = (0..n as u32).collect();
                    all.partial_shuffle(&mut rng, m);
                    all.truncate(m);
                    all
                };
                for &i in &idx {
                    in_bag[i as usize] = true;
                }
                let mut grower = Grower {
                    data,
                    min_leaf: self.min_leaf,
                    mtry: self.mtry,
                    rng,
                    nodes: Vec::new(),
                    features: (0..p).collect(),
                };
                grower.grow(&mut idx);
                (Tree { nodes: grower.nodes }, in_bag)
            })
            .collect();
        let (trees, in_bag) = grown.into_iter().unzip();
        Ok(ForestRule { trees, in_bag, n })
    }
}

/// Fitted forest with per-tree in-bag records.
#[derive(Debug, Clone)]
pub struct ForestRule {
    trees: Vec<Tree>,
    in_bag: Vec<Vec<bool>>,
    n: usize,
}

impl ForestRule {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn tree_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn in_bag(&self, tree: usize, sample: usize) -> bool {
        self.in_bag[tree][sample]
    }
}

impl FittedRule for ForestRule {
    fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    fn training_n(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OobReport {
    /// Mean squared out-of-bag error over evaluated samples.
    pub error: f64,
    pub evaluated: usize,
    /// Samples that were in-bag for every tree.
    pub skipped: usize,
}

/// Out-of-bag error: each sample is predicted by the average of the trees
/// whose resample excluded it.
pub fn oob_error(rule: &ForestRule, data: &Dataset) -> Result<OobReport> {
    if rule.n != data.n() {
        return Err(Error::InvalidInput(format!(
            "forest was fit on {} samples, dataset has {}",
            rule.n,
            data.n()
        )));
    }
    let (mut sse, mut evaluated) = (0.0, 0);
    for i in 0..data.n() {
        let x = data.row(i);
        let (mut sum, mut count) = (0.0, 0usize);
        for (t, tree) in rule.trees.iter().enumerate() {
            if !rule.in_bag[t][i] {
                sum += tree.predict(x);
                count += 1;
            }
        }
        if count > 0 {
            let e = data.y(i) - sum / count as f64;
            sse += e * e;
            evaluated += 1;
        }
    }
    if evaluated == 0 {
        return Err(Error::UndefinedOob);
    }
    Ok(OobReport {
        error: sse / evaluated as f64,
        evaluated,
        skipped: data.n() - evaluated,
    })
}

impl Learner for Forest {
    fn name(&self) -> &str {
        &self.name
    }

    fn fit(&self, data: &Dataset, seed: u64) -> Result<Box<dyn FittedRule>> {
        Ok(Box::new(self.fit_forest(data, seed)?))
    }

    fn fit_full(&self, data: &Dataset, seed: u64) -> Result<FullFit> {
        let rule = self.fit_forest(data, seed)?;
        let oob = oob_error(&rule, data).ok();
        Ok(FullFit {
            rule: Box::new(rule),
            oob,
        })
    }
}
