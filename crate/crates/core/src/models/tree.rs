//! CART regression trees and a bagged random forest.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::Predictor;
use crate::data::{Dataset, FeatureKind, RowMatrix, Value};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

const TREE_TAG: u64 = 0x7472_6565; // "tree"

/// Routing test of an internal node.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SplitTest {
    /// Numeric: go left when `value < threshold`.
    NumericLt { threshold: f64 },
    /// Categorical: go left when the cell equals `level`.
    LevelEq { level: u32 },
}

impl SplitTest {
    fn goes_left(&self, v: Value) -> bool {
        match (*self, v) {
            (SplitTest::NumericLt { threshold }, Value::Num(x)) => x < threshold,
            (SplitTest::LevelEq { level }, Value::Cat(c)) => c == level,
            // Mixed kind can only happen on malformed prediction input; route
            // right so prediction stays total.
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, test: SplitTest, left: u32, right: u32 },
}

/// One regression tree stored as a node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[Value]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, test, left, right } => {
                    at = if test.goes_left(row[*feature]) { *left as usize } else { *right as usize };
                }
            }
        }
    }
}

/// Forest hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestParams {
    pub ntree: usize,
    pub mtry: usize,
    pub min_node_size: usize,
}

impl ForestParams {
    /// Regression defaults: 100 trees, `mtry = max(1, p/3)`, node size 5.
    pub fn defaults_for(p: usize) -> Self {
        Self { ntree: 100, mtry: (p / 3).max(1), min_node_size: 5 }
    }
}

/// Bagged CART forest; prediction is the mean over trees.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub params: ForestParams,
    pub seed: u64,
}

impl ForestModel {
    /// Per-tree predictions for one row, in tree order.
    pub fn per_tree_row(&self, row: &[Value]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }
}

impl Predictor for ForestModel {
    fn predict(&self, rows: &RowMatrix) -> Result<Vec<f64>> {
        let k = self.trees.len() as f64;
        Ok(rows
            .rows()
            .map(|row| self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / k)
            .collect())
    }

    fn kind(&self) -> &'static str {
        "forest"
    }

    fn describe(&self) -> String {
        format!(
            "forest(ntree={}, mtry={}, min_node_size={}, seed={})",
            self.params.ntree, self.params.mtry, self.params.min_node_size, self.seed
        )
    }
}

/// Stream seed of tree `t` within a forest seeded by `seed`; combining
/// [`fit_single_tree`] over `t = 0..ntree` with these seeds reproduces
/// [`fit_forest`] exactly, in any fitting order.
pub fn tree_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, &[TREE_TAG, t as u64])
}

/// Fits `ntree` CART trees on bootstrap samples. Each tree's randomness comes
/// from a stream derived from `(seed, tree index)`, so the trees of a forest
/// are independent of fitting order or worker count.
pub fn fit_forest(train: &Dataset, params: ForestParams, seed: u64) -> Result<ForestModel> {
    validate_params(train, &params)?;
    let trees = (0..params.ntree)
        .map(|t| fit_single_tree(train, &params, tree_seed(seed, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel { trees, params, seed })
}

fn validate_params(train: &Dataset, params: &ForestParams) -> Result<()> {
    if params.ntree < 1 {
        return Err(Error::InvalidArgument("ntree must be at least 1".into()));
    }
    if params.mtry < 1 {
        return Err(Error::InvalidArgument("mtry must be at least 1".into()));
    }
    if train.n() < params.min_node_size {
        return Err(Error::InvalidArgument(format!(
            "{} rows but min_node_size={}",
            train.n(),
            params.min_node_size
        )));
    }
    Ok(())
}

/// Fits one tree of the forest given its derived stream seed.
///
/// Exposed so callers may fit trees concurrently; combining the results of
/// this function for `t = 0..ntree` reproduces [`fit_forest`] exactly.
pub fn fit_single_tree(train: &Dataset, params: &ForestParams, tree_seed: u64) -> Result<Tree> {
    validate_params(train, params)?;
    let mut rng = SplitMix64::new(tree_seed);
    let n = train.n();
    let bootstrap: Vec<usize> = (0..n).map(|_| rng.below(n as u64) as usize).collect();
    let mut builder = TreeBuilder { train, params, rng, nodes: Vec::new() };
    builder.grow(bootstrap);
    Ok(Tree { nodes: builder.nodes })
}

struct TreeBuilder<'a> {
    train: &'a Dataset,
    params: &'a ForestParams,
    rng: SplitMix64,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    test: SplitTest,
    score: f64,
}

impl TreeBuilder<'_> {
    /// Grows a subtree over `rows` (indices into the training data, possibly
    /// repeated by the bootstrap); returns the subtree's root node index.
    fn grow(&mut self, rows: Vec<usize>) -> u32 {
        let idx = self.nodes.len() as u32;
        let mean = rows.iter().map(|&i| self.train.target()[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });

        if rows.len() < 2 * self.params.min_node_size {
            return idx;
        }
        let Some(best) = self.best_split(&rows) else { return idx };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| best.test.goes_left(self.train.value(i, best.feature)));
        let left = self.grow(left_rows);
        let right = self.grow(right_rows);
        self.nodes[idx as usize] =
            Node::Split { feature: best.feature, test: best.test, left, right };
        idx
    }

    /// Best variance-reducing split over `mtry` sampled features. Candidate
    /// features are scanned in ascending index order and ties keep the first
    /// candidate, so the result is deterministic for a given stream.
    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let p = self.train.p();
        let mtry = self.params.mtry.min(p);
        let mut candidates = self.rng.sample_without_replacement(p, mtry);
        candidates.sort_unstable();

        let min = self.params.min_node_size;
        let total_sum: f64 = rows.iter().map(|&i| self.train.target()[i]).sum();
        let n = rows.len() as f64;
        let parent_score = total_sum * total_sum / n;

        let mut best: Option<BestSplit> = None;
        for &feature in &candidates {
            let candidate = match self.train.kind(feature) {
                FeatureKind::Numeric => self.best_numeric(rows, feature, total_sum, min),
                FeatureKind::Categorical { .. } => {
                    self.best_categorical(rows, feature, total_sum, min)
                }
            };
            if let Some(c) = candidate {
                if best.as_ref().map_or(true, |b| c.score > b.score) {
                    best = Some(c);
                }
            }
        }
        // Require a strict improvement over the unsplit node; a pure node
        // (zero variance) never splits.
        best.filter(|b| b.score > parent_score + 1e-12 * parent_score.abs())
    }

    fn best_numeric(
        &self,
        rows: &[usize],
        feature: usize,
        total_sum: f64,
        min: usize,
    ) -> Option<BestSplit> {
        let mut vals: Vec<(f64, f64)> = rows
            .iter()
            .map(|&i| (self.train.value(i, feature).as_num().unwrap_or(0.0), self.train.target()[i]))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = vals.len();

        let mut best: Option<BestSplit> = None;
        let mut left_sum = 0.0;
        for cut in 1..n {
            left_sum += vals[cut - 1].1;
            if vals[cut].0 == vals[cut - 1].0 {
                continue; // not a boundary between distinct values
            }
            if cut < min || n - cut < min {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let score =
                left_sum * left_sum / cut as f64 + right_sum * right_sum / (n - cut) as f64;
            if best.as_ref().map_or(true, |b| score > b.score) {
                let threshold = (vals[cut - 1].0 + vals[cut].0) / 2.0;
                best = Some(BestSplit {
                    feature,
                    test: SplitTest::NumericLt { threshold },
                    score,
                });
            }
        }
        best
    }

    /// Categorical: best single-level-vs-rest split, levels scanned ascending.
    fn best_categorical(
        &self,
        rows: &[usize],
        feature: usize,
        total_sum: f64,
        min: usize,
    ) -> Option<BestSplit> {
        let n_levels = self.train.kind(feature).levels().map_or(0, |l| l.len());
        let mut sums = vec![0.0f64; n_levels];
        let mut counts = vec![0usize; n_levels];
        for &i in rows {
            if let Value::Cat(c) = self.train.value(i, feature) {
                sums[c as usize] += self.train.target()[i];
                counts[c as usize] += 1;
            }
        }
        let n = rows.len();
        let mut best: Option<BestSplit> = None;
        for level in 0..n_levels {
            let cnt = counts[level];
            if cnt < min || n - cnt < min {
                continue;
            }
            let left_sum = sums[level];
            let right_sum = total_sum - left_sum;
            let score =
                left_sum * left_sum / cnt as f64 + right_sum * right_sum / (n - cnt) as f64;
            if best.as_ref().map_or(true, |b| score > b.score) {
                best = Some(BestSplit {
                    feature,
                    test: SplitTest::LevelEq { level: level as u32 },
                    score,
                });
            }
        }
        best
    }
}
