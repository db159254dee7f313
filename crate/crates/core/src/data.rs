//! Column-typed tabular data with a numeric target.
//!
//! A [`Dataset`] owns all row/column indexing semantics used by the
//! estimators. Categorical cells are stored as integer level indices and
//! treated opaquely everywhere (replacement is an index swap); numeric cells
//! are finite `f64`. Datasets are immutable after construction and safe to
//! share across workers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// One cell: a finite number or a categorical level index.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Value {
    Num(f64),
    Cat(u32),
}

impl Value {
    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            Value::Cat(_) => None,
        }
    }

    pub fn as_cat(self) -> Option<u32> {
        match self {
            Value::Num(_) => None,
            Value::Cat(c) => Some(c),
        }
    }

    /// Plot/curve coordinate: numeric value, or the ordinal level position.
    pub fn plot_coord(self) -> f64 {
        match self {
            Value::Num(v) => v,
            Value::Cat(c) => c as f64,
        }
    }
}

/// Column type: numeric, or categorical with its ordered level list.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FeatureKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

impl FeatureKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric)
    }

    pub fn levels(&self) -> Option<&[String]> {
        match self {
            FeatureKind::Numeric => None,
            FeatureKind::Categorical { levels } => Some(levels),
        }
    }
}

/// A sorted set of column indices (the coalition `S`); the complement is
/// always derived, never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    indices: Vec<usize>,
}

impl FeatureSet {
    /// Builds a set from arbitrary indices; sorts and deduplicates.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    /// The full index set `{0, .., p-1}`.
    pub fn full(p: usize) -> Self {
        Self { indices: (0..p).collect() }
    }

    /// Decodes a coalition bitmask (bit `j` set means feature `j` included).
    pub fn from_bits(bits: u64, p: usize) -> Self {
        Self { indices: (0..p).filter(|&j| bits >> j & 1 == 1).collect() }
    }

    /// Coalition bitmask; requires all indices below 64.
    pub fn bits(&self) -> u64 {
        self.indices.iter().fold(0u64, |acc, &j| acc | 1 << j)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// `S ∪ {j}`.
    pub fn with(&self, j: usize) -> Self {
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&j) {
            indices.insert(pos, j);
        }
        Self { indices }
    }

    /// `C = {0,..,p-1} \ S`.
    pub fn complement(&self, p: usize) -> Self {
        Self { indices: (0..p).filter(|j| !self.contains(*j)).collect() }
    }

    /// Errors unless all indices fall inside `0..p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        match self.indices.last() {
            Some(&max) if max >= p => Err(Error::InvalidArgument(format!(
                "feature index {max} out of range for p={p}"
            ))),
            _ => Ok(()),
        }
    }
}

/// A row-major value matrix handed to predictors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RowMatrix {
    p: usize,
    cells: Vec<Value>,
}

impl RowMatrix {
    pub fn new(p: usize) -> Self {
        Self { p, cells: Vec::new() }
    }

    pub fn with_row_capacity(p: usize, rows: usize) -> Self {
        Self { p, cells: Vec::with_capacity(p * rows) }
    }

    pub fn push_row(&mut self, row: &[Value]) {
        debug_assert_eq!(row.len(), self.p);
        self.cells.extend_from_slice(row);
    }

    pub fn n_rows(&self) -> usize {
        if self.p == 0 { 0 } else { self.cells.len() / self.p }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, r: usize) -> &[Value] {
        &self.cells[r * self.p..(r + 1) * self.p]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Value] {
        &mut self.cells[r * self.p..(r + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Value]> {
        self.cells.chunks_exact(self.p)
    }
}

/// Immutable test/training data: `n` rows, `p` typed feature columns, and a
/// numeric target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    target_name: String,
    kinds: Vec<FeatureKind>,
    cells: Vec<Value>, // row-major n*p
    target: Vec<f64>,
    n: usize,
    p: usize,
}

impl Dataset {
    /// Validates every invariant: `n >= 1`, `p >= 1`, unique names, level
    /// indices in range, finite numerics, no missing cells.
    pub fn new(
        feature_names: Vec<String>,
        kinds: Vec<FeatureKind>,
        rows: Vec<Vec<Value>>,
        target: Vec<f64>,
        target_name: String,
    ) -> Result<Self> {
        let p = feature_names.len();
        let n = rows.len();
        if p == 0 {
            return Err(Error::InvalidData("dataset needs at least one feature".into()));
        }
        if n == 0 {
            return Err(Error::InvalidData("dataset needs at least one row".into()));
        }
        if kinds.len() != p {
            return Err(Error::InvalidData(format!(
                "{} kinds for {} features",
                kinds.len(),
                p
            )));
        }
        if target.len() != n {
            return Err(Error::InvalidData(format!(
                "target length {} does not match row count {}",
                target.len(),
                n
            )));
        }
        for (j, name) in feature_names.iter().enumerate() {
            if feature_names[..j].contains(name) {
                return Err(Error::InvalidData(format!("duplicate feature name '{name}'")));
            }
        }
        for (j, kind) in kinds.iter().enumerate() {
            if let FeatureKind::Categorical { levels } = kind {
                if levels.is_empty() {
                    return Err(Error::InvalidData(format!(
                        "categorical feature '{}' has no levels",
                        feature_names[j]
                    )));
                }
                for (l, level) in levels.iter().enumerate() {
                    if levels[..l].contains(level) {
                        return Err(Error::InvalidData(format!(
                            "duplicate level '{level}' in feature '{}'",
                            feature_names[j]
                        )));
                    }
                }
            }
        }
        let mut cells = Vec::with_capacity(n * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidData(format!(
                    "row {} has {} cells, expected {}",
                    i + 1,
                    row.len(),
                    p
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                check_cell(v, &kinds[j], i, &feature_names[j])?;
                cells.push(v);
            }
        }
        for (i, &y) in target.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::NonFinite(format!(
                    "target '{target_name}' at row {} is not finite",
                    i + 1
                )));
            }
        }
        Ok(Self { feature_names, target_name, kinds, cells, target, n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn kind(&self, j: usize) -> &FeatureKind {
        &self.kinds[j]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> &[Value] {
        &self.cells[i * self.p..(i + 1) * self.p]
    }

    pub fn value(&self, i: usize, j: usize) -> Value {
        self.cells[i * self.p + j]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// All rows as a prediction input matrix (copied).
    pub fn row_matrix(&self) -> RowMatrix {
        RowMatrix { p: self.p, cells: self.cells.clone() }
    }

    /// All rows with the columns in `s` overwritten by `replacement`
    /// (one value per index in `s`, in `s`'s sorted order).
    pub fn rows_with_replaced(&self, s: &FeatureSet, replacement: &[Value]) -> RowMatrix {
        debug_assert_eq!(s.len(), replacement.len());
        let mut m = self.row_matrix();
        for r in 0..self.n {
            let row = m.row_mut(r);
            for (&j, &v) in s.indices().iter().zip(replacement) {
                row[j] = v;
            }
        }
        m
    }

    /// Deterministic shuffled holdout split; train gets `floor(fraction*n)` rows.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0,1), got {train_fraction}"
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("split needs at least two rows".into()));
        }
        let train_n = libm::floor(train_fraction * self.n as f64) as usize;
        if train_n == 0 || train_n == self.n {
            return Err(Error::InvalidArgument(format!(
                "fraction {train_fraction} leaves an empty part for n={}",
                self.n
            )));
        }
        let mut order: Vec<usize> = (0..self.n).collect();
        SplitMix64::new(seed).shuffle(&mut order);
        let mut train_idx = order[..train_n].to_vec();
        let mut test_idx = order[train_n..].to_vec();
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        Ok((self.take_rows(&train_idx), self.take_rows(&test_idx)))
    }

    /// Keeps the rows where `mask` is true, in original order; the schema
    /// (including now-unused categorical levels) is unchanged.
    pub fn subset_rows(&self, mask: &[bool]) -> Result<Dataset> {
        if mask.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "mask length {} does not match row count {}",
                mask.len(),
                self.n
            )));
        }
        let idx: Vec<usize> = (0..self.n).filter(|&i| mask[i]).collect();
        if idx.is_empty() {
            return Err(Error::InvalidArgument("empty subset".into()));
        }
        Ok(self.take_rows(&idx))
    }

    fn take_rows(&self, idx: &[usize]) -> Dataset {
        let mut cells = Vec::with_capacity(idx.len() * self.p);
        let mut target = Vec::with_capacity(idx.len());
        for &i in idx {
            cells.extend_from_slice(self.row(i));
            target.push(self.target[i]);
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            kinds: self.kinds.clone(),
            cells,
            target,
            n: idx.len(),
            p: self.p,
        }
    }
}

fn check_cell(v: Value, kind: &FeatureKind, row: usize, name: &str) -> Result<()> {
    match (v, kind) {
        (Value::Num(x), FeatureKind::Numeric) => {
            if !x.is_finite() {
                return Err(Error::NonFinite(format!(
                    "feature '{name}' at row {} is not finite",
                    row + 1
                )));
            }
        }
        (Value::Cat(c), FeatureKind::Categorical { levels }) => {
            if c as usize >= levels.len() {
                return Err(Error::InvalidData(format!(
                    "feature '{name}' at row {} has level index {c}, but only {} levels exist",
                    row + 1,
                    levels.len()
                )));
            }
        }
        (Value::Num(_), FeatureKind::Categorical { .. }) => {
            return Err(Error::InvalidData(format!(
                "feature '{name}' at row {} holds a number but the column is categorical",
                row + 1
            )));
        }
        (Value::Cat(_), FeatureKind::Numeric) => {
            return Err(Error::InvalidData(format!(
                "feature '{name}' at row {} holds a level index but the column is numeric",
                row + 1
            )));
        }
    }
    Ok(())
}
