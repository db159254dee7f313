//! k-nearest-neighbour regression under standardized Euclidean distance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::Predictor;
use crate::data::{Dataset, RowMatrix, Value};
use crate::error::{Error, Result};

/// Memorized training rows; prediction averages the targets of the `k`
/// nearest rows. Numeric coordinates are scaled by the training standard
/// deviation, a categorical mismatch contributes 1, and distance ties break
/// toward the lower row index.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnnModel {
    pub rows: RowMatrix,
    pub targets: Vec<f64>,
    pub k: usize,
    /// Per-feature inverse scale; 0 disables a constant numeric feature,
    /// 1 is used for categorical columns.
    pub inv_scale: Vec<f64>,
}

pub fn fit_knn(train: &Dataset, k: usize) -> Result<KnnModel> {
    if k < 1 || k > train.n() {
        return Err(Error::InvalidArgument(format!(
            "k={k} must lie in 1..={}",
            train.n()
        )));
    }
    let n = train.n() as f64;
    let mut inv_scale = Vec::with_capacity(train.p());
    for j in 0..train.p() {
        if !train.kind(j).is_numeric() {
            inv_scale.push(1.0);
            continue;
        }
        let mean: f64 =
            (0..train.n()).map(|i| train.value(i, j).as_num().unwrap()).sum::<f64>() / n;
        let ss: f64 = (0..train.n())
            .map(|i| {
                let d = train.value(i, j).as_num().unwrap() - mean;
                d * d
            })
            .sum();
        let sd = if train.n() > 1 { libm::sqrt(ss / (n - 1.0)) } else { 0.0 };
        inv_scale.push(if sd > 0.0 { 1.0 / sd } else { 0.0 });
    }
    Ok(KnnModel { rows: train.row_matrix(), targets: train.target().to_vec(), k, inv_scale })
}

impl KnnModel {
    fn distance_sq(&self, a: &[Value], b: &[Value]) -> f64 {
        let mut acc = 0.0;
        for j in 0..a.len() {
            match (a[j], b[j]) {
                (Value::Num(x), Value::Num(y)) => {
                    let d = (x - y) * self.inv_scale[j];
                    acc += d * d;
                }
                (Value::Cat(x), Value::Cat(y)) => acc += (x != y) as u32 as f64,
                // Kind mismatch counts as a full mismatch.
                _ => acc += 1.0,
            }
        }
        acc
    }

    fn predict_row(&self, row: &[Value]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .rows()
            .enumerate()
            .map(|(i, train_row)| (self.distance_sq(row, train_row), i))
            .collect();
        dist.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist[..self.k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / self.k as f64
    }
}

impl Predictor for KnnModel {
    fn predict(&self, rows: &RowMatrix) -> Result<Vec<f64>> {
        Ok(rows.rows().map(|r| self.predict_row(r)).collect())
    }

    fn kind(&self) -> &'static str {
        "knn"
    }

    fn describe(&self) -> String {
        format!("knn(k={}, train_n={})", self.k, self.targets.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureKind;
    use crate::models::checked_predict;
    use alloc::vec;

    fn train() -> Dataset {
        Dataset::new(
            vec!["x".into()],
            vec![FeatureKind::Numeric],
            vec![
                vec![Value::Num(0.0)],
                vec![Value::Num(1.0)],
                vec![Value::Num(2.0)],
                vec![Value::Num(3.0)],
            ],
            vec![10.0, 20.0, 30.0, 40.0],
            "y".into(),
        )
        .unwrap()
    }

    #[test]
    fn k_equal_n_gives_global_mean() {
        let m = fit_knn(&train(), 4).unwrap();
        let preds = checked_predict(&m, &train().row_matrix()).unwrap();
        for p in preds {
            assert!((p - 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_one_memorizes() {
        let d = train();
        let m = fit_knn(&d, 1).unwrap();
        let preds = checked_predict(&m, &d.row_matrix()).unwrap();
        assert_eq!(preds, d.target());
    }

    #[test]
    fn equidistant_tie_breaks_to_lower_index() {
        // Query at 0.5 is equidistant to rows 0 and 1.
        let m = fit_knn(&train(), 1).unwrap();
        let mut q = RowMatrix::new(1);
        q.push_row(&[Value::Num(0.5)]);
        let preds = checked_predict(&m, &q).unwrap();
        assert_eq!(preds, vec![10.0]);
    }

    #[test]
    fn rejects_out_of_range_k() {
        assert!(fit_knn(&train(), 0).is_err());
        assert!(fit_knn(&train(), 5).is_err());
    }

    #[test]
    fn categorical_mismatch_counts_one() {
        let d = Dataset::new(
            vec!["g".into()],
            vec![FeatureKind::Categorical { levels: vec!["a".into(), "b".into()] }],
            vec![vec![Value::Cat(0)], vec![Value::Cat(1)]],
            vec![1.0, 5.0],
            "y".into(),
        )
        .unwrap();
        let m = fit_knn(&d, 1).unwrap();
        let mut q = RowMatrix::new(1);
        q.push_row(&[Value::Cat(1)]);
        assert_eq!(checked_predict(&m, &q).unwrap(), vec![5.0]);
    }

    #[test]
    fn constant_feature_is_ignored() {
        let d = Dataset::new(
            vec!["c".into(), "x".into()],
            vec![FeatureKind::Numeric, FeatureKind::Numeric],
            vec![
                vec![Value::Num(7.0), Value::Num(0.0)],
                vec![Value::Num(7.0), Value::Num(10.0)],
            ],
            vec![1.0, 2.0],
            "y".into(),
        )
        .unwrap();
        let m = fit_knn(&d, 1).unwrap();
        // A huge value in the constant column must not affect distances.
        let mut q = RowMatrix::new(2);
        q.push_row(&[Value::Num(1e9), Value::Num(9.0)]);
        assert_eq!(checked_predict(&m, &q).unwrap(), vec![2.0]);
    }
}
