//! Fixtures shared across the crate's test modules.

pub(crate) mod fig2 {
    use alloc::string::String;
    use alloc::vec;
    use alloc::vec::Vec;

    use crate::data::{Dataset, FeatureKind, RowMatrix, Value};
    use crate::error::Result;
    use crate::models::Predictor;

    /// ΔL cells: `TABLE[k][i]` for grid point `k` (x1 = k+1) and observation `i`.
    pub const TABLE: [[f64; 3]; 3] = [[0.0, 0.6, 0.3], [0.65, 0.0, 0.25], [0.7, 0.5, 0.0]];

    /// Lookup model reproducing the tabulated ΔL cells under absolute loss.
    ///
    /// Targets are all zero and the diagonal predictions are zero, so the
    /// baseline loss vanishes and each prediction IS the loss change.
    pub struct Fig2Model;

    impl Predictor for Fig2Model {
        fn predict(&self, rows: &RowMatrix) -> Result<Vec<f64>> {
            Ok(rows
                .rows()
                .map(|row| {
                    let k = (row[0].as_num().unwrap() - 1.0) as usize;
                    let i = ((row[1].as_num().unwrap() - 4.0) / 2.0) as usize;
                    TABLE[k][i]
                })
                .collect())
        }

        fn kind(&self) -> &'static str {
            "fixture"
        }

        fn describe(&self) -> String {
            "fig2 fixture".into()
        }
    }

    /// Three observations, x1 = (1,2,3), complements identifying each row.
    pub fn fixture() -> (Dataset, Fig2Model) {
        let d = Dataset::new(
            vec!["x1".into(), "x2".into(), "x3".into()],
            vec![FeatureKind::Numeric, FeatureKind::Numeric, FeatureKind::Numeric],
            vec![
                vec![Value::Num(1.0), Value::Num(4.0), Value::Num(5.0)],
                vec![Value::Num(2.0), Value::Num(6.0), Value::Num(7.0)],
                vec![Value::Num(3.0), Value::Num(8.0), Value::Num(9.0)],
            ],
            vec![0.0, 0.0, 0.0],
            "y".into(),
        )
        .unwrap();
        (d, Fig2Model)
    }
}
