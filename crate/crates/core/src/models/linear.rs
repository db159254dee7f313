//! Ordinary least squares with optional pairwise interaction terms.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::Predictor;
use crate::data::{Dataset, FeatureKind, RowMatrix, Value};
use crate::error::{Error, Result};

/// One column of the expanded design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Term {
    /// A numeric feature entered as-is.
    Main { feature: usize },
    /// One-hot indicator for a categorical level (reference level dropped).
    Indicator { feature: usize, level: u32 },
    /// Product of two numeric features.
    Product { a: usize, b: usize },
}

impl Term {
    fn eval(&self, row: &[Value]) -> Result<f64> {
        match *self {
            Term::Main { feature } => num_at(row, feature),
            Term::Indicator { feature, level } => match row[feature] {
                Value::Cat(c) => Ok((c == level) as u32 as f64),
                Value::Num(_) => Err(Error::InvalidArgument(format!(
                    "feature {feature} is numeric but the model expects a categorical level"
                ))),
            },
            Term::Product { a, b } => Ok(num_at(row, a)? * num_at(row, b)?),
        }
    }

    fn name(&self, feature_names: &[String], kinds: &[FeatureKind]) -> String {
        match *self {
            Term::Main { feature } => feature_names[feature].clone(),
            Term::Indicator { feature, level } => {
                let level_name = kinds[feature]
                    .levels()
                    .and_then(|ls| ls.get(level as usize))
                    .map(String::as_str)
                    .unwrap_or("?");
                format!("{}={}", feature_names[feature], level_name)
            }
            Term::Product { a, b } => format!("{}*{}", feature_names[a], feature_names[b]),
        }
    }
}

fn num_at(row: &[Value], j: usize) -> Result<f64> {
    row[j].as_num().ok_or_else(|| {
        Error::InvalidArgument(format!("feature {j} is categorical but the model expects a number"))
    })
}

/// Fitted OLS model over the expanded term list.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub terms: Vec<Term>,
    pub interactions: bool,
}

impl LinearModel {
    fn predict_row(&self, row: &[Value]) -> Result<f64> {
        let mut y = self.intercept;
        for (term, &coef) in self.terms.iter().zip(&self.coefficients) {
            y += coef * term.eval(row)?;
        }
        Ok(y)
    }
}

impl Predictor for LinearModel {
    fn predict(&self, rows: &RowMatrix) -> Result<Vec<f64>> {
        rows.rows().map(|r| self.predict_row(r)).collect()
    }

    fn kind(&self) -> &'static str {
        "linear"
    }

    fn describe(&self) -> String {
        format!("linear(interactions={}, terms={})", self.interactions, self.terms.len())
    }
}

/// Builds the term list for a dataset: numeric main effects, one-hot
/// indicators for categorical levels past the first, and (optionally) all
/// pairwise products of numeric features.
fn build_terms(d: &Dataset, interactions: bool) -> Vec<Term> {
    let mut terms = Vec::new();
    for (j, kind) in d.kinds().iter().enumerate() {
        match kind {
            FeatureKind::Numeric => terms.push(Term::Main { feature: j }),
            FeatureKind::Categorical { levels } => {
                for level in 1..levels.len() as u32 {
                    terms.push(Term::Indicator { feature: j, level });
                }
            }
        }
    }
    if interactions {
        let numeric: Vec<usize> =
            (0..d.p()).filter(|&j| d.kind(j).is_numeric()).collect();
        for (ia, &a) in numeric.iter().enumerate() {
            for &b in &numeric[ia + 1..] {
                terms.push(Term::Product { a, b });
            }
        }
    }
    terms
}

/// Fits ordinary least squares on the expanded design matrix.
///
/// Errors with the offending term's name if the design matrix is rank
/// deficient.
pub fn fit_linear(train: &Dataset, interactions: bool) -> Result<LinearModel> {
    let terms = build_terms(train, interactions);
    let n = train.n();
    let cols = terms.len() + 1; // intercept first
    if n < cols {
        return Err(Error::InvalidArgument(format!(
            "{n} rows cannot identify {cols} coefficients"
        )));
    }

    // Column-major design matrix.
    let mut design = vec![0.0f64; n * cols];
    for i in 0..n {
        design[i] = 1.0;
        let row = train.row(i);
        for (t, term) in terms.iter().enumerate() {
            design[(t + 1) * n + i] = term.eval(row)?;
        }
    }
    let mut rhs: Vec<f64> = train.target().to_vec();

    let coef = householder_least_squares(&mut design, &mut rhs, n, cols).map_err(|col| {
        let term = if col == 0 {
            String::from("(intercept)")
        } else {
            terms[col - 1].name(train.feature_names(), train.kinds())
        };
        Error::RankDeficient { term }
    })?;

    Ok(LinearModel {
        intercept: coef[0],
        coefficients: coef[1..].to_vec(),
        terms,
        interactions,
    })
}

/// Householder QR least squares on a column-major `m x k` matrix.
/// Returns `Err(column)` on rank deficiency.
fn householder_least_squares(
    a: &mut [f64],
    rhs: &mut [f64],
    m: usize,
    k: usize,
) -> core::result::Result<Vec<f64>, usize> {
    let mut max_diag: f64 = 0.0;
    for j in 0..k {
        // Householder vector for column j, rows j..m.
        let col = &a[j * m..(j + 1) * m];
        let mut norm = 0.0;
        for &v in &col[j..] {
            norm += v * v;
        }
        let norm = libm::sqrt(norm);
        let head = col[j];
        let alpha = if head >= 0.0 { -norm } else { norm };
        max_diag = if max_diag > norm { max_diag } else { norm };
        if norm <= 1e-12 * max_diag {
            return Err(j);
        }
        // v = x - alpha*e1, normalized so v[j] = 1.
        let v0 = head - alpha;
        let mut v = vec![0.0f64; m - j];
        v[0] = 1.0;
        for r in j + 1..m {
            v[r - j] = a[j * m + r] / v0;
        }
        let beta = -v0 / alpha; // 2 / (v'v)

        // Apply the reflector to the remaining columns and the rhs.
        a[j * m + j] = alpha;
        for r in j + 1..m {
            a[j * m + r] = 0.0;
        }
        for c in j + 1..k {
            let colc = &mut a[c * m..(c + 1) * m];
            let mut dot = 0.0;
            for r in j..m {
                dot += v[r - j] * colc[r];
            }
            let scale = beta * dot;
            for r in j..m {
                colc[r] -= scale * v[r - j];
            }
        }
        let mut dot = 0.0;
        for r in j..m {
            dot += v[r - j] * rhs[r];
        }
        let scale = beta * dot;
        for r in j..m {
            rhs[r] -= scale * v[r - j];
        }
    }

    // Back substitution on the upper triangle.
    let mut coef = vec![0.0f64; k];
    for j in (0..k).rev() {
        let mut acc = rhs[j];
        for c in j + 1..k {
            acc -= a[c * m + j] * coef[c];
        }
        coef[j] = acc / a[j * m + j];
    }
    Ok(coef)
}
