//! CSV ingestion and table exports.
//!
//! Input files are RFC-4180-style with a required header row. Column kinds
//! are inferred (all cells parse as finite numbers → numeric, otherwise
//! categorical with levels in first-appearance order) unless a column is
//! forced categorical. Numeric table output uses either shortest
//! round-trip formatting (dataset export) or 17 significant digits (analysis
//! tables); both re-parse to the identical `f64`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use bbfi_core::curve::Curve;
use bbfi_core::data::{Dataset, FeatureKind, Value};
use bbfi_core::importance::ImportanceMatrix;

use crate::error::{Error, Result};

/// Schema options for [`load_csv`].
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Name of the target column (required, must exist).
    pub target: String,
    /// Columns to treat as categorical even if their cells look numeric.
    pub categorical: Vec<String>,
}

pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_dataset(file, opts)
}

/// Parses a dataset from any reader; see [`load_csv`].
pub fn read_dataset<R: Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec?.iter().map(str::to_string).collect(),
        None => return Err(Error::Data("empty file: missing header row".into())),
    };
    for (j, name) in header.iter().enumerate() {
        if header[..j].contains(name) {
            return Err(Error::Data(format!("duplicate header column '{name}'")));
        }
    }
    let target_col = header
        .iter()
        .position(|n| *n == opts.target)
        .ok_or_else(|| Error::Data(format!("unknown target column '{}'", opts.target)))?;
    for name in &opts.categorical {
        if !header.contains(name) {
            return Err(Error::Data(format!("unknown categorical column '{name}'")));
        }
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let row_no = i + 1;
        if rec.len() != header.len() {
            return Err(Error::Data(format!(
                "row {row_no} has {} fields, expected {}",
                rec.len(),
                header.len()
            )));
        }
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        for (j, field) in fields.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::Data(format!(
                    "missing cell at row {row_no}, column '{}'",
                    header[j]
                )));
            }
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != target_col).collect();
    let mut kinds = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let forced = opts.categorical.contains(&header[j]);
        let kind = if forced {
            None
        } else {
            infer_numeric(&rows, j, &header[j])?
        };
        kinds.push(kind); // None => categorical
    }

    // Level tables in first-appearance order.
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); feature_cols.len()];
    let mut level_index: Vec<HashMap<String, u32>> = vec![HashMap::new(); feature_cols.len()];
    let mut value_rows: Vec<Vec<Value>> = Vec::with_capacity(rows.len());
    let mut target = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row_no = i + 1;
        let mut values = Vec::with_capacity(feature_cols.len());
        for (fj, &j) in feature_cols.iter().enumerate() {
            let field = &row[j];
            match kinds[fj] {
                Some(()) => {
                    // Numeric column; parse already validated by inference.
                    values.push(Value::Num(field.parse::<f64>().expect("validated")));
                }
                None => {
                    let idx = match level_index[fj].get(field) {
                        Some(&idx) => idx,
                        None => {
                            let idx = levels[fj].len() as u32;
                            levels[fj].push(field.clone());
                            level_index[fj].insert(field.clone(), idx);
                            idx
                        }
                    };
                    values.push(Value::Cat(idx));
                }
            }
        }
        let y: f64 = row[target_col].parse().map_err(|_| {
            Error::Data(format!(
                "unparseable numeric target at row {row_no}, column '{}': '{}'",
                header[target_col], row[target_col]
            ))
        })?;
        if !y.is_finite() {
            return Err(Error::Data(format!(
                "non-finite target at row {row_no}, column '{}'",
                header[target_col]
            )));
        }
        value_rows.push(values);
        target.push(y);
    }

    let feature_names: Vec<String> =
        feature_cols.iter().map(|&j| header[j].clone()).collect();
    let final_kinds: Vec<FeatureKind> = kinds
        .iter()
        .zip(levels)
        .map(|(kind, levels)| match kind {
            Some(()) => FeatureKind::Numeric,
            None => FeatureKind::Categorical { levels },
        })
        .collect();
    Ok(Dataset::new(
        feature_names,
        final_kinds,
        value_rows,
        target,
        header[target_col].clone(),
    )?)
}

/// `Some(())` if the column is numeric; errors on finite-parse violations.
fn infer_numeric(rows: &[Vec<String>], j: usize, name: &str) -> Result<Option<()>> {
    let mut parsed = Vec::with_capacity(rows.len());
    for row in rows {
        match row[j].parse::<f64>() {
            Ok(v) => parsed.push(v),
            Err(_) => return Ok(None), // any non-number makes it categorical
        }
    }
    for (i, v) in parsed.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "non-finite numeric value at row {}, column '{name}'",
                i + 1
            )));
        }
    }
    Ok(Some(()))
}

/// Writes a dataset back to CSV; numeric cells use shortest round-trip
/// formatting, so `load_csv ∘ write_csv` is bit-exact.
pub fn write_csv_to<W: Write>(writer: W, d: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    header.push(d.target_name());
    w.write_record(&header)?;
    for i in 0..d.n() {
        let mut rec: Vec<String> = Vec::with_capacity(d.p() + 1);
        for j in 0..d.p() {
            rec.push(cell_string(d, i, j));
        }
        rec.push(format!("{}", d.target()[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, d: &Dataset) -> Result<()> {
    write_csv_to(File::create(path)?, d)
}

fn cell_string(d: &Dataset, i: usize, j: usize) -> String {
    match (d.value(i, j), d.kind(j)) {
        (Value::Num(v), _) => format!("{v}"),
        (Value::Cat(c), FeatureKind::Categorical { levels }) => levels[c as usize].clone(),
        (Value::Cat(c), _) => format!("{c}"),
    }
}

/// 17-significant-digit formatting for analysis tables; round-trips `f64`.
pub fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a generic analysis table.
pub fn write_table<W: Write>(writer: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Curve export: columns `grid_value, ordinate[, observation]`. Either every
/// curve carries an observation index (ICI/ICE files) or none does (PI/PD).
pub fn write_curves_csv<W: Write>(writer: W, items: &[(Option<usize>, &Curve)]) -> Result<()> {
    let with_obs = items.iter().any(|(o, _)| o.is_some());
    if with_obs && items.iter().any(|(o, _)| o.is_none()) {
        return Err(Error::Usage(
            "cannot mix per-observation and aggregate curves in one file".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    if with_obs {
        w.write_record(["grid_value", "ordinate", "observation"])?;
    } else {
        w.write_record(["grid_value", "ordinate"])?;
    }
    for (obs, curve) in items {
        for k in 0..curve.len() {
            let mut rec = vec![g17(curve.abscissa[k]), g17(curve.ordinates[k])];
            if let Some(i) = obs {
                rec.push(i.to_string());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve CSV produced by [`write_curves_csv`]; curves are grouped by
/// the observation column (one anonymous curve when it is absent), in first
/// appearance order.
pub fn read_curves_csv(path: &Path) -> Result<Vec<(Option<usize>, Curve)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 2 || cols[0] != "grid_value" || cols[1] != "ordinate" {
        return Err(Error::Data(format!(
            "{}: expected columns grid_value, ordinate[, observation]",
            path.display()
        )));
    }
    let with_obs = cols.len() > 2 && cols[2] == "observation";
    let mut order: Vec<Option<usize>> = Vec::new();
    let mut groups: HashMap<Option<usize>, (Vec<f64>, Vec<f64>)> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_no = i + 1;
        let x: f64 = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("bad grid_value at row {row_no}")))?;
        let y: f64 = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("bad ordinate at row {row_no}")))?;
        let obs = if with_obs {
            Some(
                rec.get(2)
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::Data(format!("bad observation at row {row_no}")))?,
            )
        } else {
            None
        };
        let entry = groups.entry(obs).or_insert_with(|| {
            order.push(obs);
            (Vec::new(), Vec::new())
        });
        entry.0.push(x);
        entry.1.push(y);
    }
    if order.is_empty() {
        return Err(Error::Data(format!("{}: no curve points", path.display())));
    }
    order
        .into_iter()
        .map(|obs| {
            let (xs, ys) = groups.remove(&obs).expect("grouped");
            let label = match obs {
                Some(i) => format!("obs {i}"),
                None => "curve".to_string(),
            };
            Ok((obs, Curve::new(label, xs, ys)?))
        })
        .collect()
}

/// Long-form ΔL matrix export: `grid_index, grid_<feature>.., observation,
/// delta_loss`. Grid values are written as level strings for categorical
/// features and full-precision numbers otherwise.
pub fn write_matrix_csv<W: Write>(writer: W, m: &ImportanceMatrix, d: &Dataset) -> Result<()> {
    if !m.has_cells() {
        return Err(Error::Usage(
            "matrix cells were not materialized (cell cap exceeded)".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["grid_index".to_string()];
    for &j in m.feature_set.indices() {
        header.push(format!("grid_{}", d.feature_names()[j]));
    }
    header.push("observation".into());
    header.push("delta_loss".into());
    w.write_record(&header)?;
    for (k, point) in m.grid.points().iter().enumerate() {
        for i in 0..m.n_obs() {
            let mut rec = vec![k.to_string()];
            for (&j, &v) in m.feature_set.indices().iter().zip(&point.values) {
                rec.push(match (v, d.kind(j)) {
                    (Value::Num(x), _) => format!("{x}"),
                    (Value::Cat(c), FeatureKind::Categorical { levels }) => {
                        levels[c as usize].clone()
                    }
                    (Value::Cat(c), _) => format!("{c}"),
                });
            }
            rec.push(i.to_string());
            rec.push(g17(m.cell(k, i).expect("cells present")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a row filter of the form `column OP value` with OP one of
/// `<=, >=, ==, !=, <, >`; categorical columns support `==`/`!=` against a
/// level name. Returns the row mask.
pub fn row_filter(d: &Dataset, expr: &str) -> Result<Vec<bool>> {
    let ops = ["<=", ">=", "==", "!=", "<", ">"];
    let (op, pos) = ops
        .iter()
        .filter_map(|op| expr.find(op).map(|p| (*op, p)))
        .min_by_key(|&(_, p)| p)
        .ok_or_else(|| Error::Usage(format!("no comparison operator in filter '{expr}'")))?;
    let name = expr[..pos].trim();
    let value = expr[pos + op.len()..].trim();
    let j = d
        .feature_index(name)
        .ok_or_else(|| Error::Usage(format!("unknown column '{name}' in filter")))?;
    match d.kind(j) {
        FeatureKind::Numeric => {
            let rhs: f64 = value
                .parse()
                .map_err(|_| Error::Usage(format!("bad numeric value '{value}' in filter")))?;
            Ok((0..d.n())
                .map(|i| {
                    let x = d.value(i, j).as_num().unwrap();
                    match op {
                        "<=" => x <= rhs,
                        ">=" => x >= rhs,
                        "==" => x == rhs,
                        "!=" => x != rhs,
                        "<" => x < rhs,
                        _ => x > rhs,
                    }
                })
                .collect())
        }
        FeatureKind::Categorical { levels } => {
            if op != "==" && op != "!=" {
                return Err(Error::Usage(format!(
                    "categorical column '{name}' supports only == and !="
                )));
            }
            let level = levels.iter().position(|l| l == value).ok_or_else(|| {
                Error::Usage(format!("unknown level '{value}' for column '{name}'"))
            })? as u32;
            Ok((0..d.n())
                .map(|i| {
                    let is = d.value(i, j) == Value::Cat(level);
                    if op == "==" {
                        is
                    } else {
                        !is
                    }
                })
                .collect())
        }
    }
}
