//! Human-readable and CSV renderings of the simulation reports.

use std::fmt::Write as _;

use bbfi_core::sim::{Sim1Report, Sim2Report, SIM2_MEASURES};

use crate::csvio::{g17, write_table};
use crate::error::Result;

/// Text summary of study 1 (means and standard deviations across reps).
pub fn sim1_text(r: &Sim1Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "simulation 1: switching interaction, forest learner (defaults: ntree=100, mtry=p/3, min_node_size=5)"
    );
    let _ = writeln!(
        out,
        "scale: train_n={} test_n={} reps={} seed={}; noise eps ~ N(0, 0.5), second parameter read as variance (sd=sqrt(0.5))",
        r.train_n, r.test_n, r.reps, r.seed
    );
    let _ = writeln!(out, "{:<16} {:>14} {:>14}", "quantity", "mean", "sd");
    for s in &r.stats {
        let _ = writeln!(out, "{:<16} {:>14.4} {:>14.4}", s.label, s.mean, s.sd);
    }
    out
}

/// Summary CSV: `quantity, mean, sd`.
pub fn sim1_summary_csv(r: &Sim1Report) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = r
        .stats
        .iter()
        .map(|s| vec![s.label.clone(), g17(s.mean), g17(s.sd)])
        .collect();
    let mut buf = Vec::new();
    write_table(&mut buf, &["quantity", "mean", "sd"], &rows)?;
    Ok(buf)
}

/// Per-repetition CSV of study 1.
pub fn sim1_reps_csv(r: &Sim1Report) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = r
        .per_rep
        .iter()
        .enumerate()
        .map(|(i, rep)| {
            vec![
                i.to_string(),
                g17(rep.pfi_x1),
                g17(rep.pfi_x2),
                g17(rep.pfi_x1_g0),
                g17(rep.pfi_x2_g0),
                g17(rep.pfi_x1_g1),
                g17(rep.pfi_x2_g1),
            ]
        })
        .collect();
    let mut buf = Vec::new();
    write_table(
        &mut buf,
        &["rep", "pfi_x1", "pfi_x2", "pfi_x1_g0", "pfi_x2_g0", "pfi_x1_g1", "pfi_x2_g1"],
        &rows,
    )?;
    Ok(buf)
}

/// Text summary of study 2 (median importance ratios and the single-run
/// breakdown).
pub fn sim2_text(r: &Sim2Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "simulation 2: linear interaction, learners: linear, linear_inter, forest, knn (knn stands in for a kernel-SVM)"
    );
    let _ = writeln!(
        out,
        "scale: train_n={} test_n={} reps={} seed={}; noise eps ~ N(0, 0.5), second parameter read as variance (sd=sqrt(0.5))",
        r.train_n, r.test_n, r.reps, r.seed
    );
    let _ = writeln!(out, "median importance ratios across reps:");
    let _ = writeln!(out, "{:<14} {:<10} {:>12} {:>12}", "model", "measure", "x1/x3", "x2/x3");
    for row in &r.ratios {
        let _ = writeln!(
            out,
            "{:<14} {:<10} {:>12.4} {:>12.4}",
            row.model, row.measure, row.x1_x3_median, row.x2_x3_median
        );
    }
    let _ = writeln!(out, "single-run breakdown (rep 0):");
    let _ = writeln!(
        out,
        "{:<14} {:>10} {:>12} {:>12} {:>12} {:>24}",
        "model", "mse", "sfimp_x1", "sfimp_x2", "sfimp_x3", "explained proportions"
    );
    for b in &r.breakdown {
        let props = match b.proportion {
            Some(p) => format!("{:.1}%/{:.1}%/{:.1}%", p[0] * 100.0, p[1] * 100.0, p[2] * 100.0),
            None => "n/a".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<14} {:>10.4} {:>12.4} {:>12.4} {:>12.4} {:>24}",
            b.model, b.mse, b.sfimp[0], b.sfimp[1], b.sfimp[2], props
        );
    }
    out
}

/// Median-ratio CSV: `model, measure, x1_x3_median, x2_x3_median`.
pub fn sim2_ratios_csv(r: &Sim2Report) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = r
        .ratios
        .iter()
        .map(|row| {
            vec![
                row.model.clone(),
                row.measure.clone(),
                g17(row.x1_x3_median),
                g17(row.x2_x3_median),
            ]
        })
        .collect();
    let mut buf = Vec::new();
    write_table(&mut buf, &["model", "measure", "x1_x3_median", "x2_x3_median"], &rows)?;
    Ok(buf)
}

/// Long-form per-repetition CSV of study 2:
/// `rep, model, measure, x1, x2, x3`.
pub fn sim2_reps_csv(r: &Sim2Report) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (i, rep) in r.per_rep.iter().enumerate() {
        for m in &rep.models {
            for measure in SIM2_MEASURES {
                let v = match measure {
                    "pfi_diff" => &m.pfi_diff,
                    "pfi_ratio" => &m.pfi_ratio,
                    _ => &m.sfimp,
                };
                rows.push(vec![
                    i.to_string(),
                    m.model.clone(),
                    measure.to_string(),
                    g17(v[0]),
                    g17(v[1]),
                    g17(v[2]),
                ]);
            }
        }
    }
    let mut buf = Vec::new();
    write_table(&mut buf, &["rep", "model", "measure", "x1", "x2", "x3"], &rows)?;
    Ok(buf)
}

/// Single-run breakdown CSV of study 2.
pub fn sim2_breakdown_csv(r: &Sim2Report) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = r
        .breakdown
        .iter()
        .map(|b| {
            let mut row = vec![
                b.model.clone(),
                g17(b.mse),
                g17(b.sfimp[0]),
                g17(b.sfimp[1]),
                g17(b.sfimp[2]),
                g17(b.sfimp_total),
            ];
            match b.proportion {
                Some(p) => row.extend(p.iter().map(|v| g17(*v))),
                None => row.extend(["".to_string(), "".to_string(), "".to_string()]),
            }
            row
        })
        .collect();
    let mut buf = Vec::new();
    write_table(
        &mut buf,
        &[
            "model",
            "mse",
            "sfimp_x1",
            "sfimp_x2",
            "sfimp_x3",
            "sfimp_total",
            "prop_x1",
            "prop_x2",
            "prop_x3",
        ],
        &rows,
    )?;
    Ok(buf)
}
