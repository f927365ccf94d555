//! Benchmark reports: per-replicate rows, per-cell summaries and scaling fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// One estimator run on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub suite: String,
    /// Position of the cell in the suite grid.
    pub cell: usize,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub o: usize,
    pub covariate_law: String,
    pub contamination: String,
    pub estimator: String,
    /// Empty when the run errored.
    pub l2_error: Option<f64>,
    /// The weight stage certified success (always true for the baselines).
    pub success: bool,
    pub wall_time: f64,
    pub error: Option<String>,
}

pub fn rows_to_csv(rows: &[ReplicateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Config(format!("cannot serialize row: {e}")))?;
    }
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

const CSV_COLUMNS: [&str; 14] = [
    "suite",
    "cell",
    "seed",
    "n",
    "d",
    "s",
    "o",
    "covariate_law",
    "contamination",
    "estimator",
    "l2_error",
    "success",
    "wall_time",
    "error",
];

pub fn rows_from_csv(text: &str) -> Result<Vec<ReplicateRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::parse("<report>", line, e.to_string())
            })
        })
        .collect()
}

/// Least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// `None` for fewer than two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let k = xs.len();
    if k != ys.len() || k < 2 {
        return None;
    }
    let kf = k as f64;
    let mx = xs.iter().sum::<f64>() / kf;
    let my = ys.iter().sum::<f64>() / kf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
        points: k,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub estimator: String,
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub o: usize,
    pub covariate_law: String,
    pub contamination: String,
    pub replicates: usize,
    pub errored: usize,
    pub median_l2_error: Option<f64>,
    pub success_rate: f64,
}

/// A scaling fit over the cells of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub covariate_law: String,
    pub contamination: String,
    pub estimator: String,
    pub fit: LineFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suite: String,
    pub cells: Vec<CellSummary>,
    /// log median error against log n, for groups with at least four `n`.
    pub n_slopes: Vec<ScalingFit>,
    /// Median error against `√(o/n)`, for groups with at least four `o`.
    pub o_fits: Vec<ScalingFit>,
}

pub const MIN_FIT_CELLS: usize = 4;

pub fn summarize(suite: &str, rows: &[ReplicateRow]) -> Summary {
    let mut groups: BTreeMap<(usize, &str), Vec<&ReplicateRow>> = BTreeMap::new();
    for row in rows {
        groups.entry((row.cell, row.estimator.as_str())).or_default().push(row);
    }
    let cells: Vec<CellSummary> = groups
        .values()
        .map(|g| {
            let first = g[0];
            let errors: Vec<f64> = g.iter().filter_map(|r| r.l2_error).collect();
            CellSummary {
                cell: first.cell,
                estimator: first.estimator.clone(),
                n: first.n,
                d: first.d,
                s: first.s,
                o: first.o,
                covariate_law: first.covariate_law.clone(),
                contamination: first.contamination.clone(),
                replicates: g.len(),
                errored: g.iter().filter(|r| r.error.is_some()).count(),
                median_l2_error: median(&errors),
                success_rate: g.iter().filter(|r| r.success).count() as f64 / g.len() as f64,
            }
        })
        .collect();

    // Cells that differ only in n (resp. o) form a scaling group.
    let fits = |vary_n: bool| -> Vec<ScalingFit> {
        let mut by_group: BTreeMap<(String, String, String, usize, usize), Vec<&CellSummary>> = BTreeMap::new();
        for c in &cells {
            let fixed = if vary_n { c.o } else { c.n };
            let key = (
                c.covariate_law.clone(),
                c.contamination.clone(),
                c.estimator.clone(),
                c.d,
                fixed,
            );
            by_group.entry(key).or_default().push(c);
        }
        by_group
            .into_iter()
            .filter_map(|((law, contamination, estimator, _, _), cs)| {
                let pts: Vec<(f64, f64)> = cs
                    .iter()
                    .filter_map(|c| {
                        let m = c.median_l2_error?;
                        if vary_n {
                            (m > 0.0).then(|| ((c.n as f64).ln(), m.ln()))
                        } else {
                            Some(((c.o as f64 / c.n as f64).sqrt(), m))
                        }
                    })
                    .collect();
                let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup();
                if distinct.len() < MIN_FIT_CELLS {
                    return None;
                }
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                Some(ScalingFit {
                    covariate_law: law,
                    contamination,
                    estimator,
                    fit: fit_line(&xs, &ys)?,
                })
            })
            .collect()
    };
    Summary {
        suite: suite.to_owned(),
        n_slopes: fits(true),
        o_fits: fits(false),
        cells,
    }
}

/// Plot-ready long format: one metric per line.
pub fn long_format_csv(summary: &Summary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record([
        "suite",
        "cell",
        "estimator",
        "covariate_law",
        "contamination",
        "n",
        "d",
        "s",
        "o",
        "metric",
        "value",
    ])
    .map_err(err)?;
    for c in &summary.cells {
        let metrics = [
            ("median_l2_error", c.median_l2_error),
            ("success_rate", Some(c.success_rate)),
            ("errored", Some(c.errored as f64)),
        ];
        for (metric, value) in metrics {
            w.write_record([
                summary.suite.clone(),
                c.cell.to_string(),
                c.estimator.clone(),
                c.covariate_law.clone(),
                c.contamination.clone(),
                c.n.to_string(),
                c.d.to_string(),
                c.s.to_string(),
                c.o.to_string(),
                metric.to_owned(),
                value.map_or(String::new(), |v| format!("{v:?}")),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cell: usize, n: usize, o: usize, err: f64) -> ReplicateRow {
        ReplicateRow {
            suite: "t".into(),
            cell,
            seed: 1,
            n,
            d: 10,
            s: 2,
            o,
            covariate_law: "gaussian".into(),
            contamination: "leverage".into(),
            estimator: "robust".into(),
            l2_error: Some(err),
            success: true,
            wall_time: 0.25,
            error: None,
        }
    }

    #[test]
    fn exact_line_is_recovered() {
        let f = fit_line(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn power_law_gives_its_exponent() {
        let rows: Vec<_> = [1000usize, 2000, 4000, 8000]
            .iter()
            .enumerate()
            .map(|(c, &n)| row(c, n, 0, 3.0 / (n as f64).sqrt()))
            .collect();
        let s = summarize("t", &rows);
        assert_eq!(s.n_slopes.len(), 1);
        assert!((s.n_slopes[0].fit.slope + 0.5).abs() < 1e-12);
        assert!(s.o_fits.is_empty());
    }

    #[test]
    fn o_fit_uses_root_contamination_fraction() {
        let rows: Vec<_> = [0usize, 20, 50, 100]
            .iter()
            .enumerate()
            .map(|(c, &o)| row(c, 2000, o, 0.1 + 2.0 * (o as f64 / 2000.0).sqrt()))
            .collect();
        let s = summarize("t", &rows);
        assert_eq!(s.o_fits.len(), 1);
        assert!((s.o_fits[0].fit.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn median_handles_even_and_odd_lengths() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn failed_rows_round_trip() {
        let mut r = row(0, 10, 0, 0.0);
        r.l2_error = None;
        r.success = false;
        r.error = Some("matrix is not positive definite, really".into());
        let back = rows_from_csv(&rows_to_csv(&[r.clone()]).unwrap()).unwrap();
        assert_eq!(back, vec![r]);
    }
}
