use serde::{Deserialize, Serialize};

use super::{Method, ResultRow};

/// NSE statistics of one (method, attribute, rate) cell over its successful runs.
/// The statistics are `None` when every run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub method: Method,
    pub attribute: String,
    pub sampling_rate: f64,
    pub ok: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1 denominator); 0 for a single run.
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// Group rows by (method, attribute, rate). Rows must already be sorted in that
/// order, as [`run_sweep`](super::run_sweep) returns them.
pub fn aggregate(rows: &[ResultRow]) -> Vec<SummaryCell> {
    let mut out: Vec<SummaryCell> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let same = out.last().is_some_and(|c| {
            c.method == row.method
                && c.attribute == row.attribute
                && c.sampling_rate == row.sampling_rate
        });
        if !same {
            out.push(SummaryCell {
                method: row.method,
                attribute: row.attribute.clone(),
                sampling_rate: row.sampling_rate,
                ok: 0,
                failed: 0,
                mean: None,
                std: None,
                min: None,
                max: None,
            });
            values.push(Vec::new());
        }
        let cell = out.last_mut().expect("cell pushed");
        match row.nse {
            Some(v) => {
                cell.ok += 1;
                values.last_mut().expect("cell pushed").push(v);
            }
            None => cell.failed += 1,
        }
    }
    for (cell, v) in out.iter_mut().zip(&values) {
        if v.is_empty() {
            continue;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        cell.mean = Some(mean);
        cell.std = Some(var.sqrt());
        cell.min = v.iter().copied().reduce(f64::min);
        cell.max = v.iter().copied().reduce(f64::max);
    }
    out
}
