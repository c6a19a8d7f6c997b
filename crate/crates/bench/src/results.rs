//! Result rows, their CSV form and per-group summaries.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const CSV_HEADER: &str = "env,planner,budget,seed,return,steps,ms_per_call,max_depth";

/// One episode. `budget` is 0 for baselines, which do no simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub env: String,
    pub planner: String,
    pub budget: usize,
    pub seed: u64,
    #[serde(rename = "return")]
    pub total_return: f64,
    pub steps: usize,
    /// Mean planning wall time per step divided by the budget; for baselines,
    /// per step.
    pub ms_per_call: f64,
    pub max_depth: usize,
}

impl ResultRow {
    fn key(&self) -> (&str, &str, usize, u64) {
        (&self.env, &self.planner, self.budget, self.seed)
    }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| a.key().cmp(&b.key()));
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(BenchError::Config(format!("unexpected CSV header '{}'", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub env: String,
    pub planner: String,
    pub budget: usize,
    pub n: usize,
    pub mean_return: f64,
    pub se_return: f64,
    pub mean_ms_per_call: f64,
    /// Planning time per step, before dividing by the budget.
    pub mean_ms_per_step: f64,
    pub mean_max_depth: f64,
}

/// Sample mean and standard error (`n − 1` denominator).
pub fn mean_se(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, (var / n as f64).sqrt()))
}

/// Groups rows by (env, planner, budget).
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<Summary>> {
    let mut groups: BTreeMap<(&str, &str, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.env, &r.planner, r.budget)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((env, planner, budget), group)| {
            let returns: Vec<f64> = group.iter().map(|r| r.total_return).collect();
            let (mean, se) = mean_se(&returns).ok_or_else(|| BenchError::Aggregation {
                group: format!("{env}/{planner}/{budget}"),
                detail: format!("{} row(s), need at least 2", group.len()),
            })?;
            let n = group.len() as f64;
            let ms: f64 = group.iter().map(|r| r.ms_per_call).sum::<f64>() / n;
            Ok(Summary {
                env: env.to_string(),
                planner: planner.to_string(),
                budget,
                n: group.len(),
                mean_return: mean,
                se_return: se,
                mean_ms_per_call: ms,
                mean_ms_per_step: ms * budget.max(1) as f64,
                mean_max_depth: group.iter().map(|r| r.max_depth as f64).sum::<f64>() / n,
            })
        })
        .collect()
}

pub fn write_summary<W: Write>(summaries: &[Summary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
