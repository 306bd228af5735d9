use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stats::{line_fit, median, LineFit};
use crate::agent::RunLog;

#[derive(Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("need at least 2 distinct episode counts, got {0}")]
    InsufficientData(usize),
}

/// Medians over seeds at one episode count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub episodes: usize,
    pub runs: usize,
    pub median_switch_ds: f64,
    pub median_switch_pi: f64,
    pub median_regret: f64,
    pub median_bonus_sum: f64,
    /// Per-bucket median of the gap-interval histogram.
    pub median_histogram: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub points: Vec<KPoint>,
    /// Median dataset-change switches against `(ln K)²`.
    pub switch_fit: LineFit,
    /// Median regret against `ln K`.
    pub regret_log_fit: LineFit,
    /// Median regret against `(ln K)⁴`.
    pub regret_log4_fit: LineFit,
    /// Median regret against `√K`.
    pub regret_sqrt_fit: LineFit,
    /// Every run of this variant had zero regret.
    pub zero_regret: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config_hash: String,
    pub variants: Vec<VariantSummary>,
    /// `<variant>_K<episodes>_seed<seed>` of every run with zero regret.
    pub zero_regret_runs: Vec<String>,
}

pub fn summarize(logs: &[RunLog]) -> Result<SweepSummary, SummaryError> {
    let mut by_variant: BTreeMap<&str, BTreeMap<usize, Vec<&RunLog>>> = BTreeMap::new();
    for log in logs {
        by_variant
            .entry(log.summary.variant.as_str())
            .or_default()
            .entry(log.summary.episodes)
            .or_default()
            .push(log);
    }
    let distinct_k = by_variant.values().map(BTreeMap::len).max().unwrap_or(0);
    if distinct_k < 2 {
        return Err(SummaryError::InsufficientData(distinct_k));
    }
    let mut variants = Vec::new();
    for (variant, per_k) in &by_variant {
        let mut points = Vec::new();
        for (&k, runs) in per_k {
            let pick = |f: &dyn Fn(&RunLog) -> f64| median(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let buckets = runs
                .iter()
                .map(|r| r.summary.gap_histogram.counts.len())
                .max()
                .unwrap_or(0);
            let median_histogram = (0..buckets)
                .map(|b| pick(&|r: &RunLog| r.summary.gap_histogram.counts.get(b).copied().unwrap_or(0) as f64))
                .collect();
            points.push(KPoint {
                episodes: k,
                runs: runs.len(),
                median_switch_ds: pick(&|r: &RunLog| r.summary.n_switch_ds as f64),
                median_switch_pi: pick(&|r: &RunLog| r.summary.n_switch_pi as f64),
                median_regret: pick(&|r: &RunLog| r.summary.final_regret),
                median_bonus_sum: pick(&|r: &RunLog| r.summary.bonus_sum),
                median_histogram,
            });
        }
        let ln_k: Vec<f64> = points.iter().map(|p| (p.episodes as f64).ln()).collect();
        let sq = |p: i32| ln_k.iter().map(|x| x.powi(p)).collect::<Vec<_>>();
        let sqrt_k: Vec<f64> = points.iter().map(|p| (p.episodes as f64).sqrt()).collect();
        let switches: Vec<f64> = points.iter().map(|p| p.median_switch_ds).collect();
        let regret: Vec<f64> = points.iter().map(|p| p.median_regret).collect();
        let zero_regret = per_k.values().flatten().all(|r| r.summary.final_regret == 0.0);
        variants.push(VariantSummary {
            variant: variant.to_string(),
            switch_fit: line_fit(&sq(2), &switches),
            regret_log_fit: line_fit(&ln_k, &regret),
            regret_log4_fit: line_fit(&sq(4), &regret),
            regret_sqrt_fit: line_fit(&sqrt_k, &regret),
            points,
            zero_regret,
        });
    }
    let zero_regret_runs = logs
        .iter()
        .filter(|r| r.summary.final_regret == 0.0)
        .map(super::runlog::run_stem)
        .collect();
    Ok(SweepSummary {
        config_hash: logs.first().map(|l| l.config_hash.clone()).unwrap_or_default(),
        variants,
        zero_regret_runs,
    })
}
