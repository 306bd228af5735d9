use serde::{Deserialize, Serialize};

use crate::function_class::SubsampledDataset;

/// One row of a run log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub episode: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
    /// Replanned this episode because a sub-sampled dataset changed.
    pub switch_ds: bool,
    /// The deployed policy map differs from the previous episode's.
    pub switch_pi: bool,
    /// `Σ_h` total multiplicity of `Ẑ_h`.
    pub zhat_mass: u64,
    /// Replan wall time; zero unless timing is enabled.
    pub replan_ms: f64,
}

/// Counts of `(k, h)` with suboptimality `V*_h(s) − Q^{π_k}_h(s,a)` in
/// `[2^{n−1}·gap_min, 2^n·gap_min)`, `n = 1..=N`, `N = ⌈log₂(H/gap_min)⌉`.
/// Values at or above the top edge go to the last bucket; positive values
/// below `gap_min` are counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapHistogram {
    /// `None` when the MDP has no positive gap.
    pub gap_min: Option<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
}

/// Suboptimalities at or below this are treated as zero.
pub const SUBOPT_TOL: f64 = 1e-9;

impl GapHistogram {
    pub fn new(gap_min: f64, horizon: usize) -> Self {
        if !gap_min.is_finite() {
            return Self {
                gap_min: None,
                counts: vec![0],
                below: 0,
            };
        }
        let n = ((horizon as f64 / gap_min).log2().ceil() as usize).max(1);
        Self {
            gap_min: Some(gap_min),
            counts: vec![0; n],
            below: 0,
        }
    }

    pub fn record(&mut self, value: f64) {
        if value <= SUBOPT_TOL {
            return;
        }
        let Some(g) = self.gap_min else {
            self.counts[0] += 1;
            return;
        };
        if value < g * (1.0 - 1e-9) {
            self.below += 1;
            return;
        }
        // Bucket n holds [2^{n−1}g, 2^n g); small slack absorbs float noise on edges.
        let n = ((value / g) * (1.0 + 1e-9)).log2().floor() as usize + 1;
        let last = self.counts.len();
        self.counts[n.min(last) - 1] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: String,
    pub episodes: usize,
    pub horizon: usize,
    pub n_switch_ds: u64,
    pub n_switch_pi: u64,
    pub final_regret: f64,
    pub gap_min: Option<f64>,
    pub beta: f64,
    pub log_net: f64,
    /// Fraction of `(k, h, s, a)` with `Q_h^k ≥ Q*_h`.
    pub optimism_fraction: f64,
    /// Steps `(k, h)` whose visited pair had `Q_h^k < Q*_h`.
    pub visited_violations: u64,
    /// `Σ_{k,h} b_h^k(s_h^k, a_h^k)`.
    pub bonus_sum: f64,
    /// `Σ` of inclusion probabilities over all sampler calls.
    pub probability_sum: f64,
    pub gap_histogram: GapHistogram,
    /// Per-step value-targeted regression estimates (model-based only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_hat: Option<Vec<Vec<f64>>>,
    /// Estimate from the data of all steps pooled (model-based only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_hat_pooled: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config_hash: String,
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    pub summary: RunSummary,
    /// Final `Ẑ_h` per step.
    pub datasets: Vec<SubsampledDataset>,
}

impl RunLog {
    pub fn cumulative_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }
}
