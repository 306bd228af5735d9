//! Online sensitivity sub-sampling.
//!
//! Each arrival `z` is kept with probability `p_z ≥ min{1, C·sensitivity(z)·log_net}`
//! rounded up to a reciprocal integer, and is then inserted with `1/p_z`
//! copies so the weighted dataset norm is unbiased.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::function_class::{snap_to_net, ClassError, ConfidenceParams, Covariate, FunctionClass, SubsampledDataset};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("probability must lie in (0, 1], got {0}")]
    Probability(f64),
    #[error("invalid sampler config: {0}")]
    Config(String),
    #[error(transparent)]
    Class(#[from] ClassError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    ModelFree,
    ModelBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Multiplier `C` on the sensitivity.
    pub constant: f64,
    pub delta: f64,
    /// `T = K·H`.
    pub total_steps: u64,
    /// `log(T·N(F, √(δ/(64T³)))/δ)`.
    pub log_net: f64,
    pub mode: SamplerMode,
    /// Keep every arrival with one copy (`p ≡ 1`).
    #[serde(default)]
    pub always_accept: bool,
}

impl SamplerConfig {
    /// Builds the config with `log_net` from the class's analytic cover bound.
    pub fn new(
        constant: f64,
        delta: f64,
        total_steps: u64,
        class: &FunctionClass,
        mode: SamplerMode,
    ) -> Result<Self, SamplerError> {
        let t = total_steps as f64;
        let eps = (delta / (64.0 * t.powi(3))).sqrt();
        let log_net = (t.ln() + class.log_cover_size(eps) + (1.0 / delta).ln()).max(0.0);
        let cfg = Self {
            constant,
            delta,
            total_steps,
            log_net,
            mode,
            always_accept: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if !(self.constant > 0.0) {
            return Err(SamplerError::Config(format!(
                "C must be positive, got {}",
                self.constant
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SamplerError::Config(format!("δ must lie in (0,1), got {}", self.delta)));
        }
        if self.total_steps == 0 {
            return Err(SamplerError::Config("T must be at least 1".into()));
        }
        if !(self.log_net >= 0.0) {
            return Err(SamplerError::Config(format!(
                "log_net must be nonnegative, got {}",
                self.log_net
            )));
        }
        Ok(())
    }

    /// Smallest admissible raw probability, `1/T²`.
    pub fn floor(&self) -> f64 {
        1.0 / (self.total_steps as f64).powi(2)
    }

    /// `max{min{1, C·s·log_net}, 1/T²}`.
    pub fn raw_probability(&self, sensitivity: f64) -> f64 {
        if self.always_accept {
            return 1.0;
        }
        (self.constant * sensitivity * self.log_net).min(1.0).max(self.floor())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDecision {
    pub probability: f64,
    pub accepted: bool,
    pub copies: u64,
}

/// Rounds `x ∈ (0, 1]` up to the nearest `1/m`, returning `(1/m, m)`.
pub fn round_to_reciprocal(x: f64) -> Result<(f64, u64), SamplerError> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(SamplerError::Probability(x));
    }
    let mut m = (1.0 / x).floor().max(1.0) as u64;
    // Guard against 1/x landing just below an integer after rounding.
    if 1.0 / ((m + 1) as f64) >= x {
        m += 1;
    }
    while m > 1 && 1.0 / (m as f64) < x {
        m -= 1;
    }
    Ok((1.0 / m as f64, m))
}

/// Coin flip for a precomputed sensitivity. Consumes exactly one uniform draw.
pub fn decide<R: Rng + ?Sized>(
    cfg: &SamplerConfig,
    sensitivity: f64,
    rng: &mut R,
) -> Result<SampleDecision, SamplerError> {
    let (p, m) = round_to_reciprocal(cfg.raw_probability(sensitivity))?;
    let u: f64 = rng.gen();
    let accepted = u < p;
    Ok(SampleDecision {
        probability: p,
        accepted,
        copies: if accepted { m } else { 0 },
    })
}

/// Scores `z` against `dataset`, flips the coin and inserts on success.
pub fn maybe_add<R: Rng + ?Sized>(
    dataset: &mut SubsampledDataset,
    z: &Covariate,
    class: &FunctionClass,
    params: &ConfidenceParams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SampleDecision, SamplerError> {
    let z = match cfg.mode {
        SamplerMode::ModelFree => snap_to_net(z, cfg.floor()),
        SamplerMode::ModelBased => z.clone(),
    };
    let s = if cfg.always_accept {
        1.0
    } else {
        class.sensitivity(dataset, params, &z)?
    };
    let decision = decide(cfg, s, rng)?;
    if decision.accepted {
        dataset.insert(z, decision.copies);
    }
    Ok(decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reciprocal_examples() {
        assert_eq!(round_to_reciprocal(0.3).unwrap(), (1.0 / 3.0, 3));
        assert_eq!(round_to_reciprocal(1.0).unwrap(), (1.0, 1));
        assert_eq!(round_to_reciprocal(0.5).unwrap(), (0.5, 2));
        assert_eq!(round_to_reciprocal(1.0 / 3.0).unwrap().1, 3);
        assert!(round_to_reciprocal(0.0).is_err());
        assert!(round_to_reciprocal(1.5).is_err());
    }

    #[test]
    fn reciprocal_is_smallest_above() {
        for i in 1..2000 {
            let x = i as f64 / 2000.0;
            let (p, m) = round_to_reciprocal(x).unwrap();
            assert!(p >= x);
            assert!(1.0 / ((m + 1) as f64) < x);
        }
    }

    fn cfg() -> SamplerConfig {
        SamplerConfig {
            constant: 1.0,
            delta: 0.1,
            total_steps: 100,
            log_net: 1.0,
            mode: SamplerMode::ModelFree,
            always_accept: false,
        }
    }

    #[test]
    fn empty_dataset_always_inserts() {
        let class = FunctionClass::tabular(2, 2, 2.0);
        let params = ConfidenceParams::new(1.0, 1e6, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = SubsampledDataset::new();
        let z = Covariate::model_free(0, 1);
        let dec = maybe_add(&mut d, &z, &class, &params, &cfg(), &mut rng).unwrap();
        assert_eq!(
            dec,
            SampleDecision {
                probability: 1.0,
                accepted: true,
                copies: 1
            }
        );
        assert_eq!(d.multiplicity(&z), 1);
    }

    #[test]
    fn floor_bounds_multiplicity() {
        let c = cfg();
        let (p, m) = round_to_reciprocal(c.raw_probability(0.0)).unwrap();
        assert_eq!(m, 10_000);
        assert_eq!(p, 1e-4);
    }

    #[test]
    fn expected_added_mass_is_one() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut total = 0u64;
        for _ in 0..n {
            total += decide(&c, 0.3, &mut rng).unwrap().copies;
        }
        // Copies are 3 w.p. 1/3: variance 2 per trial.
        let mean = total as f64 / n as f64;
        let se = (2.0 / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn log_net_uses_cover_bound() {
        let class = FunctionClass::tabular(1, 1, 2.0);
        let c = SamplerConfig::new(1.0, 0.1, 10, &class, SamplerMode::ModelFree).unwrap();
        let eps = (0.1f64 / 64_000.0).sqrt();
        let expected = 10f64.ln() + (1.0 + 1.0 / eps).ln() + 10f64.ln();
        assert!((c.log_net - expected).abs() < 1e-12);
        assert!(SamplerConfig::new(0.0, 0.1, 10, &class, SamplerMode::ModelFree).is_err());
    }
}
