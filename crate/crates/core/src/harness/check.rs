//! A fast oracle and property suite driven by the `check` command.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::envs::{chain, random_mdp};
use super::runlog::csv_string;
use crate::agent::{self, AgentConfig, BetaSchedule, Environment};
use crate::function_class::{
    brute_force_sensitivity, brute_force_width, ConfidenceParams, Covariate, FunctionClass, LinearClass,
    SubsampledDataset,
};
use crate::mdp::exact_q_star;
use crate::oracle::{brute_force_policy_values, eluder_dimension_estimate, sandwich_check};
use crate::seed::seeded_rng;
use crate::subsampler::{decide, SamplerConfig, SamplerMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn result(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail,
    }
}

fn q_star_matches_enumeration(budget: u64) -> CheckResult {
    let mut rng = seeded_rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n_s = rng.gen_range(1..=3);
        let n_a = rng.gen_range(1..=3);
        let h = rng.gen_range(1..=3);
        let mdp = random_mdp(n_s, n_a, h, &mut rng);
        match brute_force_policy_values(&mdp, budget) {
            Ok(table) => worst = worst.max((table.max() - exact_q_star(&mdp).v(0, 0)).abs()),
            Err(e) => return result("q_star_vs_enumeration", false, e.to_string()),
        }
    }
    result(
        "q_star_vs_enumeration",
        worst <= 1e-10,
        format!("max error {worst:.3e}"),
    )
}

fn widths_match_grid() -> CheckResult {
    let mut rng = seeded_rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let class = FunctionClass::tabular(2, 2, 3.0);
        let mut d = SubsampledDataset::new();
        for s in 0..2 {
            for a in 0..2 {
                d.insert(Covariate::model_free(s, a), rng.gen_range(0..6));
            }
        }
        let params = ConfidenceParams::new(rng.gen_range(0.1..4.0), 1e9, 0.1).expect("valid params");
        let z = Covariate::model_free(rng.gen_range(0..2), rng.gen_range(0..2));
        let pairs = [
            (class.width(&d, &params, &z), brute_force_width(&class, &d, &params, &z)),
            (
                class.sensitivity(&d, &params, &z),
                brute_force_sensitivity(&class, &d, &params, &z),
            ),
        ];
        for (a, b) in pairs {
            match (a, b) {
                (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
                _ => return result("tabular_closed_forms", false, "oracle error".into()),
            }
        }
    }
    let class = FunctionClass::Linear(LinearClass::from_table(
        2,
        1,
        vec![vec![1.0, 0.3], vec![-0.2, 0.9]],
        1.5,
    ));
    let mut d = SubsampledDataset::new();
    d.insert(Covariate::model_free(0, 0), 3);
    let params = ConfidenceParams::new(0.5, 1e9, 0.1).expect("valid params");
    let z = Covariate::model_free(1, 0);
    match (class.width(&d, &params, &z), brute_force_width(&class, &d, &params, &z)) {
        (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
        _ => return result("tabular_closed_forms", false, "oracle error".into()),
    }
    result("closed_forms_vs_grid", worst <= 5e-3, format!("max error {worst:.3e}"))
}

fn sampler_is_unbiased() -> CheckResult {
    let cfg = SamplerConfig {
        constant: 1.0,
        delta: 0.1,
        total_steps: 1000,
        log_net: 1.0,
        mode: SamplerMode::ModelFree,
        always_accept: false,
    };
    let mut rng = seeded_rng(3);
    let n = 20_000;
    let mut total = 0u64;
    for _ in 0..n {
        total += decide(&cfg, 0.3, &mut rng).map(|d| d.copies).unwrap_or(u64::MAX / 2);
    }
    let mean = total as f64 / n as f64;
    let se = (2.0 / n as f64).sqrt();
    result(
        "sampler_unbiased",
        (mean - 1.0).abs() <= 3.0 * se,
        format!("mean copies {mean:.4}"),
    )
}

fn eluder_tabular() -> CheckResult {
    let class = FunctionClass::tabular(3, 2, 2.0);
    let pool: Vec<Covariate> = (0..3)
        .flat_map(|s| (0..2).map(move |a| Covariate::model_free(s, a)))
        .collect();
    let pool: Vec<Covariate> = pool.iter().chain(pool.iter()).cloned().collect();
    match eluder_dimension_estimate(&class, 0.1, &pool, 1000) {
        Ok(e) => result("eluder_tabular", e.len() == 6, format!("length {}", e.len())),
        Err(e) => result("eluder_tabular", false, e.to_string()),
    }
}

fn sandwich_with_full_sampler(budget: u64) -> CheckResult {
    let class = FunctionClass::tabular(2, 2, 2.0);
    let mut d = SubsampledDataset::new();
    d.insert(Covariate::model_free(0, 0), 3);
    d.insert(Covariate::model_free(1, 1), 1);
    let params = ConfidenceParams::new(1.0, 1e6, 0.1).expect("valid params");
    match sandwich_check(&class, &d, &d, &params, 0.5, budget, &[Covariate::model_free(0, 0)]) {
        Ok(r) => result(
            "sandwich_identical_sets",
            r.holds() && r.bounds_ordered(),
            format!("{} pairs, {} violations", r.pairs_checked, r.violations.len()),
        ),
        Err(e) => result("sandwich_identical_sets", false, e.to_string()),
    }
}

fn runs_are_deterministic() -> CheckResult {
    let env = Environment::Tabular(std::sync::Arc::new(chain(3, 2, 0.3).expect("valid chain")));
    let mut cfg = AgentConfig::model_free(64, BetaSchedule::Fixed { value: 1.0 });
    cfg.seed = 9;
    let a = agent::run(cfg.clone(), env.clone()).map(|l| csv_string(&l.records));
    let b = agent::run(cfg, env).map(|l| csv_string(&l.records));
    match (a, b) {
        (Ok(a), Ok(b)) => result("deterministic_runs", a == b, format!("{} bytes", a.len())),
        _ => result("deterministic_runs", false, "agent error".into()),
    }
}

pub fn run_check_suite(budget: u64) -> CheckReport {
    CheckReport {
        checks: vec![
            q_star_matches_enumeration(budget),
            widths_match_grid(),
            sampler_is_unbiased(),
            eluder_tabular(),
            sandwich_with_full_sampler(budget),
            runs_are_deterministic(),
        ],
    }
}
