use rand::Rng;

use lowswitch::function_class::{ConfidenceParams, Covariate, FunctionClass, SubsampledDataset};
use lowswitch::seed::seeded_rng;
use lowswitch::subsampler::{decide, maybe_add, round_to_reciprocal, SamplerConfig, SamplerMode};

fn sampler(constant: f64, total_steps: u64, log_net: f64) -> SamplerConfig {
    SamplerConfig {
        constant,
        delta: 0.1,
        total_steps,
        log_net,
        mode: SamplerMode::ModelFree,
        always_accept: false,
    }
}

fn stream(n: usize, seed: u64) -> Vec<Covariate> {
    let mut rng = seeded_rng(seed);
    let weights = [0.6, 0.3, 0.1];
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let s = if u < weights[0] {
                0
            } else if u < weights[0] + weights[1] {
                1
            } else {
                2
            };
            Covariate::model_free(s, 0)
        })
        .collect()
}

#[test]
fn empty_dataset_accepts_with_probability_one() {
    let class = FunctionClass::tabular(3, 1, 2.0);
    let params = ConfidenceParams::new(1.0, 1e6, 0.1).unwrap();
    // Empty data gives sensitivity 1, so C·log_net ≥ 1 forces acceptance.
    let cfg = sampler(1.0, 1000, 1.0);
    for seed in 0..20 {
        let mut d = SubsampledDataset::new();
        let dec = maybe_add(
            &mut d,
            &Covariate::model_free(1, 0),
            &class,
            &params,
            &cfg,
            &mut seeded_rng(seed),
        )
        .unwrap();
        assert_eq!(dec.probability, 1.0);
        assert!(dec.accepted);
        assert_eq!(dec.copies, 1);
    }
}

#[test]
fn accepted_copies_invert_the_probability_and_data_only_grows() {
    let class = FunctionClass::tabular(3, 1, 2.0);
    let params = ConfidenceParams::new(0.5, 1e6, 0.1).unwrap();
    let cfg = sampler(0.05, 10_000, 3.0);
    let mut rng = seeded_rng(3);
    let mut d = SubsampledDataset::new();
    let mut accepted = 0;
    for z in stream(3000, 4) {
        let before: Vec<u64> = (0..3).map(|s| d.multiplicity(&Covariate::model_free(s, 0))).collect();
        let mass = d.total_mass();
        let dec = maybe_add(&mut d, &z, &class, &params, &cfg, &mut rng).unwrap();
        let (p, m) = round_to_reciprocal(dec.probability).unwrap();
        assert_eq!(p, dec.probability);
        if dec.accepted {
            accepted += 1;
            assert_eq!(dec.copies, m);
            assert!((dec.probability * dec.copies as f64 - 1.0).abs() < 1e-12);
            assert_eq!(d.total_mass(), mass + m);
        } else {
            assert_eq!(dec.copies, 0);
            assert_eq!(d.total_mass(), mass);
        }
        for (s, &m) in before.iter().enumerate() {
            assert!(d.multiplicity(&Covariate::model_free(s, 0)) >= m);
        }
    }
    assert!(accepted > 0 && accepted < 3000, "accepted {accepted}");
}

#[test]
fn subsampled_norm_is_unbiased() {
    let class = FunctionClass::tabular(3, 1, 2.0);
    let params = ConfidenceParams::new(0.5, 1e6, 0.1).unwrap();
    let cfg = sampler(0.05, 10_000, 3.0);
    let points = stream(400, 8);
    let f = |z: &Covariate| [0.7, -1.2, 1.9][z.state()];
    let full = SubsampledDataset::from_points(points.iter().cloned()).sq_norm(f);

    let reps = 4000;
    let mut rng = seeded_rng(9);
    let norms: Vec<f64> = (0..reps)
        .map(|_| {
            let mut d = SubsampledDataset::new();
            for z in &points {
                maybe_add(&mut d, z, &class, &params, &cfg, &mut rng).unwrap();
            }
            d.sq_norm(f)
        })
        .collect();
    let mean = norms.iter().sum::<f64>() / reps as f64;
    let sd = (norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!(sd > 0.0);
    assert!(
        (mean - full).abs() <= 4.0 * sd / (reps as f64).sqrt(),
        "mean {mean}, full {full}, sd {sd}"
    );
}

#[test]
fn decisions_are_reproducible() {
    let cfg = sampler(1.0, 100, 1.0);
    let a: Vec<_> = {
        let mut rng = seeded_rng(12);
        (0..100)
            .map(|i| decide(&cfg, i as f64 / 200.0, &mut rng).unwrap())
            .collect()
    };
    let b: Vec<_> = {
        let mut rng = seeded_rng(12);
        (0..100)
            .map(|i| decide(&cfg, i as f64 / 200.0, &mut rng).unwrap())
            .collect()
    };
    assert_eq!(a, b);
}

#[test]
fn probability_mass_grows_logarithmically() {
    let class = FunctionClass::tabular(3, 1, 2.0);
    let params = ConfidenceParams::new(1.0, 1e9, 0.1).unwrap();
    let horizon = 1 << 16;
    let (constant, log_net, cells) = (0.05, 4.0, 3.0);
    let cfg = sampler(constant, horizon as u64, log_net);
    let mut rng = seeded_rng(21);
    let mut d = SubsampledDataset::new();
    let mut sum = 0.0;
    let mut at_doublings = Vec::new();
    for (t, z) in stream(horizon, 22).iter().enumerate() {
        sum += maybe_add(&mut d, z, &class, &params, &cfg, &mut rng)
            .unwrap()
            .probability;
        if (t + 1).is_power_of_two() && t + 1 >= 1 << 8 {
            at_doublings.push(sum);
        }
    }
    // Once every cell is well populated, a doubling adds about C·log_net·ln 2
    // per cell; rounding up to a reciprocal at most doubles each probability.
    let increments: Vec<f64> = at_doublings.windows(2).map(|w| w[1] - w[0]).collect();
    let per_doubling = 4.0 * constant * log_net * cells * 2f64.ln();
    for &inc in &increments[increments.len() / 2..] {
        assert!(inc > 0.0 && inc <= per_doubling, "increments {increments:?}");
    }
    assert!(sum <= 0.01 * horizon as f64, "sum {sum}");
}
