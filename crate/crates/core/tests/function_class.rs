use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use lowswitch::function_class::{
    brute_force_width, least_squares_fit, snap_to_net, ConfidenceParams, Covariate, Fitted, FunctionClass, LinearClass,
    RegressionDataset, SubsampledDataset,
};
use lowswitch::harness::random_mdp;
use lowswitch::seed::seeded_rng;

fn params(beta: f64) -> ConfidenceParams {
    ConfidenceParams::new(beta, 1e12, 0.1).unwrap()
}

fn cell(s: usize, a: usize) -> Covariate {
    Covariate::model_free(s, a)
}

#[test]
fn tabular_fit_is_the_cell_mean() {
    let class = FunctionClass::tabular(2, 1, 4.0);
    let mut d = RegressionDataset::new();
    d.push(cell(0, 0), 1.0);
    d.push(cell(0, 0), 3.0);
    let f = least_squares_fit(&class, &d).unwrap();
    assert_eq!(f.eval(&class, &cell(0, 0)).unwrap(), 2.0);
    // Unvisited cells sit at the midpoint of the range.
    assert_eq!(f.eval(&class, &cell(1, 0)).unwrap(), 2.0);
}

#[test]
fn scalar_linear_fit() {
    let class = FunctionClass::Linear(LinearClass::from_table(1, 1, vec![vec![1.0]], 10.0));
    let mut d = RegressionDataset::new();
    d.push(cell(0, 0), 2.0);
    d.push(cell(0, 0), 4.0);
    let Fitted::Linear { theta } = class.fit(&d).unwrap() else {
        panic!("linear fit")
    };
    assert!((theta[0] - 3.0).abs() < 1e-6);
}

#[test]
fn noiseless_linear_fit_matches_normal_equations() {
    let mut rng = seeded_rng(31);
    let n = 50;
    let feats: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let theta_star = DVector::from_vec(vec![0.3, -0.7, 0.5]);
    let class = FunctionClass::Linear(LinearClass::from_table(n, 1, feats.clone(), 5.0));
    let mut d = RegressionDataset::new();
    for (s, f) in feats.iter().enumerate() {
        d.push(cell(s, 0), DVector::from_vec(f.clone()).dot(&theta_star));
    }
    let Fitted::Linear { theta } = class.fit(&d).unwrap() else {
        panic!("linear fit")
    };
    assert!((&theta - &theta_star).norm() <= 1e-6);

    let x = DMatrix::from_fn(n, 3, |i, j| feats[i][j]);
    let y = &x * &theta_star;
    let oracle = (x.transpose() * &x).lu().solve(&(x.transpose() * y)).unwrap();
    assert!((&theta - &oracle).norm() <= 1e-6);
}

#[test]
fn fitted_parameters_respect_the_bound() {
    let class = FunctionClass::Linear(LinearClass::from_table(1, 1, vec![vec![1.0, 0.0]], 0.5));
    let mut d = RegressionDataset::new();
    d.push(cell(0, 0), 3.0);
    let Fitted::Linear { theta } = class.fit(&d).unwrap() else {
        panic!("linear fit")
    };
    assert!(theta.norm() <= 0.5 + 1e-12);
}

#[test]
fn tabular_width_examples() {
    let class = FunctionClass::tabular(2, 1, 2.0);
    let empty = SubsampledDataset::new();
    for beta in [0.01, 1.0, 100.0] {
        assert_eq!(class.width(&empty, &params(beta), &cell(0, 0)).unwrap(), 2.0);
    }
    let mut d = SubsampledDataset::new();
    d.insert(cell(0, 0), 4);
    let w = class.width(&d, &params(1.0), &cell(0, 0)).unwrap();
    assert!((w - 0.5).abs() < 1e-12);
    assert!((brute_force_width(&class, &d, &params(1.0), &cell(0, 0)).unwrap() - w).abs() <= 5e-3);
}

#[test]
fn linear_width_on_a_diagonal_gram() {
    let class = FunctionClass::Linear(LinearClass::from_table(2, 1, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1e6));
    let mut d = SubsampledDataset::new();
    d.insert(cell(0, 0), 4);
    d.insert(cell(1, 0), 1);
    // Pairs with (θ₁ − θ₂)ᵀΛ(θ₁ − θ₂) ≤ β disagree by at most √β·‖φ‖_{Λ⁻¹}.
    let w = class.width(&d, &params(1.0), &cell(0, 0)).unwrap();
    assert!((w - 0.5).abs() < 1e-6, "{w}");
    let bf = brute_force_width(&class, &d, &params(1.0), &cell(0, 0)).unwrap();
    assert!((w - bf).abs() < 1e-6);
}

#[test]
fn sensitivity_examples() {
    let class = FunctionClass::tabular(1, 1, 2.0);
    let empty = SubsampledDataset::new();
    assert_eq!(class.sensitivity(&empty, &params(1.0), &cell(0, 0)).unwrap(), 1.0);
    let mut d = SubsampledDataset::new();
    d.insert(cell(0, 0), 100);
    let s = class.sensitivity(&d, &params(1.0), &cell(0, 0)).unwrap();
    assert!((s - 4.0 / 401.0).abs() < 1e-12);
}

#[test]
fn tabular_cover_examples() {
    let one = FunctionClass::tabular(1, 1, 2.0);
    let net = one.cover(0.5, 1000).unwrap();
    let values: Vec<f64> = net.iter().map(|f| f.eval(&one, &cell(0, 0)).unwrap()).collect();
    assert_eq!(values, vec![0.0, 1.0, 2.0]);

    let six = FunctionClass::tabular(3, 2, 2.0);
    let analytic = six.log_cover_size(0.5);
    assert!((analytic - 6.0 * 3f64.ln()).abs() < 1e-12);
    let enumerated = six.cover(0.5, 1_000_000).unwrap().len() as f64;
    assert!((enumerated.ln() - analytic).abs() < 1e-9);
}

#[test]
fn covers_contain_every_sampled_member() {
    let mut rng = seeded_rng(41);
    let tab = FunctionClass::tabular(2, 2, 2.0);
    let eps = 0.3;
    let net = tab.cover(eps, 1_000_000).unwrap();
    let cells: Vec<Covariate> = (0..4).map(|c| cell(c / 2, c % 2)).collect();
    let evals: Vec<Vec<f64>> = net
        .iter()
        .map(|f| cells.iter().map(|z| f.eval(&tab, z).unwrap()).collect())
        .collect();
    for _ in 0..1000 {
        let member: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..=2.0)).collect();
        let close = evals
            .iter()
            .any(|e| e.iter().zip(&member).all(|(a, b)| (a - b).abs() <= eps + 1e-12));
        assert!(close);
    }

    let feats = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]];
    let lin = FunctionClass::Linear(LinearClass::from_table(3, 1, feats, 1.0));
    let net = lin.cover(0.2, 1_000_000).unwrap();
    let pts: Vec<Covariate> = (0..3).map(|s| cell(s, 0)).collect();
    for _ in 0..1000 {
        let r: f64 = rng.gen_range(0.0..1.0f64).sqrt();
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let member = Fitted::Linear {
            theta: DVector::from_vec(vec![r * a.cos(), r * a.sin()]),
        };
        let close = net.iter().any(|f| {
            pts.iter()
                .all(|z| (f.eval(&lin, z).unwrap() - member.eval(&lin, z).unwrap()).abs() <= 0.2 + 1e-12)
        });
        assert!(close);
    }
}

#[test]
fn cover_over_budget_is_an_error_but_the_bound_is_not() {
    let class = FunctionClass::tabular(4, 3, 2.0);
    assert!(class.cover(1e-3, 1_000_000).is_err());
    assert!(class.log_cover_size(1e-12).is_finite());
}

#[test]
fn snapping_preserves_norms() {
    let mut d = SubsampledDataset::new();
    d.insert(cell(0, 1), 3);
    d.insert(cell(2, 0), 2);
    let snapped = SubsampledDataset::from_points(
        d.iter()
            .flat_map(|(z, m)| std::iter::repeat_n(snap_to_net(z, 1e-3), m as usize)),
    );
    let f = |z: &Covariate| (z.state() + 2 * z.action()) as f64;
    assert_eq!(d.sq_norm(f), snapped.sq_norm(f));
}

#[test]
fn tabular_backups_stay_in_range() {
    let mut rng = seeded_rng(51);
    let mdp = random_mdp(3, 2, 4, &mut rng);
    let range = mdp.horizon() as f64 + 1.0;
    for _ in 0..100 {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..=mdp.horizon() as f64)).collect();
        for s in 0..3 {
            for a in 0..2 {
                let backup = mdp.reward(0, s, a) + mdp.expect(0, s, a, &v);
                assert!((0.0..=range).contains(&backup));
            }
        }
    }
}

fn tabular_instance() -> impl Strategy<Value = (Vec<u64>, f64, f64, usize)> {
    (
        prop::collection::vec(0u64..20, 4),
        0.01f64..10.0,
        0.5f64..5.0,
        0usize..4,
    )
}

proptest! {
    #[test]
    fn width_shrinks_with_data_and_grows_with_beta((ms, beta, range, q) in tabular_instance(), extra in 1u64..10) {
        let class = FunctionClass::tabular(2, 2, range);
        let mut d = SubsampledDataset::new();
        for (c, &m) in ms.iter().enumerate() {
            if m > 0 {
                d.insert(cell(c / 2, c % 2), m);
            }
        }
        let z = cell(q / 2, q % 2);
        let w = class.width(&d, &params(beta), &z).unwrap();
        let s = class.sensitivity(&d, &params(beta), &z).unwrap();
        prop_assert!(w >= 0.0 && w <= range + 1e-12);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(class.width(&d, &params(2.0 * beta), &z).unwrap() >= w - 1e-12);
        let mut more = d.clone();
        more.insert(z.clone(), extra);
        prop_assert!(class.width(&more, &params(beta), &z).unwrap() <= w + 1e-12);
        prop_assert!(class.sensitivity(&more, &params(beta), &z).unwrap() <= s + 1e-12);
    }

    #[test]
    fn capped_sensitivity_bound(beta in 0.01f64..10.0, cap in 0.1f64..50.0, range in 0.5f64..5.0) {
        let class = FunctionClass::tabular(1, 1, range);
        let m = (cap / (range * range)).ceil().max(1.0) as u64;
        let mut d = SubsampledDataset::new();
        d.insert(cell(0, 0), m);
        let p = ConfidenceParams::new(beta, cap, 0.1).unwrap();
        let s = class.sensitivity(&d, &p, &cell(0, 0)).unwrap();
        prop_assert!(s <= range * range / (cap + beta) + 1e-12);
    }

    #[test]
    fn dataset_norm_is_a_seminorm(
        ms in prop::collection::vec(1u64..10, 3),
        f in prop::collection::vec(-3.0f64..3.0, 3),
        g in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let d = SubsampledDataset::from_points(
            ms.iter().enumerate().flat_map(|(s, &m)| std::iter::repeat_n(cell(s, 0), m as usize)),
        );
        let norm = |h: &dyn Fn(usize) -> f64| d.sq_norm(|z| h(z.state())).sqrt();
        let nf = norm(&|s| f[s]);
        let ng = norm(&|s| g[s]);
        let nsum = norm(&|s| f[s] + g[s]);
        prop_assert!(nsum <= nf + ng + 1e-9);
        prop_assert!((norm(&|s| -2.0 * f[s]) - 2.0 * nf).abs() <= 1e-9);
        let direct: f64 = ms.iter().zip(&f).map(|(&m, v)| m as f64 * v * v).sum();
        prop_assert!((nf * nf - direct).abs() <= 1e-9);
    }
}
