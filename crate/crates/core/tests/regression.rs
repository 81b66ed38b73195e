mod common;

use common::*;
use invdes::regression::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(x: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
    Dataset::new(x, y).unwrap()
}

fn linear_data(n: usize, d: usize, seed: u64, noise: f64) -> Dataset {
    let x = random_rows(n, d, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let w: Vec<f64> = (0..d).map(|j| (j as f64 + 1.0) * 0.5).collect();
    let y = x
        .iter()
        .map(|r| 0.3 + r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + noise * rng.gen_range(-1.0..1.0))
        .collect();
    dataset(x, y)
}

/// ‖(K + αI)c − y_centered‖∞ with K rebuilt by the oracle kernel.
fn krr_residual(model: &RegressionModel, y: &[f64]) -> f64 {
    let gamma = model.hyperparams.gamma.unwrap();
    model
        .support
        .iter()
        .enumerate()
        .map(|(i, si)| {
            let kc: f64 = model.support.iter().zip(&model.dual).map(|(sj, c)| rbf(si, sj, gamma) * c).sum();
            (kc + model.hyperparams.alpha * model.dual[i] - (y[i] - model.y_mean)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn single_point_krr_interpolates() {
    let data = dataset(vec![vec![1.0, 2.0]], vec![0.7]);
    let model = fit(ModelKind::KrrRbf, &data, Hyperparams::rbf(0.0, 1.0)).unwrap();
    assert_eq!(model.predict(&[1.0, 2.0]).unwrap(), 0.7);
}

#[test]
fn constant_target_ridge() {
    let data = dataset(random_rows(20, 4, 1), vec![3.7; 20]);
    let model = fit(ModelKind::Ridge, &data, Hyperparams::alpha(0.1)).unwrap();
    for x in random_rows(10, 4, 2) {
        assert!((model.predict(&x).unwrap() - 3.7).abs() < 1e-10);
    }
}

#[test]
fn krr_duals_match_gaussian_elimination() {
    let x = random_rows(10, 5, 7);
    let y: Vec<f64> = random_rows(10, 1, 8).into_iter().map(|r| r[0]).collect();
    let data = dataset(x, y.clone());
    let (alpha, gamma) = (0.05, 0.3);
    let model = fit(ModelKind::KrrRbf, &data, Hyperparams::rbf(alpha, gamma)).unwrap();
    let k: Vec<Vec<f64>> = (0..10)
        .map(|i| (0..10).map(|j| rbf(&model.support[i], &model.support[j], gamma) + if i == j { alpha } else { 0.0 }).collect())
        .collect();
    let ymean = y.iter().sum::<f64>() / 10.0;
    let yc: Vec<f64> = y.iter().map(|v| v - ymean).collect();
    let oracle = gauss_solve(&k, &yc);
    let diff = oracle.iter().zip(&model.dual).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn lasso_large_alpha_is_mean() {
    let data = linear_data(30, 4, 3, 0.1);
    let model = fit(ModelKind::Lasso, &data, Hyperparams::alpha(1e6)).unwrap();
    assert!(model.coefficients.iter().all(|&w| w == 0.0));
    let mean = data.y.iter().sum::<f64>() / 30.0;
    assert!((model.predict(&data.x[0]).unwrap() - mean).abs() < 1e-12);
}

#[test]
fn krr_alpha_zero_reproduces_labels_and_decays() {
    let data = linear_data(15, 3, 4, 0.2);
    let model = fit(ModelKind::KrrRbf, &data, Hyperparams::rbf(0.0, 1.0)).unwrap();
    for (x, y) in data.x.iter().zip(&data.y) {
        assert!((model.predict(x).unwrap() - y).abs() < 1e-8);
    }
    let far = model.predict(&[1e3, -1e3, 1e3]).unwrap();
    assert!((far - model.y_mean).abs() < 1e-12);
}

#[test]
fn krr_gradient_matches_central_differences() {
    let data = linear_data(25, 4, 5, 0.3);
    let model = fit(ModelKind::KrrRbf, &data, Hyperparams::rbf(0.1, 0.5)).unwrap();
    let h = 1e-5;
    for x in random_rows(20, 4, 6) {
        let g = model.gradient(&x).unwrap();
        for j in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (model.predict(&xp).unwrap() - model.predict(&xm).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-5, "{fd} vs {}", g[j]);
        }
    }
}

#[test]
fn r2_examples() {
    assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
    assert_eq!(r2_score(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap(), 0.5);
    assert!(matches!(r2_score(&[1.0, 1.0], &[1.0, 1.0]), Err(RegressionError::ZeroVariance)));
    assert!(matches!(r2_score(&[1.0], &[1.0]), Err(RegressionError::TooFewValues(1))));
}

#[test]
fn fit_errors() {
    let data = linear_data(5, 2, 1, 0.0);
    assert!(matches!(fit(ModelKind::Ridge, &data, Hyperparams::alpha(0.0)), Err(RegressionError::Hyperparameter(_))));
    assert!(matches!(fit(ModelKind::KrrRbf, &data, Hyperparams::alpha(1.0)), Err(RegressionError::Hyperparameter(_))));
    assert!(matches!(Dataset::new(vec![vec![f64::NAN]], vec![1.0]), Err(RegressionError::NonFinite(_))));
    let dup = dataset(vec![vec![1.0], vec![1.0]], vec![0.0, 1.0]);
    assert!(matches!(fit(ModelKind::KrrLinear, &dup, Hyperparams::alpha(0.0)), Err(RegressionError::Singular)));
    let model = fit(ModelKind::Ridge, &data, Hyperparams::alpha(1.0)).unwrap();
    assert!(matches!(model.predict(&[1.0]), Err(RegressionError::Dimension { expected: 2, got: 1 })));
}

#[test]
fn cross_validation_behaviour() {
    let data = linear_data(60, 5, 11, 0.0);
    let a = cross_validate(ModelKind::Ridge, &data, Hyperparams::alpha(1e-4), 10, 3).unwrap();
    let b = cross_validate(ModelKind::Ridge, &data, Hyperparams::alpha(1e-4), 10, 3).unwrap();
    assert_eq!(a, b);
    assert!(a.mean_r2 > 0.999);
    assert_eq!(a.fold_scores.len(), 10);

    let folds = fold_indices(23, 10, 9);
    let mut all: Vec<usize> = folds.concat();
    all.sort();
    assert_eq!(all, (0..23).collect::<Vec<_>>());
    assert_eq!(folds.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);

    assert!(matches!(
        cross_validate(ModelKind::Ridge, &linear_data(19, 2, 1, 0.0), Hyperparams::alpha(1.0), 10, 0),
        Err(RegressionError::TooFewRows { rows: 19, folds: 10, needed: 20 })
    ));
}

#[test]
fn noise_scores_at_most_zero() {
    let mut total = 0.0;
    for rep in 0..20 {
        let x = random_rows(50, 4, 100 + rep);
        let y: Vec<f64> = random_rows(50, 1, 200 + rep).into_iter().map(|r| r[0]).collect();
        let r = grid_search(ModelKind::Ridge, &dataset(x, y), &[Hyperparams::alpha(10.0)], 10, rep).unwrap();
        total += r.mean_r2;
    }
    assert!(total / 20.0 < 0.02, "{}", total / 20.0);
}

#[test]
fn grid_search_behaviour() {
    assert_eq!(default_grid(ModelKind::KrrRbf).len(), 42);
    assert_eq!(default_grid(ModelKind::Ridge).len(), 7);
    let data = linear_data(50, 4, 12, 0.0);
    let one = grid_search(ModelKind::KrrRbf, &data, &[Hyperparams::rbf(0.1, 0.1)], 10, 5).unwrap();
    let cv = cross_validate(ModelKind::KrrRbf, &data, Hyperparams::rbf(0.1, 0.1), 10, 5).unwrap();
    assert_eq!(one, cv);
    let ridge = grid_search(ModelKind::Ridge, &data, &default_grid(ModelKind::Ridge), 10, 5).unwrap();
    assert_eq!(ridge.best.alpha, 1e-4);
    // Lasso at huge α: every point ties, so the largest α wins.
    let flat = grid_search(ModelKind::Lasso, &data, &[Hyperparams::alpha(1e3), Hyperparams::alpha(1e4)], 10, 5).unwrap();
    assert_eq!(flat.best.alpha, 1e4);
    let csv = ridge.to_csv();
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn feature_selection() {
    let mut data = linear_data(40, 4, 13, 0.1);
    for r in &mut data.x {
        r.push(2.0);
    }
    let mask = select_features(&data, FeatureSelection::Variance, 5, 10, 0).unwrap();
    assert_eq!(mask, vec![true, true, true, true, false]);
    let identity = select_features(&linear_data(40, 4, 13, 0.1), FeatureSelection::Variance, 4, 10, 0).unwrap();
    assert_eq!(identity, vec![true; 4]);
    assert!(matches!(
        select_features(&data, FeatureSelection::Variance, 6, 10, 0),
        Err(RegressionError::Budget { budget: 6, dim: 5 })
    ));
    assert!("variance".parse::<FeatureSelection>().is_ok());
    assert!("bogus".parse::<FeatureSelection>().is_err());
}

#[test]
fn lasso_path_recovers_planted_signal() {
    let mut successes = 0;
    for run in 0..50u64 {
        let x = random_rows(60, 10, 1000 + run);
        let mut rng = ChaCha8Rng::seed_from_u64(run);
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[1] - 1.5 * r[4] + r[7] + 0.1 * rng.gen_range(-1.0..1.0)).collect();
        let mask = select_features(&dataset(x, y), FeatureSelection::LassoPath, 10, 10, run).unwrap();
        if mask[1] && mask[4] && mask[7] {
            successes += 1;
        }
    }
    assert!(successes >= 45, "{successes}/50");
}

#[test]
fn masked_model_ignores_other_columns() {
    let data = linear_data(30, 3, 14, 0.1);
    let model = fit_masked(ModelKind::Ridge, &data, Hyperparams::alpha(0.1), Some(&[true, false, true])).unwrap();
    let a = model.predict(&[0.1, 5.0, 0.2]).unwrap();
    let b = model.predict(&[0.1, -5.0, 0.2]).unwrap();
    assert_eq!(a, b);
    assert_eq!(model.gradient(&[0.0; 3]).unwrap()[1], 0.0);
}

#[test]
fn model_json_round_trip_is_bit_identical() {
    let data = linear_data(30, 4, 15, 0.2);
    for (kind, hp) in [
        (ModelKind::KrrRbf, Hyperparams::rbf(0.01, 0.7)),
        (ModelKind::Ridge, Hyperparams::alpha(0.3)),
        (ModelKind::Lasso, Hyperparams::alpha(0.01)),
    ] {
        let model = fit(kind, &data, hp).unwrap();
        let mut buf = Vec::new();
        model.write_json(&mut buf).unwrap();
        let back = RegressionModel::read_json(&buf[..]).unwrap();
        assert_eq!(back, model);
        for x in random_rows(20, 4, 16) {
            assert_eq!(back.predict(&x).unwrap().to_bits(), model.predict(&x).unwrap().to_bits());
        }
    }
    let bad = br#"{"format":"other"}"#;
    assert!(RegressionModel::read_json(&bad[..]).is_err());
}

fn small_dataset() -> impl Strategy<Value = (Dataset, u64)> {
    (3usize..40, 1usize..8, any::<u64>()).prop_map(|(n, d, seed)| {
        let x = random_rows(n, d, seed);
        let y = random_rows(n, 1, seed ^ 1).into_iter().map(|r| r[0] * 3.0).collect();
        (dataset(x, y), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn krr_residual_is_tiny((data, seed) in small_dataset()) {
        let alpha = 10f64.powi((seed % 7) as i32 - 4);
        let gamma = 10f64.powi(((seed / 7) % 6) as i32 - 3);
        let model = fit(ModelKind::KrrRbf, &data, Hyperparams::rbf(alpha, gamma)).unwrap();
        let r = krr_residual(&model, &data.y);
        prop_assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn ridge_agrees_with_linear_kernel((data, seed) in small_dataset()) {
        let alpha = 10f64.powi((seed % 5) as i32 - 2);
        let ridge = fit(ModelKind::Ridge, &data, Hyperparams::alpha(alpha)).unwrap();
        let krr = fit(ModelKind::KrrLinear, &data, Hyperparams::alpha(alpha)).unwrap();
        for x in random_rows(10, data.dim(), seed ^ 2) {
            let (a, b) = (ridge.predict(&x).unwrap(), krr.predict(&x).unwrap());
            prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn ridge_norm_shrinks_with_alpha((data, _seed) in small_dataset(), a in -4i32..2, step in 1i32..3) {
        let norm = |alpha: f64| {
            fit(ModelKind::Ridge, &data, Hyperparams::alpha(alpha)).unwrap().coefficients.iter().map(|w| w * w).sum::<f64>().sqrt()
        };
        let (n1, n2) = (norm(10f64.powi(a)), norm(10f64.powi(a + step)));
        prop_assert!(n1 >= n2 - 1e-12, "{n1} < {n2}");
    }

    #[test]
    fn lasso_satisfies_kkt((data, seed) in small_dataset()) {
        let alpha = 10f64.powi((seed % 4) as i32 - 3);
        let model = fit(ModelKind::Lasso, &data, Hyperparams::alpha(alpha)).unwrap();
        let n = data.len() as f64;
        let z: Vec<Vec<f64>> = data.x.iter().map(|r| {
            r.iter().enumerate().map(|(j, v)| (v - model.standardizer.mean[j]) / model.standardizer.scale[j]).collect()
        }).collect();
        let resid: Vec<f64> = z.iter().zip(&data.y).map(|(zr, y)| {
            y - model.y_mean - zr.iter().zip(&model.coefficients).map(|(a, b)| a * b).sum::<f64>()
        }).collect();
        for (j, &w) in model.coefficients.iter().enumerate() {
            let corr: f64 = z.iter().zip(&resid).map(|(zr, r)| zr[j] * r).sum::<f64>() / n;
            if w == 0.0 {
                prop_assert!(corr.abs() <= alpha + 1e-6, "zero coef {j}: {corr} > {alpha}");
            } else {
                prop_assert!((corr - alpha * w.signum()).abs() < 1e-6, "coef {j}: {corr} vs {}", alpha * w.signum());
            }
        }
    }
}
