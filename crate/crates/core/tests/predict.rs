mod common;

use common::*;
use jmf::model::init_factors;
use jmf::objective::reconstruction_error;
use jmf::predict::*;
use jmf::synthgen::{generate, DatasetId, SyntheticSpec};
use jmf::{solve, Algorithm, Hyperparameters, MultiViewDataset, SolverConfig, StopRule};
use ndarray::{s, Array2};

fn trained(alg: Algorithm) -> (jmf::Problem, TrainedModel) {
    let gt = generate(&SyntheticSpec::new(DatasetId::D1, 2)).unwrap();
    let p = gt.problem(Hyperparameters::new(4), false).unwrap();
    let cfg = SolverConfig {
        inner_tol: 1e-10,
        max_outer_iters: 3000,
        normalize_rows: false,
        ..SolverConfig::new(alg, StopRule::ObjectiveRatio, 1e-12)
    };
    let (f, _) = solve(&p, &cfg, init_factors(&p, 2)).unwrap();
    let model = TrainedModel::new(f, *p.params(), alg, StopRule::ObjectiveRatio, 2).unwrap();
    (p, model)
}

#[test]
fn left_refit_on_training_data_reproduces_error() {
    for alg in [Algorithm::PG, Algorithm::Ne, Algorithm::PANLS] {
        let (p, model) = trained(alg);
        let test: Vec<_> = p.dataset().views().iter().cloned().enumerate().collect();
        let w = predict_left(&model, &test, &PredictConfig::default()).unwrap();
        let refit = jmf::Factorization {
            w,
            h: model.factors.h.clone(),
        };
        let a = reconstruction_error(&p, &refit).unwrap();
        let b = reconstruction_error(&p, &model.factors).unwrap();
        assert!(rel_err(a, b) < 1e-6, "{alg}: {a} vs {b}");
        assert!(refit.w.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn left_refit_is_linear_in_the_data_row() {
    let (p, model) = trained(Algorithm::PANLS);
    let row = 7;
    let test: Vec<_> = p
        .dataset()
        .views()
        .iter()
        .map(|x| x.slice(s![row..row + 1, ..]).to_owned())
        .enumerate()
        .collect();
    let doubled: Vec<_> = test.iter().map(|(i, x)| (*i, x * 2.0)).collect();
    let cfg = PredictConfig::default();
    let a = predict_left(&model, &test, &cfg).unwrap();
    let b = predict_left(&model, &doubled, &cfg).unwrap();
    assert!(max_rel_err(&b, &(&a * 2.0)) < 1e-6);
}

#[test]
fn held_out_view_from_exact_model() {
    let gt = generate(&SyntheticSpec::new(DatasetId::D1, 4).with_noise(0.0)).unwrap();
    let model = TrainedModel::new(
        gt.factorization(),
        Hyperparameters::new(4),
        Algorithm::PANLS,
        StopRule::ObjectiveRatio,
        0,
    )
    .unwrap();
    let others = vec![(1, gt.x[1].clone()), (2, gt.x[2].clone())];
    let cfg = PredictConfig {
        tolerance: 1e-12,
        ..PredictConfig::default()
    };
    let x1 = predict_view(&model, 0, &others, &cfg).unwrap();
    let err = (&x1 - &gt.x[0]).mapv(|v| v * v).sum().sqrt() / gt.x[0].mapv(|v| v * v).sum().sqrt();
    assert!(err < 1e-6, "relative error {err}");
    let max_abs = (&x1 - &gt.x[0]).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max_abs < 1e-8, "max abs error {max_abs}");
}

#[test]
fn right_refit_matches_training_subproblems() {
    let (p, model) = trained(Algorithm::PANLS);
    let h = predict_right(&model, p.dataset(), None, &PredictConfig::default()).unwrap();
    let refit = jmf::Factorization {
        w: model.factors.w.clone(),
        h,
    };
    let a = reconstruction_error(&p, &refit).unwrap();
    let b = reconstruction_error(&p, &model.factors).unwrap();
    assert!(rel_err(a, b) < 1e-6, "{a} vs {b}");
}

#[test]
fn right_refit_of_zero_data_is_zero() {
    let (p, model) = trained(Algorithm::Ne);
    let zeros = MultiViewDataset::new(p.dataset().n().iter().map(|&n| Array2::zeros((45, n))).collect()).unwrap();
    let h = predict_right(&model, &zeros, None, &PredictConfig::default()).unwrap();
    assert!(h.iter().all(|h| h.iter().all(|&v| v.abs() < 1e-8)));
}

#[test]
fn duplicated_columns_get_identical_coefficients() {
    let (p, model) = trained(Algorithm::PG);
    let col = p.view(0).column(3).to_owned();
    let x = Array2::from_shape_fn((45, 5), |(i, _)| col[i]);
    let test = MultiViewDataset::new(vec![x]).unwrap();
    let h = predict_right(&model, &test, None, &PredictConfig::default()).unwrap();
    for j in 1..5 {
        for k in 0..4 {
            assert!((h[0][[k, j]] - h[0][[k, 0]]).abs() < 1e-6);
        }
    }
}

#[test]
fn mismatched_shapes_are_errors() {
    let (_, model) = trained(Algorithm::MUR);
    assert!(predict_left(&model, &[(0, Array2::zeros((3, 7)))], &PredictConfig::default()).is_err());
    assert!(predict_left(&model, &[], &PredictConfig::default()).is_err());
    let wrong_rows = MultiViewDataset::new(vec![Array2::zeros((5, 3))]).unwrap();
    assert!(predict_right(&model, &wrong_rows, None, &PredictConfig::default()).is_err());
}

#[test]
fn class_prediction_ignores_scaling() {
    let mut r = rng(3);
    let w = uniform(30, 4, 0.0, 1.0, &mut r);
    assert_eq!(predict_class(&w), predict_class(&(&w * 7.5)));
    assert_eq!(predict_class(&Array2::eye(4)), vec![0, 1, 2, 3]);
}
