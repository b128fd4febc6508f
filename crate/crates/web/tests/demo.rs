use jmf::evaluate::evaluate;
use jmf::Algorithm;
use jmf_web::{Demo, RunSettings};

fn settings(algorithm: Algorithm) -> RunSettings {
    RunSettings {
        algorithm,
        tolerance: 1e-4,
        max_iters: 300,
        lambda1: 0.0,
        lambda2: 0.0,
        gamma1: 0.0,
        gamma2: 0.0,
        seed: 3,
    }
}

#[test]
fn generate_exposes_flat_row_major_matrices() {
    let d = Demo::create("D1", 1, None).unwrap();
    assert_eq!((d.rows(), d.rank(), d.views()), (45, 4, 3));
    assert_eq!(d.view_cols(2), 215);
    assert_eq!(d.view_cols(3), 0);
    assert_eq!(d.truth_w().len(), 45 * 4);
    assert_eq!(d.data(0).len(), 45 * 130);
    assert!(d.objective_trace().is_empty() && d.auc().is_nan());
    assert!(Demo::create("D5", 1, None).is_err());
}

#[test]
fn solve_then_evaluate_matches_the_core_library() {
    let mut d = Demo::create("d1", 4, None).unwrap();
    d.run(settings(Algorithm::PANLS)).unwrap();
    let trace = d.objective_trace();
    assert_eq!(trace.len(), d.iterations());
    assert_eq!(d.grad_trace().len(), trace.len());
    assert!(trace.windows(2).skip(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    let w = d.learned_w();
    assert_eq!(w.len(), 45 * 4);
    assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));

    // the same run through the core library gives the same scores
    let gt = jmf::synthgen::generate(&jmf::synthgen::SyntheticSpec::new(jmf::synthgen::DatasetId::D1, 4)).unwrap();
    let p = gt.problem(jmf::Hyperparameters::new(4), false).unwrap();
    let cfg = jmf::SolverConfig {
        max_outer_iters: 300,
        seed: 3,
        ..jmf::SolverConfig::new(Algorithm::PANLS, jmf::StopRule::ObjectiveRatio, 1e-4)
    };
    let (f, _) = jmf::solve(&p, &cfg, jmf::model::init_factors(&p, 3)).unwrap();
    let ev = evaluate(&f, &gt).unwrap();
    assert_eq!(d.auc(), ev.auc);
    assert_eq!(d.reconstruction_error(), ev.reconstruction_error);
    assert!(d.auc() > 0.5);
    assert_eq!(d.auc_h().len(), 3);
}

#[test]
fn constraints_are_used_only_with_network_weights() {
    let mut a = Demo::create("D1", 2, None).unwrap();
    let mut b = Demo::create("D1", 2, None).unwrap();
    a.run(settings(Algorithm::PG)).unwrap();
    b.run(RunSettings {
        lambda1: 0.01,
        lambda2: 0.01,
        ..settings(Algorithm::PG)
    })
    .unwrap();
    assert_ne!(a.objective_trace(), b.objective_trace());
}

#[test]
fn bad_settings_are_rejected() {
    let mut d = Demo::create("D1", 0, None).unwrap();
    assert!(d
        .run(RunSettings {
            tolerance: 0.0,
            ..settings(Algorithm::MUR)
        })
        .is_err());
    assert!(d
        .run(RunSettings {
            max_iters: 0,
            ..settings(Algorithm::MUR)
        })
        .is_err());
}
