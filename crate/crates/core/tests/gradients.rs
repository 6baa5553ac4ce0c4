mod common;

use common::*;
use zsdiag_core::cdm::CdmVariant;
use zsdiag_core::mapper::{MapperParams, MapperRole};
use zsdiag_core::model::Ablation;
use zsdiag_core::train::{IdEmbeddingModel, TrainConfig};

const VARIANTS: [CdmVariant; 3] = [CdmVariant::Mirt, CdmVariant::Ncdm, CdmVariant::Kancd];

#[test]
fn mapper_matches_central_differences() {
    // 16 -> 8 -> 4 -> 2 with f(x) = upstream . mapper(x)
    let mut r = rng(11);
    let mut checked = 0;
    for seed in 0..40 {
        let m = MapperParams::xavier(MapperRole::Student, &[16, 8, 4, 2], seed);
        let x = unit_vector(&mut r, 16);
        if relu_margin(&m, &x) < 0.01 {
            continue;
        }
        let upstream = vec![0.7, -1.3];
        let (tape, input_grad) = m.backward(&x, &upstream).unwrap();
        let f = |p: &MapperParams, x: &[f64]| {
            let y = p.forward(x).unwrap();
            y[0] * upstream[0] + y[1] * upstream[1]
        };
        let eps = 1e-4;
        for (g, analytic) in tape.param_slices().iter().enumerate() {
            for i in 0..analytic.len() {
                let mut plus = m.clone();
                plus.param_slices_mut()[g][i] += eps;
                let mut minus = m.clone();
                minus.param_slices_mut()[g][i] -= eps;
                let numeric = (f(&plus, &x) - f(&minus, &x)) / (2.0 * eps);
                let err = (analytic[i] - numeric).abs() / (analytic[i].abs() + 1e-8);
                assert!(err < 1e-4 || (analytic[i] - numeric).abs() < 1e-10, "group {g} index {i}: {} vs {numeric}", analytic[i]);
            }
        }
        for i in 0..16 {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let numeric = (f(&m, &xp) - f(&m, &xm)) / (2.0 * eps);
            assert!((input_grad[i] - numeric).abs() < 1e-8, "input {i}");
        }
        checked += 1;
    }
    assert!(checked >= 30, "only {checked} kink-free instances");
}

#[test]
fn full_model_batch_gradients_match_finite_differences() {
    let mut r = rng(5);
    for variant in VARIANTS {
        for ablation in [Ablation::None, Ablation::NoLcm] {
            let mut checked = 0;
            let mut seed = 0;
            while checked < 20 {
                seed += 1;
                let d = toy_domain(&mut r, 16, 3, 4, 3, 8);
                let m = model(variant, ablation, 16, vec![12], 8, seed);
                if model_relu_margin(&m, &d) < 5e-3 {
                    continue;
                }
                let err = gradient_error(&m, &d, 0.8, 4, &mut r).unwrap();
                assert!(err < 1e-4, "{variant:?}/{ablation:?} seed {seed}: relative error {err:e}");
                assert!(seed < 400, "too many instances rejected near ReLU kinks");
                checked += 1;
            }
        }
    }
}

#[test]
fn id_embedding_gradients_match_finite_differences() {
    let mut r = rng(6);
    for variant in VARIANTS {
        for seed in 0..10 {
            let d = toy_domain(&mut r, 16, 4, 5, 3, 10);
            let cfg = TrainConfig {
                dim: 6,
                head_width: 3,
                variant,
                seed,
                ..TrainConfig::default()
            };
            let m = IdEmbeddingModel::init(&d, &cfg);
            let err = gradient_error(&m, &d, 1.0, 6, &mut r).unwrap();
            assert!(err < 1e-4, "{variant:?} seed {seed}: relative error {err:e}");
        }
    }
}

#[test]
fn concept_count_does_not_constrain_parameters() {
    let mut r = rng(7);
    for variant in VARIANTS {
        let m = model(variant, Ablation::None, 16, vec![12], 8, 1);
        for k in [3, 17] {
            let d = toy_domain(&mut r, 16, 5, 6, k, 20);
            let loss = batch_loss(&m, &d, 1.0);
            assert!(loss.is_finite() && loss > 0.0, "{variant:?} K={k}");
        }
    }
}
