mod common;

use std::fs;

use common::*;
use mhlr::dataset::{generate_planar_embedding, generate_two_moons_multiview};
use mhlr::eval::evaluate;
use mhlr::kernels::{gram_builds_on_this_thread, KernelSpec};
use mhlr::model::{
    load_model, save_model, train_binary, train_one_vs_rest, ManifoldParams, Regularizer, ViewMode,
};
use mhlr::optimize::Hyperparams;
use mhlr::{MethodSpec, ModelError, MulticlassModel, MultiviewDataset};
use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;

fn quick(regularizer: Regularizer, view_mode: ViewMode) -> MethodSpec {
    MethodSpec {
        regularizer,
        view_mode,
        manifold: ManifoldParams {
            k_hessian: 8,
            k_laplacian: 5,
            ..ManifoldParams::default()
        },
        hyper: Hyperparams {
            gamma_k: 1e-3,
            gamma_i: 1e-3,
            ..Hyperparams::default()
        },
        ..MethodSpec::default()
    }
}

/// Three Gaussian blobs seen through two views, a third of points labeled.
fn three_blobs(n: usize, seed: u64) -> MultiviewDataset {
    let mut r = rng(seed);
    let labels: Vec<u32> = (0..n).map(|i| (i % 3) as u32).collect();
    let centers = [[0.0, 2.0], [-2.0, -1.0], [2.0, -1.0]];
    let v0 = Array2::from_shape_fn((n, 2), |(i, c)| {
        centers[labels[i] as usize][c] + r.random_range(-0.8..0.8)
    });
    let v1 = Array2::from_shape_fn((n, 3), |(i, c)| {
        let base = if c < 2 {
            v0[[i, c]]
        } else {
            v0[[i, 0]] * v0[[i, 1]]
        };
        base + r.random_range(-0.3..0.3)
    });
    let mask = (0..n).map(|i| i % 3 == 0 || i < 6).collect();
    MultiviewDataset::new(vec![v0, v1], labels, mask, None).unwrap()
}

#[test]
fn gram_matrices_are_built_once_per_view() {
    let data = three_blobs(45, 1);
    let before = gram_builds_on_this_thread();
    let model =
        train_one_vs_rest(&data, &quick(Regularizer::Hessian, ViewMode::Multiview)).unwrap();
    assert_eq!(gram_builds_on_this_thread() - before, 2);
    assert_eq!(model.binaries.len(), 3);
    assert_eq!(model.classes, vec![0, 1, 2]);
}

#[test]
fn binaries_are_independent_problems() {
    let data = generate_two_moons_multiview(40, 0.1, 2)
        .unwrap()
        .mask_labeled_fraction(0.4, 2)
        .unwrap();
    let method = quick(Regularizer::Hessian, ViewMode::Multiview);
    let model = train_one_vs_rest(&data, &method).unwrap();
    for (binary, &class) in model.binaries.iter().zip(&model.classes) {
        let alone = train_binary(&data, class, &method).unwrap();
        assert_eq!(binary, &alone);
    }
}

#[test]
fn missing_labeled_class_is_named() {
    let data = three_blobs(30, 3);
    let mask = data.labels().iter().map(|&l| l != 2).collect();
    let data = data.with_mask(mask).unwrap();
    let err = train_one_vs_rest(&data, &quick(Regularizer::None, ViewMode::Multiview)).unwrap_err();
    assert!(matches!(err, ModelError::MissingClass { class: 2 }));
    assert!(err.to_string().contains("class 2"));
}

#[test]
fn concatenated_mode_equals_single_view_on_joined_features() {
    let data = generate_two_moons_multiview(36, 0.1, 4)
        .unwrap()
        .mask_labeled_fraction(0.3, 4)
        .unwrap();
    let joined = concatenate(Axis(1), &[data.view(0), data.view(1)]).unwrap();
    let single = MultiviewDataset::new(
        vec![joined],
        data.labels().to_vec(),
        data.labeled_mask().to_vec(),
        None,
    )
    .unwrap();
    let a = train_binary(&data, 1, &quick(Regularizer::None, ViewMode::Concatenated)).unwrap();
    let b = train_binary(&single, 1, &quick(Regularizer::None, ViewMode::Single(0))).unwrap();
    assert_eq!(a.alpha, b.alpha);
    assert_eq!(a.kernels, b.kernels);
    assert_eq!(a.train_features, b.train_features);
}

#[test]
fn one_view_multiview_equals_single_view() {
    let emb = generate_planar_embedding(40, 4, 5).unwrap();
    let data = emb.dataset.mask_labeled_fraction(0.3, 5).unwrap();
    let a = train_binary(&data, 1, &quick(Regularizer::Hessian, ViewMode::Multiview)).unwrap();
    let b = train_binary(&data, 1, &quick(Regularizer::Hessian, ViewMode::Single(0))).unwrap();
    assert_eq!((a.alpha, a.theta, a.beta), (b.alpha, b.theta, b.beta));
}

#[test]
fn regularizer_choice_is_irrelevant_without_manifold_weight() {
    let data = generate_two_moons_multiview(40, 0.1, 6)
        .unwrap()
        .mask_labeled_fraction(0.3, 6)
        .unwrap();
    let trained: Vec<_> = [
        Regularizer::None,
        Regularizer::Laplacian,
        Regularizer::Hessian,
    ]
    .into_iter()
    .map(|reg| {
        let mut m = quick(reg, ViewMode::Multiview);
        m.hyper.gamma_i = 0.0;
        train_binary(&data, 0, &m).unwrap()
    })
    .collect();
    for other in &trained[1..] {
        assert_eq!(other.alpha, trained[0].alpha);
        assert_eq!(other.theta, trained[0].theta);
        assert_eq!(other.beta, trained[0].beta);
    }
}

#[test]
fn linear_decision_value_is_the_representer_sum() {
    let data = three_blobs(24, 7);
    let mut method = quick(Regularizer::Laplacian, ViewMode::Multiview);
    method.kernels = vec![KernelSpec::Linear];
    let model = train_binary(&data, 0, &method).unwrap();
    let j = 5;
    let query: Vec<Array2<f64>> = data
        .views()
        .iter()
        .map(|v| v.slice(ndarray::s![j..j + 1, ..]).to_owned())
        .collect();
    let got = model.decision_values(&query).unwrap()[0];
    let want: f64 = (0..data.n())
        .map(|i| {
            let th = model.theta.as_slice();
            let k: f64 = (0..2)
                .map(|v| th[v] * data.view(v).row(i).dot(&data.view(v).row(j)))
                .sum();
            model.alpha[i] * k
        })
        .sum();
    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));

    let mut zero = model.clone();
    zero.alpha = Array1::zeros(data.n());
    assert!(zero
        .decision_values(data.views())
        .unwrap()
        .iter()
        .all(|&f| f == 0.0));
    assert!(zero
        .predict_proba(data.views())
        .unwrap()
        .iter()
        .all(|&p| p == 0.5));
}

#[test]
fn save_load_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.mhlr");
    let data = three_blobs(30, 8);
    let model =
        train_one_vs_rest(&data, &quick(Regularizer::Hessian, ViewMode::Multiview)).unwrap();
    save_model(&model, &path).unwrap();
    let back: MulticlassModel = load_model(&path).unwrap();
    assert_eq!(back, model);
    let probe = three_blobs(12, 9);
    assert_eq!(
        back.predict_proba(probe.views()).unwrap(),
        model.predict_proba(probe.views()).unwrap()
    );
    for (a, b) in back.binaries.iter().zip(&model.binaries) {
        let (fa, fb) = (
            a.decision_values(probe.views()).unwrap(),
            b.decision_values(probe.views()).unwrap(),
        );
        assert!(fa
            .iter()
            .zip(fb.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    let bytes = fs::read(&path).unwrap();
    let truncated = dir.path().join("t.mhlr");
    fs::write(&truncated, &bytes[..bytes.len() - 10]).unwrap();
    assert!(matches!(
        load_model::<MulticlassModel>(&truncated),
        Err(ModelError::Corrupt(_))
    ));

    let mut flipped = bytes.clone();
    let last = flipped.len() - 3;
    flipped[last] = if flipped[last] == b'1' { b'2' } else { b'1' };
    let flipped_path = dir.path().join("f.mhlr");
    fs::write(&flipped_path, flipped).unwrap();
    assert!(matches!(
        load_model::<MulticlassModel>(&flipped_path),
        Err(ModelError::Corrupt(_))
    ));

    let text = String::from_utf8(bytes)
        .unwrap()
        .replacen("mhlr-model 1 ", "mhlr-model 2 ", 1);
    let bumped = dir.path().join("v.mhlr");
    fs::write(&bumped, text).unwrap();
    assert!(matches!(
        load_model::<MulticlassModel>(&bumped),
        Err(ModelError::Version {
            expected: 1,
            found: 2
        })
    ));
    assert!(matches!(
        load_model::<MulticlassModel>(dir.path().join("missing")),
        Err(ModelError::Io { .. })
    ));
}

#[test]
fn permuting_classes_permutes_average_precision() {
    let data = three_blobs(45, 10);
    let model =
        train_one_vs_rest(&data, &quick(Regularizer::Laplacian, ViewMode::Multiview)).unwrap();
    let test = three_blobs(30, 11);
    let report = evaluate(&model, &test, "x", 1.0, 0).unwrap();
    let mut permuted = model.clone();
    permuted.classes.reverse();
    permuted.binaries.reverse();
    let again = evaluate(&permuted, &test, "x", 1.0, 0).unwrap();
    assert_eq!(report.per_class_ap, again.per_class_ap);
    assert_eq!(report.map, again.map);
}

#[test]
fn hessian_multiview_at_least_matches_unregularized_at_ten_percent() {
    let seed = 7;
    let train = generate_two_moons_multiview(400, 0.1, seed)
        .unwrap()
        .mask_labeled_fraction(0.1, seed)
        .unwrap();
    let test = generate_two_moons_multiview(400, 0.1, seed + 1000).unwrap();
    let base = MethodSpec::default();
    let accuracy = |reg: Regularizer| {
        let method = MethodSpec {
            regularizer: reg,
            ..base.clone()
        };
        let model = train_one_vs_rest(&train, &method).unwrap();
        evaluate(&model, &test, "", 0.1, seed).unwrap().accuracy
    };
    let (hessian, none) = (accuracy(Regularizer::Hessian), accuracy(Regularizer::None));
    assert!(hessian >= none, "hessian {hessian} < none {none}");
}
