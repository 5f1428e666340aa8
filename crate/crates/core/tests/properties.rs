mod common;

use common::*;
use mhlr::dataset::{generate_planar_embedding, generate_two_moons_multiview};
use mhlr::eval::average_precision;
use mhlr::kernels::{combine_matrices, cross_kernel, gram_matrix, KernelSpec, SimplexWeights};
use mhlr::linalg::to_dmatrix;
use mhlr::manifold::{graph_laplacian, hessian_energy_matrix, EdgeWeighting, RegularizerMatrix};
use mhlr::MultiviewDataset;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

fn min_eigenvalue(m: &Array2<f64>) -> f64 {
    to_dmatrix(m.view()).symmetric_eigen().eigenvalues.min()
}

fn check_regularizer(m: &RegularizerMatrix) {
    let v = &m.values;
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    assert_eq!(v, &v.t());
    assert!(min_eigenvalue(v) >= -1e-9 * scale * v.nrows() as f64);
    let ones = Array1::ones(v.nrows());
    assert!(v
        .dot(&ones)
        .iter()
        .all(|x| x.abs() <= 1e-9 * scale * v.nrows() as f64));
}

fn labels_strategy() -> impl Strategy<Value = Vec<u32>> {
    (2u32..5, 8usize..60).prop_flat_map(|(c, n)| prop::collection::vec(0..c, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masking_labels_exactly_rounded_count(labels in labels_strategy(), fraction in 0.05f64..=1.0, seed in any::<u64>()) {
        let n = labels.len();
        let x = Array2::zeros((n, 1));
        let data = MultiviewDataset::fully_labeled(vec![x], labels.clone()).unwrap();
        let want = (fraction * n as f64).round() as usize;
        match data.mask_labeled_fraction(fraction, seed) {
            Ok(masked) => {
                prop_assert_eq!(masked.n_labeled(), want);
                prop_assert_eq!(masked.labeled_classes(), data.classes());
                prop_assert_eq!(masked.labels(), &labels[..]);
                let again = data.mask_labeled_fraction(fraction, seed).unwrap();
                prop_assert_eq!(masked.labeled_mask(), again.labeled_mask());
            }
            Err(_) => prop_assert!(want < data.classes().len()),
        }
    }

    #[test]
    fn generators_are_pure_and_valid(half in 2usize..40, noise in 0.0f64..0.5, seed in any::<u64>()) {
        let a = generate_two_moons_multiview(2 * half, noise, seed).unwrap();
        let b = generate_two_moons_multiview(2 * half, noise, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.n_views(), 2);
        prop_assert!(a.views().iter().all(|v| v.nrows() == 2 * half && v.iter().all(|x| x.is_finite())));
        prop_assert_eq!(a.labels().iter().filter(|&&l| l == 1).count(), half);

        let p = generate_planar_embedding(2 * half, 3 + (seed % 4) as usize, seed).unwrap();
        let q = generate_planar_embedding(2 * half, 3 + (seed % 4) as usize, seed).unwrap();
        prop_assert_eq!(&p.dataset, &q.dataset);
        prop_assert_eq!(&p.latent, &q.latent);
    }

    #[test]
    fn grams_are_symmetric_and_consistent(seed in any::<u64>(), n in 2usize..30, d in 1usize..5, bw in 0.5f64..3.0) {
        let mut r = rng(seed);
        let x = uniform_matrix(&mut r, n, d, 2.0);
        for spec in [KernelSpec::Linear, KernelSpec::rbf(bw)] {
            let g = gram_matrix(x.view(), &spec).unwrap().into_inner();
            prop_assert_eq!(&g, &g.t());
            prop_assert_eq!(&cross_kernel(x.view(), x.view(), &spec).unwrap(), &g);
            prop_assert!(min_eigenvalue(&g) >= -1e-8);
            if matches!(spec, KernelSpec::Rbf { .. }) {
                prop_assert!(g.iter().all(|&k| k > 0.0 && k <= 1.0));
            }
        }
    }

    #[test]
    fn simplex_combination_stays_psd(seed in any::<u64>(), n in 2usize..40, v in 1usize..4) {
        let mut r = rng(seed);
        let grams: Vec<Array2<f64>> = (0..v)
            .map(|k| {
                let x = uniform_matrix(&mut r, n, 1 + k, 1.0);
                let spec = if k % 2 == 0 { KernelSpec::rbf(r.random_range(0.3..2.0)) } else { KernelSpec::Linear };
                gram_matrix(x.view(), &spec).unwrap().into_inner()
            })
            .collect();
        let w = SimplexWeights::new(random_simplex(&mut r, v)).unwrap();
        let parts: Vec<&Array2<f64>> = grams.iter().collect();
        prop_assert!(min_eigenvalue(&combine_matrices(&parts, &w).unwrap()) >= -1e-8);
    }

    #[test]
    fn ap_ignores_strictly_monotone_transforms(
        (scores, relevant) in (2usize..20).prop_flat_map(|m| (
            prop::collection::vec(-5.0f64..5.0, m),
            prop::collection::vec(any::<bool>(), m),
        )),
    ) {
        prop_assume!(relevant.iter().any(|&r| r));
        let transformed: Vec<f64> = scores.iter().map(|s| s.powi(3) + 2.0 * s + 7.0).collect();
        prop_assert_eq!(
            average_precision(&scores, &relevant).unwrap(),
            average_precision(&transformed, &relevant).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn regularizer_builders_emit_valid_matrices(seed in any::<u64>(), n in 20usize..45, d in 2usize..5) {
        let mut r = rng(seed);
        let x = uniform_matrix(&mut r, n, d, 1.0);
        for weighting in [EdgeWeighting::Binary, EdgeWeighting::Heat] {
            check_regularizer(&graph_laplacian(x.view(), 5, weighting).unwrap());
        }
        check_regularizer(&hessian_energy_matrix(x.view(), 10, 2).unwrap());
    }
}
