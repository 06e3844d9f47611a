use amfshrink_core::estimators::kernel::{lw_kernel, lw_shrink_raw};
use amfshrink_core::estimators::{EstimatorSpec, SampleSpectrum, UpperClip};
use amfshrink_core::linalg::relative_frobenius_error;
use amfshrink_core::population::{build_population, haar_orthogonal, SpectrumModel, WeightedComponent};
use amfshrink_core::sampling::{sample_training, EntryLaw};
use amfshrink_core::{CMatrix, Complex64, Field};
use proptest::prelude::*;

fn two_atoms() -> SpectrumModel {
    SpectrumModel::new(vec![
        WeightedComponent::point(1.0, 0.5),
        WeightedComponent::point(5.0, 0.5),
    ])
    .unwrap()
}

fn field_strategy() -> impl Strategy<Value = Field> {
    prop_oneof![Just(Field::Real), Just(Field::Complex)]
}

/// (p, n) pairs away from the excluded band around p = n.
fn shape_strategy() -> impl Strategy<Value = (usize, usize)> {
    (2usize..40, prop_oneof![0.2f64..0.9, 1.15f64..3.0]).prop_map(|(p, ratio)| {
        let n = ((p as f64 / ratio).round() as usize).max(1);
        if (0.95..=1.05).contains(&(p as f64 / n as f64)) {
            (p, n + 2)
        } else {
            (p, n)
        }
    })
}

fn sorted_positive(values: Vec<f64>) -> Vec<f64> {
    let mut v = values;
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_density_is_nonnegative_and_positive_on_the_sample(
        eigs in prop::collection::vec(0.05f64..20.0, 1..30).prop_map(sorted_positive),
        n in 1usize..200,
        lambda in 0.0f64..25.0,
    ) {
        let p = eigs.len();
        let k = lw_kernel(lambda, &eigs, p, n).unwrap();
        prop_assert!(k.b >= 0.0 && k.b.is_finite() && k.a.is_finite());
        for &l in &eigs[p.saturating_sub(n)..] {
            prop_assert!(lw_kernel(l, &eigs, p, n).unwrap().b > 0.0);
        }
    }

    #[test]
    fn every_estimator_is_positive_definite((p, n) in shape_strategy(), field in field_strategy(), seed in any::<u64>()) {
        let r = build_population(&two_atoms(), p, true, seed).unwrap();
        let x = sample_training(&r, n, EntryLaw::GaussianUnit, field, seed).unwrap();
        let spectrum = SampleSpectrum::from_training(&x).unwrap();
        let mut specs = vec![
            "lw".parse::<EstimatorSpec>().unwrap(),
            EstimatorSpec::Lw { t0: 0.0, upper: UpperClip::EdgeScaled },
            EstimatorSpec::DiagonalLoading { beta: None },
            EstimatorSpec::Oracle,
            EstimatorSpec::Clairvoyant,
        ];
        if p < n {
            specs.push(EstimatorSpec::Sample);
        }
        for spec in specs {
            let est = spec.fit(&spectrum, Some(&r)).unwrap();
            prop_assert!(est.shrunken().iter().all(|&d| d > 0.0), "{}", spec);
        }
    }

    #[test]
    fn rotating_the_data_rotates_the_estimate((p, n) in shape_strategy(), field in field_strategy(), seed in any::<u64>()) {
        let r = build_population(&two_atoms(), p, false, seed).unwrap();
        let x = sample_training(&r, n, EntryLaw::GaussianUnit, field, seed).unwrap();
        let q = haar_orthogonal(p, seed ^ 1);
        let q = CMatrix::from_fn(p, p, |i, j| Complex64::new(q[(i, j)], 0.0));
        let xq = x.rotated(&q).unwrap();
        let s = SampleSpectrum::from_training(&x).unwrap();
        let sq = SampleSpectrum::from_training(&xq).unwrap();
        let mut specs = vec!["lw".parse::<EstimatorSpec>().unwrap(), EstimatorSpec::DiagonalLoading { beta: None }];
        if p < n {
            specs.push(EstimatorSpec::Sample);
        }
        for spec in specs {
            let a = spec.fit(&s, None).unwrap();
            let b = spec.fit(&sq, None).unwrap();
            for (u, v) in a.shrunken().iter().zip(b.shrunken()) {
                prop_assert!((u - v).abs() <= 1e-8 * u.abs(), "{}: {} vs {}", spec, u, v);
            }
            let expected = &q * a.to_matrix().as_matrix() * q.adjoint();
            prop_assert!(relative_frobenius_error(b.to_matrix().as_matrix(), &expected) <= 1e-8);
        }
    }

    #[test]
    fn scaling_the_data_scales_the_shrinkage((p, n) in shape_strategy(), c in 0.1f64..10.0, seed in any::<u64>()) {
        let r = build_population(&two_atoms(), p, true, seed).unwrap();
        let x = sample_training(&r, n, EntryLaw::GaussianUnit, Field::Complex, seed).unwrap();
        for upper in [UpperClip::SampleMax, UpperClip::EdgeScaled] {
            let spec = EstimatorSpec::Lw { t0: 0.0, upper };
            let a = spec.fit(&SampleSpectrum::from_training(&x).unwrap(), None).unwrap();
            let b = spec.fit(&SampleSpectrum::from_training(&x.scaled(c)).unwrap(), None).unwrap();
            for (u, v) in a.shrunken().iter().zip(b.shrunken()) {
                prop_assert!((v - c * c * u).abs() <= 1e-8 * c * c * u, "{} vs {}", v, c * c * u);
            }
        }
    }

    #[test]
    fn raw_shrinkage_is_scale_free(
        eigs in prop::collection::vec(0.05f64..20.0, 2..20).prop_map(sorted_positive),
        extra in 3usize..60,
        c in 0.01f64..100.0,
    ) {
        let p = eigs.len();
        let n = p + extra;
        let scaled: Vec<f64> = eigs.iter().map(|l| l * c).collect();
        let a = lw_shrink_raw(&eigs, p, n).unwrap();
        let b = lw_shrink_raw(&scaled, p, n).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((v - c * u).abs() <= 1e-9 * (c * u).abs());
        }
    }
}

/// Mean squared distance to the oracle at the two sizes of the consistency
/// check, same seeds for both.
fn oracle_gap(model: &SpectrumModel, p: usize, n: usize, seed: u64) -> f64 {
    let r = build_population(model, p, true, seed).unwrap();
    let x = sample_training(&r, n, EntryLaw::GaussianUnit, Field::Complex, seed).unwrap();
    let s = SampleSpectrum::from_training(&x).unwrap();
    let lw = "lw".parse::<EstimatorSpec>().unwrap().fit(&s, None).unwrap();
    let oracle = EstimatorSpec::Oracle.fit(&s, Some(&r)).unwrap();
    lw.shrunken()
        .iter()
        .zip(oracle.shrunken())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / p as f64
}

#[test]
fn oracle_gap_shrinks_with_dimension() {
    // a reduced version of the acceptance check: (50,100) against (200,400)
    for model in [SpectrumModel::point(1.0).unwrap(), two_atoms()] {
        let wins = (0..10)
            .filter(|&seed| oracle_gap(&model, 200, 400, seed) < oracle_gap(&model, 50, 100, seed))
            .count();
        assert!(wins >= 9, "{wins}/10");
    }
}
