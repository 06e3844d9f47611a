use amfshrink_core::linalg::quad_form;
use amfshrink_core::population::{build_population, SpectrumModel, WeightedComponent};
use amfshrink_core::sampling::{sample_observation, sample_signal_direction, sample_training, EntryLaw, Hypothesis};
use amfshrink_core::{Complex64, Field, HermitianMatrix};
use std::thread;

#[test]
fn draws_do_not_depend_on_the_calling_thread() {
    let model = SpectrumModel::new(vec![WeightedComponent::uniform(1.0, 4.0, 1.0)]).unwrap();
    let r = build_population(&model, 30, true, 5).unwrap();
    let draw = |r: &amfshrink_core::population::PopulationCovariance| {
        let x = sample_training(r, 50, EntryLaw::Rademacher, Field::Complex, 77).unwrap();
        let mu = sample_signal_direction(30, Field::Complex, 78).unwrap();
        let y = sample_observation(r, &mu, Hypothesis::H1(Complex64::new(0.5, -1.0)), Field::Complex, 79).unwrap();
        (x.matrix().clone(), mu, y.y)
    };
    let here = draw(&r);
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let r = r.clone();
            thread::spawn(move || draw(&r))
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), here);
    }
}

#[test]
fn sphere_quadratic_forms_concentrate() {
    // |mu' A mu - tr(A)/p| <= 5 sqrt(log p / p) ||A|| for a fixed A with ||A|| <= 2
    let p = 200;
    let values: Vec<f64> = (0..p).map(|j| -2.0 + 4.0 * (j as f64 + 0.5) / p as f64).collect();
    let a = HermitianMatrix::diagonal(&values, Field::Complex);
    let norm = 2.0 - 2.0 / p as f64;
    let bound = 5.0 * ((p as f64).ln() / p as f64).sqrt() * norm;
    let center = a.trace() / p as f64;
    let hits = (0..200u64)
        .filter(|&seed| {
            let mu = sample_signal_direction(p, Field::Complex, seed).unwrap();
            (quad_form(&mu, &a).unwrap() - center).abs() <= bound
        })
        .count();
    assert!(hits >= 198, "{hits}/200");
}

#[test]
fn entry_laws_have_unit_variance() {
    // p = 1, R = 1: the sample second moment of 2e4 entries is within 4 sigma of 1
    let r = build_population(&SpectrumModel::point(1.0).unwrap(), 1, false, 0).unwrap();
    let n = 20_000;
    for law in [
        EntryLaw::GaussianUnit,
        EntryLaw::Rademacher,
        EntryLaw::ScaledStudentT { df: 20.0 },
    ] {
        for field in [Field::Real, Field::Complex] {
            let x = sample_training(&r, n, law, field, 3).unwrap();
            let m2: Vec<f64> = x.matrix().iter().map(|z| z.norm_sqr()).collect();
            let mean = m2.iter().sum::<f64>() / n as f64;
            let var = m2.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            let sigma = (var / n as f64).sqrt();
            assert!(
                (mean - 1.0).abs() <= 4.0 * sigma.max(1e-12),
                "{} {:?}: {mean}",
                law.name(),
                field
            );
        }
    }
}
