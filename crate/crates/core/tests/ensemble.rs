use nalgebra::DMatrix;
use proptest::prelude::*;

use rog_core::classifier::{accuracy, fit_gaussian, labels_from_log_posteriors, Estimator, FitConfig};
use rog_core::data::{random_class_means, synthesize, FeatureSet, SynthSpec};
use rog_core::ensemble::{build_rog, ensemble_posterior, filter_indices, LayeredFeatureSet, RogConfig};

fn layers(seed: u64, n: usize) -> LayeredFeatureSet {
    let means = random_class_means(3, 4, 3.0, 9);
    let spec = SynthSpec {
        class_means: means,
        sigma2: 1.0,
        out_mean: vec![0.0; 4],
        out_sigma2: 1.0,
        delta_out: 0.0,
        n_per_class: n,
        seed,
    };
    let (good, _) = synthesize(&spec).unwrap();
    let mut r = rog_core::rng::seeded(seed ^ 0x55);
    let noise = DMatrix::from_fn(good.len(), 4, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
    let junk = good.with_features(noise).unwrap();
    LayeredFeatureSet::new(vec![("junk".into(), junk), ("good".into(), good)]).unwrap()
}

#[test]
fn informative_layer_takes_the_weight() {
    let model = build_rog(&layers(1, 300), &layers(2, 100), &RogConfig::default()).unwrap();
    assert!(model.weights[1] > 0.9, "weights {:?}", model.weights);
    let test = layers(3, 300);
    let lp = model.log_posteriors(&model.inputs_of(&test)).unwrap();
    let acc = accuracy(&labels_from_log_posteriors(&lp), test.labels()).unwrap();
    assert!(acc > 0.9);
}

#[test]
fn posterior_is_affine_in_the_weights() {
    let train = layers(4, 100);
    let mut model = build_rog(&train, &layers(5, 50), &RogConfig::default()).unwrap();
    let test = layers(6, 20);
    let inputs = model.inputs_of(&test);
    let at = |m: &mut rog_core::ensemble::EnsembleModel, w: f64| {
        m.weights = vec![w, 1.0 - w];
        ensemble_posterior(m, &inputs).unwrap()
    };
    let (p0, p1, mid) = (at(&mut model, 0.0), at(&mut model, 1.0), at(&mut model, 0.3));
    assert!((mid - (p0 * 0.7 + p1 * 0.3)).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn filter_grows_monotonically(seed in any::<u64>(), a in 0usize..60, b in 0usize..60) {
        let val: FeatureSet = layers(seed, 20).last().clone();
        let params = fit_gaussian(&val, Estimator::Sample, &FitConfig::default()).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let small = filter_indices(&val, &params, lo).unwrap();
        let large = filter_indices(&val, &params, hi).unwrap();
        prop_assert_eq!(large.len(), hi);
        prop_assert!(small.iter().all(|i| large.contains(i)));
    }
}
