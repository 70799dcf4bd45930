use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use rog_core::data::{
    decode_rogf, encode_rogf, inject_noise, load_feature_set, save_feature_set, split, synthesize,
    FeatureSet, Format, NoiseSpec, SynthSpec,
};

fn feature_set() -> impl Strategy<Value = FeatureSet> {
    (1usize..20, 1usize..6, 2usize..6).prop_flat_map(|(n, d, c)| {
        (
            prop::collection::vec(-1e6f64..1e6, n * d),
            prop::collection::vec(0..c, n),
        )
            .prop_map(move |(v, y)| FeatureSet::new(DMatrix::from_row_slice(n, d, &v), y, c).unwrap())
    })
}

proptest! {
    #[test]
    fn csv_round_trip(ds in feature_set()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        save_feature_set(&ds, &path, Format::Csv).unwrap();
        prop_assert_eq!(load_feature_set(&path, Format::Csv).unwrap(), ds);
    }

    #[test]
    fn rogf_round_trip_at_f32(ds in feature_set()) {
        let narrowed = ds.with_features(ds.features().map(|v| v as f32 as f64)).unwrap();
        let back = decode_rogf(&encode_rogf(&ds), "x.rogf".as_ref()).unwrap();
        prop_assert_eq!(&back, &narrowed);
        prop_assert_eq!(encode_rogf(&back), encode_rogf(&ds));
    }

    #[test]
    fn split_partitions_rows(ds in feature_set(), frac in 0.0f64..1.0, seed in any::<u64>()) {
        let v = ((ds.len() - 1) as f64 * frac) as usize;
        let (train, val) = split(&ds, v, seed).unwrap();
        prop_assert_eq!(train.len() + val.len(), ds.len());
        prop_assert_eq!(val.len(), v);
        let mut counts = train.class_counts();
        for (a, b) in counts.iter_mut().zip(val.class_counts()) {
            *a += b;
        }
        prop_assert_eq!(counts, ds.class_counts());
    }
}

#[test]
fn uniform_noise_spreads_evenly_over_wrong_classes() {
    let c = 10;
    let ds = FeatureSet::new(DMatrix::zeros(10_000, 1), (0..10_000).map(|i| i % c).collect(), c).unwrap();
    let (noisy, mask) = inject_noise(&ds, &NoiseSpec::uniform(0.4, 17), None).unwrap();
    assert_eq!(mask.iter().filter(|&&m| m).count(), 4000);
    let mut hist = vec![vec![0usize; c]; c];
    for (i, &m) in mask.iter().enumerate() {
        if m {
            assert_ne!(noisy.labels()[i], ds.labels()[i]);
            hist[ds.labels()[i]][noisy.labels()[i]] += 1;
        }
    }
    let mut stat = 0.0;
    for (from, row) in hist.iter().enumerate() {
        let total: usize = row.iter().sum();
        let expected = total as f64 / (c - 1) as f64;
        for (to, &k) in row.iter().enumerate() {
            if to != from {
                stat += (k as f64 - expected).powi(2) / expected;
            }
        }
    }
    let p = 1.0 - ChiSquared::new((c * (c - 2)) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat}, p = {p}");
}

fn spec(d: usize, delta: f64, n: usize) -> SynthSpec {
    SynthSpec {
        class_means: vec![vec![2.0; d], vec![-1.0; d]],
        sigma2: 1.0,
        out_mean: vec![0.0; d],
        out_sigma2: 4.0,
        delta_out: delta,
        n_per_class: n,
        seed: 23,
    }
}

#[test]
fn clean_class_means_converge() {
    let s = spec(4, 0.0, 50_000);
    let (ds, mask) = synthesize(&s).unwrap();
    assert!(mask.iter().all(|&m| !m));
    for c in 0..2 {
        let mean = rog_core::linalg::column_mean(&ds.class_rows(c));
        assert!((mean - s.class_mean(c)).amax() < 0.05);
    }
}

#[test]
fn contaminated_mixture_moments() {
    let mut s = spec(1, 0.25, 100_000);
    s.class_means = vec![vec![2.0], vec![-2.0]];
    let (ds, mask) = synthesize(&s).unwrap();
    assert_eq!(mask.iter().filter(|&&m| m).count(), 50_000);
    let rows = ds.class_rows(0);
    let (mean, cov) = rog_core::linalg::mean_and_covariance(&rows);
    assert!((mean[0] - 1.5).abs() < 0.05, "mean {}", mean[0]);
    assert!((cov[(0, 0)] - 2.5).abs() < 0.1, "variance {}", cov[(0, 0)]);
}
