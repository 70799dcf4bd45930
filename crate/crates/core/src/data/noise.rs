use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::FeatureSet;
use crate::error::{Result, RogError};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Corrupted label drawn uniformly from the other `C - 1` classes.
    Uniform,
    /// Corrupted label set to `flip_map[old]`.
    Flip,
    /// Corrupted rows get features from an out-of-distribution donor set;
    /// labels are kept.
    OpenSet,
}

impl std::str::FromStr for NoiseKind {
    type Err = RogError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseKind::Uniform),
            "flip" => Ok(NoiseKind::Flip),
            "open-set" | "open_set" => Ok(NoiseKind::OpenSet),
            other => Err(RogError::Config(format!("unknown noise kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseKind::Uniform => "uniform",
            NoiseKind::Flip => "flip",
            NoiseKind::OpenSet => "open_set",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fraction of rows to corrupt, in `[0, 1)`.
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_map: Option<Vec<usize>>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn uniform(rate: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Uniform,
            rate,
            flip_map: None,
            seed,
        }
    }

    pub fn flip(rate: f64, flip_map: Vec<usize>, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Flip,
            rate,
            flip_map: Some(flip_map),
            seed,
        }
    }

    pub fn open_set(rate: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::OpenSet,
            rate,
            flip_map: None,
            seed,
        }
    }

    fn validate(&self, num_classes: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(RogError::Spec(format!(
                "noise rate {} must lie in [0, 1)",
                self.rate
            )));
        }
        if let Some(map) = &self.flip_map {
            if map.len() != num_classes {
                return Err(RogError::Spec(format!(
                    "flip map covers {} classes, data has {num_classes}",
                    map.len()
                )));
            }
            for (c, &t) in map.iter().enumerate() {
                if t >= num_classes || t == c {
                    return Err(RogError::Spec(format!(
                        "flip map sends class {c} to {t}; it must name a different valid class"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Corrupts exactly `floor(rate * N)` rows chosen without replacement.
///
/// Returns the corrupted set and a mask marking altered rows. `donor` supplies
/// replacement features for [`NoiseKind::OpenSet`]; its rows are drawn without
/// replacement and must cover the corrupted count.
pub fn inject_noise(
    ds: &FeatureSet,
    spec: &NoiseSpec,
    donor: Option<&FeatureSet>,
) -> Result<(FeatureSet, Vec<bool>)> {
    spec.validate(ds.num_classes())?;
    let n = ds.len();
    let count = (spec.rate * n as f64).floor() as usize;
    let mut rng = rng::seeded(spec.seed);
    let mut chosen = index::sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();

    let mut mask = vec![false; n];
    for &i in &chosen {
        mask[i] = true;
    }

    let c = ds.num_classes();
    match spec.kind {
        NoiseKind::Uniform => {
            let mut labels = ds.labels().to_vec();
            for &i in &chosen {
                let r = rng.random_range(0..c - 1);
                labels[i] = if r < labels[i] { r } else { r + 1 };
            }
            Ok((ds.with_labels(labels)?, mask))
        }
        NoiseKind::Flip => {
            let map = spec
                .flip_map
                .as_ref()
                .ok_or_else(|| RogError::Spec("flip noise needs a flip map".into()))?;
            let mut labels = ds.labels().to_vec();
            for &i in &chosen {
                labels[i] = map[labels[i]];
            }
            Ok((ds.with_labels(labels)?, mask))
        }
        NoiseKind::OpenSet => {
            let donor = donor
                .ok_or_else(|| RogError::Spec("open-set noise needs a donor feature set".into()))?;
            if donor.dim() != ds.dim() {
                return Err(RogError::Spec(format!(
                    "donor dimension {} differs from data dimension {}",
                    donor.dim(),
                    ds.dim()
                )));
            }
            if donor.len() < count {
                return Err(RogError::Spec(format!(
                    "donor set has {} rows, {count} needed",
                    donor.len()
                )));
            }
            let picks = index::sample(&mut rng, donor.len(), count).into_vec();
            let mut features = ds.features().clone();
            for (&i, &j) in chosen.iter().zip(&picks) {
                features.set_row(i, &donor.features().row(j));
            }
            Ok((ds.with_features(features)?, mask))
        }
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    fn toy(n: usize, c: usize) -> FeatureSet {
        let features = DMatrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64);
        FeatureSet::new(features, (0..n).map(|i| i % c).collect(), c).unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let ds = toy(10, 3);
        let (out, mask) = inject_noise(&ds, &NoiseSpec::uniform(0.0, 1), None).unwrap();
        assert_eq!(out, ds);
        assert!(mask.iter().all(|m| !m));
    }

    #[test]
    fn uniform_changes_exact_count() {
        let ds = toy(10, 3);
        let (out, mask) = inject_noise(&ds, &NoiseSpec::uniform(0.4, 9), None).unwrap();
        assert_eq!(mask.iter().filter(|m| **m).count(), 4);
        for i in 0..10 {
            assert_eq!(mask[i], out.labels()[i] != ds.labels()[i]);
        }
        assert_eq!(out.features(), ds.features());
    }

    #[test]
    fn flip_follows_map() {
        let ds = toy(20, 3);
        let spec = NoiseSpec::flip(0.5, vec![1, 2, 0], 3);
        let (out, mask) = inject_noise(&ds, &spec, None).unwrap();
        assert_eq!(mask.iter().filter(|m| **m).count(), 10);
        for i in 0..20 {
            let expect = if mask[i] { (ds.labels()[i] + 1) % 3 } else { ds.labels()[i] };
            assert_eq!(out.labels()[i], expect);
        }
    }

    #[test]
    fn open_set_keeps_labels() {
        let ds = toy(10, 2);
        let donor = FeatureSet::new(DMatrix::from_element(5, 2, -7.0), vec![0; 5], 2).unwrap();
        let (out, mask) = inject_noise(&ds, &NoiseSpec::open_set(0.3, 5), Some(&donor)).unwrap();
        assert_eq!(out.labels(), ds.labels());
        for i in 0..10 {
            let replaced = out.row(i).iter().all(|v| *v == -7.0);
            assert_eq!(replaced, mask[i]);
        }
        assert_eq!(mask.iter().filter(|m| **m).count(), 3);
    }

    #[test]
    fn spec_errors() {
        let ds = toy(10, 3);
        let mut flip = NoiseSpec::flip(0.2, vec![1, 2, 0], 0);
        flip.flip_map = None;
        assert!(matches!(inject_noise(&ds, &flip, None), Err(RogError::Spec(_))));
        assert!(matches!(
            inject_noise(&ds, &NoiseSpec::flip(0.2, vec![0, 2, 1], 0), None),
            Err(RogError::Spec(_))
        ));
        assert!(matches!(
            inject_noise(&ds, &NoiseSpec::open_set(0.2, 0), None),
            Err(RogError::Spec(_))
        ));
        assert!(matches!(
            inject_noise(&ds, &NoiseSpec::uniform(1.0, 0), None),
            Err(RogError::Spec(_))
        ));
        let small = FeatureSet::new(DMatrix::zeros(1, 2), vec![0], 3).unwrap();
        assert!(matches!(
            inject_noise(&ds, &NoiseSpec::open_set(0.5, 0), Some(&small)),
            Err(RogError::Spec(_))
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = toy(50, 4);
        let a = inject_noise(&ds, &NoiseSpec::uniform(0.3, 11), None).unwrap();
        let b = inject_noise(&ds, &NoiseSpec::uniform(0.3, 11), None).unwrap();
        assert_eq!(a, b);
    }
}
