use rand::seq::index;

use super::FeatureSet;
use crate::error::{Result, RogError};
use crate::rng;

/// Draws `validation_size` rows uniformly without replacement as the
/// validation split; the rest is training. Both keep the original row order.
pub fn split(ds: &FeatureSet, validation_size: usize, seed: u64) -> Result<(FeatureSet, FeatureSet)> {
    if validation_size >= ds.len() {
        return Err(RogError::Spec(format!(
            "validation size {validation_size} must be below the sample count {}",
            ds.len()
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut in_val = vec![false; ds.len()];
    for i in index::sample(&mut rng, ds.len(), validation_size) {
        in_val[i] = true;
    }
    let (val, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| in_val[i]);
    Ok((ds.subset(&train), ds.subset(&val)))
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    fn toy(n: usize) -> FeatureSet {
        FeatureSet::new(
            DMatrix::from_fn(n, 1, |i, _| i as f64),
            (0..n).map(|i| i % 2).collect(),
            2,
        )
        .unwrap()
    }

    #[test]
    fn zero_validation() {
        let ds = toy(10);
        let (train, val) = split(&ds, 0, 1).unwrap();
        assert!(val.is_empty());
        assert_eq!(train, ds);
    }

    #[test]
    fn boundary_leaves_one_training_row() {
        let ds = toy(1000);
        let (train, val) = split(&ds, 999, 4).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(val.len(), 999);
        assert!(matches!(split(&ds, 1000, 4), Err(RogError::Spec(_))));
    }

    #[test]
    fn disjoint_exhaustive_deterministic() {
        let ds = toy(100);
        let (t1, v1) = split(&ds, 30, 8).unwrap();
        let (t2, v2) = split(&ds, 30, 8).unwrap();
        assert_eq!((&t1, &v1), (&t2, &v2));
        let mut all: Vec<f64> = t1.features().iter().chain(v1.features().iter()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
    }
}
