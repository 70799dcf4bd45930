use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::mcd::{default_subset_size, EXACT_ENUMERATION_CAP};
use crate::error::{Result, RogError};
use crate::linalg;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LtsConfig {
    /// Points kept. Defaults to `floor((N + d + 1) / 2)`.
    pub subset_size: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    pub exact: bool,
    pub seed: u64,
}

impl Default for LtsConfig {
    fn default() -> Self {
        Self {
            subset_size: None,
            restarts: 10,
            max_iters: 100,
            exact: false,
            seed: 0,
        }
    }
}

fn trimmed_sse(points: &DMatrix<f64>, idx: &[usize]) -> (DVector<f64>, f64) {
    let sub = points.select_rows(idx.iter());
    let mean = linalg::column_mean(&sub);
    let sse = linalg::center_rows(&sub, &mean).norm_squared();
    (mean, sse)
}

fn sq_distances(points: &DMatrix<f64>, mean: &DVector<f64>) -> Vec<f64> {
    linalg::center_rows(points, mean)
        .row_iter()
        .map(|r| r.norm_squared())
        .collect()
}

/// Mean of the `K` points with the smallest total squared distance to it.
pub fn lts_mean(points: &DMatrix<f64>, cfg: &LtsConfig) -> Result<DVector<f64>> {
    let n = points.nrows();
    let d = points.ncols();
    let k = cfg.subset_size.unwrap_or_else(|| default_subset_size(n, d).min(n));
    if k == 0 || k > n {
        return Err(RogError::Config(format!("LTS subset size {k} must be in 1..={n}")));
    }
    if k == n {
        return Ok(linalg::column_mean(points));
    }
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut consider = |cand: (DVector<f64>, f64)| {
        if best.as_ref().is_none_or(|b| cand.1 < b.1) {
            best = Some(cand);
        }
    };
    if cfg.exact {
        let mut count: u128 = 1;
        for i in 0..k.min(n - k) {
            count = count * (n - i) as u128 / (i + 1) as u128;
            if count > EXACT_ENUMERATION_CAP {
                return Err(RogError::Config(format!(
                    "exact LTS over C({n}, {k}) subsets exceeds {EXACT_ENUMERATION_CAP}"
                )));
            }
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            consider(trimmed_sse(points, &idx));
            // next combination in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(best.expect("at least one subset").0);
                }
                i -= 1;
                if idx[i] < n - k + i {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
    if cfg.restarts == 0 {
        return Err(RogError::Config("restarts must be at least 1".into()));
    }
    for r in 0..cfg.restarts {
        let mut rng = rng::stream(cfg.seed, r as u64);
        let mut idx = index::sample(&mut rng, n, k).into_vec();
        idx.sort_unstable();
        let mut cur = trimmed_sse(points, &idx);
        for _ in 0..cfg.max_iters {
            let next_idx = linalg::k_smallest(&sq_distances(points, &cur.0), k);
            if next_idx == idx {
                break;
            }
            idx = next_idx;
            cur = trimmed_sse(points, &idx);
        }
        consider(cur);
    }
    Ok(best.expect("at least one restart").0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn exact_small_example() {
        let cfg = LtsConfig {
            subset_size: Some(2),
            exact: true,
            ..Default::default()
        };
        let m = lts_mean(&column(&[0.0, 0.1, 10.0]), &cfg).unwrap();
        assert!((m[0] - 0.05).abs() < 1e-12);
        let cfg = LtsConfig {
            exact: false,
            ..cfg
        };
        let m = lts_mean(&column(&[0.0, 0.1, 10.0]), &cfg).unwrap();
        assert!((m[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn full_subset_is_the_mean() {
        let pts = DMatrix::from_row_slice(4, 2, &[1.0, -1.0, -1.0, 1.0, 2.0, 2.0, -2.0, -2.0]);
        let cfg = LtsConfig {
            subset_size: Some(4),
            ..Default::default()
        };
        let m = lts_mean(&pts, &cfg).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn oversized_subset() {
        let cfg = LtsConfig {
            subset_size: Some(5),
            ..Default::default()
        };
        assert!(matches!(
            lts_mean(&column(&[1.0, 2.0]), &cfg),
            Err(RogError::Config(_))
        ));
    }

    #[test]
    fn ignores_a_far_cluster() {
        let mut v: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        v.extend((0..8).map(|i| 100.0 + i as f64));
        let m = lts_mean(&column(&v), &LtsConfig::default()).unwrap();
        assert!(m[0] < 0.2, "{m}");
    }
}
