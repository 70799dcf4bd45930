use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{pool_covariances, priors_from_counts, ClassStats, PriorKind};
use crate::data::FeatureSet;
use crate::error::{Result, RogError};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TkmConfig {
    /// Fraction of all points discarded each iteration.
    pub trim: f64,
    pub iters: usize,
    pub priors: PriorKind,
}

impl Default for TkmConfig {
    fn default() -> Self {
        Self {
            trim: 0.5,
            iters: 2,
            priors: PriorKind::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TkmFit {
    pub centers: Vec<DVector<f64>>,
    /// Cluster of each row, `None` when trimmed.
    pub assignment: Vec<Option<usize>>,
    /// Majority noisy label of each cluster.
    pub cluster_labels: Vec<usize>,
    pub classes: Vec<ClassStats>,
    pub tied_covariance: DMatrix<f64>,
    pub priors: Vec<f64>,
}

fn nearest(x: &[f64], centers: &[DVector<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d: f64 = x.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

struct Step {
    cluster: Vec<usize>,
    dist: Vec<f64>,
    kept: Vec<usize>,
}

fn assign(rows: &[Vec<f64>], centers: &[DVector<f64>], keep: usize) -> Step {
    let (cluster, dist): (Vec<usize>, Vec<f64>) = rows.iter().map(|r| nearest(r, centers)).unzip();
    let kept = linalg::k_smallest(&dist, keep);
    Step {
        cluster,
        dist,
        kept,
    }
}

fn update_centers(rows: &[Vec<f64>], step: &Step, centers: &mut [DVector<f64>]) {
    let d = centers[0].len();
    let mut sums = vec![DVector::<f64>::zeros(d); centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for &i in &step.kept {
        let k = step.cluster[i];
        for (s, v) in sums[k].iter_mut().zip(&rows[i]) {
            *s += v;
        }
        counts[k] += 1;
    }
    for k in 0..centers.len() {
        if counts[k] > 0 {
            centers[k] = &sums[k] / counts[k] as f64;
        } else if let Some(&far) = step
            .kept
            .iter()
            .max_by(|&&a, &&b| step.dist[a].total_cmp(&step.dist[b]).then(b.cmp(&a)))
        {
            centers[k] = DVector::from_column_slice(&rows[far]);
        }
    }
}

/// Trimmed k-means with one cluster per class, seeded from the noisy class
/// means. Clusters take the majority noisy label of their retained members.
pub fn trimmed_kmeans(ds: &FeatureSet, cfg: &TkmConfig) -> Result<TkmFit> {
    if !(0.0..1.0).contains(&cfg.trim) {
        return Err(RogError::Config(format!("trim fraction {} must be in [0, 1)", cfg.trim)));
    }
    let n = ds.len();
    let c = ds.num_classes();
    let rows: Vec<Vec<f64>> = ds
        .features()
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let mut centers = Vec::with_capacity(c);
    for k in 0..c {
        let pts = ds.class_rows(k);
        if pts.nrows() == 0 {
            return Err(RogError::EmptyClass(k));
        }
        centers.push(linalg::column_mean(&pts));
    }
    let keep = n - (cfg.trim * n as f64).floor() as usize;
    let mut step = assign(&rows, &centers, keep);
    for _ in 0..cfg.iters {
        update_centers(&rows, &step, &mut centers);
        let next = assign(&rows, &centers, keep);
        let done = next.kept == step.kept && next.cluster == step.cluster;
        step = next;
        if done {
            break;
        }
    }

    let labels = ds.labels();
    let mut votes = vec![vec![0usize; c]; c];
    for &i in &step.kept {
        votes[step.cluster[i]][labels[i]] += 1;
    }
    let cluster_labels: Vec<usize> = votes
        .iter()
        .enumerate()
        .map(|(k, v)| {
            if v.iter().all(|&x| x == 0) {
                return k;
            }
            // lowest label wins ties
            let max = *v.iter().max().unwrap();
            v.iter().position(|&x| x == max).unwrap()
        })
        .collect();

    let mut assignment = vec![None; n];
    for &i in &step.kept {
        assignment[i] = Some(step.cluster[i]);
    }
    let mut classes = Vec::with_capacity(c);
    for k in 0..c {
        let mut members: Vec<usize> = step
            .kept
            .iter()
            .copied()
            .filter(|&i| cluster_labels[step.cluster[i]] == k)
            .collect();
        if members.is_empty() {
            members = step.kept.iter().copied().filter(|&i| labels[i] == k).collect();
        }
        if members.is_empty() {
            members = ds.class_indices(k);
        }
        classes.push(ClassStats::from_rows(&ds.features().select_rows(members.iter())));
    }
    let counts: Vec<usize> = classes.iter().map(|s| s.count).collect();
    let weights: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    Ok(TkmFit {
        tied_covariance: pool_covariances(&classes, &weights),
        priors: priors_from_counts(&counts, cfg.priors),
        centers,
        assignment,
        cluster_labels,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_simulated_example() {
        let rows: Vec<Vec<f64>> = [0.0, 0.1, 100.0, 10.0, 10.1, -90.0].iter().map(|&v| vec![v]).collect();
        let ds = FeatureSet::from_rows(&rows, vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let cfg = TkmConfig {
            trim: 1.0 / 3.0,
            iters: 2,
            ..Default::default()
        };
        let fit = trimmed_kmeans(&ds, &cfg).unwrap();
        assert!((fit.classes[0].mean[0] - 0.05).abs() < 1e-12);
        assert!((fit.classes[1].mean[0] - 10.05).abs() < 1e-12);
        assert_eq!(fit.assignment[2], None);
        assert_eq!(fit.assignment[5], None);
        assert_eq!(fit.cluster_labels, vec![1, 0]);
    }

    #[test]
    fn no_trim_on_separated_blobs_is_a_fixed_point() {
        let rows: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 20.0, 21.0, 22.0]
            .iter()
            .map(|&v| vec![v, -v])
            .collect();
        let ds = FeatureSet::from_rows(&rows, vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let cfg = TkmConfig {
            trim: 0.0,
            ..Default::default()
        };
        let fit = trimmed_kmeans(&ds, &cfg).unwrap();
        assert_eq!(fit.centers[0].as_slice(), &[1.0, -1.0]);
        assert_eq!(fit.centers[1].as_slice(), &[21.0, -21.0]);
        assert_eq!(
            fit.assignment,
            vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)]
        );
        assert_eq!(fit.cluster_labels, vec![0, 1]);
    }

    #[test]
    fn empty_cluster_restarts_at_the_farthest_point() {
        // both class means are 0, so every point ties and goes to cluster 0
        let rows: Vec<Vec<f64>> = [-3.0, 3.0, -1.0, 1.0].iter().map(|&v| vec![v]).collect();
        let ds = FeatureSet::from_rows(&rows, vec![0, 0, 1, 1], 2).unwrap();
        let cfg = TkmConfig {
            trim: 0.0,
            iters: 1,
            ..Default::default()
        };
        let fit = trimmed_kmeans(&ds, &cfg).unwrap();
        assert_eq!(fit.centers[1][0], -3.0);
    }

    #[test]
    fn bad_trim() {
        let ds = FeatureSet::from_rows(&[vec![0.0], vec![1.0]], vec![0, 1], 2).unwrap();
        let cfg = TkmConfig {
            trim: 1.0,
            ..Default::default()
        };
        assert!(matches!(trimmed_kmeans(&ds, &cfg), Err(RogError::Config(_))));
    }
}
