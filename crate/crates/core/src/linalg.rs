//! Dense linear-algebra helpers shared by the estimators and classifiers.
//!
//! Feature matrices are `N x d` with one sample per row.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Result, RogError};

/// Log-determinants below this are reported as singular (det < 1e-300).
pub const MIN_LOG_DET: f64 = -690.775_527_898_213_7;

/// Default relative ridge: `1e-6 * trace / d` is added to covariance diagonals.
pub const DEFAULT_RIDGE: f64 = 1e-6;

pub fn column_mean(points: &DMatrix<f64>) -> DVector<f64> {
    let n = points.nrows().max(1) as f64;
    points.row_sum().transpose() / n
}

/// Sum of outer products of rows centered at `mean`.
pub fn scatter(points: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let centered = center_rows(points, mean);
    let mut s = centered.tr_mul(&centered);
    symmetrize(&mut s);
    s
}

/// Mean and maximum-likelihood covariance (divide by n).
pub fn mean_and_covariance(points: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mean = column_mean(points);
    let n = points.nrows().max(1) as f64;
    let cov = scatter(points, &mean) / n;
    (mean, cov)
}

pub fn center_rows(points: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut centered = points.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    centered
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Absolute ridge for a covariance: `rel * trace / d`, or `rel` itself when the
/// trace vanishes (all points identical).
pub fn trace_ridge(cov: &DMatrix<f64>, rel: f64) -> f64 {
    let d = cov.nrows().max(1) as f64;
    let scale = cov.trace() / d;
    if scale > 0.0 && scale.is_finite() {
        rel * scale
    } else {
        rel
    }
}

/// Mean squared robust spread of the columns: `(1.4826 * MAD_j)^2` averaged
/// over columns. Falls back to the mean column variance when every MAD is
/// zero, and to zero for constant data.
pub fn robust_scale(points: &DMatrix<f64>) -> f64 {
    let d = points.ncols();
    if d == 0 || points.nrows() == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut buf = Vec::with_capacity(points.nrows());
    for col in points.column_iter() {
        buf.clear();
        buf.extend(col.iter().copied());
        let med = median_in_place(&mut buf);
        for v in buf.iter_mut() {
            *v = (*v - med).abs();
        }
        let mad = median_in_place(&mut buf);
        total += (1.482_602_218_505_602 * mad).powi(2);
    }
    let s = total / d as f64;
    if s > 0.0 {
        return s;
    }
    let (_, cov) = mean_and_covariance(points);
    cov.trace() / d as f64
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Cholesky factor of `cov + ridge * I`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl SpdFactor {
    pub fn new(cov: &DMatrix<f64>, ridge: f64) -> Result<Self> {
        let d = cov.nrows();
        if cov.ncols() != d {
            return Err(RogError::Dimension(format!(
                "covariance is {}x{}, expected square",
                d,
                cov.ncols()
            )));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(RogError::SingularCovariance(
                "covariance has non-finite entries".into(),
            ));
        }
        let mut reg = cov.clone();
        for i in 0..d {
            reg[(i, i)] += ridge;
        }
        let chol = Cholesky::new(reg).ok_or_else(|| {
            RogError::SingularCovariance(format!(
                "covariance is not positive definite after ridge {ridge:e}"
            ))
        })?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !(log_det >= MIN_LOG_DET) {
            return Err(RogError::SingularCovariance(format!(
                "log-determinant {log_det} below threshold"
            )));
        }
        Ok(Self { chol, log_det })
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.chol.inverse();
        symmetrize(&mut inv);
        inv
    }

    /// Squared Mahalanobis norm of a single centered vector.
    pub fn mahalanobis(&self, centered: &DVector<f64>) -> f64 {
        let mut z = centered.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        z.norm_squared()
    }

    /// Squared Mahalanobis distance of every row of `points` to `mean`.
    pub fn mahalanobis_rows(&self, points: &DMatrix<f64>, mean: &DVector<f64>) -> Vec<f64> {
        let mut z = center_rows(points, mean).transpose();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut z);
        z.column_iter().map(|c| c.norm_squared()).collect()
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// `log(sum(exp(v)))` with a max shift. Returns `-inf` for an empty slice or
/// when every entry is `-inf`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalizes logits into probabilities in place (max-shifted softmax).
pub fn softmax_in_place(v: &mut [f64]) {
    let lse = log_sum_exp(v);
    for x in v.iter_mut() {
        *x = (*x - lse).exp();
    }
}

/// Indices of the `k` smallest values; ties go to the lower index. The result
/// is sorted by index.
pub fn k_smallest(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let k = k.min(values.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| values[*a].total_cmp(&values[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
    }
    idx.truncate(k);
    idx.sort_unstable();
    idx
}
