//! Numerical checks of the robustness theory: closed-form limits of the
//! sample estimator under contamination, large-sample reports comparing the
//! sample and MCD estimators, and breakdown sweeps.

mod breakdown;
mod limits;
mod theory;

pub use breakdown::{breakdown_fraction, breakdown_sweep, BreakdownEstimator, BreakdownPoint, ADVERSARIAL_MAGNITUDE};
pub use limits::{lemma1_limits, lemma1_table, ClassLimits, LimitRow};
pub use theory::{
    theorem1_report, theory_grid, theory_json, write_theory_csv, AssumptionWarning, TheoryReport,
    TheoryRow,
};

use nalgebra::DMatrix;

use crate::classifier::GaussianClassifierParams;
use crate::error::{Result, RogError};
use crate::linalg;

/// `4t / (1 + t)^2` for the spectral condition number `t` of `cov`.
pub fn phi(cov: &DMatrix<f64>) -> Result<f64> {
    let eig = linalg::symmetric_eigenvalues(cov);
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(RogError::SingularCovariance(format!(
            "eigenvalues span [{lo:e}, {hi:e}]"
        )));
    }
    Ok(phi_of_condition(hi / lo))
}

pub fn phi_of_condition(t: f64) -> f64 {
    4.0 * t / ((1.0 + t) * (1.0 + t))
}

/// `sum_c sum_{c' != c} exp(-||mu_c - mu_c'||_2 / (8 sigma2) * phi(Sigma))`.
pub fn generalization_bound_term(params: &GaussianClassifierParams, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(RogError::Config(format!("sigma2 = {sigma2} must be positive")));
    }
    let p = phi(&params.tied_covariance)?;
    let c = params.means.nrows();
    let mut total = 0.0;
    for a in 0..c {
        for b in 0..c {
            if a != b {
                let gap = (params.means.row(a) - params.means.row(b)).norm();
                total += (-gap / (8.0 * sigma2) * p).exp();
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn phi_examples() {
        assert!((phi(&(DMatrix::identity(3, 3) * 7.5)).unwrap() - 1.0).abs() < 1e-15);
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        assert!((phi(&cov).unwrap() - 0.75).abs() < 1e-15);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.0]);
        assert_eq!(phi(&a).unwrap(), phi(&(&a * 13.0)).unwrap());
        assert!(phi(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn phi_decreases_with_condition() {
        let mut prev = phi_of_condition(1.0);
        assert_eq!(prev, 1.0);
        for k in 1..200 {
            let cur = phi_of_condition(1.0 + k as f64 * 0.25);
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn bound_term_examples() {
        let m = vec![DVector::from_vec(vec![1.0, 1.0]), DVector::from_vec(vec![1.0, 1.0])];
        let p = GaussianClassifierParams::tied(&m, &DMatrix::identity(2, 2), &[1.0, 1.0], 0.0).unwrap();
        assert!((generalization_bound_term(&p, 1.0).unwrap() - 2.0).abs() < 1e-15);
        let m = vec![DVector::from_vec(vec![0.0, 0.0]), DVector::from_vec(vec![8.0, 0.0])];
        let p = GaussianClassifierParams::tied(&m, &DMatrix::identity(2, 2), &[1.0, 1.0], 0.0).unwrap();
        let v = generalization_bound_term(&p, 1.0).unwrap();
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-12, "{v}");
    }
}
