use nalgebra::DMatrix;

use crate::error::{Result, RogError};

/// Dense `N x F x H x W` activations, row-major (W fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn new(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(RogError::Dimension(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Spatial average pooling: `F x H x W -> F` per sample.
pub fn average_pool(t: &Tensor4) -> Result<DMatrix<f64>> {
    let [n, f, h, w] = t.shape;
    if h == 0 || w == 0 {
        return Err(RogError::Dimension(format!(
            "spatial extent {h}x{w} must be at least 1x1"
        )));
    }
    let area = h * w;
    Ok(DMatrix::from_fn(n, f, |i, j| {
        let start = (i * f + j) * area;
        t.data[start..start + area].iter().sum::<f64>() / area as f64
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_spatial_extent_is_identity() {
        let t = Tensor4::new([2, 3, 1, 1], (0..6).map(|v| v as f64).collect()).unwrap();
        let m = average_pool(&t).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]));
    }

    #[test]
    fn constant_tensor_pools_to_constant() {
        let t = Tensor4::new([3, 2, 4, 5], vec![1.25; 120]).unwrap();
        assert!(average_pool(&t).unwrap().iter().all(|v| *v == 1.25));
    }

    #[test]
    fn two_by_two_mean() {
        let t = Tensor4::new([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 7.0]).unwrap();
        assert_eq!(average_pool(&t).unwrap()[(0, 0)], 3.25);
    }

    #[test]
    fn bad_shapes() {
        assert!(matches!(
            Tensor4::new([1, 1, 2, 2], vec![0.0; 3]),
            Err(RogError::Dimension(_))
        ));
        let t = Tensor4::new([1, 2, 0, 3], vec![]).unwrap();
        assert!(matches!(average_pool(&t), Err(RogError::Dimension(_))));
    }
}
