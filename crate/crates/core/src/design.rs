use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::norms::empirical_norm;

/// Slack allowed on the column-norm normalization check.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// An n x p design matrix with the empirical-norm column convention
/// `max_j ||X e_j||_n <= 1`.
///
/// The convention is checked, never silently enforced; see
/// [`DesignMatrix::rescale_columns`] for the opt-in rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: Array2<f64>,
}

impl DesignMatrix {
    /// Wraps an n x p array. Rejects empty or non-finite data.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, p) = data.dim();
        if n == 0 || p == 0 {
            return Err(Error::invalid(format!(
                "design matrix must have n >= 1 and p >= 1, got {n} x {p}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix entry".into()));
        }
        Ok(Self { data })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// `||X e_j||_n`, the empirical norm of column j.
    pub fn column_norm(&self, j: usize) -> f64 {
        let col = self.data.column(j);
        (col.iter().map(|v| v * v).sum::<f64>() / self.rows() as f64).sqrt()
    }

    pub fn max_column_norm(&self) -> f64 {
        (0..self.cols())
            .map(|j| self.column_norm(j))
            .fold(0.0, f64::max)
    }

    /// Whether `max_j ||X e_j||_n <= 1` holds up to [`NORMALIZATION_TOL`].
    pub fn is_normalized(&self) -> bool {
        self.max_column_norm() <= 1.0 + NORMALIZATION_TOL
    }

    /// Divides every column by `max(1, ||X e_j||_n)`, so that columns already
    /// below the unit empirical norm are left untouched.
    pub fn rescale_columns(&mut self) {
        let n = self.rows();
        for j in 0..self.cols() {
            let norm = self.column_norm(j);
            if norm > 1.0 {
                let mut col = self.data.column_mut(j);
                col.mapv_inplace(|v| v / norm);
            }
            let _ = n;
        }
    }

    /// `X beta`.
    pub fn mul_vec(&self, beta: &Array1<f64>) -> Array1<f64> {
        self.data.dot(beta)
    }

    /// `X^T r`.
    pub fn t_mul_vec(&self, r: &Array1<f64>) -> Array1<f64> {
        self.data.t().dot(r)
    }

    /// `||X u||_n`, the prediction seminorm of a coefficient vector.
    pub fn prediction_norm(&self, u: &Array1<f64>) -> f64 {
        empirical_norm(&self.mul_vec(u))
    }

    /// Checks that a response vector is compatible with this design.
    pub fn check_response(&self, y: &Array1<f64>) -> Result<()> {
        if y.len() != self.rows() {
            return Err(Error::dims(format!(
                "response has length {}, design has {} rows",
                y.len(),
                self.rows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response entry".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn column_norms_and_normalization() {
        // two rows, columns (1,1)/sqrt(?) -> ||col||_n = sqrt((1+1)/2) = 1
        let x = DesignMatrix::new(array![[1.0, 2.0], [1.0, 0.0]]).unwrap();
        assert!((x.column_norm(0) - 1.0).abs() < 1e-15);
        assert!((x.column_norm(1) - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(!x.is_normalized());

        let mut x = x;
        x.rescale_columns();
        assert!((x.column_norm(1) - 1.0).abs() < 1e-15);
        // column 0 was already at norm 1, untouched
        assert!((x.as_array()[[0, 0]] - 1.0).abs() < 1e-15);
        assert!(x.is_normalized());
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(DesignMatrix::new(Array2::zeros((0, 3))).is_err());
        assert!(DesignMatrix::new(array![[f64::NAN]]).is_err());
    }

    #[test]
    fn matvec_roundtrip() {
        let x = DesignMatrix::new(array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let beta = array![2.0, -1.0];
        let xb = x.mul_vec(&beta);
        assert_eq!(xb, array![2.0, -1.0, 1.0]);
        let xt = x.t_mul_vec(&xb);
        assert_eq!(xt, array![3.0, 0.0]);
    }
}
