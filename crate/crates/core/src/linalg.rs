//! Dense decompositions used by the generators and condition certifiers,
//! bridged through nalgebra.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin QR factor Q with orthonormal columns; requires rows >= cols.
pub fn thin_q(a: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, p) = a.dim();
    if n < p {
        return Err(Error::invalid(format!(
            "thin QR needs rows >= cols, got {n} x {p}"
        )));
    }
    let qr = to_nalgebra(a).qr();
    let q = qr.q();
    Ok(from_nalgebra(&q))
}

/// Eigendecomposition of a symmetric matrix: `(values, vectors)` with
/// eigenvectors as columns, in the order nalgebra returns them.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (n, p) = a.dim();
    if n != p {
        return Err(Error::invalid("symmetric eigen needs a square matrix"));
    }
    let se = to_nalgebra(a).symmetric_eigen();
    let values = Array1::from(se.eigenvalues.iter().copied().collect::<Vec<f64>>());
    let vectors = from_nalgebra(&se.eigenvectors);
    Ok((values, vectors))
}

/// Symmetric PSD square root. Eigenvalues in `[-clip_tol, 0)` are clipped to
/// zero; anything below `-clip_tol` is rejected.
pub fn sqrt_psd(a: &Array2<f64>, clip_tol: f64) -> Result<Array2<f64>> {
    let (n, p) = a.dim();
    if n != p {
        return Err(Error::invalid("matrix square root needs a square matrix"));
    }
    let asym = a
        .iter()
        .zip(a.t().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if asym > 1e-10 {
        return Err(Error::invalid(format!(
            "covariance matrix is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    let (values, vectors) = symmetric_eigen(a)?;
    let mut roots = Vec::with_capacity(n);
    for v in values.iter() {
        if *v < -clip_tol {
            return Err(Error::invalid(format!(
                "covariance matrix has negative eigenvalue {v:.3e}"
            )));
        }
        roots.push(v.max(0.0).sqrt());
    }
    // V diag(sqrt) V^T
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += vectors[[i, k]] * roots[k] * vectors[[j, k]];
            }
            out[[i, j]] = s;
        }
    }
    Ok(out)
}

/// Extremal singular values of `a` (min over the full domain, so the minimum
/// is 0 whenever cols > rows).
pub fn min_max_singular(a: &Array2<f64>) -> (f64, f64) {
    let (n, p) = a.dim();
    let gram = if p <= n {
        a.t().dot(a)
    } else {
        a.dot(&a.t())
    };
    let se = to_nalgebra(&gram).symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for v in se.eigenvalues.iter() {
        let v = v.max(0.0);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let min_sv = if p > n { 0.0 } else { lo.sqrt() };
    (min_sv, hi.sqrt())
}
