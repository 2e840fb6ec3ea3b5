use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par;

/// Default relative step of [`fd_jacobian`].
pub const DEFAULT_FD_EPS: f64 = 1e-6;

/// Centered finite-difference Jacobian of `map` at `point`.
///
/// The step for coordinate `i` is `eps · max(1, |xᵢ|)`. Columns are
/// evaluated in parallel when the `parallel` feature is on.
pub fn fd_jacobian<F>(map: F, point: &DVector<f64>, eps: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync + Send,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("fd step must be positive, got {eps}")));
    }
    let n = point.len();
    let columns = par::map_range(n, |i| -> Result<DVector<f64>> {
        let h = eps * point[i].abs().max(1.0);
        let mut plus = point.clone();
        let mut minus = point.clone();
        plus[i] += h;
        minus[i] -= h;
        let fp = map(&plus)?;
        let fm = map(&minus)?;
        if fp.len() != fm.len() {
            return Err(Error::DimensionMismatch {
                what: "fd map output",
                expected: fp.len(),
                found: fm.len(),
            });
        }
        let col = (fp - fm) / (2.0 * h);
        if !col.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("finite-difference Jacobian"));
        }
        Ok(col)
    });
    let columns: Vec<DVector<f64>> = columns.into_iter().collect::<Result<_>>()?;
    let m = columns.first().map_or(0, |c| c.len());
    let mut jac = DMatrix::zeros(m, n);
    for (i, c) in columns.iter().enumerate() {
        if c.len() != m {
            return Err(Error::DimensionMismatch {
                what: "fd map output",
                expected: m,
                found: c.len(),
            });
        }
        jac.set_column(i, c);
    }
    Ok(jac)
}

/// Same as [`fd_jacobian`] but always sequential.
pub fn fd_jacobian_seq<F>(map: F, point: &DVector<f64>, eps: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = point.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let h = eps * point[i].abs().max(1.0);
        let mut plus = point.clone();
        let mut minus = point.clone();
        plus[i] += h;
        minus[i] -= h;
        let col = (map(&plus)? - map(&minus)?) / (2.0 * h);
        if !col.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("finite-difference Jacobian"));
        }
        cols.push(col);
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, n, |r, c| cols[c][r]))
}

/// Centered finite-difference gradient of a scalar map.
pub fn fd_gradient<F>(map: F, point: &DVector<f64>, eps: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64> + Sync + Send,
{
    let jac = fd_jacobian(|x| map(x).map(|v| DVector::from_element(1, v)), point, eps)?;
    Ok(jac.row(0).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_map_recovers_matrix() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, 4.0]);
        let x = DVector::from_column_slice(&[0.3, 10.0, -7.0]);
        let j = fd_jacobian(|v| Ok(&a * v), &x, DEFAULT_FD_EPS).unwrap();
        assert_relative_eq!(j, a, epsilon = 1e-8);
        let js = fd_jacobian_seq(|v| Ok(&a * v), &x, DEFAULT_FD_EPS).unwrap();
        assert_eq!(j, js);
    }

    #[test]
    fn quadratic_has_zero_gradient_at_origin() {
        let g = fd_gradient(|v| Ok(v.norm_squared() * 3.0), &DVector::zeros(4), DEFAULT_FD_EPS).unwrap();
        assert!(g.amax() < 1e-9);
    }

    #[test]
    fn non_finite_is_an_error() {
        let err = fd_jacobian(|v| Ok(v.map(|x| 1.0 / (x - x))), &DVector::zeros(2), 1e-6).unwrap_err();
        assert_eq!(err, Error::NonFinite("finite-difference Jacobian"));
    }
}
