use nalgebra::{DMatrix, DVector};

use super::{AlgebraVector, DualVector, LieAlgebra};
use crate::error::{Error, Result};

/// Largest accepted condition number for metric matrices.
pub const MAX_CONDITION: f64 = 1e12;

/// Symmetry tolerance, relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
struct Spd {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Spd {
    fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::NotPositiveDefinite("matrix is not square".into()));
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("metric matrix"));
        }
        if n == 0 {
            return Ok(Self {
                inverse: matrix.clone(),
                matrix,
            });
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOL * scale.max(1.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "asymmetry {asym:.3e} exceeds tolerance"
            )));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {lo:.3e} is not positive"
            )));
        }
        let condition = hi / lo;
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned {
                condition,
                limit: MAX_CONDITION,
            });
        }
        let inverse = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?
            .inverse();
        Ok(Self { matrix: sym, inverse })
    }
}

/// Inner product on a Lie algebra, `γ_e(x, y) = xᵀ M y`, with its flat and
/// sharp maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Inertia(Spd);

impl Inertia {
    /// `c M` for a positive factor `c`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.0.matrix * factor)
    }

    /// Validates symmetry, positivity and the condition-number bound.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Spd::new(matrix).map(Self)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.0.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0.matrix
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.0.inverse
    }

    /// `x♭ = M x`.
    pub fn flat(&self, x: &AlgebraVector) -> Result<DualVector> {
        crate::error::check_dim("flat argument", self.dim(), x.dim())?;
        Ok(DualVector(self.lower(&x.0)))
    }

    /// `μ♯ = M⁻¹ μ`.
    pub fn sharp(&self, mu: &DualVector) -> Result<AlgebraVector> {
        crate::error::check_dim("sharp argument", self.dim(), mu.dim())?;
        Ok(AlgebraVector(self.raise(&mu.0)))
    }

    pub(crate) fn lower(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0.matrix * x
    }

    pub(crate) fn raise(&self, mu: &DVector<f64>) -> DVector<f64> {
        &self.0.inverse * mu
    }

    /// `⟨M x, x⟩`.
    pub fn norm_sq(&self, x: &AlgebraVector) -> f64 {
        x.0.dot(&self.lower(&x.0))
    }

    /// Dual norm `⟨μ, M⁻¹ μ⟩`, so that `‖x♭‖ = ‖x‖`.
    pub fn dual_norm_sq(&self, mu: &DualVector) -> f64 {
        mu.0.dot(&self.raise(&mu.0))
    }

    /// Largest `|⟨M[x,y], z⟩ + ⟨M y, [x,z]⟩|` over basis triples; zero for
    /// an ad-invariant (bi-invariant) metric.
    pub fn ad_invariance_residual(&self, algebra: &LieAlgebra) -> Result<f64> {
        let d = algebra.dim();
        crate::error::check_dim("inertia dimension", d, self.dim())?;
        let mut r: f64 = 0.0;
        for i in 0..d {
            let x = DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
            for j in 0..d {
                let y = DVector::from_fn(d, |k, _| if k == j { 1.0 } else { 0.0 });
                let mxy = self.lower(&algebra.br(&x, &y));
                let my = self.lower(&y);
                for k in 0..d {
                    let z = DVector::from_fn(d, |l, _| if l == k { 1.0 } else { 0.0 });
                    let val = mxy.dot(&z) + my.dot(&algebra.br(&x, &z));
                    r = r.max(val.abs());
                }
            }
        }
        Ok(r)
    }
}

/// Constant symmetric positive-definite metric on a flat base `ℝᵐ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseMetric(Spd);

impl BaseMetric {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Spd::new(matrix).map(Self)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.0.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0.matrix
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.0.inverse
    }

    /// Index lowering `v ↦ γ v`.
    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0.matrix * v
    }

    /// Index raising `p ↦ γ⁻¹ p`.
    pub fn raise(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.0.inverse * p
    }

    pub fn norm_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.lower(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_flat_keeps_coordinates() {
        let i = Inertia::identity(3);
        let x = AlgebraVector::from_slice(&[1.0, -2.0, 0.5]);
        assert_eq!(i.flat(&x).unwrap().0, x.0);
    }

    #[test]
    fn diagonal_flat() {
        let i = Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let mu = i.flat(&AlgebraVector::from_slice(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(mu, DualVector::from_slice(&[1.0, 2.0, 3.0]));
        let back = i.sharp(&mu).unwrap();
        assert_relative_eq!(back.0, DVector::from_element(3, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(
            Inertia::diagonal(&[1.0, -1.0, 2.0]),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(matches!(
            Inertia::diagonal(&[1.0, 1e-13, 2.0]),
            Err(Error::IllConditioned { .. })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.0, 2.0]);
        assert!(matches!(Inertia::new(asym), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn ad_invariance() {
        let so3 = LieAlgebra::so3();
        let id = Inertia::identity(3);
        assert_eq!(id.ad_invariance_residual(&so3).unwrap(), 0.0);
        let aniso = Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        assert!(aniso.ad_invariance_residual(&so3).unwrap() > 0.5);
        let scaled = Inertia::diagonal(&[2.5, 2.5, 2.5]).unwrap();
        assert!(scaled.ad_invariance_residual(&so3).unwrap() < 1e-15);
    }

    #[test]
    fn base_metric_raise_lower() {
        let g = BaseMetric::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let v = DVector::from_column_slice(&[0.3, -1.2]);
        assert_relative_eq!(g.raise(&g.lower(&v)), v, epsilon = 1e-15);
    }
}
