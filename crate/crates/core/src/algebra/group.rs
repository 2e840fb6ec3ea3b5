use nalgebra::{DMatrix, DVector};

use super::{hat3, AlgebraVector, DualVector, GroupKind, LieAlgebra};
use crate::error::{Error, Result};

/// Membership tolerance for group matrices.
pub const GROUP_TOL: f64 = 1e-9;

/// Rotation angles at or beyond `π − CUT_LOCUS_MARGIN` are refused by `log`.
pub const CUT_LOCUS_MARGIN: f64 = 1e-6;

/// Matrix representative of a group element.
#[derive(Clone, Debug)]
pub struct GroupElement {
    matrix: DMatrix<f64>,
    algebra: LieAlgebra,
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.matrix == other.matrix
    }
}

impl GroupElement {
    /// Validate `matrix` as an element of the group of `algebra`.
    pub fn new(algebra: LieAlgebra, matrix: DMatrix<f64>) -> Result<Self> {
        let n = algebra.group_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "group matrix",
                expected: n,
                found: matrix.nrows(),
            });
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("group matrix"));
        }
        let g = Self { matrix, algebra };
        g.membership_defect()?;
        Ok(g)
    }

    /// Rows of an `n×n` matrix in row-major order.
    pub fn from_row_slice(algebra: LieAlgebra, entries: &[f64]) -> Result<Self> {
        let n = algebra.group_dim();
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                what: "group matrix entries",
                expected: n * n,
                found: entries.len(),
            });
        }
        Self::new(algebra, DMatrix::from_row_slice(n, n, entries))
    }

    pub(crate) fn from_parts(algebra: LieAlgebra, matrix: DMatrix<f64>) -> Self {
        Self { matrix, algebra }
    }

    pub fn identity(algebra: &LieAlgebra) -> Self {
        let n = algebra.group_dim();
        Self::from_parts(algebra.clone(), DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<f64> {
        self.matrix.transpose().as_slice().to_vec()
    }

    /// `self · other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        Self::from_parts(self.algebra.clone(), &self.matrix * &other.matrix)
    }

    pub fn inverse(&self) -> GroupElement {
        Self::from_parts(self.algebra.clone(), invert(self.algebra.kind(), &self.matrix))
    }

    /// Matrix of `Ad_g` on coordinates.
    pub fn adjoint_matrix(&self) -> DMatrix<f64> {
        let d = self.algebra.dim();
        let g = &self.matrix;
        match self.algebra.kind() {
            GroupKind::So3 => g.clone(),
            GroupKind::Se3 => {
                let r = g.view((0, 0), (3, 3)).into_owned();
                let p = [g[(0, 3)], g[(1, 3)], g[(2, 3)]];
                let mut m = DMatrix::zeros(6, 6);
                m.view_mut((0, 0), (3, 3)).copy_from(&r);
                m.view_mut((3, 3), (3, 3)).copy_from(&r);
                m.view_mut((3, 0), (3, 3)).copy_from(&(hat3(&p) * &r));
                m
            }
            GroupKind::Abelian | GroupKind::So2 => DMatrix::identity(d, d),
            GroupKind::Trivial => DMatrix::zeros(0, 0),
            GroupKind::Generic => {
                let ginv = self.inverse();
                let mut m = DMatrix::zeros(d, d);
                for i in 0..d {
                    let conj = g * self.algebra.basis_matrix(i) * ginv.matrix();
                    m.set_column(i, &self.algebra.vee_raw(&conj));
                }
                m
            }
        }
    }

    /// `Ad_g x`, the pull-back of `g x̂ g⁻¹` to coordinates.
    pub fn adjoint(&self, x: &AlgebraVector) -> Result<AlgebraVector> {
        self.algebra.check("adjoint argument", x.dim())?;
        Ok(AlgebraVector(self.adjoint_matrix() * &x.0))
    }

    /// `Ad*_g μ`, defined by `⟨Ad*_g μ, x⟩ = ⟨μ, Ad_g x⟩`.
    pub fn coadjoint(&self, mu: &DualVector) -> Result<DualVector> {
        self.algebra.check("coadjoint argument", mu.dim())?;
        Ok(DualVector(self.adjoint_matrix().tr_mul(&mu.0)))
    }

    /// How far the matrix is from the group, measured in the norm natural
    /// for the kind (orthogonality defect for rotations). Generic groups
    /// report zero unless the matrix is singular.
    pub fn constraint_defect(&self) -> f64 {
        let g = &self.matrix;
        match self.algebra.kind() {
            GroupKind::So3 | GroupKind::So2 => orthogonality_defect(g),
            GroupKind::Se3 => {
                let r = g.view((0, 0), (3, 3)).into_owned();
                let mut d = orthogonality_defect(&r);
                for j in 0..3 {
                    d = d.max(g[(3, j)].abs());
                }
                d.max((g[(3, 3)] - 1.0).abs())
            }
            GroupKind::Abelian => {
                let n = g.nrows();
                let mut d: f64 = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        if c == n - 1 && r < n - 1 {
                            continue;
                        }
                        let target = if r == c { 1.0 } else { 0.0 };
                        d = d.max((g[(r, c)] - target).abs());
                    }
                }
                d
            }
            GroupKind::Trivial => (g[(0, 0)] - 1.0).abs(),
            GroupKind::Generic => 0.0,
        }
    }

    fn membership_defect(&self) -> Result<()> {
        let name = self.algebra.name().to_string();
        let defect = self.constraint_defect();
        if defect > GROUP_TOL {
            return Err(Error::NotInGroup {
                group: name,
                reason: format!("constraint defect {defect:.3e}"),
            });
        }
        match self.algebra.kind() {
            GroupKind::So3 | GroupKind::So2 => {
                if self.matrix.determinant() <= 0.0 {
                    return Err(Error::NotInGroup {
                        group: name,
                        reason: "determinant is not positive".into(),
                    });
                }
            }
            GroupKind::Se3 => {
                if self.matrix.view((0, 0), (3, 3)).determinant() <= 0.0 {
                    return Err(Error::NotInGroup {
                        group: name,
                        reason: "rotation block has non-positive determinant".into(),
                    });
                }
            }
            GroupKind::Generic => {
                if self.matrix.clone().try_inverse().is_none() {
                    return Err(Error::Singular("group element"));
                }
            }
            GroupKind::Abelian | GroupKind::Trivial => {}
        }
        Ok(())
    }

    /// Snap the matrix back onto the group: polar decomposition for
    /// rotation blocks, exact structure for translation groups. Generic
    /// groups are left unchanged.
    pub fn reproject(&mut self) {
        let g = &mut self.matrix;
        match self.algebra.kind() {
            GroupKind::So3 | GroupKind::So2 => {
                *g = polar_rotation(g);
            }
            GroupKind::Se3 => {
                let r = polar_rotation(&g.view((0, 0), (3, 3)).into_owned());
                g.view_mut((0, 0), (3, 3)).copy_from(&r);
                for j in 0..3 {
                    g[(3, j)] = 0.0;
                }
                g[(3, 3)] = 1.0;
            }
            GroupKind::Abelian => {
                let n = g.nrows();
                let mut fixed = DMatrix::identity(n, n);
                for r in 0..n - 1 {
                    fixed[(r, n - 1)] = g[(r, n - 1)];
                }
                *g = fixed;
            }
            GroupKind::Trivial => g[(0, 0)] = 1.0,
            GroupKind::Generic => {}
        }
    }
}

fn orthogonality_defect(r: &DMatrix<f64>) -> f64 {
    let n = r.nrows();
    (r.transpose() * r - DMatrix::<f64>::identity(n, n)).norm()
}

fn polar_rotation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut r = &u * &vt;
    if r.determinant() < 0.0 {
        let mut u = u;
        let last = u.ncols() - 1;
        u.column_mut(last).neg_mut();
        r = &u * &vt;
    }
    r
}

pub(crate) fn invert(kind: GroupKind, g: &DMatrix<f64>) -> DMatrix<f64> {
    match kind {
        GroupKind::So3 | GroupKind::So2 => g.transpose(),
        GroupKind::Se3 => {
            let rt = g.view((0, 0), (3, 3)).transpose();
            let p = g.view((0, 3), (3, 1)).into_owned();
            let mut out = DMatrix::identity(4, 4);
            out.view_mut((0, 3), (3, 1)).copy_from(&(-(&rt * p)));
            out.view_mut((0, 0), (3, 3)).copy_from(&rt);
            out
        }
        GroupKind::Abelian => {
            let n = g.nrows();
            let mut out = DMatrix::identity(n, n);
            for r in 0..n - 1 {
                out[(r, n - 1)] = -g[(r, n - 1)];
            }
            out
        }
        GroupKind::Trivial => DMatrix::identity(1, 1),
        GroupKind::Generic => g
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::from_element(g.nrows(), g.ncols(), f64::NAN)),
    }
}

/// `(sin θ / θ, (1 − cos θ) / θ², (θ − sin θ) / θ³)` with series near zero.
fn rodrigues_coefficients(theta: f64) -> (f64, f64, f64) {
    let t2 = theta * theta;
    if theta < 1e-4 {
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta))
    }
}

fn so3_exp(w: &[f64]) -> DMatrix<f64> {
    let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let (a, b, _) = rodrigues_coefficients(theta);
    let k = hat3(w);
    let k2 = &k * &k;
    DMatrix::identity(3, 3) + k * a + k2 * b
}

pub(crate) fn exp_matrix(alg: &LieAlgebra, x: &DVector<f64>) -> DMatrix<f64> {
    match alg.kind() {
        GroupKind::So3 => so3_exp(x.as_slice()),
        GroupKind::Se3 => {
            let w = &x.as_slice()[0..3];
            let v = DVector::from_column_slice(&x.as_slice()[3..6]);
            let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            let (_, b, c) = rodrigues_coefficients(theta);
            let k = hat3(w);
            let k2 = &k * &k;
            let vmat = DMatrix::identity(3, 3) + &k * b + k2 * c;
            let mut out = DMatrix::identity(4, 4);
            out.view_mut((0, 0), (3, 3)).copy_from(&so3_exp(w));
            out.view_mut((0, 3), (3, 1)).copy_from(&(vmat * v));
            out
        }
        GroupKind::Abelian => DMatrix::identity(alg.group_dim(), alg.group_dim()) + alg.hat_raw(x),
        GroupKind::So2 => {
            let (s, c) = x[0].sin_cos();
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        }
        GroupKind::Trivial => DMatrix::identity(1, 1),
        GroupKind::Generic => expm(&alg.hat_raw(x)),
    }
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub(crate) fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let mut s = 0i32;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as i32;
    }
    let y = a / 2f64.powi(s);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * &y / k as f64;
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Principal matrix logarithm via inverse scaling and squaring with
/// Denman–Beavers square roots.
pub(crate) fn logm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = a.clone();
    let mut s = 0;
    while (&m - &id).norm() > 0.25 {
        m = sqrtm(&m)?;
        s += 1;
        if s > 50 {
            return None;
        }
    }
    let e = &m - &id;
    let mut result = DMatrix::zeros(n, n);
    let mut power = e.clone();
    for k in 1..200 {
        let term = &power / k as f64;
        if k % 2 == 1 {
            result += &term;
        } else {
            result -= &term;
        }
        if term.amax() < 1e-18 {
            break;
        }
        power = &power * &e;
    }
    Some(result * 2f64.powi(s))
}

fn sqrtm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Some(y);
        }
    }
    None
}

fn so3_log(r: &DMatrix<f64>) -> Result<DVector<f64>> {
    let w = [r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]];
    let s = 0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if theta >= std::f64::consts::PI - CUT_LOCUS_MARGIN {
        return Err(Error::CutLocus { angle: theta });
    }
    // θ / (2 sin θ)
    let f = if theta < 1e-4 {
        let t2 = theta * theta;
        0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0)
    } else {
        0.5 * theta / theta.sin()
    };
    Ok(DVector::from_column_slice(&[w[0] * f, w[1] * f, w[2] * f]))
}

pub(crate) fn log_matrix(alg: &LieAlgebra, g: &DMatrix<f64>) -> Result<DVector<f64>> {
    match alg.kind() {
        GroupKind::So3 => so3_log(g),
        GroupKind::Se3 => {
            let r = g.view((0, 0), (3, 3)).into_owned();
            let w = so3_log(&r)?;
            let theta = w.norm();
            let t2 = theta * theta;
            // (1 − A / 2B) / θ², where A and B are the Rodrigues coefficients
            let d = if theta < 1e-4 {
                1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
            } else {
                let (a, b, _) = rodrigues_coefficients(theta);
                (1.0 - a / (2.0 * b)) / t2
            };
            let k = hat3(w.as_slice());
            let k2 = &k * &k;
            let vinv = DMatrix::identity(3, 3) - k * 0.5 + k2 * d;
            let p = g.view((0, 3), (3, 1)).into_owned();
            let v = vinv * p;
            Ok(DVector::from_column_slice(&[w[0], w[1], w[2], v[0], v[1], v[2]]))
        }
        GroupKind::Abelian => {
            let n = alg.dim();
            Ok(DVector::from_fn(n, |i, _| g[(i, n)]))
        }
        GroupKind::So2 => {
            let theta = g[(1, 0)].atan2(g[(0, 0)]);
            if theta.abs() >= std::f64::consts::PI - CUT_LOCUS_MARGIN {
                return Err(Error::CutLocus { angle: theta.abs() });
            }
            Ok(DVector::from_element(1, theta))
        }
        GroupKind::Trivial => Ok(DVector::zeros(0)),
        GroupKind::Generic => {
            let l = logm(g).ok_or_else(|| {
                Error::Unsupported(format!(
                    "matrix logarithm did not converge in '{}' (element may lie outside the principal domain)",
                    alg.name()
                ))
            })?;
            let x = alg.vee_raw(&l);
            let resid = (alg.hat_raw(&x) - &l).amax();
            if resid > 1e-8 * l.amax().max(1.0) {
                return Err(Error::NotInGroup {
                    group: alg.name().to_string(),
                    reason: format!("logarithm leaves the algebra (residual {resid:.3e})"),
                });
            }
            Ok(x)
        }
    }
}
