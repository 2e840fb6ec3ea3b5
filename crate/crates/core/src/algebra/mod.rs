//! Lie group and Lie algebra kernel.
//!
//! A [`LieAlgebra`] is a finite-dimensional real Lie algebra with a fixed
//! basis, its structure constants `c^k_ij` and a faithful matrix
//! representation. Elements are [`AlgebraVector`]s, momenta are
//! [`DualVector`]s and the pairing between them is the coordinate dot
//! product. Group elements are matrices in the same representation.

mod group;
mod inertia;
mod vectors;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub(crate) use group::exp_matrix as group_exp_matrix;
pub use group::GroupElement;
pub use inertia::{BaseMetric, Inertia};
pub(crate) use vectors::{stack, Unstack};
pub use vectors::{AlgebraVector, DualVector};

/// Left or right invariance.
///
/// Every `±` in the reduced equations takes its upper sign for `Right` and
/// its lower sign for `Left`; every `∓` the opposite. Right means
/// `ξ = ġ g⁻¹`, left means `ξ = g⁻¹ ġ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Left,
    Right,
}

impl Chirality {
    /// Value of `±`: `+1` for `Right`, `-1` for `Left`.
    pub const fn pm(self) -> f64 {
        match self {
            Chirality::Right => 1.0,
            Chirality::Left => -1.0,
        }
    }

    /// Value of `∓`.
    pub const fn mp(self) -> f64 {
        -self.pm()
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Chirality::Right => "right",
            Chirality::Left => "left",
        }
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which closed forms apply to the algebra's group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    /// Rotations; coordinates in the cross-product basis.
    So3,
    /// Rigid motions; coordinates `(ω | v)` with rotation part first.
    Se3,
    /// `ℝⁿ` represented by `(n+1)×(n+1)` translation matrices.
    Abelian,
    /// Planar rotations.
    So2,
    /// The zero algebra of the trivial group.
    Trivial,
    /// User supplied structure constants and matrices.
    Generic,
}

/// Serializable description of a Lie algebra.
///
/// `structure_constants[k][i][j]` holds `c^k_ij`, so that
/// `[e_i, e_j] = Σ_k c^k_ij e_k`. Each entry of `basis_matrices` is an
/// `n×n` matrix flattened row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieAlgebraDef {
    pub name: String,
    pub dim: usize,
    pub group_dim: usize,
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    pub basis_matrices: Vec<Vec<f64>>,
}

/// Tolerance on the Jacobi identity and on bracket/commutator consistency.
pub const ALGEBRA_TOL: f64 = 1e-12;

struct AlgebraData {
    name: String,
    kind: GroupKind,
    dim: usize,
    group_dim: usize,
    /// `ad_basis[i][(k, j)] = c^k_ij`, the matrix of `ad_{e_i}`.
    ad_basis: Vec<DMatrix<f64>>,
    basis: Vec<DMatrix<f64>>,
    /// Left pseudo-inverse of the `n² × d` matrix whose columns are the
    /// column-major flattened basis matrices.
    vee_pinv: DMatrix<f64>,
}

/// A Lie algebra with basis, structure constants and matrix representation.
///
/// Cheap to clone; the data is shared and immutable.
#[derive(Clone)]
pub struct LieAlgebra(Arc<AlgebraData>);

impl fmt::Debug for LieAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieAlgebra")
            .field("name", &self.0.name)
            .field("kind", &self.0.kind)
            .field("dim", &self.0.dim)
            .field("group_dim", &self.0.group_dim)
            .finish()
    }
}

impl PartialEq for LieAlgebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.name == other.0.name
                && self.0.kind == other.0.kind
                && self.0.dim == other.0.dim
                && self.0.group_dim == other.0.group_dim)
    }
}

fn mat(n: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for &(r, c, v) in entries {
        m[(r, c)] = v;
    }
    m
}

/// Matrix of `x ×` for a 3-vector.
pub(crate) fn hat3(x: &[f64]) -> DMatrix<f64> {
    mat(
        3,
        &[
            (0, 1, -x[2]),
            (0, 2, x[1]),
            (1, 0, x[2]),
            (1, 2, -x[0]),
            (2, 0, -x[1]),
            (2, 1, x[0]),
        ],
    )
}

impl LieAlgebra {
    /// `so(3)` with `[e_i, e_j] = ε_ijk e_k`, i.e. the bracket is the cross product.
    pub fn so3() -> Self {
        let basis = (0..3)
            .map(|i| {
                let mut e = [0.0; 3];
                e[i] = 1.0;
                hat3(&e)
            })
            .collect();
        Self::from_builtin("so3", GroupKind::So3, basis)
    }

    /// `se(3)` with coordinates `(ω₁, ω₂, ω₃ | v₁, v₂, v₃)` in the 4×4 representation.
    pub fn se3() -> Self {
        let mut basis = Vec::with_capacity(6);
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            let mut m = DMatrix::zeros(4, 4);
            m.view_mut((0, 0), (3, 3)).copy_from(&hat3(&e));
            basis.push(m);
        }
        for i in 0..3 {
            basis.push(mat(4, &[(i, 3, 1.0)]));
        }
        Self::from_builtin("se3", GroupKind::Se3, basis)
    }

    /// Abelian `ℝⁿ` acting by translations in `n+1` homogeneous coordinates.
    pub fn abelian(n: usize) -> Self {
        let basis = (0..n).map(|i| mat(n + 1, &[(i, n, 1.0)])).collect();
        Self::from_builtin(&format!("r{n}"), GroupKind::Abelian, basis)
    }

    /// `so(2)`, one-dimensional with the 2×2 rotation generator.
    pub fn so2() -> Self {
        Self::from_builtin("so2", GroupKind::So2, vec![mat(2, &[(0, 1, -1.0), (1, 0, 1.0)])])
    }

    /// The zero algebra of the trivial group `{e}`, represented on `ℝ¹`.
    pub fn trivial() -> Self {
        Self::from_builtin("trivial", GroupKind::Trivial, Vec::new())
    }

    /// Look up a built-in algebra: `so3`, `se3`, `so2`, `trivial`, `r<n>` or `abelian<n>`.
    pub fn named(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        match lower.as_str() {
            "so3" | "so(3)" => return Ok(Self::so3()),
            "se3" | "se(3)" => return Ok(Self::se3()),
            "so2" | "so(2)" | "u1" | "u(1)" => return Ok(Self::so2()),
            "trivial" | "e" => return Ok(Self::trivial()),
            _ => {}
        }
        for prefix in ["abelian", "r"] {
            if let Some(rest) = lower.strip_prefix(prefix) {
                if let Ok(n) = rest.parse::<usize>() {
                    if n > 0 {
                        return Ok(Self::abelian(n));
                    }
                }
            }
        }
        Err(Error::InvalidAlgebra(format!("unknown group '{name}'")))
    }

    /// Built-in algebras: structure constants are computed from the
    /// commutators and rounded to the integers they are exactly.
    fn from_builtin(name: &str, kind: GroupKind, basis: Vec<DMatrix<f64>>) -> Self {
        let group_dim = basis.first().map_or(1, |b| b.nrows());
        let vee_pinv = basis_pinv(&basis, group_dim).expect("built-in basis is independent");
        let d = basis.len();
        let mut ad_basis = vec![DMatrix::zeros(d, d); d];
        for i in 0..d {
            for j in (i + 1)..d {
                let comm = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                let c = project(&vee_pinv, &comm);
                for k in 0..d {
                    let v = c[k].round();
                    ad_basis[i][(k, j)] = v;
                    ad_basis[j][(k, i)] = -v;
                }
            }
        }
        Self(Arc::new(AlgebraData {
            name: name.to_string(),
            kind,
            dim: d,
            group_dim,
            ad_basis,
            basis,
            vee_pinv,
        }))
    }

    /// Algebra spanned by user matrices; structure constants come from
    /// projecting commutators onto the basis. Fails when the span is not
    /// closed under commutators or the matrices are dependent.
    pub fn from_basis(name: &str, basis: Vec<DMatrix<f64>>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidAlgebra("empty basis".into()));
        }
        let n = basis[0].nrows();
        for b in &basis {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::InvalidAlgebra(
                    "basis matrices must all be square of one size".into(),
                ));
            }
        }
        let vee_pinv = basis_pinv(&basis, n)?;
        let d = basis.len();
        let mut ad_basis = vec![DMatrix::zeros(d, d); d];
        for i in 0..d {
            for j in (i + 1)..d {
                let comm = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                let c = project(&vee_pinv, &comm);
                for k in 0..d {
                    ad_basis[i][(k, j)] = c[k];
                    ad_basis[j][(k, i)] = -c[k];
                }
            }
        }
        let alg = Self(Arc::new(AlgebraData {
            name: name.to_string(),
            kind: GroupKind::Generic,
            dim: d,
            group_dim: n,
            ad_basis,
            basis,
            vee_pinv,
        }));
        alg.validate()?;
        Ok(alg)
    }

    /// Build from a definition, checking antisymmetry (exact), the Jacobi
    /// identity and bracket/commutator consistency (both within [`ALGEBRA_TOL`]).
    pub fn from_def(def: &LieAlgebraDef) -> Result<Self> {
        let d = def.dim;
        let n = def.group_dim;
        if d == 0 {
            return Err(Error::InvalidAlgebra("dim must be positive".into()));
        }
        if n == 0 {
            return Err(Error::InvalidAlgebra("group_dim must be positive".into()));
        }
        check_dim("structure_constants", d, def.structure_constants.len())?;
        check_dim("basis_matrices", d, def.basis_matrices.len())?;
        let mut ad_basis = vec![DMatrix::zeros(d, d); d];
        for (k, plane) in def.structure_constants.iter().enumerate() {
            check_dim("structure_constants row", d, plane.len())?;
            for (i, row) in plane.iter().enumerate() {
                check_dim("structure_constants entry", d, row.len())?;
                for (j, &c) in row.iter().enumerate() {
                    if !c.is_finite() {
                        return Err(Error::InvalidAlgebra("non-finite structure constant".into()));
                    }
                    ad_basis[i][(k, j)] = c;
                }
            }
        }
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    if ad_basis[i][(k, j)] != -ad_basis[j][(k, i)] {
                        return Err(Error::InvalidAlgebra(format!(
                            "structure constants not antisymmetric at c^{k}_{i}{j}"
                        )));
                    }
                }
            }
        }
        let mut basis = Vec::with_capacity(d);
        for flat in &def.basis_matrices {
            check_dim("basis matrix entries", n * n, flat.len())?;
            basis.push(DMatrix::from_row_slice(n, n, flat));
        }
        let vee_pinv = basis_pinv(&basis, n)?;
        let alg = Self(Arc::new(AlgebraData {
            name: def.name.clone(),
            kind: GroupKind::Generic,
            dim: d,
            group_dim: n,
            ad_basis,
            basis,
            vee_pinv,
        }));
        alg.validate()?;
        Ok(alg)
    }

    /// Parse and validate a JSON [`LieAlgebraDef`].
    pub fn from_json(text: &str) -> Result<Self> {
        let def: LieAlgebraDef =
            serde_json::from_str(text).map_err(|e| Error::InvalidAlgebra(format!("malformed definition: {e}")))?;
        Self::from_def(&def)
    }

    /// Export as a definition; `from_def(to_def())` yields an equivalent generic algebra.
    pub fn to_def(&self) -> LieAlgebraDef {
        let d = self.dim();
        let structure_constants = (0..d)
            .map(|k| {
                (0..d)
                    .map(|i| (0..d).map(|j| self.0.ad_basis[i][(k, j)]).collect())
                    .collect()
            })
            .collect();
        let basis_matrices = self.0.basis.iter().map(|b| b.transpose().as_slice().to_vec()).collect();
        LieAlgebraDef {
            name: self.0.name.clone(),
            dim: d,
            group_dim: self.0.group_dim,
            structure_constants,
            basis_matrices,
        }
    }

    fn validate(&self) -> Result<()> {
        let j = self.jacobi_residual();
        if j > ALGEBRA_TOL {
            return Err(Error::InvalidAlgebra(format!("Jacobi residual {j:.3e}")));
        }
        let c = self.bracket_consistency_residual();
        if c > ALGEBRA_TOL {
            return Err(Error::InvalidAlgebra(format!(
                "structure constants disagree with basis commutators (residual {c:.3e})"
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn kind(&self) -> GroupKind {
        self.0.kind
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// Size `n` of the representing matrices.
    pub fn group_dim(&self) -> usize {
        self.0.group_dim
    }

    /// `c^k_ij`.
    pub fn structure_constant(&self, k: usize, i: usize, j: usize) -> f64 {
        self.0.ad_basis[i][(k, j)]
    }

    pub fn basis_matrix(&self, i: usize) -> &DMatrix<f64> {
        &self.0.basis[i]
    }

    /// True when every bracket vanishes.
    pub fn is_abelian(&self) -> bool {
        self.0.ad_basis.iter().all(|m| m.iter().all(|&v| v == 0.0))
    }

    /// Largest `|c^k_ij + c^k_ji|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim();
        let mut r: f64 = 0.0;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    r = r.max((self.structure_constant(k, i, j) + self.structure_constant(k, j, i)).abs());
                }
            }
        }
        r
    }

    /// Largest entry of `Σ_m (c^m_ij c^l_mk + c^m_jk c^l_mi + c^m_ki c^l_mj)`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim();
        let c = |k, i, j| self.structure_constant(k, i, j);
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = 0.0;
                        for m in 0..d {
                            s += c(m, i, j) * c(l, m, k) + c(m, j, k) * c(l, m, i) + c(m, k, i) * c(l, m, j);
                        }
                        r = r.max(s.abs());
                    }
                }
            }
        }
        r
    }

    /// Largest entry of `[E_i, E_j] − Σ_k c^k_ij E_k` over basis pairs.
    pub fn bracket_consistency_residual(&self) -> f64 {
        let d = self.dim();
        let mut r: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let ei = &self.0.basis[i];
                let ej = &self.0.basis[j];
                let mut diff = ei * ej - ej * ei;
                for k in 0..d {
                    diff -= &self.0.basis[k] * self.structure_constant(k, i, j);
                }
                r = r.max(diff.amax());
            }
        }
        r
    }

    pub(crate) fn check(&self, what: &'static str, len: usize) -> Result<()> {
        check_dim(what, self.dim(), len)
    }

    /// Bracket on raw coordinates, no dimension check.
    pub(crate) fn br(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        if self.0.kind == GroupKind::So3 {
            return DVector::from_column_slice(&[
                x[1] * y[2] - x[2] * y[1],
                x[2] * y[0] - x[0] * y[2],
                x[0] * y[1] - x[1] * y[0],
            ]);
        }
        let d = self.dim();
        let mut z = DVector::zeros(d);
        for i in 0..d {
            for j in i + 1..d {
                let w = x[i] * y[j] - x[j] * y[i];
                if w != 0.0 {
                    z.axpy(w, &self.0.ad_basis[i].column(j), 1.0);
                }
            }
        }
        z
    }

    /// `ad*_x μ` on raw coordinates, no dimension check.
    pub(crate) fn ads(&self, x: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
        if self.0.kind == GroupKind::So3 {
            // μ × x
            return DVector::from_column_slice(&[
                mu[1] * x[2] - mu[2] * x[1],
                mu[2] * x[0] - mu[0] * x[2],
                mu[0] * x[1] - mu[1] * x[0],
            ]);
        }
        let d = self.dim();
        let mut z = DVector::zeros(d);
        for i in 0..d {
            if x[i] != 0.0 {
                z.gemv_tr(x[i], &self.0.ad_basis[i], mu, 1.0);
            }
        }
        z
    }

    /// `[x, y]`, with `z^k = Σ_ij c^k_ij x^i y^j`.
    pub fn bracket(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        self.check("bracket lhs", x.dim())?;
        self.check("bracket rhs", y.dim())?;
        Ok(AlgebraVector(self.br(&x.0, &y.0)))
    }

    /// Matrix of `ad_x`.
    pub fn ad_matrix(&self, x: &AlgebraVector) -> Result<DMatrix<f64>> {
        self.check("ad argument", x.dim())?;
        Ok(self.ad_mat(&x.0))
    }

    pub(crate) fn ad_mat(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            if x[i] != 0.0 {
                m += &self.0.ad_basis[i] * x[i];
            }
        }
        m
    }

    /// `ad*_x μ`, defined by `⟨ad*_x μ, y⟩ = ⟨μ, [x, y]⟩`.
    pub fn ad_star(&self, x: &AlgebraVector, mu: &DualVector) -> Result<DualVector> {
        self.check("ad* algebra argument", x.dim())?;
        self.check("ad* dual argument", mu.dim())?;
        Ok(DualVector(self.ads(&x.0, &mu.0)))
    }

    /// Matrix representative `Σ xⁱ E_i`.
    pub fn hat(&self, x: &AlgebraVector) -> Result<DMatrix<f64>> {
        self.check("hat argument", x.dim())?;
        Ok(self.hat_raw(&x.0))
    }

    pub(crate) fn hat_raw(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.group_dim();
        match self.0.kind {
            GroupKind::So3 => hat3(x.as_slice()),
            _ => {
                let mut m = DMatrix::zeros(n, n);
                for (i, b) in self.0.basis.iter().enumerate() {
                    if x[i] != 0.0 {
                        m += b * x[i];
                    }
                }
                m
            }
        }
    }

    /// Coordinates of a matrix in the span of the basis (least squares for
    /// generic algebras).
    pub fn vee(&self, m: &DMatrix<f64>) -> Result<AlgebraVector> {
        let n = self.group_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "vee matrix",
                expected: n,
                found: m.nrows(),
            });
        }
        Ok(AlgebraVector(self.vee_raw(m)))
    }

    pub(crate) fn vee_raw(&self, m: &DMatrix<f64>) -> DVector<f64> {
        match self.0.kind {
            GroupKind::So3 => DVector::from_column_slice(&[
                0.5 * (m[(2, 1)] - m[(1, 2)]),
                0.5 * (m[(0, 2)] - m[(2, 0)]),
                0.5 * (m[(1, 0)] - m[(0, 1)]),
            ]),
            GroupKind::Se3 => DVector::from_column_slice(&[
                0.5 * (m[(2, 1)] - m[(1, 2)]),
                0.5 * (m[(0, 2)] - m[(2, 0)]),
                0.5 * (m[(1, 0)] - m[(0, 1)]),
                m[(0, 3)],
                m[(1, 3)],
                m[(2, 3)],
            ]),
            GroupKind::Abelian => {
                let n = self.dim();
                DVector::from_fn(n, |i, _| m[(i, n)])
            }
            GroupKind::So2 => DVector::from_element(1, 0.5 * (m[(1, 0)] - m[(0, 1)])),
            GroupKind::Trivial => DVector::zeros(0),
            GroupKind::Generic => project(&self.0.vee_pinv, m),
        }
    }

    /// Group exponential.
    pub fn exp(&self, x: &AlgebraVector) -> Result<GroupElement> {
        self.check("exp argument", x.dim())?;
        Ok(GroupElement::from_parts(self.clone(), group::exp_matrix(self, &x.0)))
    }

    /// Principal logarithm; fails with [`Error::CutLocus`] near rotation angle π.
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraVector> {
        if g.algebra() != self {
            return Err(Error::InvalidArgument(format!(
                "group element of '{}' passed to log of '{}'",
                g.algebra().name(),
                self.name()
            )));
        }
        group::log_matrix(self, g.matrix()).map(AlgebraVector)
    }
}

/// Free-function form of [`LieAlgebra::exp`].
pub fn exp_map(algebra: &LieAlgebra, x: &AlgebraVector) -> Result<GroupElement> {
    algebra.exp(x)
}

/// Free-function form of [`LieAlgebra::log`].
pub fn log_map(g: &GroupElement) -> Result<AlgebraVector> {
    g.algebra().log(g)
}

fn project(pinv: &DMatrix<f64>, m: &DMatrix<f64>) -> DVector<f64> {
    let flat = DVector::from_column_slice(m.as_slice());
    pinv * flat
}

fn basis_pinv(basis: &[DMatrix<f64>], n: usize) -> Result<DMatrix<f64>> {
    let d = basis.len();
    if d == 0 {
        return Ok(DMatrix::zeros(0, n * n));
    }
    let mut b = DMatrix::zeros(n * n, d);
    for (i, e) in basis.iter().enumerate() {
        b.column_mut(i).copy_from_slice(e.as_slice());
    }
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * smax.max(1.0) {
        return Err(Error::InvalidAlgebra("basis matrices are linearly dependent".into()));
    }
    svd.pseudo_inverse(1e-14)
        .map_err(|e| Error::InvalidAlgebra(format!("pseudo-inverse failed: {e}")))
}
