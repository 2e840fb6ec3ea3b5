use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, Chirality, DualVector, LieAlgebra};
use crate::error::{check_dim, Error, Result};

/// Step of the fourth-order central stencil used when no analytic exterior
/// derivative is supplied.
pub const CURVATURE_FD_STEP: f64 = 1e-4;

/// `x ↦ A(x)`, the connection form in the trivialization as a `d × m`
/// matrix (column `j` is `A(x)(e_j) ∈ 𝔤`).
pub type ConnectionFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// `x ↦ dA(x)`, one antisymmetric `m × m` matrix per algebra coordinate
/// with entry `(i, j) = ∂_i A^c_j − ∂_j A^c_i`.
pub type ExteriorDerivativeFn = Arc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;

/// A principal connection on the trivial bundle `ℝ^m × G`.
#[derive(Clone)]
pub struct Connection {
    algebra: LieAlgebra,
    base_dim: usize,
    chirality: Chirality,
    form: ConnectionFn,
    exterior: Option<ExteriorDerivativeFn>,
    label: String,
}

impl fmt::Debug for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Connection")
            .field("label", &self.label)
            .field("algebra", &self.algebra.name())
            .field("base_dim", &self.base_dim)
            .field("chirality", &self.chirality)
            .field("analytic_exterior", &self.exterior.is_some())
            .finish()
    }
}

impl Connection {
    /// Wrap a callback; its output shape is checked on every evaluation.
    pub fn new(
        algebra: &LieAlgebra,
        base_dim: usize,
        chirality: Chirality,
        form: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            algebra: algebra.clone(),
            base_dim,
            chirality,
            form: Arc::new(form),
            exterior: None,
            label: "custom".into(),
        }
    }

    /// Attach an analytic exterior derivative.
    pub fn with_exterior_derivative(
        mut self,
        exterior: impl Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.exterior = Some(Arc::new(exterior));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `A ≡ 0`.
    pub fn zero(algebra: &LieAlgebra, base_dim: usize, chirality: Chirality) -> Self {
        let d = algebra.dim();
        Self::affine(algebra, chirality, DMatrix::zeros(d, base_dim), Vec::new())
            .expect("zero connection is well formed")
            .with_label("zero")
    }

    /// `x`-independent `A`, given as a `d × m` coefficient matrix.
    pub fn constant(algebra: &LieAlgebra, chirality: Chirality, coefficients: DMatrix<f64>) -> Result<Self> {
        Ok(Self::affine(algebra, chirality, coefficients, Vec::new())?.with_label("constant"))
    }

    /// `A = (b/2)(−x₂ dx₁ + x₁ dx₂) e₀` on `ℝ²`, whose curvature has
    /// `dA(e₁, e₂) = b e₀`.
    pub fn abelian_symmetric_gauge(algebra: &LieAlgebra, chirality: Chirality, field_strength: f64) -> Result<Self> {
        let d = algebra.dim();
        if d == 0 {
            return Err(Error::InvalidArgument(
                "symmetric gauge needs a non-trivial algebra".into(),
            ));
        }
        let mut l1 = DMatrix::zeros(d, 2);
        let mut l2 = DMatrix::zeros(d, 2);
        l1[(0, 1)] = 0.5 * field_strength;
        l2[(0, 0)] = -0.5 * field_strength;
        Ok(Self::affine(algebra, chirality, DMatrix::zeros(d, 2), vec![l1, l2])?.with_label("abelian_symmetric_gauge"))
    }

    /// `A(x) = C + Σ_i x_i L_i` with `d × m` matrices `C` and `L_i`; an
    /// empty `linear` means `A = C`. The exterior derivative is analytic.
    pub fn affine(
        algebra: &LieAlgebra,
        chirality: Chirality,
        constant: DMatrix<f64>,
        linear: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let d = algebra.dim();
        let m = constant.ncols();
        check_dim("connection coefficient rows", d, constant.nrows())?;
        if !linear.is_empty() {
            check_dim("connection linear terms", m, linear.len())?;
        }
        for l in &linear {
            check_dim("connection linear rows", d, l.nrows())?;
            check_dim("connection linear cols", m, l.ncols())?;
        }
        let mut ext = vec![DMatrix::zeros(m, m); d];
        for (i, li) in linear.iter().enumerate() {
            for (c, e) in ext.iter_mut().enumerate() {
                for j in 0..m {
                    e[(i, j)] += li[(c, j)];
                    e[(j, i)] -= li[(c, j)];
                }
            }
        }
        let lin = linear.clone();
        let c0 = constant.clone();
        Ok(Self::new(algebra, m, chirality, move |x: &DVector<f64>| {
            let mut a = c0.clone();
            for (i, li) in lin.iter().enumerate() {
                a += li * x[i];
            }
            a
        })
        .with_exterior_derivative(move |_| ext.clone())
        .with_label("affine"))
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_exterior(&self) -> bool {
        self.exterior.is_some()
    }

    /// The same connection read with the other chirality.
    pub fn with_chirality(&self, chirality: Chirality) -> Self {
        Self {
            chirality,
            ..self.clone()
        }
    }

    /// `A(x)` as a `d × m` matrix.
    pub fn matrix_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("base point", self.base_dim, x.len())?;
        let a = (self.form)(x);
        check_dim("connection rows", self.algebra.dim(), a.nrows())?;
        check_dim("connection cols", self.base_dim, a.ncols())?;
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("connection form"));
        }
        Ok(a)
    }

    /// `A(x)(u)`.
    pub fn apply(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<AlgebraVector> {
        check_dim("base tangent", self.base_dim, u.len())?;
        Ok(AlgebraVector(self.matrix_at(x)? * u))
    }

    /// `∂_i A(x)` for each `i` by fourth-order central differences.
    fn jacobian_fd(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        let h = CURVATURE_FD_STEP;
        (0..self.base_dim)
            .map(|i| {
                let at = |s: f64| {
                    let mut y = x.clone();
                    y[i] += s * h;
                    self.matrix_at(&y)
                };
                Ok((at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * h))
            })
            .collect()
    }

    /// Exterior derivative tensor from finite differences, in the layout of
    /// [`ExteriorDerivativeFn`].
    pub fn exterior_derivative_fd(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        let m = self.base_dim;
        let jac = self.jacobian_fd(x)?;
        Ok((0..self.algebra.dim())
            .map(|c| DMatrix::from_fn(m, m, |i, j| jac[i][(c, j)] - jac[j][(c, i)]))
            .collect())
    }

    /// Exterior derivative tensor, analytic when available.
    pub fn exterior_derivative(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        match &self.exterior {
            Some(f) => {
                check_dim("base point", self.base_dim, x.len())?;
                let e = f(x);
                check_dim("exterior derivative components", self.algebra.dim(), e.len())?;
                for c in &e {
                    check_dim("exterior derivative rows", self.base_dim, c.nrows())?;
                    check_dim("exterior derivative cols", self.base_dim, c.ncols())?;
                }
                Ok(e)
            }
            None => self.exterior_derivative_fd(x),
        }
    }

    /// Largest relative deviation of the analytic exterior derivative from
    /// finite differences over `points`; zero without an analytic one.
    pub fn exterior_derivative_residual(&self, points: &[DVector<f64>]) -> Result<f64> {
        if self.exterior.is_none() {
            return Ok(0.0);
        }
        let mut worst: f64 = 0.0;
        for x in points {
            let a = self.exterior_derivative(x)?;
            let b = self.exterior_derivative_fd(x)?;
            for (ac, bc) in a.iter().zip(&b) {
                let scale = ac.amax().max(bc.amax()).max(1.0);
                worst = worst.max((ac - bc).amax() / scale);
            }
        }
        Ok(worst)
    }

    /// The curvature two-form at `x`.
    pub fn curvature_at(&self, x: &DVector<f64>) -> Result<CurvatureForm> {
        let m = self.base_dim;
        let d = self.algebra.dim();
        let a = self.matrix_at(x)?;
        let da = self.exterior_derivative(x)?;
        let s = self.chirality.pm();
        let mut pairs = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                let br = self.algebra.br(&a.column(i).into_owned(), &a.column(j).into_owned());
                let v = DVector::from_fn(d, |c, _| da[c][(i, j)] + s * br[c]);
                pairs.push(v);
            }
        }
        Ok(CurvatureForm { base_dim: m, pairs })
    }
}

/// `B(x) = dA ± [A, A]` frozen at one base point, stored on the pairs
/// `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureForm {
    base_dim: usize,
    pairs: Vec<DVector<f64>>,
}

impl CurvatureForm {
    fn pair_index(&self, i: usize, j: usize) -> usize {
        let m = self.base_dim;
        i * m - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// `B(e_i, e_j)`.
    pub fn component(&self, i: usize, j: usize) -> AlgebraVector {
        let d = self.pairs.first().map_or(0, |p| p.len());
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => AlgebraVector::zeros(d),
            std::cmp::Ordering::Less => AlgebraVector(self.pairs[self.pair_index(i, j)].clone()),
            std::cmp::Ordering::Greater => AlgebraVector(-&self.pairs[self.pair_index(j, i)]),
        }
    }

    /// `B(u, v)`, summed as `Σ_{i<j} B_ij (u_i v_j − u_j v_i)` so that
    /// swapping the arguments negates the result exactly.
    pub fn eval(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<AlgebraVector> {
        let m = self.base_dim;
        check_dim("curvature argument", m, u.len())?;
        check_dim("curvature argument", m, v.len())?;
        let d = self.pairs.first().map_or(0, |p| p.len());
        let mut out = DVector::zeros(d);
        let mut idx = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                let w = u[i] * v[j] - u[j] * v[i];
                out.axpy(w, &self.pairs[idx], 1.0);
                idx += 1;
            }
        }
        Ok(AlgebraVector(out))
    }

    /// The covector `l ↦ ⟨μ, B(u, e_l)⟩`, i.e. `⟨μ, i_u B⟩`.
    pub fn contract(&self, mu: &DualVector, u: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.base_dim;
        check_dim("curvature argument", m, u.len())?;
        let mut out = DVector::zeros(m);
        let mut idx = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                let c = mu.0.dot(&self.pairs[idx]);
                // B(u, e_l) picks up B_ij u_i at l = j and −B_ij u_j at l = i
                out[j] += c * u[i];
                out[i] -= c * u[j];
                idx += 1;
            }
        }
        Ok(out)
    }
}

/// `B(x)(u, v)`.
pub fn curvature(conn: &Connection, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<AlgebraVector> {
    conn.curvature_at(x)?.eval(u, v)
}

/// `Dσ/Dt = σ̇ ± [A(x)(ẋ), σ]` on the trivialized adjoint bundle.
pub fn ad_covariant_derivative(
    conn: &Connection,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    sigma: &AlgebraVector,
    sigma_dot: &AlgebraVector,
) -> Result<AlgebraVector> {
    let alg = conn.algebra();
    alg.check("sigma", sigma.dim())?;
    alg.check("sigma rate", sigma_dot.dim())?;
    let a = conn.apply(x, xdot)?;
    Ok(AlgebraVector(
        &sigma_dot.0 + alg.br(&a.0, &sigma.0) * conn.chirality().pm(),
    ))
}

/// `Dμ/Dt = μ̇ ∓ ad*_{A(x)(ẋ)} μ` on the trivialized coadjoint bundle.
pub fn coad_covariant_derivative(
    conn: &Connection,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    mu: &DualVector,
    mu_dot: &DualVector,
) -> Result<DualVector> {
    let alg = conn.algebra();
    alg.check("mu", mu.dim())?;
    alg.check("mu rate", mu_dot.dim())?;
    let a = conn.apply(x, xdot)?;
    Ok(DualVector(&mu_dot.0 + alg.ads(&a.0, &mu.0) * conn.chirality().mp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{integrate, IntegratorConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn wavy(ch: Chirality) -> Connection {
        Connection::new(&LieAlgebra::so3(), 3, ch, |x: &DVector<f64>| {
            DMatrix::from_fn(3, 3, |c, j| (x[j] * (c + 1) as f64).sin() + 0.3 * x[(c + j) % 3] * x[c])
        })
    }

    fn random_points(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<DVector<f64>> {
        (0..n)
            .map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.5..1.5)))
            .collect()
    }

    #[test]
    fn zero_connection_is_flat() {
        let conn = Connection::zero(&LieAlgebra::so3(), 2, Chirality::Right);
        let b = curvature(&conn, &dv(&[0.3, -1.0]), &dv(&[1.0, 2.0]), &dv(&[-0.5, 0.1])).unwrap();
        assert_eq!(b.amax(), 0.0);
    }

    #[test]
    fn symmetric_gauge_has_unit_field() {
        for ch in [Chirality::Left, Chirality::Right] {
            let conn = Connection::abelian_symmetric_gauge(&LieAlgebra::abelian(1), ch, 1.0).unwrap();
            let x = dv(&[0.7, -0.2]);
            let b = curvature(&conn, &x, &dv(&[1.0, 0.0]), &dv(&[0.0, 1.0])).unwrap();
            assert_eq!(b[0], 1.0);
            let fd = Connection::new(&LieAlgebra::abelian(1), 2, ch, |x: &DVector<f64>| {
                DMatrix::from_row_slice(1, 2, &[-0.5 * x[1], 0.5 * x[0]])
            });
            let bf = curvature(&fd, &x, &dv(&[1.0, 0.0]), &dv(&[0.0, 1.0])).unwrap();
            assert!((bf[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_non_abelian_curvature_is_the_bracket_term() {
        let alg = LieAlgebra::so3();
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.0]);
        for ch in [Chirality::Left, Chirality::Right] {
            let conn = Connection::constant(&alg, ch, c.clone()).unwrap();
            let (u, v) = (dv(&[0.3, 2.0]), dv(&[-1.0, 0.4]));
            let b = curvature(&conn, &dv(&[5.0, 5.0]), &u, &v).unwrap();
            let want = alg.bracket(&AlgebraVector(&c * &u), &AlgebraVector(&c * &v)).unwrap() * ch.pm();
            assert!((&b.0 - &want.0).amax() < 1e-14);
        }
    }

    #[test]
    fn antisymmetry_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for ch in [Chirality::Left, Chirality::Right] {
            let conn = wavy(ch);
            for x in random_points(&mut rng, 3, 20) {
                let form = conn.curvature_at(&x).unwrap();
                let u = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                let v = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                assert_eq!(form.eval(&u, &v).unwrap().0, -form.eval(&v, &u).unwrap().0);
                assert_eq!(form.eval(&u, &u).unwrap().amax(), 0.0);
            }
        }
    }

    #[test]
    fn contraction_matches_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let conn = wavy(Chirality::Left);
        let x = dv(&[0.1, 0.2, -0.3]);
        let form = conn.curvature_at(&x).unwrap();
        let u = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let mu = DualVector::from_fn(3, |_| rng.random_range(-1.0..1.0));
        let c = form.contract(&mu, &u).unwrap();
        for l in 0..3 {
            let e = DVector::from_fn(3, |i, _| if i == l { 1.0 } else { 0.0 });
            let direct = mu.pair(&form.eval(&u, &e).unwrap());
            assert!((c[l] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_exterior_derivative_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alg = LieAlgebra::so3();
        let c = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let lin: Vec<DMatrix<f64>> = (0..2)
            .map(|_| DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let conn = Connection::affine(&alg, Chirality::Right, c, lin).unwrap();
        let pts = random_points(&mut rng, 2, 100);
        assert!(conn.exterior_derivative_residual(&pts).unwrap() < 1e-6);
        let sin = Connection::new(&alg, 2, Chirality::Right, |x: &DVector<f64>| {
            DMatrix::from_row_slice(3, 2, &[x[1].sin(), 0.0, 0.0, x[0].cos(), x[0] * x[1], 0.0])
        })
        .with_exterior_derivative(|x: &DVector<f64>| {
            let f = |v: f64| DMatrix::from_row_slice(2, 2, &[0.0, v, -v, 0.0]);
            vec![f(-x[1].cos()), f(-x[0].sin()), f(-x[0])]
        });
        assert!(sin.exterior_derivative_residual(&pts).unwrap() < 1e-6);
        let wrong = sin.clone().with_exterior_derivative(|_| vec![DMatrix::zeros(2, 2); 3]);
        assert!(wrong.exterior_derivative_residual(&pts).unwrap() > 1e-2);
    }

    #[test]
    fn bad_callback_shape_is_reported() {
        let conn = Connection::new(&LieAlgebra::so3(), 2, Chirality::Right, |_| DMatrix::zeros(2, 2));
        assert!(matches!(
            conn.matrix_at(&dv(&[0.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn covariant_derivative_matches_parallel_transport() {
        let alg = LieAlgebra::so3();
        let coeffs = DMatrix::from_row_slice(3, 2, &[0.4, 1.0, -0.7, 0.0, 1.3, 0.2]);
        let sigma = AlgebraVector::from_slice(&[0.5, -1.0, 2.0]);
        for ch in [Chirality::Left, Chirality::Right] {
            let conn = Connection::constant(&alg, ch, coeffs.clone()).unwrap();
            let x0 = dv(&[0.0, 0.0]);
            let e1 = dv(&[1.0, 0.0]);
            let got = ad_covariant_derivative(&conn, &x0, &e1, &sigma, &AlgebraVector::zeros(3)).unwrap();
            // transport the constant section back to t = 0 along x(t) = t e₁:
            // τ̇ = ∓[A(ẋ), τ] run backwards from τ(t) = σ
            let transport_back = |t: f64| {
                let a = &coeffs * &e1;
                let field = |_: f64, y: &DVector<f64>| Ok(alg.br(&a, y) * ch.pm());
                integrate(field, &sigma.0, t, &IntegratorConfig::with_dt(1e-5))
                    .unwrap()
                    .last()
                    .clone()
            };
            let h = 1e-4;
            let central =
                (transport_back(2.0 * h) - &sigma.0 * 1.0 - (transport_back(h) - &sigma.0) * 4.0) / (-2.0 * h);
            assert!((&got.0 - &central).amax() < 1e-6, "{ch}: {got:?} vs {central}");
            let expected = alg.bracket(&AlgebraVector(&coeffs * &e1), &sigma).unwrap() * ch.pm();
            assert!((&got.0 - &expected.0).amax() < 1e-15);
        }
    }

    #[test]
    fn dual_covariant_derivative_obeys_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for ch in [Chirality::Left, Chirality::Right] {
            let conn = wavy(ch);
            for _ in 0..20 {
                let x = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                let xd = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                let s = AlgebraVector::from_fn(3, |_| rng.random_range(-1.0..1.0));
                let sd = AlgebraVector::from_fn(3, |_| rng.random_range(-1.0..1.0));
                let mu = DualVector::from_fn(3, |_| rng.random_range(-1.0..1.0));
                let mud = DualVector::from_fn(3, |_| rng.random_range(-1.0..1.0));
                let ds = ad_covariant_derivative(&conn, &x, &xd, &s, &sd).unwrap();
                let dmu = coad_covariant_derivative(&conn, &x, &xd, &mu, &mud).unwrap();
                let lhs = mud.pair(&s) + mu.pair(&sd);
                let rhs = dmu.pair(&s) + mu.pair(&ds);
                assert!((lhs - rhs).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_connection_covariant_derivative_is_plain() {
        let conn = Connection::zero(&LieAlgebra::so3(), 2, Chirality::Left);
        let sd = AlgebraVector::from_slice(&[1.0, 2.0, 3.0]);
        let got = ad_covariant_derivative(&conn, &dv(&[1.0, 1.0]), &dv(&[3.0, 1.0]), &sd, &sd).unwrap();
        assert_eq!(got, sd);
        let zero = AlgebraVector::zeros(3);
        let conn = wavy(Chirality::Right);
        let got = ad_covariant_derivative(&conn, &dv(&[1.0, 1.0, 0.0]), &dv(&[3.0, 1.0, 2.0]), &zero, &zero).unwrap();
        assert_eq!(got.amax(), 0.0);
    }
}
