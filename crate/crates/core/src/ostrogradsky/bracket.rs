use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::algebra::{AlgebraVector, Chirality, LieAlgebra};
use crate::error::{check_dim, Result};
use crate::models::{HamiltonianPartials, ReducedHamiltonian, ReducedHamiltonianModel};

use super::OLPState;

/// A scalar function on phase space with exact partial derivatives.
pub trait Observable: Send + Sync {
    fn eval(&self, state: &OLPState) -> Result<f64>;
    fn partials(&self, state: &OLPState) -> Result<HamiltonianPartials>;
}

impl Observable for ReducedHamiltonianModel {
    fn eval(&self, state: &OLPState) -> Result<f64> {
        ReducedHamiltonian::eval(self, state)
    }

    fn partials(&self, state: &OLPState) -> Result<HamiltonianPartials> {
        ReducedHamiltonian::partials(self, state)
    }
}

/// `f(x) = c + bᵀx + ½ xᵀQx` in the flat phase-space coordinates of
/// [`OLPState::to_vector`], with `Q` symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObservable {
    order: usize,
    dim: usize,
    pub constant: f64,
    pub linear: DVector<f64>,
    pub quadratic: DMatrix<f64>,
}

impl QuadraticObservable {
    /// Build from coefficients; `quadratic` is symmetrized.
    pub fn new(order: usize, dim: usize, constant: f64, linear: DVector<f64>, quadratic: DMatrix<f64>) -> Result<Self> {
        let n = (2 * order - 1) * dim;
        check_dim("observable linear part", n, linear.len())?;
        check_dim("observable quadratic rows", n, quadratic.nrows())?;
        check_dim("observable quadratic cols", n, quadratic.ncols())?;
        let quadratic = (&quadratic + quadratic.transpose()) * 0.5;
        Ok(Self {
            order,
            dim,
            constant,
            linear,
            quadratic,
        })
    }

    /// Random coefficients uniform in `[−1, 1]`.
    pub fn random<R: Rng>(order: usize, dim: usize, rng: &mut R) -> Self {
        let n = (2 * order - 1) * dim;
        let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        Self::new(order, dim, rng.random_range(-1.0..1.0), b, q).expect("consistent sizes")
    }

    /// Constant Hessian `Q`.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.quadratic
    }

    /// Flat gradient `b + Qx`.
    pub fn gradient(&self, state: &OLPState) -> Result<DVector<f64>> {
        let x = self.flat(state)?;
        Ok(&self.linear + &self.quadratic * x)
    }

    fn flat(&self, state: &OLPState) -> Result<DVector<f64>> {
        let x = state.to_vector();
        check_dim("observable state", self.linear.len(), x.len())?;
        Ok(x)
    }
}

impl Observable for QuadraticObservable {
    fn eval(&self, state: &OLPState) -> Result<f64> {
        let x = self.flat(state)?;
        Ok(self.constant + self.linear.dot(&x) + 0.5 * x.dot(&(&self.quadratic * &x)))
    }

    fn partials(&self, state: &OLPState) -> Result<HamiltonianPartials> {
        OLPState::unflatten_partials(&self.gradient(state)?, self.order, self.dim)
    }
}

/// The flat coordinate `x_index` of [`OLPState::to_vector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoordinateObservable {
    pub order: usize,
    pub dim: usize,
    pub index: usize,
}

impl Observable for CoordinateObservable {
    fn eval(&self, state: &OLPState) -> Result<f64> {
        let x = state.to_vector();
        check_dim("observable state", (2 * self.order - 1) * self.dim, x.len())?;
        Ok(x[self.index])
    }

    fn partials(&self, _state: &OLPState) -> Result<HamiltonianPartials> {
        let n = (2 * self.order - 1) * self.dim;
        let mut e = DVector::zeros(n);
        e[self.index] = 1.0;
        OLPState::unflatten_partials(&e, self.order, self.dim)
    }
}

/// Reduced Poisson bracket: canonical on the `(ξ^(j−1), π_(j))` pairs plus
/// `±⟨π_(0), [∂f/∂π_(0), ∂g/∂π_(0)]⟩`.
pub fn reduced_bracket(
    algebra: &LieAlgebra,
    chirality: Chirality,
    state: &OLPState,
    df: &HamiltonianPartials,
    dg: &HamiltonianPartials,
) -> f64 {
    let mut s = 0.0;
    for j in 0..df.d_xi.len() {
        s += df.d_xi[j].pair(&dg.d_pi[j + 1]) - dg.d_xi[j].pair(&df.d_pi[j + 1]);
    }
    let lp = algebra.br(&df.d_pi[0].0, &dg.d_pi[0].0);
    s + chirality.pm() * state.pi0.pair(&AlgebraVector(lp))
}

/// The Poisson tensor `P(x)` with `{f, g} = ∇fᵀ P ∇g` in flat coordinates.
pub fn poisson_tensor(algebra: &LieAlgebra, chirality: Chirality, state: &OLPState) -> DMatrix<f64> {
    let d = algebra.dim();
    let k = state.order();
    let n = (2 * k - 1) * d;
    let mut p = DMatrix::zeros(n, n);
    let half = (k - 1) * d;
    for i in 0..half {
        p[(i, half + i)] = 1.0;
        p[(half + i, i)] = -1.0;
    }
    let off = 2 * half;
    let s = chirality.pm();
    for a in 0..d {
        for b in 0..d {
            let mut v = 0.0;
            for c in 0..d {
                v += state.pi0[c] * algebra.structure_constant(c, a, b);
            }
            p[(off + a, off + b)] = s * v;
        }
    }
    p
}

/// Cyclic sum `{{f,g},h} + {{g,h},f} + {{h,f},g}` for quadratic
/// observables, with the partials of the inner brackets computed exactly.
pub fn jacobi_residual(
    algebra: &LieAlgebra,
    chirality: Chirality,
    state: &OLPState,
    obs: [&QuadraticObservable; 3],
) -> Result<f64> {
    let d = algebra.dim();
    let off = 2 * (state.order() - 1) * d;
    let p = poisson_tensor(algebra, chirality, state);
    let grads: Vec<DVector<f64>> = obs.iter().map(|o| o.gradient(state)).collect::<Result<_>>()?;
    // ∇{f,g} = Q_f P ∇g − Q_g P ∇f + (∇fᵀ ∂P/∂x_l ∇g)_l, where P is affine in π_(0)
    let inner_grad = |f: usize, g: usize| -> DVector<f64> {
        let mut out = obs[f].hessian() * (&p * &grads[g]) - obs[g].hessian() * (&p * &grads[f]);
        for a in 0..d {
            let mut v = 0.0;
            for i in 0..d {
                for j in 0..d {
                    v += grads[f][off + i] * algebra.structure_constant(a, i, j) * grads[g][off + j];
                }
            }
            out[off + a] += chirality.pm() * v;
        }
        out
    };
    let mut total = 0.0;
    for (f, g, h) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        total += inner_grad(f, g).dot(&(&p * &grads[h]));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::DualVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, k: usize, d: usize) -> OLPState {
        let v = DVector::from_fn((2 * k - 1) * d, |_, _| rng.random_range(-2.0..2.0));
        OLPState::from_vector(&v, k, d).unwrap()
    }

    fn algebras() -> Vec<LieAlgebra> {
        vec![LieAlgebra::so3(), LieAlgebra::se3(), LieAlgebra::abelian(2)]
    }

    #[test]
    fn linear_observables_give_lie_poisson() {
        let alg = LieAlgebra::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ch in [Chirality::Left, Chirality::Right] {
            let s = random_state(&mut rng, 2, 3);
            let a = AlgebraVector::from_slice(&[1.0, 0.5, -0.2]);
            let b = AlgebraVector::from_slice(&[0.0, 2.0, 1.0]);
            let lin = |x: &AlgebraVector| HamiltonianPartials {
                d_xi: vec![DualVector::zeros(3)],
                d_pi: vec![x.clone(), AlgebraVector::zeros(3)],
            };
            let got = reduced_bracket(&alg, ch, &s, &lin(&a), &lin(&b));
            let want = ch.pm() * s.pi0.pair(&alg.bracket(&a, &b).unwrap());
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn antisymmetry_and_tensor_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for alg in algebras() {
            let d = alg.dim();
            for ch in [Chirality::Left, Chirality::Right] {
                for k in 1..=3 {
                    let s = random_state(&mut rng, k, d);
                    let f = QuadraticObservable::random(k, d, &mut rng);
                    let g = QuadraticObservable::random(k, d, &mut rng);
                    let (df, dg) = (f.partials(&s).unwrap(), g.partials(&s).unwrap());
                    let fg = reduced_bracket(&alg, ch, &s, &df, &dg);
                    let gf = reduced_bracket(&alg, ch, &s, &dg, &df);
                    assert_eq!(fg, -gf);
                    assert_eq!(reduced_bracket(&alg, ch, &s, &df, &df), 0.0);
                    let p = poisson_tensor(&alg, ch, &s);
                    let via_p = f.gradient(&s).unwrap().dot(&(&p * g.gradient(&s).unwrap()));
                    assert!((fg - via_p).abs() < 1e-12 * fg.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn leibniz_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for alg in algebras() {
            let d = alg.dim();
            for ch in [Chirality::Left, Chirality::Right] {
                let k = 2;
                let s = random_state(&mut rng, k, d);
                let f = QuadraticObservable::random(k, d, &mut rng);
                let g = QuadraticObservable::random(k, d, &mut rng);
                let h = QuadraticObservable::random(k, d, &mut rng);
                let (fv, gv) = (f.eval(&s).unwrap(), g.eval(&s).unwrap());
                let grad_fg = f.gradient(&s).unwrap() * gv + g.gradient(&s).unwrap() * fv;
                let dfg = OLPState::unflatten_partials(&grad_fg, k, d).unwrap();
                let dh = h.partials(&s).unwrap();
                let lhs = reduced_bracket(&alg, ch, &s, &dfg, &dh);
                let rhs = fv * reduced_bracket(&alg, ch, &s, &g.partials(&s).unwrap(), &dh)
                    + gv * reduced_bracket(&alg, ch, &s, &f.partials(&s).unwrap(), &dh);
                assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn jacobi_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for alg in algebras() {
            let d = alg.dim();
            for ch in [Chirality::Left, Chirality::Right] {
                for k in 1..=3 {
                    for _ in 0..10 {
                        let s = random_state(&mut rng, k, d);
                        let f = QuadraticObservable::random(k, d, &mut rng);
                        let g = QuadraticObservable::random(k, d, &mut rng);
                        let h = QuadraticObservable::random(k, d, &mut rng);
                        let r = jacobi_residual(&alg, ch, &s, [&f, &g, &h]).unwrap();
                        assert!(r.abs() < 1e-10, "{} k={k}: {r}", alg.name());
                    }
                }
            }
        }
    }
}
