//! Built-in reduced Lagrangians `ℓ(ξ, …, ξ^(k−1))` and their Hamiltonians.
//!
//! Every model exposes its value, its partial derivatives `δℓ/δξ^(j)`, the
//! Ostrogradsky momenta `π_(i)` in closed form and the inverse Legendre
//! solve `accel` for the highest derivative. The reduced Euler–Poincaré
//! integrator keeps the jet `(ξ, …, ξ^(2k−3))` plus the Euler–Lagrange
//! momentum `m = π_(0)` as state and recovers `ξ^(2k−2)` through `accel`.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, Chirality, DualVector, Inertia, LieAlgebra};
use crate::error::{check_dim, Error, Result};
use crate::ostrogradsky::OLPState;

/// Condition-number bound for the top-slot Hessian.
pub const HYPERREGULAR_LIMIT: f64 = 1e10;

/// Tolerance of the ad-invariance check for bi-invariant metrics.
pub const AD_INVARIANCE_TOL: f64 = 1e-10;

/// A reduced Lagrangian of order `k` on `k𝔤`.
pub trait ReducedLagrangian: Send + Sync {
    fn order(&self) -> usize;
    fn algebra(&self) -> &LieAlgebra;
    fn chirality(&self) -> Chirality;

    /// `ℓ(ξ, …, ξ^(k−1))`; `jet` has length `k`.
    fn eval(&self, jet: &[AlgebraVector]) -> Result<f64>;

    /// `[δℓ/δξ, …, δℓ/δξ^(k−1)]`.
    fn grads(&self, jet: &[AlgebraVector]) -> Result<Vec<DualVector>>;

    /// Ostrogradsky momenta `[π_(0), …, π_(k−1)]` from the jet
    /// `(ξ, …, ξ^(2k−2))`, with
    /// `π_(i) = Σ_{j=0}^{k−i−1} (−1)^j dʲ/dtʲ δℓ/δξ^(i+j)`.
    fn momenta(&self, full_jet: &[AlgebraVector]) -> Result<Vec<DualVector>>;

    /// Solve `π_(0)(ξ, …, ξ^(2k−2)) = m` for `ξ^(2k−2)` given the lower
    /// jet `(ξ, …, ξ^(2k−3))`.
    fn accel(&self, lower: &[AlgebraVector], m: &DualVector) -> Result<AlgebraVector>;

    /// Hessian of `ℓ` in its top slot `ξ^(k−1)`.
    fn top_hessian(&self, jet: &[AlgebraVector]) -> Result<DMatrix<f64>>;

    /// Condition number of the top-slot Hessian at `jet`.
    fn hessian_condition(&self, jet: &[AlgebraVector]) -> Result<f64> {
        condition_number(&self.top_hessian(jet)?)
    }
}

/// Partial derivatives of a reduced Hamiltonian at an [`OLPState`].
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianPartials {
    /// `∂h/∂ξ^(j)` for `j = 0 … k−2`.
    pub d_xi: Vec<DualVector>,
    /// `∂h/∂π_(i)` for `i = 0 … k−1`.
    pub d_pi: Vec<AlgebraVector>,
}

/// A reduced Hamiltonian on `T*(k−1)𝔤 × 𝔤*`.
pub trait ReducedHamiltonian: Send + Sync {
    fn order(&self) -> usize;
    fn algebra(&self) -> &LieAlgebra;
    fn chirality(&self) -> Chirality;
    fn eval(&self, state: &OLPState) -> Result<f64>;
    fn partials(&self, state: &OLPState) -> Result<HamiltonianPartials>;
}

/// The built-in Lagrangian families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `ℓ = ½⟨Iξ, ξ⟩`, order 1.
    RigidBody { inertia: Inertia },
    /// `ℓ = ½‖ξ̇♭ ± ad*_ξ ξ♭‖² + τ²/2 ⟨Iξ, ξ⟩`, order 2; the dual norm uses `I⁻¹`.
    Spline2 {
        inertia: Inertia,
        bi_invariant: bool,
        tau: f64,
    },
    /// `ℓ = ½⟨Aξ, ξ⟩ + ½⟨Bξ̇, ξ̇⟩`, order 2.
    Quadratic2 { potential: DMatrix<f64>, kinetic: Inertia },
    /// `ℓ = ½⟨Iξ̈, ξ̈⟩`, order 3.
    Quadratic3 { inertia: Inertia },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::RigidBody { .. } => "rigid_body",
            Family::Spline2 { .. } => "spline2",
            Family::Quadratic2 { .. } => "quadratic2",
            Family::Quadratic3 { .. } => "quadratic3",
        }
    }
}

/// A built-in reduced Lagrangian.
#[derive(Clone, Debug)]
pub struct ReducedLagrangianModel {
    algebra: LieAlgebra,
    chirality: Chirality,
    family: Family,
}

fn check_inertia(algebra: &LieAlgebra, inertia: &Inertia) -> Result<()> {
    check_dim("inertia dimension", algebra.dim(), inertia.dim())
}

fn check_hyperregular(top: &DMatrix<f64>) -> Result<()> {
    let condition = condition_number(top)?;
    if condition >= HYPERREGULAR_LIMIT {
        return Err(Error::NotHyperregular { condition });
    }
    Ok(())
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(1.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let lo = sv.min();
    if lo <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(sv.max() / lo)
}

/// `k = 1` model `ℓ(ξ) = ½⟨Iξ, ξ⟩`.
pub fn rigid_body(algebra: &LieAlgebra, inertia: Inertia, chirality: Chirality) -> Result<ReducedLagrangianModel> {
    check_inertia(algebra, &inertia)?;
    check_hyperregular(inertia.matrix())?;
    Ok(ReducedLagrangianModel {
        algebra: algebra.clone(),
        chirality,
        family: Family::RigidBody { inertia },
    })
}

/// Riemannian (elastic when `tau > 0`) 2-spline Lagrangian.
///
/// With `bi_invariant` set, the inertia must be ad-invariant; this is
/// checked over basis triples.
pub fn spline2(
    algebra: &LieAlgebra,
    inertia: Inertia,
    bi_invariant: bool,
    tau: f64,
    chirality: Chirality,
) -> Result<ReducedLagrangianModel> {
    check_inertia(algebra, &inertia)?;
    if !tau.is_finite() {
        return Err(Error::InvalidArgument("tau must be finite".into()));
    }
    if bi_invariant {
        let residual = inertia.ad_invariance_residual(algebra)?;
        if residual > AD_INVARIANCE_TOL {
            return Err(Error::NotAdInvariant { residual });
        }
    }
    check_hyperregular(inertia.matrix())?;
    Ok(ReducedLagrangianModel {
        algebra: algebra.clone(),
        chirality,
        family: Family::Spline2 {
            inertia,
            bi_invariant,
            tau,
        },
    })
}

/// Decoupled quadratic second-order model `½⟨Aξ, ξ⟩ + ½⟨Bξ̇, ξ̇⟩`.
pub fn quadratic2(
    algebra: &LieAlgebra,
    potential: DMatrix<f64>,
    kinetic: Inertia,
    chirality: Chirality,
) -> Result<ReducedLagrangianModel> {
    check_inertia(algebra, &kinetic)?;
    let d = algebra.dim();
    if potential.nrows() != d || potential.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "potential matrix",
            expected: d,
            found: potential.nrows(),
        });
    }
    let asym = (&potential - potential.transpose()).amax();
    if asym > 1e-12 * potential.amax().max(1.0) {
        return Err(Error::InvalidArgument("potential matrix must be symmetric".into()));
    }
    check_hyperregular(kinetic.matrix())?;
    Ok(ReducedLagrangianModel {
        algebra: algebra.clone(),
        chirality,
        family: Family::Quadratic2 { potential, kinetic },
    })
}

/// Third-order model `ℓ = ½⟨Iξ̈, ξ̈⟩`.
pub fn quadratic3(algebra: &LieAlgebra, inertia: Inertia, chirality: Chirality) -> Result<ReducedLagrangianModel> {
    check_inertia(algebra, &inertia)?;
    check_hyperregular(inertia.matrix())?;
    Ok(ReducedLagrangianModel {
        algebra: algebra.clone(),
        chirality,
        family: Family::Quadratic3 { inertia },
    })
}

impl ReducedLagrangianModel {
    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Whether the built-in family is the bi-invariant 2-spline, for which
    /// `ξ⃛ = ±[ξ, ξ̈]` is available as a fast path.
    pub fn is_bi_invariant_spline(&self) -> bool {
        matches!(
            self.family,
            Family::Spline2 {
                bi_invariant: true,
                tau,
                ..
            } if tau == 0.0
        )
    }

    /// The inertia of the families that have a single one.
    pub fn inertia(&self) -> &Inertia {
        match &self.family {
            Family::RigidBody { inertia } | Family::Spline2 { inertia, .. } | Family::Quadratic3 { inertia } => inertia,
            Family::Quadratic2 { kinetic, .. } => kinetic,
        }
    }

    fn sign(&self) -> f64 {
        self.chirality.pm()
    }

    fn check_jet(&self, what: &'static str, expected_len: usize, jet: &[AlgebraVector]) -> Result<()> {
        check_dim(what, expected_len, jet.len())?;
        for x in jet {
            self.algebra.check(what, x.dim())?;
        }
        Ok(())
    }

    /// `ν = Iξ̇ ± ad*_ξ Iξ` for the 2-spline.
    fn spline_nu(&self, inertia: &Inertia, xi: &DVector<f64>, xid: &DVector<f64>) -> DVector<f64> {
        let ixi = inertia.lower(xi);
        inertia.lower(xid) + self.algebra.ads(xi, &ixi) * self.sign()
    }

    /// `δℓ/δξ` for the 2-spline given `η = ν♯`.
    fn spline_dxi(&self, inertia: &Inertia, tau: f64, xi: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        let alg = &self.algebra;
        let ixi = inertia.lower(xi);
        let twist = inertia.lower(&alg.br(xi, eta)) - alg.ads(eta, &ixi);
        twist * self.sign() + ixi * (tau * tau)
    }

    /// `ν̇` for the 2-spline.
    fn spline_nu_dot(
        &self,
        inertia: &Inertia,
        xi: &DVector<f64>,
        xid: &DVector<f64>,
        xidd: &DVector<f64>,
    ) -> DVector<f64> {
        let alg = &self.algebra;
        let mid = alg.ads(xid, &inertia.lower(xi)) + alg.ads(xi, &inertia.lower(xid));
        inertia.lower(xidd) + mid * self.sign()
    }
}

impl ReducedLagrangian for ReducedLagrangianModel {
    fn order(&self) -> usize {
        match self.family {
            Family::RigidBody { .. } => 1,
            Family::Spline2 { .. } | Family::Quadratic2 { .. } => 2,
            Family::Quadratic3 { .. } => 3,
        }
    }

    fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    fn chirality(&self) -> Chirality {
        self.chirality
    }

    fn eval(&self, jet: &[AlgebraVector]) -> Result<f64> {
        self.check_jet("lagrangian jet", self.order(), jet)?;
        Ok(match &self.family {
            Family::RigidBody { inertia } => 0.5 * inertia.norm_sq(&jet[0]),
            Family::Spline2 { inertia, tau, .. } => {
                let nu = self.spline_nu(inertia, &jet[0].0, &jet[1].0);
                0.5 * nu.dot(&inertia.raise(&nu)) + 0.5 * tau * tau * inertia.norm_sq(&jet[0])
            }
            Family::Quadratic2 { potential, kinetic } => {
                0.5 * jet[0].0.dot(&(potential * &jet[0].0)) + 0.5 * kinetic.norm_sq(&jet[1])
            }
            Family::Quadratic3 { inertia } => 0.5 * inertia.norm_sq(&jet[2]),
        })
    }

    fn grads(&self, jet: &[AlgebraVector]) -> Result<Vec<DualVector>> {
        self.check_jet("lagrangian jet", self.order(), jet)?;
        let d = self.algebra.dim();
        Ok(match &self.family {
            Family::RigidBody { inertia } => vec![DualVector(inertia.lower(&jet[0].0))],
            Family::Spline2 { inertia, tau, .. } => {
                let nu = self.spline_nu(inertia, &jet[0].0, &jet[1].0);
                let eta = inertia.raise(&nu);
                vec![
                    DualVector(self.spline_dxi(inertia, *tau, &jet[0].0, &eta)),
                    DualVector(nu),
                ]
            }
            Family::Quadratic2 { potential, kinetic } => {
                vec![DualVector(potential * &jet[0].0), DualVector(kinetic.lower(&jet[1].0))]
            }
            Family::Quadratic3 { inertia } => vec![
                DualVector::zeros(d),
                DualVector::zeros(d),
                DualVector(inertia.lower(&jet[2].0)),
            ],
        })
    }

    fn momenta(&self, full_jet: &[AlgebraVector]) -> Result<Vec<DualVector>> {
        let k = self.order();
        self.check_jet("full jet", 2 * k - 1, full_jet)?;
        let j = |i: usize| &full_jet[i].0;
        Ok(match &self.family {
            Family::RigidBody { inertia } => vec![DualVector(inertia.lower(j(0)))],
            Family::Spline2 { inertia, tau, .. } => {
                let nu = self.spline_nu(inertia, j(0), j(1));
                let eta = inertia.raise(&nu);
                let dxi = self.spline_dxi(inertia, *tau, j(0), &eta);
                let nu_dot = self.spline_nu_dot(inertia, j(0), j(1), j(2));
                vec![DualVector(dxi - nu_dot), DualVector(nu)]
            }
            Family::Quadratic2 { potential, kinetic } => vec![
                DualVector(potential * j(0) - kinetic.lower(j(2))),
                DualVector(kinetic.lower(j(1))),
            ],
            Family::Quadratic3 { inertia } => vec![
                DualVector(inertia.lower(j(4))),
                DualVector(-inertia.lower(j(3))),
                DualVector(inertia.lower(j(2))),
            ],
        })
    }

    fn accel(&self, lower: &[AlgebraVector], m: &DualVector) -> Result<AlgebraVector> {
        let k = self.order();
        self.check_jet("lower jet", 2 * k - 2, lower)?;
        self.algebra.check("momentum", m.dim())?;
        let out = match &self.family {
            Family::RigidBody { inertia } => inertia.raise(&m.0),
            Family::Spline2 { inertia, tau, .. } => {
                let (xi, xid) = (&lower[0].0, &lower[1].0);
                let nu = self.spline_nu(inertia, xi, xid);
                let eta = inertia.raise(&nu);
                let dxi = self.spline_dxi(inertia, *tau, xi, &eta);
                let alg = &self.algebra;
                let mid = alg.ads(xid, &inertia.lower(xi)) + alg.ads(xi, &inertia.lower(xid));
                inertia.raise(&(dxi - mid * self.sign() - &m.0))
            }
            Family::Quadratic2 { potential, kinetic } => kinetic.raise(&(potential * &lower[0].0 - &m.0)),
            Family::Quadratic3 { inertia } => inertia.raise(&m.0),
        };
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("accel"));
        }
        Ok(AlgebraVector(out))
    }

    fn top_hessian(&self, jet: &[AlgebraVector]) -> Result<DMatrix<f64>> {
        self.check_jet("lagrangian jet", self.order(), jet)?;
        Ok(self.inertia().matrix().clone())
    }
}

/// Hamiltonian counterpart of a built-in Lagrangian.
#[derive(Clone, Debug)]
pub struct ReducedHamiltonianModel {
    lagrangian: ReducedLagrangianModel,
}

/// The Hamiltonian `h = e_ℓ ∘ leg⁻¹` of a 2-spline model.
///
/// With tension `τ > 0` the extra term `−τ²/2 ⟨Iξ, ξ⟩` is included.
pub fn spline2_hamiltonian(model: &ReducedLagrangianModel) -> Result<ReducedHamiltonianModel> {
    match model.family {
        Family::Spline2 { .. } => Ok(ReducedHamiltonianModel {
            lagrangian: model.clone(),
        }),
        _ => Err(Error::InvalidArgument(format!(
            "spline2_hamiltonian expects an order-2 spline model, got {}",
            model.family.name()
        ))),
    }
}

/// Closed-form Hamiltonian of any built-in family.
pub fn hamiltonian(model: &ReducedLagrangianModel) -> ReducedHamiltonianModel {
    ReducedHamiltonianModel {
        lagrangian: model.clone(),
    }
}

impl ReducedHamiltonianModel {
    pub fn lagrangian(&self) -> &ReducedLagrangianModel {
        &self.lagrangian
    }

    fn check_state(&self, s: &OLPState) -> Result<()> {
        let k = self.order();
        check_dim("olp xi jet", k - 1, s.xi_jet.len())?;
        check_dim("olp momenta", k - 1, s.pi.len())?;
        let alg = &self.lagrangian.algebra;
        for x in &s.xi_jet {
            alg.check("olp xi entry", x.dim())?;
        }
        for p in &s.pi {
            alg.check("olp momentum entry", p.dim())?;
        }
        alg.check("olp pi0", s.pi0.dim())
    }
}

impl ReducedHamiltonian for ReducedHamiltonianModel {
    fn order(&self) -> usize {
        self.lagrangian.order()
    }

    fn algebra(&self) -> &LieAlgebra {
        &self.lagrangian.algebra
    }

    fn chirality(&self) -> Chirality {
        self.lagrangian.chirality
    }

    fn eval(&self, s: &OLPState) -> Result<f64> {
        self.check_state(s)?;
        let sign = self.lagrangian.sign();
        let alg = &self.lagrangian.algebra;
        Ok(match &self.lagrangian.family {
            Family::RigidBody { inertia } => 0.5 * inertia.dual_norm_sq(&s.pi0),
            Family::Spline2 { inertia, tau, .. } => {
                let xi = &s.xi_jet[0].0;
                let p1 = &s.pi[0].0;
                let twist = inertia.raise(&alg.ads(xi, &inertia.lower(xi)));
                0.5 * inertia.dual_norm_sq(&s.pi[0]) + s.pi0.0.dot(xi)
                    - sign * p1.dot(&twist)
                    - 0.5 * tau * tau * inertia.norm_sq(&s.xi_jet[0])
            }
            Family::Quadratic2 { potential, kinetic } => {
                let xi = &s.xi_jet[0].0;
                s.pi0.0.dot(xi) + 0.5 * kinetic.dual_norm_sq(&s.pi[0]) - 0.5 * xi.dot(&(potential * xi))
            }
            Family::Quadratic3 { inertia } => {
                s.pi0.0.dot(&s.xi_jet[0].0) + s.pi[0].0.dot(&s.xi_jet[1].0) + 0.5 * inertia.dual_norm_sq(&s.pi[1])
            }
        })
    }

    fn partials(&self, s: &OLPState) -> Result<HamiltonianPartials> {
        self.check_state(s)?;
        let sign = self.lagrangian.sign();
        let alg = &self.lagrangian.algebra;
        Ok(match &self.lagrangian.family {
            Family::RigidBody { inertia } => HamiltonianPartials {
                d_xi: Vec::new(),
                d_pi: vec![AlgebraVector(inertia.raise(&s.pi0.0))],
            },
            Family::Spline2 { inertia, tau, .. } => {
                let xi = &s.xi_jet[0].0;
                let ixi = inertia.lower(xi);
                let w = inertia.raise(&s.pi[0].0);
                let d_pi1 = inertia.raise(&(&s.pi[0].0 - alg.ads(xi, &ixi) * sign));
                let twist_grad = inertia.lower(&alg.br(xi, &w)) - alg.ads(&w, &ixi);
                let d_xi = &s.pi0.0 - twist_grad * sign - &ixi * (tau * tau);
                HamiltonianPartials {
                    d_xi: vec![DualVector(d_xi)],
                    d_pi: vec![AlgebraVector(xi.clone()), AlgebraVector(d_pi1)],
                }
            }
            Family::Quadratic2 { potential, kinetic } => {
                let xi = &s.xi_jet[0].0;
                HamiltonianPartials {
                    d_xi: vec![DualVector(&s.pi0.0 - potential * xi)],
                    d_pi: vec![AlgebraVector(xi.clone()), AlgebraVector(kinetic.raise(&s.pi[0].0))],
                }
            }
            Family::Quadratic3 { inertia } => HamiltonianPartials {
                d_xi: vec![s.pi0.clone(), s.pi[0].clone()],
                d_pi: vec![
                    s.xi_jet[0].clone(),
                    s.xi_jet[1].clone(),
                    AlgebraVector(inertia.raise(&s.pi[1].0)),
                ],
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> AlgebraVector {
        AlgebraVector::from_slice(x)
    }

    fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> AlgebraVector {
        AlgebraVector::from_fn(d, |_| rng.random_range(-1.0..1.0))
    }

    fn so3_models(ch: Chirality) -> Vec<ReducedLagrangianModel> {
        let g = LieAlgebra::so3();
        let i = || Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        vec![
            rigid_body(&g, i(), ch).unwrap(),
            spline2(&g, i(), false, 0.0, ch).unwrap(),
            spline2(&g, i(), false, 0.7, ch).unwrap(),
            spline2(&g, Inertia::identity(3), true, 0.0, ch).unwrap(),
            quadratic2(&g, DMatrix::from_diagonal_element(3, 3, 0.5), i(), ch).unwrap(),
            quadratic3(&g, i(), ch).unwrap(),
        ]
    }

    #[test]
    fn rigid_body_values() {
        let m = rigid_body(
            &LieAlgebra::so3(),
            Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(),
            Chirality::Left,
        )
        .unwrap();
        assert_eq!(m.eval(&[v(&[1.0, 0.0, 0.0])]).unwrap(), 0.5);
        assert_eq!(
            m.grads(&[v(&[0.0, 1.0, 0.0])]).unwrap()[0],
            DualVector::from_slice(&[0.0, 2.0, 0.0])
        );
    }

    #[test]
    fn bi_invariant_spline_is_half_squared_velocity() {
        let m = spline2(&LieAlgebra::so3(), Inertia::identity(3), true, 0.0, Chirality::Right).unwrap();
        assert_eq!(m.eval(&[v(&[1.0, 0.0, 0.0]), v(&[0.0, 0.0, 0.0])]).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let xi = random_vec(&mut rng, 3);
            let xid = random_vec(&mut rng, 3);
            let l = m.eval(&[xi.clone(), xid.clone()]).unwrap();
            assert_relative_eq!(l, 0.5 * xid.norm().powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn abelian_spline_ignores_position() {
        let m = spline2(
            &LieAlgebra::abelian(3),
            Inertia::identity(3),
            false,
            0.0,
            Chirality::Left,
        )
        .unwrap();
        let l = m.eval(&[v(&[5.0, -1.0, 2.0]), v(&[1.0, 2.0, 2.0])]).unwrap();
        assert_eq!(l, 4.5);
    }

    #[test]
    fn bi_invariance_is_enforced() {
        let err = spline2(
            &LieAlgebra::so3(),
            Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(),
            true,
            0.0,
            Chirality::Right,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotAdInvariant { .. }));
    }

    #[test]
    fn grads_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for ch in [Chirality::Left, Chirality::Right] {
            for m in so3_models(ch) {
                let k = m.order();
                for _ in 0..100 {
                    let jet: Vec<_> = (0..k).map(|_| random_vec(&mut rng, 3)).collect();
                    let g = m.grads(&jet).unwrap();
                    for slot in 0..k {
                        for (c, &exact) in g[slot].0.iter().enumerate() {
                            let eps = 1e-6;
                            let mut p = jet.clone();
                            let mut q = jet.clone();
                            p[slot].0[c] += eps;
                            q[slot].0[c] -= eps;
                            let fd = (m.eval(&p).unwrap() - m.eval(&q).unwrap()) / (2.0 * eps);
                            let scale = exact.abs().max(1.0);
                            assert!(
                                (fd - exact).abs() <= 1e-6 * scale,
                                "{} slot {slot} comp {c}: fd {fd} exact {exact}",
                                m.family().name()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn accel_inverts_top_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for ch in [Chirality::Left, Chirality::Right] {
            for m in so3_models(ch) {
                let k = m.order();
                for _ in 0..50 {
                    let lower: Vec<_> = (0..2 * k - 2).map(|_| random_vec(&mut rng, 3)).collect();
                    let target = DualVector::from_fn(3, |_| rng.random_range(-2.0..2.0));
                    let top = m.accel(&lower, &target).unwrap();
                    let mut full = lower.clone();
                    full.push(top);
                    let pi0 = &m.momenta(&full).unwrap()[0];
                    assert_relative_eq!(pi0.0, target.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn bi_invariant_twist_vanishes() {
        let g = LieAlgebra::so3();
        let i = Inertia::identity(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let xi = random_vec(&mut rng, 3);
            let t = g.ad_star(&xi, &i.flat(&xi).unwrap()).unwrap();
            assert!(t.amax() < 1e-10);
        }
    }

    #[test]
    fn spline_momenta_closed_forms() {
        let g = LieAlgebra::so3();
        let m = spline2(&g, Inertia::identity(3), true, 0.0, Chirality::Left).unwrap();
        let jet = [v(&[0.3, -0.2, 0.5]), v(&[1.0, 0.4, -0.3]), v(&[0.2, 0.1, 0.9])];
        let p = m.momenta(&jet).unwrap();
        assert_relative_eq!(p[1].0, jet[1].0, epsilon = 1e-15);
        assert_relative_eq!(p[0].0, -&jet[2].0, epsilon = 1e-15);

        let aniso = Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        for ch in [Chirality::Left, Chirality::Right] {
            let m = spline2(&g, aniso.clone(), false, 0.0, ch).unwrap();
            let p = m.momenta(&jet).unwrap();
            let flat = aniso.flat(&jet[0]).unwrap();
            let expected = aniso.flat(&jet[1]).unwrap() + g.ad_star(&jet[0], &flat).unwrap() * ch.pm();
            assert_relative_eq!(p[1].0, expected.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn hamiltonian_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for ch in [Chirality::Left, Chirality::Right] {
            for m in so3_models(ch) {
                let h = hamiltonian(&m);
                let k = m.order();
                for _ in 0..30 {
                    let s = OLPState {
                        xi_jet: (0..k - 1).map(|_| random_vec(&mut rng, 3)).collect(),
                        pi: (0..k - 1)
                            .map(|_| DualVector::from_fn(3, |_| rng.random_range(-1.0..1.0)))
                            .collect(),
                        pi0: DualVector::from_fn(3, |_| rng.random_range(-1.0..1.0)),
                    };
                    let p = h.partials(&s).unwrap();
                    let flat = s.to_vector();
                    let exact = OLPState::flatten_partials(&p);
                    for c in 0..flat.len() {
                        let eps = 1e-6;
                        let mut a = flat.clone();
                        let mut b = flat.clone();
                        a[c] += eps;
                        b[c] -= eps;
                        let sa = OLPState::from_vector(&a, k, 3).unwrap();
                        let sb = OLPState::from_vector(&b, k, 3).unwrap();
                        let fd = (h.eval(&sa).unwrap() - h.eval(&sb).unwrap()) / (2.0 * eps);
                        assert!((fd - exact[c]).abs() <= 1e-6 * exact[c].abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn abelian_hamiltonian_drops_twist() {
        let g = LieAlgebra::abelian(3);
        let m = spline2(&g, Inertia::identity(3), false, 0.0, Chirality::Right).unwrap();
        let h = spline2_hamiltonian(&m).unwrap();
        let s = OLPState {
            xi_jet: vec![v(&[1.0, 2.0, 3.0])],
            pi: vec![DualVector::from_slice(&[1.0, 0.0, 1.0])],
            pi0: DualVector::from_slice(&[0.5, 0.5, 0.5]),
        };
        assert_relative_eq!(h.eval(&s).unwrap(), 1.0 + 3.0, epsilon = 1e-15);
        let rb = rigid_body(&g, Inertia::identity(3), Chirality::Right).unwrap();
        assert!(spline2_hamiltonian(&rb).is_err());
    }

    #[test]
    fn hyperregularity_is_checked() {
        let g = LieAlgebra::so3();
        let i = Inertia::diagonal(&[1.0, 1.0, 1e-11]).unwrap();
        assert!(matches!(
            rigid_body(&g, i, Chirality::Left),
            Err(Error::NotHyperregular { .. })
        ));
    }
}
