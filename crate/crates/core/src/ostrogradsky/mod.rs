//! Reduced Legendre transform, reduced energy and the
//! Ostrogradsky–Lie–Poisson equations on `T*(k−1)𝔤 × 𝔤*`.
//!
//! A phase point is `(ξ, …, ξ^(k−2), π_(1), …, π_(k−1), π_(0))`. The first
//! `k − 1` velocity slots and momenta form canonical pairs; `π_(0)` carries
//! the Lie–Poisson part and evolves by the coadjoint equation
//! `π̇_(0) = ∓ad*_{∂h/∂π_(0)} π_(0)`.

mod bracket;

use nalgebra::DVector;

use crate::algebra::{stack, AlgebraVector, Chirality, DualVector, GroupElement, LieAlgebra, Unstack};
use crate::error::{check_dim, Error, Result};
use crate::euler_poincare::{integrate_ep, reconstruct_along, EPState};
use crate::models::{hamiltonian, HamiltonianPartials, ReducedHamiltonian, ReducedLagrangian, ReducedLagrangianModel};
use crate::solvers::{integrate, IntegratorConfig};

pub use bracket::{
    jacobi_residual, poisson_tensor, reduced_bracket, CoordinateObservable, Observable, QuadraticObservable,
};

/// Phase point `(ξ, …, ξ^(k−2), π_(1), …, π_(k−1), π_(0))`.
#[derive(Clone, Debug, PartialEq)]
pub struct OLPState {
    /// `(ξ, …, ξ^(k−2))`.
    pub xi_jet: Vec<AlgebraVector>,
    /// `(π_(1), …, π_(k−1))`.
    pub pi: Vec<DualVector>,
    pub pi0: DualVector,
}

impl OLPState {
    /// Order `k` of the underlying Lagrangian.
    pub fn order(&self) -> usize {
        self.pi.len() + 1
    }

    /// Flat coordinates in the order `ξ-jet, π_(1…k−1), π_(0)`.
    pub fn to_vector(&self) -> DVector<f64> {
        stack(
            self.xi_jet
                .iter()
                .map(|x| &x.0)
                .chain(self.pi.iter().map(|p| &p.0))
                .chain(std::iter::once(&self.pi0.0)),
        )
    }

    /// Inverse of [`OLPState::to_vector`] for order `k` on a `d`-dimensional algebra.
    pub fn from_vector(v: &DVector<f64>, k: usize, d: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        check_dim("olp flat state", (2 * k - 1) * d, v.len())?;
        let mut u = Unstack::new(v);
        let xi_jet = (0..k - 1).map(|_| AlgebraVector(u.take(d))).collect();
        let pi = (0..k - 1).map(|_| DualVector(u.take(d))).collect();
        let pi0 = DualVector(u.take(d));
        Ok(Self { xi_jet, pi, pi0 })
    }

    /// Hamiltonian partials flattened in the same layout as
    /// [`OLPState::to_vector`]: `∂h/∂ξ^(j)`, then `∂h/∂π_(1…k−1)`, then `∂h/∂π_(0)`.
    pub fn flatten_partials(p: &HamiltonianPartials) -> DVector<f64> {
        stack(
            p.d_xi
                .iter()
                .map(|x| &x.0)
                .chain(p.d_pi.iter().skip(1).map(|x| &x.0))
                .chain(p.d_pi.first().map(|x| &x.0)),
        )
    }

    /// Inverse of [`OLPState::flatten_partials`].
    pub fn unflatten_partials(v: &DVector<f64>, k: usize, d: usize) -> Result<HamiltonianPartials> {
        let s = Self::from_vector(v, k, d)?;
        let mut d_pi = vec![AlgebraVector(s.pi0.0)];
        d_pi.extend(s.pi.into_iter().map(|p| AlgebraVector(p.0)));
        Ok(HamiltonianPartials {
            d_xi: s.xi_jet.into_iter().map(|x| DualVector(x.0)).collect(),
            d_pi,
        })
    }
}

fn check_full_jet(model: &dyn ReducedLagrangian, full_jet: &[AlgebraVector]) -> Result<()> {
    let k = model.order();
    if k > 3 {
        return Err(Error::Unsupported(format!(
            "Legendre transform for order {k} (supported: 1 to 3)"
        )));
    }
    check_dim("full jet", 2 * k - 1, full_jet.len())?;
    for x in full_jet {
        model.algebra().check("full jet entry", x.dim())?;
    }
    Ok(())
}

/// Reduced Legendre transform `(ξ, …, ξ^(2k−2)) ↦ (ξ, …, ξ^(k−2), π_(1…k−1), π_(0))`.
pub fn legendre(model: &dyn ReducedLagrangian, full_jet: &[AlgebraVector]) -> Result<OLPState> {
    check_full_jet(model, full_jet)?;
    let k = model.order();
    let mut momenta = model.momenta(full_jet)?;
    let pi0 = momenta.remove(0);
    Ok(OLPState {
        xi_jet: full_jet[..k - 1].to_vec(),
        pi: momenta,
        pi0,
    })
}

/// Reduced energy `e_ℓ = Σ_{i<k} ⟨π_(i), ξ^(i)⟩ − ℓ(ξ, …, ξ^(k−1))`.
pub fn reduced_energy(model: &dyn ReducedLagrangian, full_jet: &[AlgebraVector]) -> Result<f64> {
    check_full_jet(model, full_jet)?;
    let k = model.order();
    let momenta = model.momenta(full_jet)?;
    let pairing: f64 = momenta.iter().zip(full_jet).map(|(p, x)| p.pair(x)).sum();
    Ok(pairing - model.eval(&full_jet[..k])?)
}

/// Right-hand side of the Ostrogradsky–Lie–Poisson equations, returned
/// in the shape of a phase point.
pub fn olp_vector_field(h: &dyn ReducedHamiltonian, state: &OLPState) -> Result<OLPState> {
    let p = h.partials(state)?;
    let k = h.order();
    check_dim("olp partials d_pi", k, p.d_pi.len())?;
    check_dim("olp partials d_xi", k - 1, p.d_xi.len())?;
    let pi0_dot = h.algebra().ads(&p.d_pi[0].0, &state.pi0.0) * h.chirality().mp();
    Ok(OLPState {
        xi_jet: p.d_pi[1..].to_vec(),
        pi: p.d_xi.iter().map(|x| -x).collect(),
        pi0: DualVector(pi0_dot),
    })
}

/// Sampled solution of the Ostrogradsky–Lie–Poisson equations.
#[derive(Clone, Debug)]
pub struct OLPTrajectory {
    pub chirality: Chirality,
    pub times: Vec<f64>,
    /// Group curve reconstructed from `ξ = ∂h/∂π_(0)`.
    pub g: Vec<GroupElement>,
    pub states: Vec<OLPState>,
}

impl OLPTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `h` at every sample.
    pub fn energies(&self, h: &dyn ReducedHamiltonian) -> Result<Vec<f64>> {
        self.states.iter().map(|s| h.eval(s)).collect()
    }

    /// `max_t |h(t) − h(0)|`.
    pub fn energy_drift(&self, h: &dyn ReducedHamiltonian) -> Result<f64> {
        let e = self.energies(h)?;
        Ok(e.iter().map(|v| (v - e[0]).abs()).fold(0.0, f64::max))
    }

    /// `max_t |‖π_(0)(t)‖ − ‖π_(0)(0)‖|`, the coadjoint-orbit Casimir drift on `so(3)*`.
    pub fn casimir_drift(&self) -> f64 {
        let c0 = self.states[0].pi0.norm();
        self.states
            .iter()
            .map(|s| (s.pi0.norm() - c0).abs())
            .fold(0.0, f64::max)
    }
}

fn check_state(h: &dyn ReducedHamiltonian, state: &OLPState) -> Result<()> {
    let k = h.order();
    check_dim("olp xi jet", k - 1, state.xi_jet.len())?;
    check_dim("olp momenta", k - 1, state.pi.len())?;
    let alg = h.algebra();
    for x in &state.xi_jet {
        alg.check("olp xi entry", x.dim())?;
    }
    for p in &state.pi {
        alg.check("olp momentum entry", p.dim())?;
    }
    alg.check("olp pi0", state.pi0.dim())
}

/// Integrate the Ostrogradsky–Lie–Poisson equations from `state0` and
/// reconstruct the group curve from `g0`.
pub fn integrate_olp(
    h: &dyn ReducedHamiltonian,
    g0: &GroupElement,
    state0: &OLPState,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<OLPTrajectory> {
    check_state(h, state0)?;
    if g0.algebra() != h.algebra() {
        return Err(Error::InvalidArgument(
            "initial group element from a different group".into(),
        ));
    }
    let k = h.order();
    let d = h.algebra().dim();
    let field = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let s = OLPState::from_vector(y, k, d)?;
        Ok(olp_vector_field(h, &s)?.to_vector())
    };
    let tr = integrate(field, &state0.to_vector(), t_end, config)?;
    let xi_of = |y: &DVector<f64>| -> Result<DVector<f64>> {
        let s = OLPState::from_vector(y, k, d)?;
        Ok(h.partials(&s)?.d_pi.swap_remove(0).0)
    };
    let g = reconstruct_along(h.algebra(), h.chirality(), g0, &tr, xi_of, config)?;
    let states = tr
        .states
        .iter()
        .map(|y| OLPState::from_vector(y, k, d))
        .collect::<Result<_>>()?;
    Ok(OLPTrajectory {
        chirality: h.chirality(),
        times: tr.times,
        g,
        states,
    })
}

/// Integrate the Euler–Poincaré and Ostrogradsky–Lie–Poisson systems from
/// Legendre-matched initial data and return the largest sup-norm deviation
/// between the OLP states and the Legendre image of the EP jets.
pub fn olp_equivalence_check(
    model: &ReducedLagrangianModel,
    full_jet: &[AlgebraVector],
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<f64> {
    let alg: &LieAlgebra = model.algebra();
    let g0 = GroupElement::identity(alg);
    let h = hamiltonian(model);
    let ep0 = EPState::from_full_jet(model, g0.clone(), full_jet)?;
    let olp0 = legendre(model, full_jet)?;
    let (ep, olp) = crate::par::join(
        || integrate_ep(model, &ep0, t_end, config),
        || integrate_olp(&h, &g0, &olp0, t_end, config),
    );
    let (ep, olp) = (ep?, olp?);
    let mut worst: f64 = 0.0;
    for (jet, s) in ep.jets.iter().zip(&olp.states) {
        let mapped = legendre(model, jet)?;
        worst = worst.max((mapped.to_vector() - s.to_vector()).amax());
    }
    Ok(worst)
}
