//! Lagrange–Poincaré and Ostrogradsky–Hamilton–Poincaré dynamics of order
//! `k ≤ 2` on trivial principal bundles `ℝ^m × G` with a flat constant
//! metric on the base.
//!
//! Everything is written in the trivialization: the adjoint bundle is
//! `ℝ^m × 𝔤`, a connection is a `𝔤`-valued one-form `A(x)` on the base and
//! the reduced curvature is `B = dA ± [A, A]`. Covariant derivatives become
//! `Dσ/Dt = σ̇ ± [A(ẋ), σ]` and `Dμ/Dt = μ̇ ∓ ad*_{A(ẋ)} μ`.

mod connection;
mod lp2;
mod ohp;
pub mod oracle;
mod wong;

use nalgebra::DVector;

use crate::algebra::{BaseMetric, GroupElement, Inertia};
use crate::error::Result;
use crate::euler_poincare::reconstruct_along;
use crate::solvers::{integrate, IntegratorConfig, Trajectory};

pub use connection::{
    ad_covariant_derivative, coad_covariant_derivative, curvature, Connection, ConnectionFn, CurvatureForm,
    ExteriorDerivativeFn, CURVATURE_FD_STEP,
};
pub use lp2::{lp2_energy, lp2_vector_field, KaluzaKlein2, LP2State};
pub use ohp::{
    gauged_bracket, lp2_state_from_wong2, ohp_vector_field, wong2_state_from_lp2, BundleHamiltonian, FiberHamiltonian,
    KaluzaKleinHamiltonian, OHPPartials, OHPState,
};
pub use wong::{wong2_energy, wong2_vector_field, wong_casimir, wong_energy, wong_vector_field, Wong2State, WongState};

/// A structured state with a flat coordinate layout.
pub trait FlatState: Sized {
    fn to_vector(&self) -> DVector<f64>;

    /// A state with the same slot structure as `self` read from `v`.
    fn like(&self, v: &DVector<f64>) -> Result<Self>;
}

/// Uniformly sampled solution in structured form, with the flat samples
/// kept for interpolation.
#[derive(Clone, Debug)]
pub struct BundleTrajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub flat: Trajectory,
}

impl<S> BundleTrajectory<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Largest deviation of a scalar monitor from its initial value.
    pub fn drift<F: Fn(&S) -> Result<f64>>(&self, monitor: F) -> Result<f64> {
        let values: Vec<f64> = self.states.iter().map(monitor).collect::<Result<_>>()?;
        Ok(values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max))
    }
}

/// Integrate a structured first-order system with fixed-step RK4.
pub fn integrate_state<S, F>(state0: &S, field: F, t_end: f64, config: &IntegratorConfig) -> Result<BundleTrajectory<S>>
where
    S: FlatState,
    F: Fn(&S) -> Result<S>,
{
    let flat = integrate(
        |_, y: &DVector<f64>| Ok(field(&state0.like(y)?)?.to_vector()),
        &state0.to_vector(),
        t_end,
        config,
    )?;
    let states = flat.states.iter().map(|y| state0.like(y)).collect::<Result<_>>()?;
    Ok(BundleTrajectory {
        times: flat.times.clone(),
        states,
        flat,
    })
}

pub fn integrate_wong(
    metric: &BaseMetric,
    kappa: &Inertia,
    conn: &Connection,
    state0: &WongState,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<BundleTrajectory<WongState>> {
    integrate_state(state0, |s| wong_vector_field(metric, kappa, conn, s), t_end, config)
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_wong2(
    metric: &BaseMetric,
    kappa: &Inertia,
    conn: &Connection,
    lambda1: f64,
    lambda2: f64,
    state0: &Wong2State,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<BundleTrajectory<Wong2State>> {
    integrate_state(
        state0,
        |s| wong2_vector_field(metric, kappa, conn, lambda1, lambda2, s),
        t_end,
        config,
    )
}

pub fn integrate_lp2(
    lag: &KaluzaKlein2,
    conn: &Connection,
    state0: &LP2State,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<BundleTrajectory<LP2State>> {
    integrate_state(state0, |s| lp2_vector_field(lag, conn, s), t_end, config)
}

pub fn integrate_ohp(
    h: &dyn BundleHamiltonian,
    conn: &Connection,
    state0: &OHPState,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<BundleTrajectory<OHPState>> {
    integrate_state(state0, |s| ohp_vector_field(h, conn, s), t_end, config)
}

/// Group curve of a Lagrange–Poincaré solution, from the reduced velocity
/// `ξ = σ − A(ρ)(ρ̇)` (`ξ = ġg⁻¹` right, `g⁻¹ġ` left).
pub fn reconstruct_lp2(
    lag: &KaluzaKlein2,
    conn: &Connection,
    g0: &GroupElement,
    tr: &BundleTrajectory<LP2State>,
    config: &IntegratorConfig,
) -> Result<Vec<GroupElement>> {
    let template = &tr.states[0];
    reconstruct_along(
        conn.algebra(),
        conn.chirality(),
        g0,
        &tr.flat,
        |y| {
            let s = template.like(y)?;
            let a = conn.apply(&s.rho[0], &s.rho[1])?;
            Ok(s.sigma(lag).0 - a.0)
        },
        config,
    )
}
