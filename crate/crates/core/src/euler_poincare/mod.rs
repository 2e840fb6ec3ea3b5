//! kth-order Euler–Poincaré dynamics
//! `(d/dt ± ad*_ξ) Σ_j (−1)^j dʲ/dtʲ δℓ/δξ^(j) = 0`.
//!
//! The state keeps the group element, the lower jet `(ξ, …, ξ^(2k−3))` and
//! the Euler–Lagrange momentum `m = Σ_j (−1)^j dʲ/dtʲ δℓ/δξ^(j)`. The
//! momentum obeys the coadjoint equation `ṁ = ∓ad*_ξ m` and the top entry
//! `ξ^(2k−2)` is recovered by the model's inverse Legendre solve. For
//! `k = 1` the lower jet is empty and `ξ` itself comes from `m`.

mod oracle;
mod reconstruct;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{stack, AlgebraVector, Chirality, DualVector, GroupElement, LieAlgebra, Unstack};
use crate::error::{check_dim, Error, Result};
use crate::models::{ReducedLagrangian, ReducedLagrangianModel};
use crate::solvers::{cf4_step, integrate, rk4_group_step, IntegratorConfig, Scheme, Trajectory};

pub use oracle::{
    discrete_action, discrete_action_gradient, flat_action, flat_action_gradient, reduce_discrete_path,
    smooth_variations, FlatLagrangian, Variation,
};
pub use reconstruct::{reconstruct, reduce_group_jet};

/// Ordered stack `(ξ, ξ̇, …, ξ^(m))` of algebra vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct JetState {
    pub derivatives: Vec<AlgebraVector>,
}

impl JetState {
    pub fn new(derivatives: Vec<AlgebraVector>) -> Self {
        Self { derivatives }
    }

    /// Highest derivative order held (`len − 1`).
    pub fn order(&self) -> usize {
        self.derivatives.len().saturating_sub(1)
    }
}

/// Phase point of the reduced Euler–Poincaré system.
#[derive(Clone, Debug)]
pub struct EPState {
    pub g: GroupElement,
    /// `(ξ, …, ξ^(2k−3))`; empty for `k = 1`.
    pub jet: Vec<AlgebraVector>,
    pub m: DualVector,
}

/// Time derivative of an [`EPState`].
#[derive(Clone, Debug)]
pub struct EPDerivative {
    pub g_dot: DMatrix<f64>,
    pub jet_dot: Vec<AlgebraVector>,
    pub m_dot: DualVector,
}

fn lower_len(model: &dyn ReducedLagrangian) -> usize {
    2 * model.order() - 2
}

impl EPState {
    /// Build from the full jet `(ξ, …, ξ^(2k−2))`; `m` is computed from the
    /// model's momentum map.
    pub fn from_full_jet(model: &dyn ReducedLagrangian, g: GroupElement, full_jet: &[AlgebraVector]) -> Result<Self> {
        let m = model.momenta(full_jet)?.swap_remove(0);
        let jet = full_jet[..lower_len(model)].to_vec();
        Self::check_group(model, &g)?;
        Ok(Self { g, jet, m })
    }

    /// Build from the lower jet and an explicit momentum.
    pub fn new(model: &dyn ReducedLagrangian, g: GroupElement, jet: Vec<AlgebraVector>, m: DualVector) -> Result<Self> {
        check_dim("ep lower jet", lower_len(model), jet.len())?;
        for x in &jet {
            model.algebra().check("ep jet entry", x.dim())?;
        }
        model.algebra().check("ep momentum", m.dim())?;
        Self::check_group(model, &g)?;
        Ok(Self { g, jet, m })
    }

    fn check_group(model: &dyn ReducedLagrangian, g: &GroupElement) -> Result<()> {
        if g.algebra() != model.algebra() {
            return Err(Error::InvalidArgument(format!(
                "group element of '{}' used with a model on '{}'",
                g.algebra().name(),
                model.algebra().name()
            )));
        }
        Ok(())
    }

    /// Full jet `(ξ, …, ξ^(2k−2))`.
    pub fn full_jet(&self, model: &dyn ReducedLagrangian) -> Result<Vec<AlgebraVector>> {
        let top = model.accel(&self.jet, &self.m)?;
        let mut full = self.jet.clone();
        full.push(top);
        Ok(full)
    }

    /// The body or spatial velocity `ξ`.
    pub fn xi(&self, model: &dyn ReducedLagrangian) -> Result<AlgebraVector> {
        match self.jet.first() {
            Some(x) => Ok(x.clone()),
            None => model.accel(&self.jet, &self.m),
        }
    }

    /// Flat algebra-variable vector `(jet…, m)`.
    pub fn algebra_vector(&self) -> DVector<f64> {
        stack(self.jet.iter().map(|x| &x.0).chain(std::iter::once(&self.m.0)))
    }
}

/// Decode a flat algebra-variable vector into `(lower jet, m)`.
fn split(y: &DVector<f64>, d: usize, lower: usize) -> (Vec<AlgebraVector>, DualVector) {
    let mut u = Unstack::new(y);
    let jet = (0..lower).map(|_| AlgebraVector(u.take(d))).collect();
    let m = DualVector(u.take(d));
    debug_assert_eq!(u.remaining(), 0);
    (jet, m)
}

/// `ġ` for `ξ = ġg⁻¹` (right) or `ξ = g⁻¹ġ` (left).
pub fn reconstruction_rate(chirality: Chirality, g: &GroupElement, xi: &AlgebraVector) -> Result<DMatrix<f64>> {
    let x = g.algebra().hat(xi)?;
    Ok(match chirality {
        Chirality::Right => x * g.matrix(),
        Chirality::Left => g.matrix() * x,
    })
}

/// Right-hand side of the Euler–Poincaré system at `state`.
pub fn ep_vector_field(model: &dyn ReducedLagrangian, state: &EPState) -> Result<EPDerivative> {
    let alg = model.algebra();
    let top = model.accel(&state.jet, &state.m)?;
    let xi = state.jet.first().cloned().unwrap_or_else(|| top.clone());
    let mut jet_dot: Vec<AlgebraVector> = state.jet.iter().skip(1).cloned().collect();
    if !state.jet.is_empty() {
        jet_dot.push(top);
    }
    let m_dot = DualVector(alg.ads(&xi.0, &state.m.0) * model.chirality().mp());
    let g_dot = reconstruction_rate(model.chirality(), &state.g, &xi)?;
    Ok(EPDerivative { g_dot, jet_dot, m_dot })
}

/// Algebra part of the Euler–Poincaré field on flat vectors.
fn algebra_field<'a>(model: &'a dyn ReducedLagrangian) -> impl Fn(f64, &DVector<f64>) -> Result<DVector<f64>> + 'a {
    let d = model.algebra().dim();
    let lower = lower_len(model);
    let sign = model.chirality().mp();
    move |_t, y| {
        let (jet, m) = split(y, d, lower);
        let top = model.accel(&jet, &m)?;
        let xi = jet.first().map(|x| &x.0).unwrap_or(&top.0);
        let m_dot = model.algebra().ads(xi, &m.0) * sign;
        let mut out = Vec::with_capacity(y.len());
        for x in jet.iter().skip(1) {
            out.extend_from_slice(x.as_slice());
        }
        if lower > 0 {
            out.extend_from_slice(top.as_slice());
        }
        out.extend_from_slice(m_dot.as_slice());
        Ok(DVector::from_vec(out))
    }
}

/// Sampled solution of a reduced system together with its reconstructed
/// group curve.
#[derive(Clone, Debug)]
pub struct EPTrajectory {
    pub chirality: Chirality,
    pub times: Vec<f64>,
    pub g: Vec<GroupElement>,
    /// Full jets `(ξ, …, ξ^(2k−2))` at every sample.
    pub jets: Vec<Vec<AlgebraVector>>,
    pub m: Vec<DualVector>,
}

impl EPTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn xi(&self, i: usize) -> &AlgebraVector {
        &self.jets[i][0]
    }

    /// `ξ` series.
    pub fn xi_path(&self) -> Vec<AlgebraVector> {
        self.jets.iter().map(|j| j[0].clone()).collect()
    }

    /// Noether momentum at every sample.
    pub fn noether(&self) -> Result<Vec<DualVector>> {
        self.g
            .iter()
            .zip(&self.m)
            .map(|(g, m)| transport_momentum(self.chirality, g, m))
            .collect()
    }

    /// `max_t ‖N(t) − N(0)‖` for the Noether momentum `N`.
    pub fn noether_drift(&self) -> Result<f64> {
        let n = self.noether()?;
        Ok(n.iter().map(|v| (&v.0 - &n[0].0).norm()).fold(0.0, f64::max))
    }

    /// Largest group-constraint defect along the curve.
    pub fn max_constraint_defect(&self) -> f64 {
        self.g.iter().map(GroupElement::constraint_defect).fold(0.0, f64::max)
    }
}

/// Reconstruct the group curve along a sampled algebra-variable
/// trajectory, using Hermite midpoints of the state for `ξ(t + h/2)`.
pub(crate) fn reconstruct_along<X>(
    algebra: &LieAlgebra,
    chirality: Chirality,
    g0: &GroupElement,
    tr: &Trajectory,
    xi_of: X,
    config: &IntegratorConfig,
) -> Result<Vec<GroupElement>>
where
    X: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = tr.len();
    let xis: Vec<DVector<f64>> = tr.states.iter().map(&xi_of).collect::<Result<_>>()?;
    let mut gs = Vec::with_capacity(n);
    let mut g = g0.clone();
    gs.push(g.clone());
    for i in 0..n - 1 {
        let h = tr.times[i + 1] - tr.times[i];
        let xi_half = xi_of(&tr.hermite_midpoint(i))?;
        let next = match config.scheme {
            Scheme::CommutatorFree4 => cf4_step(algebra, chirality, g.matrix(), &xis[i], &xi_half, &xis[i + 1], h),
            Scheme::Rk4 => rk4_group_step(algebra, chirality, g.matrix(), &xis[i], &xi_half, &xis[i + 1], h),
        };
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { time: tr.times[i + 1] });
        }
        g = GroupElement::from_parts(algebra.clone(), next);
        if config.reprojection_interval > 0 && (i + 1) % config.reprojection_interval == 0 {
            g.reproject();
        }
        gs.push(g.clone());
    }
    Ok(gs)
}

/// Integrate an algebra-variable system and reconstruct `g` alongside it.
///
/// `xi_of` extracts `ξ` from a flat state; `jet_of` extracts the full jet
/// and the momentum for output.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_with_reconstruction<F, X, J>(
    algebra: &LieAlgebra,
    chirality: Chirality,
    g0: &GroupElement,
    y0: &DVector<f64>,
    field: F,
    xi_of: X,
    jet_of: J,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<EPTrajectory>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
    X: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    J: Fn(&DVector<f64>) -> Result<(Vec<AlgebraVector>, DualVector)>,
{
    let tr: Trajectory = integrate(&field, y0, t_end, config)?;
    let gs = reconstruct_along(algebra, chirality, g0, &tr, &xi_of, config)?;
    let n = tr.len();
    let mut jets = Vec::with_capacity(n);
    let mut ms = Vec::with_capacity(n);
    for y in &tr.states {
        let (j, m) = jet_of(y)?;
        jets.push(j);
        ms.push(m);
    }
    Ok(EPTrajectory {
        chirality,
        times: tr.times,
        g: gs,
        jets,
        m: ms,
    })
}

/// Integrate the Euler–Poincaré system from `state0` over `[0, t_end]`.
pub fn integrate_ep(
    model: &dyn ReducedLagrangian,
    state0: &EPState,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<EPTrajectory> {
    let alg = model.algebra();
    let d = alg.dim();
    let lower = lower_len(model);
    let xi_of = |y: &DVector<f64>| -> Result<DVector<f64>> {
        if lower > 0 {
            Ok(DVector::from_column_slice(&y.as_slice()[..d]))
        } else {
            let (jet, m) = split(y, d, 0);
            model.accel(&jet, &m).map(|x| x.0)
        }
    };
    let jet_of = |y: &DVector<f64>| -> Result<(Vec<AlgebraVector>, DualVector)> {
        let (mut jet, m) = split(y, d, lower);
        jet.push(model.accel(&jet, &m)?);
        Ok((jet, m))
    };
    integrate_with_reconstruction(
        alg,
        model.chirality(),
        &state0.g,
        &state0.algebra_vector(),
        algebra_field(model),
        xi_of,
        jet_of,
        t_end,
        config,
    )
}

/// `ξ⃛ = ±[ξ, ξ̈]`, the 2-spline equation for a bi-invariant metric.
///
/// Returns `(ξ̇, ξ̈, ξ⃛)`.
pub fn bi_invariant_spline_field(
    algebra: &LieAlgebra,
    chirality: Chirality,
    state: &[AlgebraVector; 3],
) -> Result<[AlgebraVector; 3]> {
    for x in state {
        algebra.check("spline jet entry", x.dim())?;
    }
    let jerk = algebra.br(&state[0].0, &state[2].0) * chirality.pm();
    Ok([state[1].clone(), state[2].clone(), AlgebraVector(jerk)])
}

/// Integrate the bi-invariant 2-spline fast path from `(ξ, ξ̇, ξ̈)`.
///
/// `model` must be a bi-invariant `spline2` without tension; it supplies
/// the momenta reported along the trajectory.
pub fn integrate_bi_invariant_spline(
    model: &ReducedLagrangianModel,
    g0: &GroupElement,
    jet0: &[AlgebraVector; 3],
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<EPTrajectory> {
    if !model.is_bi_invariant_spline() {
        return Err(Error::InvalidArgument(format!(
            "bi-invariant spline flow needs a bi-invariant spline2 model without tension, got {}",
            model.family().name()
        )));
    }
    let alg = model.algebra().clone();
    let ch = model.chirality();
    let d = alg.dim();
    let y0 = stack(jet0.iter().map(|x| &x.0));
    let field = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let s = y.as_slice();
        let xi = DVector::from_column_slice(&s[..d]);
        let xidd = DVector::from_column_slice(&s[2 * d..]);
        let jerk = alg.br(&xi, &xidd) * ch.pm();
        let mut out = s[d..].to_vec();
        out.extend_from_slice(jerk.as_slice());
        Ok(DVector::from_vec(out))
    };
    let xi_of = |y: &DVector<f64>| Ok(DVector::from_column_slice(&y.as_slice()[..d]));
    let jet_of = |y: &DVector<f64>| -> Result<(Vec<AlgebraVector>, DualVector)> {
        let mut u = Unstack::new(y);
        let jet: Vec<AlgebraVector> = (0..3).map(|_| AlgebraVector(u.take(d))).collect();
        let m = model.momenta(&jet)?.swap_remove(0);
        Ok((jet, m))
    };
    integrate_with_reconstruction(&alg, ch, g0, &y0, field, xi_of, jet_of, t_end, config)
}

/// `Ad*`-transported momentum, constant along exact solutions.
///
/// Right chirality (`ξ = ġg⁻¹`) transports by `Ad*_g`, left chirality
/// (`ξ = g⁻¹ġ`) by `Ad*_{g⁻¹}`.
pub fn transport_momentum(chirality: Chirality, g: &GroupElement, m: &DualVector) -> Result<DualVector> {
    match chirality {
        Chirality::Right => g.coadjoint(m),
        Chirality::Left => g.inverse().coadjoint(m),
    }
}

/// Noether momentum of an [`EPState`].
pub fn noether_momentum(model: &dyn ReducedLagrangian, state: &EPState) -> Result<DualVector> {
    transport_momentum(model.chirality(), &state.g, &state.m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Inertia;
    use crate::models::{quadratic3, rigid_body, spline2};
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> AlgebraVector {
        AlgebraVector::from_slice(x)
    }

    fn rb(ch: Chirality) -> ReducedLagrangianModel {
        rigid_body(&LieAlgebra::so3(), Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(), ch).unwrap()
    }

    #[test]
    fn principal_axis_is_equilibrium() {
        for ch in [Chirality::Left, Chirality::Right] {
            let m = rb(ch);
            let g = GroupElement::identity(m.algebra());
            let s = EPState::from_full_jet(&m, g, &[v(&[1.0, 0.0, 0.0])]).unwrap();
            let d = ep_vector_field(&m, &s).unwrap();
            assert_eq!(d.m_dot.amax(), 0.0);
        }
    }

    #[test]
    fn left_rigid_body_matches_euler_equations() {
        // Π̇ = Π × Ω for the body angular momentum
        let m = rb(Chirality::Left);
        let omega = v(&[0.0, 1.0, 1.0]);
        let s = EPState::from_full_jet(&m, GroupElement::identity(m.algebra()), std::slice::from_ref(&omega)).unwrap();
        let d = ep_vector_field(&m, &s).unwrap();
        let pi = [0.0, 2.0, 3.0];
        let expected = [
            pi[1] * 1.0 - pi[2] * 1.0,
            pi[2] * 0.0 - pi[0] * 1.0,
            pi[0] * 1.0 - pi[1] * 0.0,
        ];
        assert_relative_eq!(d.m_dot.0, DVector::from_column_slice(&expected), epsilon = 1e-15);
    }

    #[test]
    fn abelian_spline_field_is_cubic() {
        let alg = LieAlgebra::abelian(3);
        let m = spline2(&alg, Inertia::identity(3), false, 0.0, Chirality::Right).unwrap();
        let full = [v(&[1.0, 2.0, 3.0]), v(&[0.1, 0.2, 0.3]), v(&[-1.0, 0.5, 2.0])];
        let s = EPState::from_full_jet(&m, GroupElement::identity(&alg), &full).unwrap();
        assert_relative_eq!(s.m.0, -&full[2].0, epsilon = 1e-15);
        let d = ep_vector_field(&m, &s).unwrap();
        assert_eq!(d.m_dot.amax(), 0.0);
        assert_relative_eq!(d.jet_dot[1].0, full[2].0, epsilon = 1e-15);
    }

    #[test]
    fn fast_path_matches_general_field() {
        let alg = LieAlgebra::so3();
        for ch in [Chirality::Left, Chirality::Right] {
            let m = spline2(&alg, Inertia::identity(3), true, 0.0, ch).unwrap();
            let full = [v(&[0.3, -0.7, 0.2]), v(&[1.0, 0.1, -0.4]), v(&[-0.5, 0.8, 0.6])];
            let s = EPState::from_full_jet(&m, GroupElement::identity(&alg), &full).unwrap();
            let d = ep_vector_field(&m, &s).unwrap();
            let fast = bi_invariant_spline_field(&alg, ch, &full).unwrap();
            // ṁ = −ξ⃛ for the identity metric
            assert_relative_eq!(d.m_dot.0, -&fast[2].0, epsilon = 1e-10);
        }
    }

    #[test]
    fn parallel_acceleration_gives_zero_jerk() {
        let alg = LieAlgebra::so3();
        let s = [v(&[0.3, -0.6, 0.9]), v(&[1.0, 0.0, 0.0]), v(&[0.1, -0.2, 0.3])];
        let d = bi_invariant_spline_field(&alg, Chirality::Right, &s).unwrap();
        assert!(d[2].amax() < 1e-16);
    }

    #[test]
    fn rigid_body_noether_drift() {
        for ch in [Chirality::Left, Chirality::Right] {
            let m = rb(ch);
            let g0 = m.algebra().exp(&v(&[0.2, -0.1, 0.4])).unwrap();
            let s = EPState::from_full_jet(&m, g0, &[v(&[0.3, 1.0, -0.6])]).unwrap();
            let tr = integrate_ep(&m, &s, 10.0, &IntegratorConfig::default()).unwrap();
            let drift = tr.noether_drift().unwrap();
            assert!(drift <= 1e-8, "{ch}: drift {drift}");
            assert!(tr.max_constraint_defect() < 1e-8);
        }
    }

    #[test]
    fn wrong_transport_direction_drifts() {
        let m = rb(Chirality::Right);
        let s = EPState::from_full_jet(&m, GroupElement::identity(m.algebra()), &[v(&[0.3, 1.0, -0.6])]).unwrap();
        let tr = integrate_ep(&m, &s, 2.0, &IntegratorConfig::default()).unwrap();
        let n0 = transport_momentum(Chirality::Left, &tr.g[0], &tr.m[0]).unwrap();
        let n1 = transport_momentum(Chirality::Left, tr.g.last().unwrap(), tr.m.last().unwrap()).unwrap();
        assert!((&n1.0 - &n0.0).norm() > 1e-2);
    }

    #[test]
    fn third_order_model_integrates() {
        let alg = LieAlgebra::so3();
        let m = quadratic3(&alg, Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(), Chirality::Left).unwrap();
        let full: Vec<_> = (0..5).map(|i| v(&[0.1 * i as f64, -0.2, 0.05 * i as f64])).collect();
        let s = EPState::from_full_jet(&m, GroupElement::identity(&alg), &full).unwrap();
        let tr = integrate_ep(&m, &s, 1.0, &IntegratorConfig::with_dt(1e-3)).unwrap();
        assert!(tr.noether_drift().unwrap() < 1e-9);
        assert_eq!(tr.jets[0].len(), 5);
    }

    #[test]
    fn lower_jet_length_is_checked() {
        let alg = LieAlgebra::so3();
        let sp = spline2(&alg, Inertia::identity(3), false, 0.0, Chirality::Left).unwrap();
        let short = EPState::new(
            &sp,
            GroupElement::identity(&alg),
            vec![v(&[0.0, 0.0, 0.0])],
            DualVector::zeros(3),
        );
        assert!(matches!(short, Err(Error::DimensionMismatch { .. })));
        let other = GroupElement::identity(&LieAlgebra::se3());
        assert!(EPState::new(&sp, other, vec![v(&[0.0; 3]), v(&[0.0; 3])], DualVector::zeros(3)).is_err());
    }
}
