//! Brute-force stationarity oracle for discretized higher-order actions.
//!
//! A sampled curve is turned into a discrete action with central
//! difference stencils (second order). Directional derivatives of that
//! action along smooth variations supported away from the endpoints are
//! computed exactly by linearizing the stencils, so on a true solution they
//! vanish like `O(Δt²)` and on a non-solution they stay of order one.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::AlgebraVector;
use crate::algebra::{Chirality, GroupElement, LieAlgebra};
use crate::error::{Error, Result};
use crate::models::ReducedLagrangian;
use crate::par;

/// A variation field sampled at the path nodes. For group paths the
/// entries are algebra coordinates `η_i` and the perturbed path is
/// `exp(εη_i) g_i` (right) or `g_i exp(εη_i)` (left); for flat paths they
/// are displacements `δq_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Variation {
    pub values: Vec<DVector<f64>>,
}

/// Seeded random smooth variations on `n_points` uniform nodes.
///
/// Each is a bump supported on the middle 80% of the time window times a
/// random combination of three sine modes, so it vanishes with all its
/// derivatives near both endpoints. The node values depend only on the
/// normalized time, so the same seed gives the same continuous field under
/// refinement.
pub fn smooth_variations(dim: usize, n_points: usize, count: usize, seed: u64) -> Vec<Variation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = n_points.saturating_sub(1).max(1) as f64;
    (0..count)
        .map(|_| {
            let coeffs: Vec<DVector<f64>> = (0..3)
                .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)))
                .collect();
            let values = (0..n_points)
                .map(|i| {
                    let tau = i as f64 / last;
                    let u = (tau - 0.5) / 0.4;
                    if u.abs() >= 1.0 {
                        return DVector::zeros(dim);
                    }
                    let bump = (1.0 - 1.0 / (1.0 - u * u)).exp();
                    let s = (tau - 0.1) / 0.8;
                    let mut v = DVector::zeros(dim);
                    for (m, c) in coeffs.iter().enumerate() {
                        v += c * (((m + 1) as f64) * std::f64::consts::PI * s).sin();
                    }
                    v * bump
                })
                .collect();
            Variation { values }
        })
        .collect()
}

fn min_points(k: usize) -> usize {
    (2 * k + 1).max(5)
}

fn check_order(k: usize) -> Result<()> {
    if k == 0 || k > 3 {
        return Err(Error::Unsupported(format!(
            "discrete action for order {k} (supported: 1 to 3)"
        )));
    }
    Ok(())
}

/// Reduced velocities `ξ_i` from central differences at interior nodes
/// `1 … N−2`, returned together with the node-local matrices needed to
/// linearize them.
struct GroupStencil {
    xi: Vec<DVector<f64>>,
    /// Right: `g_{i+1} g_i⁻¹`; left: `g_i⁻¹ g_{i+1}`.
    fwd: Vec<DMatrix<f64>>,
    /// Right: `g_{i−1} g_i⁻¹`; left: `g_i⁻¹ g_{i−1}`.
    bwd: Vec<DMatrix<f64>>,
}

fn group_stencil(path: &[GroupElement], chirality: Chirality, dt: f64) -> GroupStencil {
    let n = path.len();
    let alg = path[0].algebra();
    let mut xi = vec![DVector::zeros(alg.dim()); n];
    let mut fwd = vec![DMatrix::zeros(0, 0); n];
    let mut bwd = vec![DMatrix::zeros(0, 0); n];
    for i in 1..n - 1 {
        let w = path[i].inverse();
        let (f, b) = match chirality {
            Chirality::Right => (path[i + 1].matrix() * w.matrix(), path[i - 1].matrix() * w.matrix()),
            Chirality::Left => (w.matrix() * path[i + 1].matrix(), w.matrix() * path[i - 1].matrix()),
        };
        xi[i] = alg.vee_raw(&(&f - &b)) / (2.0 * dt);
        fwd[i] = f;
        bwd[i] = b;
    }
    GroupStencil { xi, fwd, bwd }
}

/// Derivative stack `(x, ẋ, ẍ)` (first `k` entries) at node `i` from
/// central differences of a node series.
fn jet_at(series: &[DVector<f64>], i: usize, k: usize, dt: f64) -> Vec<DVector<f64>> {
    let mut jet = vec![series[i].clone()];
    if k >= 2 {
        jet.push((&series[i + 1] - &series[i - 1]) / (2.0 * dt));
    }
    if k >= 3 {
        jet.push((&series[i + 1] - &series[i] * 2.0 + &series[i - 1]) / (dt * dt));
    }
    jet
}

/// Node range of the discrete action for a velocity series defined on
/// `lo … hi` (inclusive).
fn action_nodes(lo: usize, hi: usize, k: usize) -> std::ops::RangeInclusive<usize> {
    if k == 1 {
        lo..=hi
    } else {
        (lo + 1)..=(hi - 1)
    }
}

/// Reduced jets `(ξ, …, ξ^(k−1))` of a discrete group path at the nodes
/// where the discrete action is evaluated, with those node indices.
pub fn reduce_discrete_path(
    path: &[GroupElement],
    chirality: Chirality,
    dt: f64,
    k: usize,
) -> Result<Vec<(usize, Vec<AlgebraVector>)>> {
    check_order(k)?;
    let n = path.len();
    if n < min_points(k) {
        return Err(Error::StencilTooShort {
            needed: min_points(k),
            got: n,
        });
    }
    let st = group_stencil(path, chirality, dt);
    Ok(action_nodes(1, n - 2, k)
        .map(|i| {
            let jet = jet_at(&st.xi, i, k, dt).into_iter().map(AlgebraVector).collect();
            (i, jet)
        })
        .collect())
}

fn check_path(model: &dyn ReducedLagrangian, path: &[GroupElement]) -> Result<()> {
    let n = path.len();
    let k = model.order();
    check_order(k)?;
    if n < min_points(k) {
        return Err(Error::StencilTooShort {
            needed: min_points(k),
            got: n,
        });
    }
    for g in path {
        if g.algebra() != model.algebra() {
            return Err(Error::InvalidArgument("path element from a different group".into()));
        }
    }
    Ok(())
}

/// Discrete action `Σ_i ℓ(ξ_i, …) Δt` of a sampled group path.
pub fn discrete_action(model: &dyn ReducedLagrangian, path: &[GroupElement], dt: f64) -> Result<f64> {
    check_path(model, path)?;
    let mut s = 0.0;
    for (_, jet) in reduce_discrete_path(path, model.chirality(), dt, model.order())? {
        s += model.eval(&jet)? * dt;
    }
    Ok(s)
}

fn hat_or_zero(alg: &LieAlgebra, v: &DVector<f64>) -> Option<DMatrix<f64>> {
    if v.iter().all(|x| *x == 0.0) {
        None
    } else {
        Some(alg.hat_raw(v))
    }
}

/// Directional derivatives of the discrete action along each variation.
///
/// Variations must have one value per path node. Errors with
/// [`Error::StencilTooShort`] below `2k + 1` nodes (and at least 5).
pub fn discrete_action_gradient(
    model: &dyn ReducedLagrangian,
    path: &[GroupElement],
    dt: f64,
    variations: &[Variation],
) -> Result<Vec<f64>> {
    check_path(model, path)?;
    let n = path.len();
    let k = model.order();
    let ch = model.chirality();
    let alg = model.algebra();
    for v in variations {
        if v.values.len() != n {
            return Err(Error::DimensionMismatch {
                what: "variation length",
                expected: n,
                found: v.values.len(),
            });
        }
    }
    let st = group_stencil(path, ch, dt);
    let nodes: Vec<usize> = action_nodes(1, n - 2, k).collect();
    let grads: Vec<Vec<DVector<f64>>> = nodes
        .iter()
        .map(|&i| {
            let jet: Vec<AlgebraVector> = jet_at(&st.xi, i, k, dt).into_iter().map(AlgebraVector).collect();
            model.grads(&jet).map(|g| g.into_iter().map(|p| p.0).collect())
        })
        .collect::<Result<_>>()?;

    let directional = |var: &Variation| -> f64 {
        let hats: Vec<Option<DMatrix<f64>>> = var.values.iter().map(|v| hat_or_zero(alg, v)).collect();
        let mut dxi = vec![DVector::zeros(alg.dim()); n];
        for i in 1..n - 1 {
            let mut acc: Option<DMatrix<f64>> = None;
            let mut add = |m: DMatrix<f64>| match acc.as_mut() {
                Some(a) => *a += m,
                None => acc = Some(m),
            };
            match ch {
                Chirality::Right => {
                    if let Some(h) = &hats[i + 1] {
                        add(h * &st.fwd[i]);
                    }
                    if let Some(h) = &hats[i - 1] {
                        add(-(h * &st.bwd[i]));
                    }
                    if let Some(h) = &hats[i] {
                        add(-((&st.fwd[i] - &st.bwd[i]) * h));
                    }
                }
                Chirality::Left => {
                    if let Some(h) = &hats[i + 1] {
                        add(&st.fwd[i] * h);
                    }
                    if let Some(h) = &hats[i - 1] {
                        add(-(&st.bwd[i] * h));
                    }
                    if let Some(h) = &hats[i] {
                        add(-(h * (&st.fwd[i] - &st.bwd[i])));
                    }
                }
            }
            if let Some(a) = acc {
                dxi[i] = alg.vee_raw(&a) / (2.0 * dt);
            }
        }
        let mut total = 0.0;
        for (slot, &i) in nodes.iter().enumerate() {
            let djet = jet_at(&dxi, i, k, dt);
            for (g, d) in grads[slot].iter().zip(&djet) {
                total += g.dot(d);
            }
        }
        total * dt
    };
    Ok(par::map(variations, directional))
}

/// A higher-order Lagrangian on a flat configuration space `ℝⁿ`.
pub trait FlatLagrangian: Send + Sync {
    fn order(&self) -> usize;
    fn dim(&self) -> usize;
    /// `L(q, q̇, …, q^(k))` with `jet.len() == k + 1`.
    fn eval(&self, jet: &[DVector<f64>]) -> Result<f64>;
    /// `[∂L/∂q, …, ∂L/∂q^(k)]`.
    fn grads(&self, jet: &[DVector<f64>]) -> Result<Vec<DVector<f64>>>;
}

/// Directional derivatives of the discrete action of a flat path
/// `q_0 … q_{N−1}` along each variation.
pub fn flat_action_gradient(
    lagrangian: &dyn FlatLagrangian,
    path: &[DVector<f64>],
    dt: f64,
    variations: &[Variation],
) -> Result<Vec<f64>> {
    let k = lagrangian.order();
    if k == 0 || k > 2 {
        return Err(Error::Unsupported(format!(
            "flat discrete action for order {k} (supported: 1, 2)"
        )));
    }
    let n = path.len();
    if n < 2 * k + 1 {
        return Err(Error::StencilTooShort {
            needed: 2 * k + 1,
            got: n,
        });
    }
    for v in variations {
        if v.values.len() != n {
            return Err(Error::DimensionMismatch {
                what: "variation length",
                expected: n,
                found: v.values.len(),
            });
        }
    }
    // jet order k needs q^(k); central stencils reach i ± 1
    let flat_jet = |series: &[DVector<f64>], i: usize| jet_at(series, i, k + 1, dt);
    let nodes: Vec<usize> = (1..n - 1).collect();
    let grads: Vec<Vec<DVector<f64>>> = nodes
        .iter()
        .map(|&i| lagrangian.grads(&flat_jet(path, i)))
        .collect::<Result<_>>()?;
    Ok(par::map(variations, |var| {
        let mut total = 0.0;
        for (slot, &i) in nodes.iter().enumerate() {
            let djet = flat_jet(&var.values, i);
            for (g, d) in grads[slot].iter().zip(&djet) {
                total += g.dot(d);
            }
        }
        total * dt
    }))
}

/// Discrete action of a flat path.
pub fn flat_action(lagrangian: &dyn FlatLagrangian, path: &[DVector<f64>], dt: f64) -> Result<f64> {
    let k = lagrangian.order();
    let n = path.len();
    if n < 2 * k + 1 {
        return Err(Error::StencilTooShort {
            needed: 2 * k + 1,
            got: n,
        });
    }
    let mut s = 0.0;
    for i in 1..n - 1 {
        s += lagrangian.eval(&jet_at(path, i, k + 1, dt))? * dt;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Inertia;
    use crate::models::{rigid_body, spline2};

    #[test]
    fn variations_vanish_near_endpoints() {
        let vars = smooth_variations(3, 101, 4, 7);
        for v in &vars {
            for i in 0..=10 {
                assert_eq!(v.values[i].amax(), 0.0);
                assert_eq!(v.values[100 - i].amax(), 0.0);
            }
            assert!(v.values[50].amax() > 0.0);
        }
        assert_eq!(smooth_variations(3, 101, 4, 7), vars);
    }

    #[test]
    fn short_path_is_rejected() {
        let alg = LieAlgebra::so3();
        let m = spline2(&alg, Inertia::identity(3), true, 0.0, Chirality::Left).unwrap();
        let path = vec![GroupElement::identity(&alg); 4];
        assert!(matches!(
            discrete_action_gradient(&m, &path, 0.1, &[]),
            Err(Error::StencilTooShort { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn linearization_matches_finite_difference() {
        let alg = LieAlgebra::so3();
        for ch in [Chirality::Left, Chirality::Right] {
            let m = rigid_body(&alg, Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(), ch).unwrap();
            let n = 41;
            let dt = 0.05;
            let path: Vec<GroupElement> = (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    alg.exp(&AlgebraVector::from_slice(&[t.sin(), 0.3 * t * t, -0.5 * t]))
                        .unwrap()
                })
                .collect();
            let vars = smooth_variations(3, n, 3, 1);
            let exact = discrete_action_gradient(&m, &path, dt, &vars).unwrap();
            for (v, e) in vars.iter().zip(&exact) {
                let eps = 1e-6;
                let perturbed = |s: f64| -> Vec<GroupElement> {
                    path.iter()
                        .zip(&v.values)
                        .map(|(g, eta)| {
                            let e = alg.exp(&AlgebraVector(eta * s)).unwrap();
                            match ch {
                                Chirality::Right => e.compose(g),
                                Chirality::Left => g.compose(&e),
                            }
                        })
                        .collect()
                };
                let fd = (discrete_action(&m, &perturbed(eps), dt).unwrap()
                    - discrete_action(&m, &perturbed(-eps), dt).unwrap())
                    / (2.0 * eps);
                assert!((fd - e).abs() < 1e-7 * e.abs().max(1.0), "{ch}: fd {fd} exact {e}");
            }
        }
    }
}
