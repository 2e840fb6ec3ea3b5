//! Brute-force stationarity oracle for the unreduced second-order
//! Kaluza–Klein action on `ℝ^m × G`.
//!
//! A sampled curve `(x_i, g_i)` is reduced with central differences:
//! `ξ_i` from the group stencil, `σ_i = ξ_i + A(x_i)(ẋ_i)` and
//! `σ̇_i = (σ_{i+1} − σ_{i−1})/2Δt ± [A(x_i)(ẋ_i), σ_i]`. The discrete action
//! `Σ ℓ Δt` is then differentiated along variations `(δx_i, η_i)` by a
//! central difference in the variation parameter. No reduced equation of
//! motion enters, so vanishing gradients like `O(Δt²)` on an integrated
//! trajectory confirm the reduced equations and their sign conventions.

use nalgebra::DVector;

use crate::algebra::{AlgebraVector, Chirality, GroupElement};
use crate::error::{check_dim, Error, Result};
use crate::euler_poincare::Variation;
use crate::par;

use super::connection::Connection;
use super::lp2::KaluzaKlein2;

/// Parameter step of the central difference along a variation.
pub const VARIATION_STEP: f64 = 1e-6;

fn check_path(conn: &Connection, xs: &[DVector<f64>], gs: &[GroupElement]) -> Result<()> {
    check_dim("bundle path length", xs.len(), gs.len())?;
    if xs.len() < 7 {
        return Err(Error::StencilTooShort {
            needed: 7,
            got: xs.len(),
        });
    }
    for (x, g) in xs.iter().zip(gs) {
        check_dim("bundle path base point", conn.base_dim(), x.len())?;
        if g.algebra() != conn.algebra() {
            return Err(Error::InvalidArgument("path element from a different group".into()));
        }
    }
    Ok(())
}

/// Discrete action of a sampled bundle curve.
pub fn bundle_discrete_action(
    lag: &KaluzaKlein2,
    conn: &Connection,
    xs: &[DVector<f64>],
    gs: &[GroupElement],
    dt: f64,
) -> Result<f64> {
    check_path(conn, xs, gs)?;
    let n = xs.len();
    let alg = conn.algebra();
    let s = conn.chirality().pm();
    let mut xd = vec![DVector::zeros(0); n];
    let mut a = vec![DVector::zeros(0); n];
    let mut sigma = vec![DVector::zeros(0); n];
    for i in 1..n - 1 {
        let w = gs[i].inverse();
        let (f, b) = match conn.chirality() {
            Chirality::Right => (gs[i + 1].matrix() * w.matrix(), gs[i - 1].matrix() * w.matrix()),
            Chirality::Left => (w.matrix() * gs[i + 1].matrix(), w.matrix() * gs[i - 1].matrix()),
        };
        let xi = alg.vee_raw(&(&f - &b)) / (2.0 * dt);
        xd[i] = (&xs[i + 1] - &xs[i - 1]) / (2.0 * dt);
        a[i] = conn.apply(&xs[i], &xd[i])?.0;
        sigma[i] = xi + &a[i];
    }
    let mut total = 0.0;
    for i in 2..n - 2 {
        let xdd = (&xs[i + 1] - &xs[i] * 2.0 + &xs[i - 1]) / (dt * dt);
        let sd = (&sigma[i + 1] - &sigma[i - 1]) / (2.0 * dt) + alg.br(&a[i], &sigma[i]) * s;
        let rho = [xs[i].clone(), xd[i].clone(), xdd];
        total += lag.eval(&rho, &AlgebraVector(sigma[i].clone()), &AlgebraVector(sd)) * dt;
    }
    Ok(total)
}

fn perturb(
    conn: &Connection,
    xs: &[DVector<f64>],
    gs: &[GroupElement],
    base: &Variation,
    fiber: &Variation,
    eps: f64,
) -> Result<(Vec<DVector<f64>>, Vec<GroupElement>)> {
    let alg = conn.algebra();
    let x = xs.iter().zip(&base.values).map(|(x, v)| x + v * eps).collect();
    let g = gs
        .iter()
        .zip(&fiber.values)
        .map(|(g, v)| {
            let e = alg.exp(&AlgebraVector(v * eps))?;
            Ok(match conn.chirality() {
                Chirality::Right => e.compose(g),
                Chirality::Left => g.compose(&e),
            })
        })
        .collect::<Result<_>>()?;
    Ok((x, g))
}

/// Directional derivatives of [`bundle_discrete_action`] along each pair
/// `(δx, η)`; the perturbed curve is `(x_i + εδx_i, exp(εη_i) g_i)` (right)
/// or `(x_i + εδx_i, g_i exp(εη_i))` (left).
pub fn bundle_action_gradient(
    lag: &KaluzaKlein2,
    conn: &Connection,
    xs: &[DVector<f64>],
    gs: &[GroupElement],
    dt: f64,
    variations: &[(Variation, Variation)],
) -> Result<Vec<f64>> {
    check_path(conn, xs, gs)?;
    for (b, f) in variations {
        check_dim("base variation length", xs.len(), b.values.len())?;
        check_dim("fiber variation length", xs.len(), f.values.len())?;
    }
    par::map(variations, |(b, f)| {
        let (xp, gp) = perturb(conn, xs, gs, b, f, VARIATION_STEP)?;
        let (xm, gm) = perturb(conn, xs, gs, b, f, -VARIATION_STEP)?;
        let sp = bundle_discrete_action(lag, conn, &xp, &gp, dt)?;
        let sm = bundle_discrete_action(lag, conn, &xm, &gm, dt)?;
        Ok((sp - sm) / (2.0 * VARIATION_STEP))
    })
    .into_iter()
    .collect()
}
