use nalgebra::DVector;

use crate::algebra::{stack, BaseMetric, DualVector, Inertia, Unstack};
use crate::error::{check_dim, Error, Result};
use crate::models::AD_INVARIANCE_TOL;

use super::connection::Connection;
use super::FlatState;

/// Colored particle state `(ρ, ρ̇, μ̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WongState {
    pub rho: DVector<f64>,
    pub rho_dot: DVector<f64>,
    pub mu: DualVector,
}

impl FlatState for WongState {
    fn to_vector(&self) -> DVector<f64> {
        stack([&self.rho, &self.rho_dot, &self.mu.0])
    }

    fn like(&self, v: &DVector<f64>) -> Result<Self> {
        let (m, d) = (self.rho.len(), self.mu.dim());
        check_dim("wong flat state", 2 * m + d, v.len())?;
        let mut u = Unstack::new(v);
        Ok(Self {
            rho: u.take(m),
            rho_dot: u.take(m),
            mu: DualVector(u.take(d)),
        })
    }
}

/// Second-order colored particle state.
///
/// `rho` is `(ρ, ρ̇, ρ̈, ρ⃛)` when `λ1 > 0` and `(ρ, ρ̇)` when `λ1 = 0`.
/// `charge` is `(μ̄, Dμ̄/Dt)` when `λ2 > 0` and empty when `λ2 = 0`.
/// `p = μ̄ − λ2² D²μ̄/Dt²` obeys a coadjoint equation and equals `μ̄`
/// when `λ2 = 0`. With both lengths zero the
/// layout is exactly that of [`WongState`].
#[derive(Clone, Debug, PartialEq)]
pub struct Wong2State {
    pub rho: Vec<DVector<f64>>,
    pub charge: Vec<DualVector>,
    pub p: DualVector,
}

impl Wong2State {
    /// Build from `(ρ, …)` and the charge jet `(μ̄, Dμ̄/Dt, D²μ̄/Dt²)`;
    /// only `μ̄` is read when `λ2 = 0`.
    pub fn from_charge_jet(rho: Vec<DVector<f64>>, charge_jet: &[DualVector], lambda2: f64) -> Result<Self> {
        if charge_jet.is_empty() {
            return Err(Error::InvalidArgument("charge jet needs at least μ̄".into()));
        }
        if lambda2 == 0.0 {
            return Ok(Self {
                rho,
                charge: Vec::new(),
                p: charge_jet[0].clone(),
            });
        }
        check_dim("charge jet", 3, charge_jet.len())?;
        let p = DualVector(&charge_jet[0].0 - &charge_jet[2].0 * (lambda2 * lambda2));
        Ok(Self {
            rho,
            charge: charge_jet[..2].to_vec(),
            p,
        })
    }

    /// Embed a first-order state (both lengths zero).
    pub fn from_wong(s: &WongState) -> Self {
        Self {
            rho: vec![s.rho.clone(), s.rho_dot.clone()],
            charge: Vec::new(),
            p: s.mu.clone(),
        }
    }

    /// The charge `μ̄`.
    pub fn mu(&self) -> &DualVector {
        self.charge.first().unwrap_or(&self.p)
    }
}

impl FlatState for Wong2State {
    fn to_vector(&self) -> DVector<f64> {
        stack(
            self.rho
                .iter()
                .chain(self.charge.iter().map(|c| &c.0))
                .chain(std::iter::once(&self.p.0)),
        )
    }

    fn like(&self, v: &DVector<f64>) -> Result<Self> {
        let (m, d) = (self.rho[0].len(), self.p.dim());
        check_dim(
            "wong2 flat state",
            self.rho.len() * m + (self.charge.len() + 1) * d,
            v.len(),
        )?;
        let mut u = Unstack::new(v);
        Ok(Self {
            rho: (0..self.rho.len()).map(|_| u.take(m)).collect(),
            charge: (0..self.charge.len()).map(|_| DualVector(u.take(d))).collect(),
            p: DualVector(u.take(d)),
        })
    }
}

fn check_setting(metric: &BaseMetric, kappa: &Inertia, conn: &Connection) -> Result<()> {
    check_dim("base metric", conn.base_dim(), metric.dim())?;
    conn.algebra().check("fiber inertia", kappa.dim())?;
    let residual = kappa.ad_invariance_residual(conn.algebra())?;
    if residual > AD_INVARIANCE_TOL {
        return Err(Error::NotAdInvariant { residual });
    }
    Ok(())
}

fn check_length(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

/// Wong's equations `ρ̈ = −γ⁻¹⟨μ̄, i_ρ̇ B⟩`, `μ̄̇ = ±ad*_{A(ρ̇)} μ̄`,
/// returned in the shape of a state.
///
/// `κ̄` must be ad-invariant; the charge equation is `Dμ̄/Dt = 0`.
pub fn wong_vector_field(
    metric: &BaseMetric,
    kappa: &Inertia,
    conn: &Connection,
    state: &WongState,
) -> Result<WongState> {
    check_setting(metric, kappa, conn)?;
    let alg = conn.algebra();
    alg.check("charge", state.mu.dim())?;
    check_dim("rho dot", conn.base_dim(), state.rho_dot.len())?;
    let a = conn.apply(&state.rho, &state.rho_dot)?;
    let force = conn.curvature_at(&state.rho)?.contract(&state.mu, &state.rho_dot)?;
    Ok(WongState {
        rho: state.rho_dot.clone(),
        rho_dot: -metric.raise(&force),
        mu: DualVector(alg.ads(&a.0, &state.mu.0) * conn.chirality().pm()),
    })
}

/// Second-order Wong equations on a flat base,
///
/// `Dρ̇/Dt − λ1² D³ρ̇/Dt³ = −⟨p ∓ λ2² ad*_σ Dμ̄/Dt, i_ρ̇ B⟩`,
/// `(D/Dt ± ad*_σ) p = 0`, `p = μ̄ − λ2² D²μ̄/Dt²`, `σ = κ̄⁻¹ μ̄`,
///
/// with every covariant derivative trivialized. The state shape must match
/// the lengths (see [`Wong2State`]); a `ρ⃛` slot with `λ1 = 0` is a
/// degeneracy error.
pub fn wong2_vector_field(
    metric: &BaseMetric,
    kappa: &Inertia,
    conn: &Connection,
    lambda1: f64,
    lambda2: f64,
    state: &Wong2State,
) -> Result<Wong2State> {
    check_setting(metric, kappa, conn)?;
    check_length("lambda1", lambda1)?;
    check_length("lambda2", lambda2)?;
    let alg = conn.algebra();
    let s = conn.chirality().pm();
    match (lambda1 > 0.0, state.rho.len()) {
        (false, 4) => {
            return Err(Error::Degenerate(
                "lambda1 = 0 leaves the fourth base derivative undetermined; use the first-order Wong system".into(),
            ))
        }
        (true, 4) | (false, 2) => {}
        (_, n) => {
            return Err(Error::InvalidArgument(format!(
                "wong2 base jet must have {} slots, got {n}",
                if lambda1 > 0.0 { 4 } else { 2 }
            )))
        }
    }
    match (lambda2 > 0.0, state.charge.len()) {
        (true, 2) | (false, 0) => {}
        (_, n) => {
            return Err(Error::InvalidArgument(format!(
                "wong2 charge jet must have {} slots, got {n}",
                if lambda2 > 0.0 { 2 } else { 0 }
            )))
        }
    }
    for r in &state.rho {
        check_dim("wong2 base slot", conn.base_dim(), r.len())?;
    }
    alg.check("wong2 p", state.p.dim())?;
    for c in &state.charge {
        alg.check("wong2 charge slot", c.dim())?;
    }

    let (rho, rho_dot) = (&state.rho[0], &state.rho[1]);
    let a = conn.apply(rho, rho_dot)?.0;
    let mu = state.mu();
    let sigma = kappa.raise(&mu.0);
    let l2 = lambda2 * lambda2;

    let mut pi_eff = state.p.0.clone();
    if let Some(nu) = state.charge.get(1) {
        pi_eff -= alg.ads(&sigma, &nu.0) * (s * l2);
    }
    let force = conn.curvature_at(rho)?.contract(&DualVector(pi_eff), rho_dot)?;
    let raised = metric.raise(&force);

    let rho_rates = if lambda1 > 0.0 {
        let l1 = lambda1 * lambda1;
        let top = (&state.rho[2] + &raised) / l1;
        vec![rho_dot.clone(), state.rho[2].clone(), state.rho[3].clone(), top]
    } else {
        vec![rho_dot.clone(), -raised]
    };

    let charge_rates = if lambda2 > 0.0 {
        let nu = &state.charge[1].0;
        vec![
            DualVector(nu + alg.ads(&a, &mu.0) * s),
            DualVector((&mu.0 - &state.p.0) / l2 + alg.ads(&a, nu) * s),
        ]
    } else {
        Vec::new()
    };
    // with λ2 = 0, p = μ̄ = κ̄σ and ad*_σ κ̄σ vanishes by ad-invariance
    let p_rate = if lambda2 > 0.0 {
        (alg.ads(&a, &state.p.0) - alg.ads(&sigma, &state.p.0)) * s
    } else {
        alg.ads(&a, &state.p.0) * s
    };
    Ok(Wong2State {
        rho: rho_rates,
        charge: charge_rates,
        p: DualVector(p_rate),
    })
}

/// `½ γ(ρ̇, ρ̇) + ½ κ̄⁻¹(μ̄, μ̄)`.
pub fn wong_energy(metric: &BaseMetric, kappa: &Inertia, state: &WongState) -> f64 {
    0.5 * metric.norm_sq(&state.rho_dot) + 0.5 * kappa.dual_norm_sq(&state.mu)
}

/// The κ̄-norm squared of the charge, `κ̄⁻¹(μ̄, μ̄)`.
pub fn wong_casimir(kappa: &Inertia, state: &WongState) -> f64 {
    kappa.dual_norm_sq(&state.mu)
}

/// Reduced energy of the second-order Kaluza–Klein Lagrangian,
///
/// `½γ(ρ̇,ρ̇) − λ1²γ(ρ̇,ρ⃛) + ½λ1²γ(ρ̈,ρ̈) + ⟨p, σ⟩ − ½⟨μ̄, σ⟩ + ½λ2² κ̄⁻¹(Dμ̄, Dμ̄)`.
pub fn wong2_energy(metric: &BaseMetric, kappa: &Inertia, lambda1: f64, lambda2: f64, state: &Wong2State) -> f64 {
    let rd = &state.rho[1];
    let g = metric.matrix();
    let mut e = 0.5 * metric.norm_sq(rd);
    if state.rho.len() == 4 {
        let l1 = lambda1 * lambda1;
        e += -l1 * rd.dot(&(g * &state.rho[3])) + 0.5 * l1 * metric.norm_sq(&state.rho[2]);
    }
    let mu = state.mu();
    let sigma = kappa.raise(&mu.0);
    e += state.p.0.dot(&sigma) - 0.5 * mu.0.dot(&sigma);
    if let Some(nu) = state.charge.get(1) {
        e += 0.5 * lambda2 * lambda2 * kappa.dual_norm_sq(nu);
    }
    e
}
