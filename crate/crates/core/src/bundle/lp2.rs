use nalgebra::{DMatrix, DVector};

use crate::algebra::{stack, AlgebraVector, BaseMetric, DualVector, Inertia, Unstack};
use crate::error::{check_dim, Error, Result};

use super::connection::Connection;
use super::FlatState;

/// Second-order Kaluza–Klein Lagrangian on `T^(2)ℝ^m ⊕ 2𝔤`,
///
/// `ℓ = ½γ(ρ̇,ρ̇) + ½λ1²γ(ρ̈,ρ̈) + ½⟨K₁σ, σ⟩ + ½λ2²⟨K₂σ̇, σ̇⟩`,
///
/// where `σ̇` is the covariant derivative slot. `K₁` and `K₂` need not be
/// ad-invariant. `λ1 = 0` drops the base acceleration term and `λ2 = 0`
/// the fiber one; the state layout shrinks accordingly.
#[derive(Clone, Debug, PartialEq)]
pub struct KaluzaKlein2 {
    pub metric: BaseMetric,
    pub lambda1: f64,
    pub potential: Inertia,
    pub kinetic: Inertia,
    pub lambda2: f64,
}

impl KaluzaKlein2 {
    pub fn new(metric: BaseMetric, lambda1: f64, potential: Inertia, kinetic: Inertia, lambda2: f64) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        check_dim("kinetic inertia", potential.dim(), kinetic.dim())?;
        Ok(Self {
            metric,
            lambda1,
            potential,
            kinetic,
            lambda2,
        })
    }

    /// Same inertia `κ̄` in both fiber slots, as in the second-order Wong
    /// problem.
    pub fn wong(metric: BaseMetric, kappa: Inertia, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(metric, lambda1, kappa.clone(), kappa, lambda2)
    }

    pub fn base_slots(&self) -> usize {
        if self.lambda1 > 0.0 {
            4
        } else {
            2
        }
    }

    pub fn fiber_slots(&self) -> usize {
        if self.lambda2 > 0.0 {
            2
        } else {
            0
        }
    }

    /// `ℓ(ρ, ρ̇, ρ̈, σ, σ̇)`; `rho` holds at least `(ρ, ρ̇)` and also `ρ̈` when
    /// `λ1 > 0`.
    pub fn eval(&self, rho: &[DVector<f64>], sigma: &AlgebraVector, sigma_dot: &AlgebraVector) -> f64 {
        let mut l = 0.5 * self.metric.norm_sq(&rho[1]) + 0.5 * self.potential.norm_sq(sigma);
        if self.lambda1 > 0.0 {
            l += 0.5 * self.lambda1 * self.lambda1 * self.metric.norm_sq(&rho[2]);
        }
        if self.lambda2 > 0.0 {
            l += 0.5 * self.lambda2 * self.lambda2 * self.kinetic.norm_sq(sigma_dot);
        }
        l
    }

    fn check(&self, conn: &Connection) -> Result<()> {
        check_dim("base metric", conn.base_dim(), self.metric.dim())?;
        conn.algebra().check("fiber inertia", self.potential.dim())
    }
}

/// Lagrange–Poincaré state `(ρ, ρ̇, ρ̈, ρ⃛ | σ, σ̇ | m)`.
///
/// `rho` has 4 slots when `λ1 > 0` and 2 otherwise; `sigma` is `(σ, σ̇)`
/// when `λ2 > 0` and empty otherwise, in which case `σ = K₁⁻¹ m`.
/// `m = δℓ/δσ − D/Dt δℓ/δσ̇` is the fiber momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct LP2State {
    pub rho: Vec<DVector<f64>>,
    pub sigma: Vec<AlgebraVector>,
    pub m: DualVector,
}

impl LP2State {
    /// `σ`.
    pub fn sigma(&self, lag: &KaluzaKlein2) -> AlgebraVector {
        match self.sigma.first() {
            Some(s) => s.clone(),
            None => AlgebraVector(lag.potential.raise(&self.m.0)),
        }
    }
}

impl FlatState for LP2State {
    fn to_vector(&self) -> DVector<f64> {
        stack(
            self.rho
                .iter()
                .chain(self.sigma.iter().map(|c| &c.0))
                .chain(std::iter::once(&self.m.0)),
        )
    }

    fn like(&self, v: &DVector<f64>) -> Result<Self> {
        let (m, d) = (self.rho[0].len(), self.m.dim());
        check_dim(
            "lp2 flat state",
            self.rho.len() * m + (self.sigma.len() + 1) * d,
            v.len(),
        )?;
        let mut u = Unstack::new(v);
        Ok(Self {
            rho: (0..self.rho.len()).map(|_| u.take(m)).collect(),
            sigma: (0..self.sigma.len()).map(|_| AlgebraVector(u.take(d))).collect(),
            m: DualVector(u.take(d)),
        })
    }
}

/// `Aᵀ ad*_σ μ`, the covector `l ↦ −⟨μ, [A e_l, σ]⟩`.
fn transport_covector(conn: &Connection, a: &DMatrix<f64>, sigma: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
    a.transpose() * conn.algebra().ads(sigma, mu)
}

/// Lagrange–Poincaré equations of order two on a flat base:
///
/// `δℓ/δρ − d/dt δℓ/δρ̇ + d²/dt² δℓ/δρ̈ = ⟨m ∓ ad*_σ δℓ/δσ̇, i_ρ̇ B⟩`,
/// `(D/Dt ± ad*_σ) m = 0`, `m = δℓ/δσ − D/Dt δℓ/δσ̇`.
///
/// `δℓ/δρ` is the horizontal derivative, taken with the fiber slots
/// parallel transported; it vanishes when `K₁, K₂` are ad-invariant.
/// Returned in the shape of a state.
pub fn lp2_vector_field(lag: &KaluzaKlein2, conn: &Connection, state: &LP2State) -> Result<LP2State> {
    lag.check(conn)?;
    let alg = conn.algebra();
    let s = conn.chirality().pm();
    if state.rho.len() != lag.base_slots() {
        if lag.lambda1 == 0.0 && state.rho.len() == 4 {
            return Err(Error::Degenerate(
                "lambda1 = 0 leaves the fourth base derivative undetermined".into(),
            ));
        }
        return Err(Error::InvalidArgument(format!(
            "lp2 base jet must have {} slots, got {}",
            lag.base_slots(),
            state.rho.len()
        )));
    }
    if state.sigma.len() != lag.fiber_slots() {
        if lag.lambda2 == 0.0 {
            return Err(Error::Degenerate(
                "lambda2 = 0 leaves the fiber acceleration undetermined".into(),
            ));
        }
        return Err(Error::InvalidArgument(format!(
            "lp2 fiber jet must have {} slots, got {}",
            lag.fiber_slots(),
            state.sigma.len()
        )));
    }
    for r in &state.rho {
        check_dim("lp2 base slot", conn.base_dim(), r.len())?;
    }
    for x in &state.sigma {
        alg.check("lp2 fiber slot", x.dim())?;
    }
    alg.check("lp2 momentum", state.m.dim())?;

    let (rho, rho_dot) = (&state.rho[0], &state.rho[1]);
    let amat = conn.matrix_at(rho)?;
    let a = &amat * rho_dot;
    let sigma = state.sigma(lag).0;
    let k1_sigma = lag.potential.lower(&sigma);
    let l2 = lag.lambda2 * lag.lambda2;

    let mut horizontal = transport_covector(conn, &amat, &sigma, &k1_sigma) * s;
    let mut pi_eff = state.m.0.clone();
    let mut fiber_rates = Vec::new();
    if lag.lambda2 > 0.0 {
        let sd = &state.sigma[1].0;
        let k2_sd = lag.kinetic.lower(sd);
        horizontal += transport_covector(conn, &amat, sd, &k2_sd) * (s * l2);
        pi_eff -= alg.ads(&sigma, &k2_sd) * (s * l2);
        let sigma_rate = sd - alg.br(&a, &sigma) * s;
        let momentum_rate = (&k1_sigma - &state.m.0) / l2 + alg.ads(&a, &k2_sd) * s;
        fiber_rates = vec![
            AlgebraVector(sigma_rate),
            AlgebraVector(lag.kinetic.raise(&momentum_rate)),
        ];
    }
    let force = conn.curvature_at(rho)?.contract(&DualVector(pi_eff), rho_dot)?;
    let base_rhs = lag.metric.raise(&(&force - &horizontal));
    let rho_rates = if lag.lambda1 > 0.0 {
        let l1 = lag.lambda1 * lag.lambda1;
        let top = (&state.rho[2] + &base_rhs) / l1;
        vec![rho_dot.clone(), state.rho[2].clone(), state.rho[3].clone(), top]
    } else {
        vec![rho_dot.clone(), -base_rhs]
    };
    let m_rate = (alg.ads(&a, &state.m.0) - alg.ads(&sigma, &state.m.0)) * s;
    Ok(LP2State {
        rho: rho_rates,
        sigma: fiber_rates,
        m: DualVector(m_rate),
    })
}

/// Reduced energy `⟨γ₀, ρ̇⟩ + ⟨γ₁, ρ̈⟩ + ⟨m, σ⟩ + ⟨π₁, σ̇⟩ − ℓ`.
pub fn lp2_energy(lag: &KaluzaKlein2, state: &LP2State) -> f64 {
    let sigma = state.sigma(lag);
    let zero = AlgebraVector::zeros(sigma.dim());
    let sd = state.sigma.get(1).unwrap_or(&zero);
    let rd = &state.rho[1];
    let g = lag.metric.matrix();
    let mut e = lag.metric.norm_sq(rd) + state.m.pair(&sigma);
    if lag.lambda1 > 0.0 {
        let l1 = lag.lambda1 * lag.lambda1;
        e += -l1 * rd.dot(&(g * &state.rho[3])) + l1 * lag.metric.norm_sq(&state.rho[2]);
    }
    if lag.lambda2 > 0.0 {
        e += lag.lambda2 * lag.lambda2 * lag.kinetic.norm_sq(sd);
    }
    e - lag.eval(&state.rho, &sigma, sd)
}
