//! Seeded property suites with measured values and tolerances.
//!
//! Every suite is a pure function of its seed. [`run`] with [`Suite::All`]
//! runs the individual suites concurrently when the `parallel` feature is
//! enabled.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraVector, BaseMetric, Chirality, DualVector, GroupElement, Inertia, LieAlgebra};
use crate::bundle::{
    self, gauged_bracket, integrate_lp2, integrate_ohp, integrate_wong, integrate_wong2, lp2_state_from_wong2,
    ohp_vector_field, reconstruct_lp2, wong_casimir, BundleHamiltonian, Connection, FlatState, KaluzaKlein2,
    KaluzaKleinHamiltonian, LP2State, OHPPartials, OHPState, Wong2State, WongState,
};
use crate::error::{Error, Result};
use crate::euler_poincare::{
    discrete_action_gradient, integrate_bi_invariant_spline, integrate_ep, smooth_variations, EPState,
};
use crate::models::{
    hamiltonian, quadratic2, rigid_body, spline2, ReducedHamiltonian, ReducedLagrangian, ReducedLagrangianModel,
};
use crate::ostrogradsky::{
    integrate_olp, jacobi_residual, legendre, olp_equivalence_check, olp_vector_field, reduced_bracket,
    CoordinateObservable, OLPState, Observable, QuadraticObservable,
};
use crate::par;
use crate::solvers::{fd_jacobian, fd_jacobian_seq, integrate, shoot_spline, IntegratorConfig, ShootingProblem};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;

const CHIRALITIES: [Chirality; 2] = [Chirality::Left, Chirality::Right];

/// A named group of checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Ep,
    Olp,
    Bundle,
    Solvers,
    All,
}

impl Suite {
    /// The individual suites, in the order [`Suite::All`] reports them.
    pub const INDIVIDUAL: [Suite; 5] = [Suite::Algebra, Suite::Ep, Suite::Olp, Suite::Bundle, Suite::Solvers];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Ep => "ep",
            Suite::Olp => "olp",
            Suite::Bundle => "bundle",
            Suite::Solvers => "solvers",
            Suite::All => "all",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Suite::Algebra => 0x0a1f,
            Suite::Ep => 0x0e90,
            Suite::Olp => 0x01b0,
            Suite::Bundle => 0x0b0d,
            Suite::Solvers => 0x050f,
            Suite::All => 0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::INDIVIDUAL
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown suite {s:?}; expected one of algebra, ep, olp, bundle, solvers, all"
                ))
            })
    }
}

/// Acceptance region of a measured value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Bound {
    /// `measured < value`.
    Below(f64),
    /// `measured ≤ value`.
    AtMost(f64),
    /// `measured ≥ value`.
    AtLeast(f64),
}

impl Bound {
    /// NaN never satisfies a bound.
    pub fn holds(self, measured: f64) -> bool {
        match self {
            Bound::Below(v) => measured < v,
            Bound::AtMost(v) => measured <= v,
            Bound::AtLeast(v) => measured >= v,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Below(v) => write!(f, "< {v:e}"),
            Bound::AtMost(v) => write!(f, "<= {v:e}"),
            Bound::AtLeast(v) => write!(f, ">= {v}"),
        }
    }
}

/// One measured invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    /// NaN when the measurement itself failed.
    pub measured: f64,
    pub bound: Bound,
    pub passed: bool,
    pub error: Option<String>,
}

impl Check {
    fn new(suite: Suite, name: impl Into<String>, measured: Result<f64>, bound: Bound) -> Self {
        let (measured, error) = match measured {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        Self {
            suite,
            name: name.into(),
            measured,
            bound,
            passed: error.is_none() && bound.holds(measured),
            error,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {:<8} {:<52} measured {:<12.4e} bound {}",
            self.suite, self.name, self.measured, self.bound
        )?;
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        Ok(())
    }
}

/// Outcome of a suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "suite {} seed {}: {} checks, {} failed",
            self.suite,
            self.seed,
            self.checks.len(),
            failed
        )
    }
}

/// Run one suite, or all of them, with the given seed.
pub fn run(suite: Suite, seed: u64) -> Report {
    let checks = match suite {
        Suite::All => par::map(&Suite::INDIVIDUAL, |&s| run_single(s, seed))
            .into_iter()
            .flatten()
            .collect(),
        s => run_single(s, seed),
    };
    Report { suite, seed, checks }
}

fn run_single(suite: Suite, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ suite.salt().wrapping_mul(0x9e37_79b9_7f4a_7c15));
    match suite {
        Suite::Algebra => algebra_suite(&mut rng),
        Suite::Ep => ep_suite(&mut rng),
        Suite::Olp => olp_suite(&mut rng),
        Suite::Bundle => bundle_suite(&mut rng),
        Suite::Solvers => solvers_suite(&mut rng),
        Suite::All => unreachable!("expanded by run"),
    }
}

fn rvec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

fn alg_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> AlgebraVector {
    AlgebraVector(rvec(rng, d, scale))
}

/// Symmetric positive definite matrix `I + BBᵀ + diag(0, ½, 1, …)`, not
/// ad-invariant on `so(3)`.
fn skewed_inertia(rng: &mut ChaCha8Rng, d: usize) -> Result<Inertia> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.4..0.4));
    let diag = DMatrix::from_fn(d, d, |i, j| if i == j { 0.5 * i as f64 } else { 0.0 });
    Inertia::new(DMatrix::identity(d, d) + &b * b.transpose() + diag)
}

fn split(r: Result<(f64, f64)>) -> (Result<f64>, Result<f64>) {
    match r {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.clone()), Err(e)),
    }
}

fn worst<I: IntoIterator<Item = Result<f64>>>(values: I) -> Result<f64> {
    values.into_iter().try_fold(0.0_f64, |acc, v| Ok(acc.max(v?)))
}

fn least<I: IntoIterator<Item = Result<f64>>>(values: I) -> Result<f64> {
    values.into_iter().try_fold(f64::INFINITY, |acc, v| Ok(acc.min(v?)))
}

// ------------------------------------------------------------------ algebra

fn algebra_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Algebra;
    let mut out = Vec::new();
    for alg in [LieAlgebra::so3(), LieAlgebra::se3()] {
        let name = alg.name().to_string();
        let d = alg.dim();
        out.push(Check::new(
            s,
            format!("bracket antisymmetry ({name})"),
            Ok(alg.antisymmetry_residual()),
            Bound::AtMost(0.0),
        ));
        out.push(Check::new(
            s,
            format!("Jacobi residual, basis ({name})"),
            Ok(alg.jacobi_residual()),
            Bound::Below(1e-12),
        ));
        out.push(Check::new(
            s,
            format!("bracket matches matrix commutator ({name})"),
            Ok(alg.bracket_consistency_residual()),
            Bound::Below(1e-12),
        ));
        let triples: Vec<[DVector<f64>; 3]> = (0..100)
            .map(|_| [rvec(rng, d, 1.0), rvec(rng, d, 1.0), rvec(rng, d, 1.0)])
            .collect();
        let jacobi = triples
            .iter()
            .map(|[x, y, z]| {
                let r = alg.br(x, &alg.br(y, z)) + alg.br(y, &alg.br(z, x)) + alg.br(z, &alg.br(x, y));
                r.amax()
            })
            .fold(0.0, f64::max);
        out.push(Check::new(
            s,
            format!("Jacobi residual, 100 random triples ({name})"),
            Ok(jacobi),
            Bound::Below(1e-12),
        ));
        let pairing = triples
            .iter()
            .map(|[x, mu, y]| (alg.ads(x, mu).dot(y) - mu.dot(&alg.br(x, y))).abs())
            .fold(0.0, f64::max);
        out.push(Check::new(
            s,
            format!("coadjoint pairing contract, 100 triples ({name})"),
            Ok(pairing),
            Bound::Below(1e-12),
        ));
        let round_trip = worst((0..100).map(|_| {
            let x = alg_vec(rng, d, 0.9);
            let back = alg.log(&alg.exp(&x)?)?;
            Ok((&back.0 - &x.0).amax())
        }));
        out.push(Check::new(
            s,
            format!("exp/log round trip, 100 samples ({name})"),
            round_trip,
            Bound::Below(1e-10),
        ));
        let adjoint = worst((0..100).map(|_| {
            let g = alg.exp(&alg_vec(rng, d, 1.0))?;
            let (x, y) = (alg_vec(rng, d, 1.0), alg_vec(rng, d, 1.0));
            let lhs = g.adjoint(&alg.bracket(&x, &y)?)?;
            let rhs = alg.bracket(&g.adjoint(&x)?, &g.adjoint(&y)?)?;
            Ok((&lhs.0 - &rhs.0).amax())
        }));
        out.push(Check::new(
            s,
            format!("adjoint action is a bracket automorphism ({name})"),
            adjoint,
            Bound::Below(1e-12),
        ));
    }
    out
}

// ------------------------------------------------------------------ Euler–Poincaré

/// Largest directional derivative of the discrete action along an
/// integrated trajectory sampled at the integration step `dt`.
fn ep_stationarity(
    model: &ReducedLagrangianModel,
    trajectory: impl Fn(f64) -> Result<Vec<GroupElement>>,
    dt: f64,
    seed: u64,
) -> Result<f64> {
    let path = trajectory(dt)?;
    let vars = smooth_variations(model.algebra().dim(), path.len(), 4, seed);
    let grads = discrete_action_gradient(model, &path, dt, &vars)?;
    Ok(grads.iter().fold(0.0, |a, g| a.max(g.abs())))
}

/// Smallest observed order `log₂(G(h)/G(h/2))` over `dt ∈ {4e-3, 2e-3, 1e-3}`.
fn observed_order(
    model: &ReducedLagrangianModel,
    trajectory: impl Fn(f64) -> Result<Vec<GroupElement>>,
    seed: u64,
) -> Result<f64> {
    let g = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| ep_stationarity(model, &trajectory, dt, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok((g[0] / g[1]).log2().min((g[1] / g[2]).log2()))
}

fn ep_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Ep;
    let alg = LieAlgebra::so3();
    let config = IntegratorConfig::default();
    let mut out = Vec::new();
    let inertia = Inertia::diagonal(&[1.0, 2.0, 3.0]).expect("positive diagonal");
    let omega0 = alg_vec(rng, 3, 1.0);
    let spline_jet = [alg_vec(rng, 3, 0.5), alg_vec(rng, 3, 0.5), alg_vec(rng, 3, 0.5)];
    let seed = rng.random::<u64>();

    let noether = worst(CHIRALITIES.map(|ch| {
        let model = rigid_body(&alg, inertia.clone(), ch)?;
        let s0 = EPState::from_full_jet(&model, GroupElement::identity(&alg), std::slice::from_ref(&omega0))?;
        integrate_ep(&model, &s0, 10.0, &config)?.noether_drift()
    }));
    out.push(Check::new(
        s,
        "rigid body Noether momentum drift, T=10",
        noether,
        Bound::AtMost(1e-8),
    ));

    let accel = worst(CHIRALITIES.map(|ch| {
        let model = spline2(&alg, Inertia::identity(3), true, 0.0, ch)?;
        let tr = integrate_bi_invariant_spline(&model, &GroupElement::identity(&alg), &spline_jet, 10.0, &config)?;
        let norms: Vec<f64> = tr.jets.iter().map(|j| j[2].norm()).collect();
        Ok(norms.iter().map(|n| (n - norms[0]).abs()).fold(0.0, f64::max))
    }));
    out.push(Check::new(
        s,
        "bi-invariant 2-spline |xi''| drift, T=10",
        accel,
        Bound::AtMost(1e-8),
    ));

    let rigid_order = least(CHIRALITIES.map(|ch| {
        let model = rigid_body(&alg, inertia.clone(), ch)?;
        observed_order(
            &model,
            |dt| {
                let s0 = EPState::from_full_jet(&model, GroupElement::identity(&alg), std::slice::from_ref(&omega0))?;
                Ok(integrate_ep(&model, &s0, 1.0, &IntegratorConfig::with_dt(dt))?.g)
            },
            seed,
        )
    }));
    out.push(Check::new(
        s,
        "rigid body action stationarity order",
        rigid_order,
        Bound::AtLeast(1.8),
    ));

    let spline_order = least(CHIRALITIES.map(|ch| {
        let model = spline2(&alg, Inertia::identity(3), true, 0.0, ch)?;
        observed_order(
            &model,
            |dt| {
                let tr = integrate_bi_invariant_spline(
                    &model,
                    &GroupElement::identity(&alg),
                    &spline_jet,
                    1.0,
                    &IntegratorConfig::with_dt(dt),
                )?;
                Ok(tr.g)
            },
            seed,
        )
    }));
    out.push(Check::new(
        s,
        "bi-invariant 2-spline action stationarity order",
        spline_order,
        Bound::AtLeast(1.8),
    ));

    let general_order = least(CHIRALITIES.map(|ch| {
        let model = spline2(&alg, inertia.clone(), false, 0.2, ch)?;
        let jet: Vec<AlgebraVector> = spline_jet.iter().map(|x| x.scale(0.5)).collect();
        observed_order(
            &model,
            |dt| {
                let s0 = EPState::from_full_jet(&model, GroupElement::identity(&alg), &jet)?;
                Ok(integrate_ep(&model, &s0, 1.0, &IntegratorConfig::with_dt(dt))?.g)
            },
            seed,
        )
    }));
    out.push(Check::new(
        s,
        "elastic 2-spline action stationarity order",
        general_order,
        Bound::AtLeast(1.8),
    ));
    out
}

// ------------------------------------------------------------------ Ostrogradsky

fn random_olp(rng: &mut ChaCha8Rng, k: usize, d: usize, scale: f64) -> Result<OLPState> {
    OLPState::from_vector(&rvec(rng, (2 * k - 1) * d, scale), k, d)
}

fn olp_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Olp;
    let alg = LieAlgebra::so3();
    let config = IntegratorConfig::default();
    let mut out = Vec::new();
    let inertia = Inertia::diagonal(&[1.0, 2.0, 3.0]).expect("positive diagonal");
    let jet: Vec<AlgebraVector> = (0..3).map(|_| alg_vec(rng, 3, 1.0)).collect();

    let deviation = worst(CHIRALITIES.map(|ch| {
        let model = spline2(&alg, Inertia::identity(3), true, 0.0, ch)?;
        olp_equivalence_check(&model, &jet, 5.0, &config)
    }));
    out.push(Check::new(
        s,
        "EP vs OLP deviation, bi-invariant 2-spline, T=5",
        deviation,
        Bound::Below(1e-6),
    ));

    let small: Vec<AlgebraVector> = jet.iter().map(|x| x.scale(0.2)).collect();
    let general = worst(CHIRALITIES.map(|ch| {
        let model = spline2(&alg, inertia.clone(), false, 0.2, ch)?;
        olp_equivalence_check(&model, &small, 5.0, &config)
    }));
    out.push(Check::new(
        s,
        "EP vs OLP deviation, elastic 2-spline, T=5",
        general,
        Bound::Below(1e-6),
    ));

    let mut energy = Vec::new();
    let mut casimir = Vec::new();
    for ch in CHIRALITIES {
        let run = || -> Result<(f64, f64)> {
            let model = spline2(&alg, inertia.clone(), false, 0.0, ch)?;
            let h = hamiltonian(&model);
            let s0 = legendre(&model, &small)?;
            let tr = integrate_olp(&h, &GroupElement::identity(&alg), &s0, 10.0, &config)?;
            Ok((tr.energy_drift(&h)?, tr.casimir_drift()))
        };
        let (a, b) = split(run());
        energy.push(a);
        casimir.push(b);
    }
    out.push(Check::new(
        s,
        "OLP Hamiltonian drift, 2-spline, T=10",
        worst(energy),
        Bound::AtMost(1e-8),
    ));
    out.push(Check::new(
        s,
        "OLP so(3)* Casimir drift, 2-spline, T=10",
        worst(casimir),
        Bound::AtMost(1e-8),
    ));

    let consistency = worst(CHIRALITIES.map(|ch| {
        let model = spline2(&alg, inertia.clone(), false, 0.2, ch)?;
        let h = hamiltonian(&model);
        let mut err: f64 = 0.0;
        for _ in 0..100 {
            let st = random_olp(rng, 2, 3, 1.0)?;
            let flow = olp_vector_field(&h, &st)?.to_vector();
            let dh = ReducedHamiltonian::partials(&h, &st)?;
            for index in 0..9 {
                let c = CoordinateObservable {
                    order: 2,
                    dim: 3,
                    index,
                };
                let br = reduced_bracket(&alg, ch, &st, &c.partials(&st)?, &dh);
                err = err.max((br - flow[index]).abs());
            }
        }
        Ok(err)
    }));
    out.push(Check::new(
        s,
        "flow-bracket consistency, reduced bracket, 100 states",
        consistency,
        Bound::Below(1e-9),
    ));

    let jacobi = worst(CHIRALITIES.map(|ch| {
        let mut err: f64 = 0.0;
        for _ in 0..20 {
            let st = random_olp(rng, 2, 3, 1.0)?;
            let f = QuadraticObservable::random(2, 3, rng);
            let g = QuadraticObservable::random(2, 3, rng);
            let h = QuadraticObservable::random(2, 3, rng);
            err = err.max(jacobi_residual(&alg, ch, &st, [&f, &g, &h])?.abs());
        }
        Ok(err)
    }));
    out.push(Check::new(
        s,
        "reduced bracket Jacobi identity, 20 states",
        jacobi,
        Bound::Below(1e-9),
    ));
    out
}

// ------------------------------------------------------------------ bundle

fn so3_affine(rng: &mut ChaCha8Rng, ch: Chirality, scale: f64) -> Result<Connection> {
    let c = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-scale..scale));
    let lin = (0..2)
        .map(|_| DMatrix::from_fn(3, 2, |_, _| rng.random_range(-scale..scale)))
        .collect();
    Connection::affine(&LieAlgebra::so3(), ch, c, lin)
}

fn base_metric() -> BaseMetric {
    BaseMetric::new(DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.8])).expect("positive definite")
}

fn random_lp2(rng: &mut ChaCha8Rng, lag: &KaluzaKlein2, scale: f64) -> LP2State {
    LP2State {
        rho: (0..lag.base_slots()).map(|_| rvec(rng, 2, scale)).collect(),
        sigma: (0..lag.fiber_slots()).map(|_| alg_vec(rng, 3, scale)).collect(),
        m: DualVector(rvec(rng, 3, scale)),
    }
}

fn lorentz_radius(ch: Chirality, q: f64, b: f64, v0: &DVector<f64>) -> Result<f64> {
    let conn = Connection::abelian_symmetric_gauge(&LieAlgebra::abelian(1), ch, b)?;
    let s0 = WongState {
        rho: DVector::zeros(2),
        rho_dot: v0.clone(),
        mu: DualVector::from_slice(&[q]),
    };
    let tr = integrate_wong(
        &BaseMetric::identity(2),
        &Inertia::identity(1),
        &conn,
        &s0,
        10.0,
        &IntegratorConfig::default(),
    )?;
    let omega = q * b;
    let radius = v0.norm() / omega;
    let center = |s: &WongState| &s.rho + DVector::from_column_slice(&[s.rho_dot[1], -s.rho_dot[0]]) / omega;
    let c0 = center(&s0);
    Ok(tr
        .states
        .iter()
        .map(|s| ((&s.rho - &c0).norm() - radius).abs())
        .fold(0.0, f64::max))
}

/// `ρ(t)` for `ρ − λ²ρ̈ = ` affine, the flat-connection base solution.
fn elastic_base(rho: &[DVector<f64>], lambda: f64, t: f64) -> DVector<f64> {
    if rho.len() == 2 {
        return &rho[0] + &rho[1] * t;
    }
    let u = t / lambda;
    &rho[0] + &rho[1] * t + &rho[2] * (lambda * lambda * (u.cosh() - 1.0)) + &rho[3] * (lambda.powi(3) * (u.sinh() - u))
}

/// Largest deviation of a flat-connection LP2 trajectory from the base
/// closed form and an independently integrated fiber EP trajectory.
fn decoupling_deviation(rng: &mut ChaCha8Rng, ch: Chirality, second_order: bool) -> Result<f64> {
    let alg = LieAlgebra::so3();
    let (k1, k2) = (skewed_inertia(rng, 3)?, skewed_inertia(rng, 3)?);
    let (l1, l2) = if second_order { (0.8, 1.2) } else { (0.0, 0.0) };
    let lag = KaluzaKlein2::new(base_metric(), l1, k1.clone(), k2.clone(), l2)?;
    let conn = Connection::zero(&alg, 2, ch);
    let config = IntegratorConfig::default();
    let rho: Vec<DVector<f64>> = (0..lag.base_slots()).map(|_| rvec(rng, 2, 0.3)).collect();
    let (s0, fiber, ep0) = if second_order {
        let jet: Vec<AlgebraVector> = (0..3).map(|_| alg_vec(rng, 3, 0.3)).collect();
        let m = DualVector(k1.matrix() * &jet[0].0 - k2.matrix() * &jet[2].0 * (l2 * l2));
        let fiber = quadratic2(&alg, k1.matrix().clone(), k2.scaled(l2 * l2)?, ch)?;
        let ep0 = EPState::from_full_jet(&fiber, GroupElement::identity(&alg), &jet)?;
        let s0 = LP2State {
            rho: rho.clone(),
            sigma: jet[..2].to_vec(),
            m,
        };
        (s0, fiber, ep0)
    } else {
        let xi = alg_vec(rng, 3, 0.3);
        let fiber = rigid_body(&alg, k1.clone(), ch)?;
        let ep0 = EPState::from_full_jet(&fiber, GroupElement::identity(&alg), std::slice::from_ref(&xi))?;
        let s0 = LP2State {
            rho: rho.clone(),
            sigma: Vec::new(),
            m: DualVector(k1.matrix() * &xi.0),
        };
        (s0, fiber, ep0)
    };
    let (tr, ep) = par::join(
        || integrate_lp2(&lag, &conn, &s0, 2.0, &config),
        || integrate_ep(&fiber, &ep0, 2.0, &config),
    );
    let (tr, ep) = (tr?, ep?);
    let mut err: f64 = 0.0;
    for (i, s) in tr.states.iter().enumerate() {
        err = err.max((&s.rho[0] - elastic_base(&rho, l1, tr.times[i])).amax());
        err = err.max((&s.sigma(&lag).0 - &ep.jets[i][0].0).amax());
        err = err.max((&s.m.0 - &ep.m[i].0).amax());
    }
    Ok(err)
}

fn wong2_vs_ohp(ch: Chirality) -> Result<f64> {
    let alg = LieAlgebra::abelian(1);
    let kappa = Inertia::identity(1);
    let (l1, l2) = (1.0, 1.0);
    let lag = KaluzaKlein2::wong(BaseMetric::identity(2), kappa.clone(), l1, l2)?;
    let h = KaluzaKleinHamiltonian::new(lag.clone(), &alg)?;
    let config = IntegratorConfig::default();
    let conn = Connection::abelian_symmetric_gauge(&alg, ch, 1.2)?;
    let charge = [0.8, 0.05, -0.1].map(|c| DualVector::from_slice(&[c]));
    let w0 = Wong2State::from_charge_jet(
        vec![
            DVector::zeros(2),
            DVector::from_column_slice(&[0.6, 0.1]),
            DVector::from_column_slice(&[0.0, -0.2]),
            DVector::from_column_slice(&[0.1, 0.0]),
        ],
        &charge,
        l2,
    )?;
    let p0 = h.legendre(&lp2_state_from_wong2(&lag, &w0))?;
    let (w, o) = par::join(
        || integrate_wong2(&lag.metric, &kappa, &conn, l1, l2, &w0, 5.0, &config),
        || integrate_ohp(&h, &conn, &p0, 5.0, &config),
    );
    let (w, o) = (w?, o?);
    let mut err: f64 = 0.0;
    for (x, y) in w.states.iter().zip(&o.states) {
        let mapped = h.legendre(&lp2_state_from_wong2(&lag, x))?;
        err = err.max((mapped.to_vector() - y.to_vector()).amax());
    }
    Ok(err)
}

fn gauged_consistency(rng: &mut ChaCha8Rng, ch: Chirality, second_order: bool) -> Result<f64> {
    let (l1, l2) = if second_order { (0.8, 1.2) } else { (0.0, 0.0) };
    let lag = KaluzaKlein2::new(base_metric(), l1, skewed_inertia(rng, 3)?, skewed_inertia(rng, 3)?, l2)?;
    let alg = LieAlgebra::so3();
    let h = KaluzaKleinHamiltonian::new(lag, &alg)?;
    let conn = so3_affine(rng, ch, 0.8)?;
    let k = h.order();
    let n = OHPState::flat_len(k, 2, 3);
    let mut err: f64 = 0.0;
    for _ in 0..100 {
        let st = OHPState::from_vector(&rvec(rng, n, 1.0), k, 2, 3)?;
        let flow = ohp_vector_field(&h, &conn, &st)?.to_vector();
        let dh = h.partials(&st)?;
        for index in 0..n {
            let mut e = DVector::zeros(n);
            e[index] = 1.0;
            let dc = OHPPartials::from_vector(&e, k, 2, 3)?;
            err = err.max((gauged_bracket(&conn, &st, &dc, &dh)? - flow[index]).abs());
        }
    }
    Ok(err)
}

/// Largest unreduced-action gradient along an LP2 solution integrated at
/// `dt = 1e-3` and sampled every `stride` steps.
fn lp2_stationarity(lag: &KaluzaKlein2, conn: &Connection, s0: &LP2State, stride: usize, seed: u64) -> Result<f64> {
    let config = IntegratorConfig::default();
    let tr = integrate_lp2(lag, conn, s0, 1.0, &config)?;
    let gs = reconstruct_lp2(lag, conn, &GroupElement::identity(conn.algebra()), &tr, &config)?;
    let idx: Vec<usize> = (0..tr.len()).step_by(stride).collect();
    let xs: Vec<DVector<f64>> = idx.iter().map(|&i| tr.states[i].rho[0].clone()).collect();
    let gp: Vec<GroupElement> = idx.iter().map(|&i| gs[i].clone()).collect();
    let vars: Vec<_> = smooth_variations(conn.base_dim(), xs.len(), 4, seed)
        .into_iter()
        .zip(smooth_variations(
            conn.algebra().dim(),
            xs.len(),
            4,
            seed.wrapping_add(1),
        ))
        .collect();
    let grads = bundle::oracle::bundle_action_gradient(lag, conn, &xs, &gp, stride as f64 * config.dt, &vars)?;
    Ok(grads.iter().fold(0.0, |a, g| a.max(g.abs())))
}

fn bundle_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Bundle;
    let mut out = Vec::new();
    let v0 = rvec(rng, 2, 1.0);
    let radius = worst(CHIRALITIES.map(|ch| lorentz_radius(ch, 0.8, 1.5, &v0)));
    out.push(Check::new(
        s,
        "Wong constant field circular orbit radius error",
        radius,
        Bound::Below(1e-6),
    ));

    let abelian = LieAlgebra::abelian(2);
    let mu0 = DualVector(rvec(rng, 2, 1.0));
    let charge = worst(CHIRALITIES.map(|ch| {
        let conn = Connection::new(&abelian, 2, ch, |x: &DVector<f64>| {
            DMatrix::from_row_slice(2, 2, &[x[1].sin(), x[0] * x[1], 1.0 + x[0] * x[0], -x[1]])
        });
        let s0 = WongState {
            rho: DVector::zeros(2),
            rho_dot: v0.clone(),
            mu: mu0.clone(),
        };
        let tr = integrate_wong(
            &base_metric(),
            &Inertia::identity(2),
            &conn,
            &s0,
            2.0,
            &IntegratorConfig::default(),
        )?;
        Ok(tr
            .states
            .iter()
            .map(|st| (&st.mu.0 - &mu0.0).amax())
            .fold(0.0, f64::max))
    }));
    out.push(Check::new(
        s,
        "Wong abelian charge conservation",
        charge,
        Bound::AtMost(0.0),
    ));

    let kappa = Inertia::identity(3).scaled(2.0).expect("positive factor");
    let wong0 = WongState {
        rho: rvec(rng, 2, 0.5),
        rho_dot: rvec(rng, 2, 0.5),
        mu: DualVector(rvec(rng, 3, 1.0)),
    };
    let mut casimir = Vec::new();
    let mut limit = Vec::new();
    for ch in CHIRALITIES {
        let conn = so3_affine(rng, ch, 0.6);
        let run = || -> Result<(f64, f64)> {
            let conn = conn?;
            let config = IntegratorConfig::default();
            let metric = base_metric();
            let w = integrate_wong(&metric, &kappa, &conn, &wong0, 10.0, &config)?;
            let cas = w.drift(|st| Ok(wong_casimir(&kappa, st)))?;
            let w2 = integrate_wong2(
                &metric,
                &kappa,
                &conn,
                0.0,
                0.0,
                &Wong2State::from_wong(&wong0),
                10.0,
                &config,
            )?;
            let mut diff: f64 = 0.0;
            for (a, b) in w.states.iter().zip(&w2.states) {
                diff = diff
                    .max((&a.rho - &b.rho[0]).amax())
                    .max((&a.rho_dot - &b.rho[1]).amax())
                    .max((&a.mu.0 - &b.mu().0).amax());
            }
            Ok((cas, diff))
        };
        let (a, b) = split(run());
        casimir.push(a);
        limit.push(b);
    }
    out.push(Check::new(
        s,
        "Wong so(3) charge norm drift, T=10",
        worst(casimir),
        Bound::AtMost(1e-8),
    ));
    out.push(Check::new(
        s,
        "second-order Wong with zero lengths equals Wong",
        worst(limit),
        Bound::AtMost(0.0),
    ));

    let k1 = worst(CHIRALITIES.map(|ch| decoupling_deviation(rng, ch, false)));
    out.push(Check::new(
        s,
        "zero-curvature decoupling, first order",
        k1,
        Bound::Below(1e-8),
    ));
    let k2 = worst(CHIRALITIES.map(|ch| decoupling_deviation(rng, ch, true)));
    out.push(Check::new(
        s,
        "zero-curvature decoupling, second order",
        k2,
        Bound::Below(1e-8),
    ));

    let ohp = worst(CHIRALITIES.map(wong2_vs_ohp));
    out.push(Check::new(
        s,
        "second-order Wong vs OHP deviation, T=5",
        ohp,
        Bound::Below(1e-6),
    ));

    let bracket = worst(
        CHIRALITIES
            .into_iter()
            .flat_map(|ch| [false, true].map(|second| (ch, second)))
            .map(|(ch, second)| gauged_consistency(rng, ch, second)),
    );
    out.push(Check::new(
        s,
        "flow-bracket consistency, gauged bracket, 100 states",
        bracket,
        Bound::Below(1e-9),
    ));

    let seed = rng.random::<u64>();
    let order = least(CHIRALITIES.map(|ch| {
        let lag = KaluzaKlein2::new(
            base_metric(),
            0.9,
            skewed_inertia(rng, 3)?,
            skewed_inertia(rng, 3)?,
            0.8,
        )?;
        let conn = so3_affine(rng, ch, 0.7)?;
        let s0 = random_lp2(rng, &lag, 0.6);
        let coarse = lp2_stationarity(&lag, &conn, &s0, 10, seed)?;
        let fine = lp2_stationarity(&lag, &conn, &s0, 5, seed)?;
        Ok((coarse / fine).log2())
    }));
    out.push(Check::new(
        s,
        "LP2 unreduced action stationarity order",
        order,
        Bound::AtLeast(1.8),
    ));
    out
}

// ------------------------------------------------------------------ solvers

fn solvers_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let s = Suite::Solvers;
    let mut out = Vec::new();
    let so3 = LieAlgebra::so3();
    let inertia = Inertia::diagonal(&[1.0, 2.0, 3.0]).expect("positive diagonal");

    let cubic = worst(CHIRALITIES.map(|ch| {
        let alg = LieAlgebra::abelian(3);
        let model = spline2(&alg, Inertia::identity(3), false, 0.0, ch)?;
        let target = alg_vec(rng, 3, 1.0);
        let p = ShootingProblem::new(
            model,
            GroupElement::identity(&alg),
            alg.exp(&target)?,
            AlgebraVector::zeros(3),
            AlgebraVector::zeros(3),
            1.0,
        );
        let r = shoot_spline(&p)?;
        let want_dot = target.scale(6.0);
        let want_ddot = target.scale(-12.0);
        Ok((&r.xi_dot0.0 - &want_dot.0)
            .amax()
            .max((&r.xi_ddot0.0 - &want_ddot.0).amax()))
    }));
    out.push(Check::new(
        s,
        "abelian shooting vs Euclidean cubic coefficients",
        cubic,
        Bound::Below(1e-9),
    ));

    let mut geo_iters = Vec::new();
    let mut geo_res = Vec::new();
    for ch in CHIRALITIES {
        let mut run = || -> Result<(f64, f64)> {
            let geodesic = rigid_body(&so3, inertia.clone(), ch)?;
            let g0 = so3.exp(&alg_vec(rng, 3, 1.0))?;
            let w0 = alg_vec(rng, 3, 0.5);
            let st = EPState::from_full_jet(&geodesic, g0.clone(), std::slice::from_ref(&w0))?;
            let tr = integrate_ep(&geodesic, &st, 1.0, &IntegratorConfig::default())?;
            let model = spline2(&so3, inertia.clone(), false, 0.0, ch)?;
            let mut p = ShootingProblem::new(
                model,
                g0,
                tr.g.last().expect("non-empty").clone(),
                w0,
                tr.jets.last().expect("non-empty")[0].clone(),
                1.0,
            );
            p.tol = 1e-10;
            let r = shoot_spline(&p)?;
            Ok((r.iterations as f64, r.residual))
        };
        let (a, b) = split(run());
        geo_iters.push(a);
        geo_res.push(b);
    }
    out.push(Check::new(
        s,
        "SO(3) geodesic boundary data: Newton iterations",
        worst(geo_iters),
        Bound::AtMost(3.0),
    ));
    out.push(Check::new(
        s,
        "SO(3) geodesic boundary data: residual",
        worst(geo_res),
        Bound::Below(1e-10),
    ));

    let mut gen_iters = Vec::new();
    let mut gen_res = Vec::new();
    for ch in CHIRALITIES {
        let mut run = || -> Result<(f64, f64)> {
            let model = spline2(&so3, inertia.clone(), false, 0.0, ch)?;
            let g0 = so3.exp(&alg_vec(rng, 3, 1.0))?;
            let axis = rvec(rng, 3, 1.0).normalize();
            let angle = rng.random_range(0.1..std::f64::consts::FRAC_PI_2);
            let rel = so3.exp(&AlgebraVector(axis * angle))?;
            let g1 = match ch {
                Chirality::Right => rel.compose(&g0),
                Chirality::Left => g0.compose(&rel),
            };
            let mut p = ShootingProblem::new(model, g0, g1, alg_vec(rng, 3, 0.3), alg_vec(rng, 3, 0.3), 1.0);
            p.config = IntegratorConfig::with_dt(2e-3);
            let r = shoot_spline(&p)?;
            Ok((r.iterations as f64, r.residual))
        };
        let (a, b) = split(run());
        gen_iters.push(a);
        gen_res.push(b);
    }
    out.push(Check::new(
        s,
        "SO(3) generic pose pair: Newton iterations",
        worst(gen_iters),
        Bound::AtMost(50.0),
    ));
    out.push(Check::new(
        s,
        "SO(3) generic pose pair: residual",
        worst(gen_res),
        Bound::Below(1e-8),
    ));

    let omega = rng.random_range(0.5..2.0);
    let rk4 = (|| -> Result<f64> {
        let field = |_: f64, y: &DVector<f64>| Ok(DVector::from_column_slice(&[omega * y[1], -omega * y[0]]));
        let y0 = DVector::from_column_slice(&[1.0, 0.0]);
        let exact = DVector::from_column_slice(&[(omega * 2.0).cos(), -(omega * 2.0).sin()]);
        let err = |dt: f64| -> Result<f64> {
            let tr = integrate(field, &y0, 2.0, &IntegratorConfig::with_dt(dt))?;
            Ok((tr.last() - &exact).amax())
        };
        Ok((err(0.04)? / err(0.02)?).log2())
    })();
    out.push(Check::new(s, "RK4 observed order", rk4, Bound::AtLeast(3.8)));

    let point = rvec(rng, 4, 1.0);
    let map = |x: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(&[
            x[0].sin() * x[1],
            x[2] * x[2] + x[3],
            (x[0] * x[3]).exp(),
        ]))
    };
    let exact = DMatrix::from_row_slice(
        3,
        4,
        &[
            point[0].cos() * point[1],
            point[0].sin(),
            0.0,
            0.0,
            0.0,
            0.0,
            2.0 * point[2],
            1.0,
            point[3] * (point[0] * point[3]).exp(),
            0.0,
            0.0,
            point[0] * (point[0] * point[3]).exp(),
        ],
    );
    let fd = fd_jacobian(map, &point, 1e-6).map(|j| (j - &exact).amax());
    out.push(Check::new(
        s,
        "finite-difference Jacobian accuracy",
        fd,
        Bound::Below(1e-8),
    ));
    let agree = fd_jacobian(map, &point, 1e-6).and_then(|a| fd_jacobian_seq(map, &point, 1e-6).map(|b| (a - b).amax()));
    out.push(Check::new(
        s,
        "parallel and sequential Jacobians agree",
        agree,
        Bound::AtMost(0.0),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::INDIVIDUAL.into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn bounds() {
        assert!(Bound::Below(1.0).holds(0.5) && !Bound::Below(1.0).holds(1.0));
        assert!(Bound::AtMost(0.0).holds(0.0));
        assert!(Bound::AtLeast(1.8).holds(2.0) && !Bound::AtLeast(1.8).holds(1.0));
        assert!(!Bound::AtMost(1.0).holds(f64::NAN) && !Bound::AtLeast(0.0).holds(f64::NAN));
    }

    #[test]
    fn failed_measurement_fails_the_check() {
        let c = Check::new(
            Suite::Ep,
            "x",
            Err(Error::InvalidArgument("boom".into())),
            Bound::AtMost(1.0),
        );
        assert!(!c.passed && c.measured.is_nan());
        assert!(c.to_string().contains("boom"));
    }

    #[test]
    fn suites_pass_and_are_deterministic() {
        for suite in Suite::INDIVIDUAL {
            let r = run(suite, DEFAULT_SEED);
            assert!(r.passed(), "{r}");
            assert_eq!(r, run(suite, DEFAULT_SEED));
        }
    }

    #[test]
    fn all_concatenates_the_suites_in_order() {
        let all = run(Suite::All, 7);
        assert!(all.passed(), "{all}");
        let order: Vec<Suite> = all.checks.iter().map(|c| c.suite).collect();
        let mut sorted = order.clone();
        sorted.sort_by_key(|s| Suite::INDIVIDUAL.iter().position(|x| x == s));
        assert_eq!(order, sorted);
    }
}
