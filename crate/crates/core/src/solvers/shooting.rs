use nalgebra::DVector;

use crate::algebra::{AlgebraVector, Chirality, GroupElement};
use crate::error::{Error, Result};
use crate::euler_poincare::{integrate_ep, EPState, EPTrajectory};
use crate::models::{Family, ReducedLagrangian, ReducedLagrangianModel};
use crate::solvers::{fd_jacobian, IntegratorConfig, DEFAULT_FD_EPS};

/// Sufficient-decrease constant of the Armijo line search.
const ARMIJO_C: f64 = 1e-4;
/// Smallest step length tried before giving up on a Newton direction.
const MIN_STEP: f64 = 1e-10;

/// Two-point boundary-value problem for a 2-spline on a Lie group.
///
/// Find `ξ̇(0), ξ̈(0)` such that the solution starting at `(g0, ξ(0) = v0)`
/// reaches `g1` with `ξ(T) = v1`. The velocities are right (spatial) or
/// left (body) velocities according to the model's chirality.
#[derive(Clone, Debug)]
pub struct ShootingProblem {
    pub model: ReducedLagrangianModel,
    pub g0: GroupElement,
    pub g1: GroupElement,
    pub v0: AlgebraVector,
    pub v1: AlgebraVector,
    pub t_end: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub config: IntegratorConfig,
    /// Initial guess for `(ξ̇(0), ξ̈(0))`; the Euclidean cubic seed when absent.
    pub initial_guess: Option<(AlgebraVector, AlgebraVector)>,
}

impl ShootingProblem {
    /// Problem with default tolerance `1e-8`, 50 iterations and the default integrator.
    pub fn new(
        model: ReducedLagrangianModel,
        g0: GroupElement,
        g1: GroupElement,
        v0: AlgebraVector,
        v1: AlgebraVector,
        t_end: f64,
    ) -> Self {
        Self {
            model,
            g0,
            g1,
            v0,
            v1,
            t_end,
            tol: 1e-8,
            max_iter: 50,
            config: IntegratorConfig::default(),
            initial_guess: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !matches!(self.model.family(), Family::Spline2 { .. }) {
            return Err(Error::InvalidArgument(format!(
                "shooting expects a spline2 model, got {}",
                self.model.family().name()
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument("tolerance must be positive and finite".into()));
        }
        let alg = self.model.algebra();
        for g in [&self.g0, &self.g1] {
            if g.algebra() != alg {
                return Err(Error::InvalidArgument("boundary pose from a different group".into()));
            }
        }
        alg.check("boundary velocity v0", self.v0.dim())?;
        alg.check("boundary velocity v1", self.v1.dim())?;
        self.config.validate()
    }

    /// Integrate from the unknowns `(ξ̇(0), ξ̈(0))`.
    pub fn trajectory(&self, xi_dot0: &AlgebraVector, xi_ddot0: &AlgebraVector) -> Result<EPTrajectory> {
        let full = [self.v0.clone(), xi_dot0.clone(), xi_ddot0.clone()];
        let s = EPState::from_full_jet(&self.model, self.g0.clone(), &full)?;
        integrate_ep(&self.model, &s, self.t_end, &self.config)
    }

    /// Boundary residual `(log(g1 g(T)⁻¹) or log(g(T)⁻¹ g1), ξ(T) − v1)`.
    pub fn residual(&self, unknowns: &DVector<f64>) -> Result<DVector<f64>> {
        let d = self.model.algebra().dim();
        let a = AlgebraVector::from_slice(&unknowns.as_slice()[..d]);
        let b = AlgebraVector::from_slice(&unknowns.as_slice()[d..]);
        let tr = self.trajectory(&a, &b)?;
        self.residual_of(&tr)
    }

    fn residual_of(&self, tr: &EPTrajectory) -> Result<DVector<f64>> {
        let alg = self.model.algebra();
        let g_end = tr.g.last().expect("non-empty trajectory");
        let mismatch = match self.model.chirality() {
            Chirality::Right => self.g1.compose(&g_end.inverse()),
            Chirality::Left => g_end.inverse().compose(&self.g1),
        };
        let pose = alg.log(&mismatch)?;
        let vel = &tr.jets.last().expect("non-empty trajectory")[0] - &self.v1;
        let mut out = pose.0.as_slice().to_vec();
        out.extend_from_slice(vel.as_slice());
        Ok(DVector::from_vec(out))
    }
}

/// Outcome of [`shoot_spline`].
#[derive(Clone, Debug)]
pub struct ShootingReport {
    pub xi_dot0: AlgebraVector,
    pub xi_ddot0: AlgebraVector,
    pub iterations: usize,
    pub residual: f64,
    /// Residual norm before the first and after every Newton iteration.
    pub residual_history: Vec<f64>,
    pub trajectory: EPTrajectory,
}

impl ShootingReport {
    /// Initial jet `(ξ(0), ξ̇(0), ξ̈(0))`.
    pub fn initial_jet(&self) -> [AlgebraVector; 3] {
        [
            self.trajectory.jets[0][0].clone(),
            self.xi_dot0.clone(),
            self.xi_ddot0.clone(),
        ]
    }
}

/// Euclidean cubic seed for `(ξ̇(0), ξ̈(0))`.
///
/// The displacement `Δ` is `log(g1 g0⁻¹)` for right velocities and
/// `log(g0⁻¹ g1)` for left ones; the cubic `v0 t + a₂t² + a₃t³` with
/// derivative `v1` at `T` then gives `ξ̇(0) = 2a₂`, `ξ̈(0) = 6a₃`. Exact for
/// abelian groups.
pub fn euclidean_cubic_seed(
    chirality: Chirality,
    g0: &GroupElement,
    g1: &GroupElement,
    v0: &AlgebraVector,
    v1: &AlgebraVector,
    t_end: f64,
) -> Result<(AlgebraVector, AlgebraVector)> {
    let rel = match chirality {
        Chirality::Right => g1.compose(&g0.inverse()),
        Chirality::Left => g0.inverse().compose(g1),
    };
    let delta = g0.algebra().log(&rel)?;
    let t = t_end;
    let a2 = (&delta.0 * 3.0 - (&v0.0 * 2.0 + &v1.0) * t) / (t * t);
    let a3 = (&delta.0 * -2.0 + (&v0.0 + &v1.0) * t) / (t * t * t);
    Ok((AlgebraVector(a2 * 2.0), AlgebraVector(a3 * 6.0)))
}

fn solve_newton(jac: &nalgebra::DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(x) = jac.clone().lu().solve(rhs) {
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    jac.clone()
        .svd(true, true)
        .solve(rhs, 1e-14)
        .map_err(|e| Error::Degenerate(format!("shooting Jacobian: {e}")))
}

/// Damped Newton shooting for a 2-spline boundary-value problem.
///
/// The Jacobian of the residual is formed by centered finite differences
/// (columns in parallel) and each Newton step is shortened until the
/// Armijo condition holds, so the residual norm decreases monotonically.
pub fn shoot_spline(problem: &ShootingProblem) -> Result<ShootingReport> {
    problem.validate()?;
    let d = problem.model.algebra().dim();
    let (s1, s2) = match &problem.initial_guess {
        Some(g) => g.clone(),
        None => euclidean_cubic_seed(
            problem.model.chirality(),
            &problem.g0,
            &problem.g1,
            &problem.v0,
            &problem.v1,
            problem.t_end,
        )?,
    };
    let mut u = DVector::from_iterator(2 * d, s1.as_slice().iter().chain(s2.as_slice()).copied());
    let mut f = problem.residual(&u)?;
    let mut norm = f.norm();
    let mut history = vec![norm];
    let mut iterations = 0;
    while norm >= problem.tol {
        if iterations == problem.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: norm,
            });
        }
        let jac = fd_jacobian(|x| problem.residual(x), &u, DEFAULT_FD_EPS)?;
        let step = solve_newton(&jac, &(-&f))?;
        let mut lambda = 1.0;
        loop {
            let trial = &u + &step * lambda;
            match problem.residual(&trial) {
                Ok(ft) => {
                    let nt = ft.norm();
                    if nt * nt <= (1.0 - 2.0 * ARMIJO_C * lambda) * norm * norm {
                        u = trial;
                        f = ft;
                        norm = nt;
                        break;
                    }
                }
                Err(Error::CutLocus { .. }) | Err(Error::Divergence { .. }) => {}
                Err(e) => return Err(e),
            }
            lambda *= 0.5;
            if lambda < MIN_STEP {
                return Err(Error::NonConvergence {
                    iterations,
                    residual: norm,
                });
            }
        }
        iterations += 1;
        history.push(norm);
    }
    let xi_dot0 = AlgebraVector::from_slice(&u.as_slice()[..d]);
    let xi_ddot0 = AlgebraVector::from_slice(&u.as_slice()[d..]);
    let trajectory = problem.trajectory(&xi_dot0, &xi_ddot0)?;
    Ok(ShootingReport {
        xi_dot0,
        xi_ddot0,
        iterations,
        residual: norm,
        residual_history: history,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Inertia, LieAlgebra};
    use crate::models::spline2;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> AlgebraVector {
        AlgebraVector::from_slice(x)
    }

    #[test]
    fn abelian_cubic() {
        let alg = LieAlgebra::abelian(3);
        for ch in [Chirality::Left, Chirality::Right] {
            let m = spline2(&alg, Inertia::identity(3), false, 0.0, ch).unwrap();
            let g1 = alg.exp(&v(&[1.0, 0.0, 0.0])).unwrap();
            let p = ShootingProblem::new(m, GroupElement::identity(&alg), g1, v(&[0.0; 3]), v(&[0.0; 3]), 1.0);
            let r = shoot_spline(&p).unwrap();
            assert_relative_eq!(r.xi_dot0.0, v(&[6.0, 0.0, 0.0]).0, epsilon = 1e-9);
            assert_relative_eq!(r.xi_ddot0.0, v(&[-12.0, 0.0, 0.0]).0, epsilon = 1e-9);
            assert!(r.residual < 1e-12);
        }
    }

    #[test]
    fn trivial_problem_has_zero_jet() {
        let alg = LieAlgebra::so3();
        let m = spline2(
            &alg,
            Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(),
            false,
            0.0,
            Chirality::Left,
        )
        .unwrap();
        let g = alg.exp(&v(&[0.2, 0.1, -0.3])).unwrap();
        let p = ShootingProblem::new(m, g.clone(), g.clone(), v(&[0.0; 3]), v(&[0.0; 3]), 1.0);
        let r = shoot_spline(&p).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.xi_dot0.amax() < 1e-12 && r.xi_ddot0.amax() < 1e-12);
        assert!(r.trajectory.g.iter().all(|h| (h.matrix() - g.matrix()).amax() < 1e-12));
    }

    #[test]
    fn generic_pose_pair_converges_monotonically() {
        let alg = LieAlgebra::so3();
        for ch in [Chirality::Left, Chirality::Right] {
            let m = spline2(&alg, Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(), false, 0.0, ch).unwrap();
            let g0 = alg.exp(&v(&[0.1, -0.2, 0.3])).unwrap();
            let g1 = alg.exp(&v(&[0.9, 0.6, -0.4])).unwrap();
            let mut p = ShootingProblem::new(m, g0, g1, v(&[0.2, 0.0, 0.1]), v(&[0.0, -0.3, 0.2]), 1.0);
            p.config = IntegratorConfig::with_dt(2e-3);
            let r = shoot_spline(&p).unwrap();
            assert!(r.residual < 1e-8, "{ch}: {}", r.residual);
            for w in r.residual_history.windows(2) {
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn non_spline_model_is_rejected() {
        let alg = LieAlgebra::so3();
        let m = crate::models::rigid_body(&alg, Inertia::identity(3), Chirality::Left).unwrap();
        let s = spline2(&alg, Inertia::identity(3), false, 0.0, Chirality::Left).unwrap();
        let mut p = ShootingProblem::new(
            s,
            GroupElement::identity(&alg),
            GroupElement::identity(&alg),
            v(&[0.0; 3]),
            v(&[0.0; 3]),
            1.0,
        );
        p.model = m;
        assert!(shoot_spline(&p).is_err());
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let alg = LieAlgebra::so3();
        let m = spline2(
            &alg,
            Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(),
            false,
            0.0,
            Chirality::Left,
        )
        .unwrap();
        let g1 = alg.exp(&v(&[1.0, 0.5, -0.2])).unwrap();
        let mut p = ShootingProblem::new(m, GroupElement::identity(&alg), g1, v(&[0.0; 3]), v(&[0.0; 3]), 1.0);
        p.max_iter = 0;
        p.config = IntegratorConfig::with_dt(1e-2);
        assert!(matches!(
            shoot_spline(&p),
            Err(Error::NonConvergence { iterations: 0, .. })
        ));
    }
}
