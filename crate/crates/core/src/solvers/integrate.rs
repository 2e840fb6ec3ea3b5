use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{Chirality, LieAlgebra};
use crate::error::{Error, Result};

/// How group variables are advanced; algebra variables always use RK4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical RK4 on the matrix entries of `g`, with periodic re-projection.
    Rk4,
    /// Fourth-order commutator-free exponential integrator.
    CommutatorFree4,
}

/// Fixed-step integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Group elements are re-projected onto the group every this many steps; 0 disables it.
    pub reprojection_interval: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            scheme: Scheme::CommutatorFree4,
            reprojection_interval: 100,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    /// Number of steps and the uniform step that exactly hits `t_end`.
    pub fn steps(&self, t_end: f64) -> Result<(usize, f64)> {
        self.validate()?;
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be non-negative, got {t_end}"
            )));
        }
        if t_end == 0.0 {
            return Ok((0, 0.0));
        }
        let n = ((t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        Ok((n, t_end / n as f64))
    }
}

/// Uniformly sampled solution of a first-order system, with the field
/// value at every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub derivs: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Hermite cubic midpoint between samples `i` and `i + 1`.
    pub fn hermite_midpoint(&self, i: usize) -> DVector<f64> {
        let h = self.times[i + 1] - self.times[i];
        (&self.states[i] + &self.states[i + 1]) * 0.5 + (&self.derivs[i] - &self.derivs[i + 1]) * (h / 8.0)
    }
}

fn finite_or(v: &DVector<f64>, time: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { time })
    }
}

/// One classical RK4 step; `k1` is the field at `(t, x)`.
pub fn rk4_step<F>(field: &F, t: f64, x: &DVector<f64>, k1: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k2 = field(t + 0.5 * h, &(x + k1 * (0.5 * h)))?;
    let k3 = field(t + 0.5 * h, &(x + &k2 * (0.5 * h)))?;
    let k4 = field(t + h, &(x + &k3 * h))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrate `ẋ = f(t, x)` on `[0, t_end]` with fixed-step RK4.
///
/// Returns [`Error::Divergence`] with the failing time when a state stops
/// being finite; field errors propagate unchanged.
pub fn integrate<F>(field: F, x0: &DVector<f64>, t_end: f64, config: &IntegratorConfig) -> Result<Trajectory>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let (n, h) = config.steps(t_end)?;
    finite_or(x0, 0.0)?;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut derivs = Vec::with_capacity(n + 1);
    let mut x = x0.clone();
    let mut f = field(0.0, &x)?;
    finite_or(&f, 0.0)?;
    for i in 0..n {
        let t = i as f64 * h;
        let next = rk4_step(&field, t, &x, &f, h)?;
        times.push(t);
        states.push(x);
        derivs.push(f);
        let t_next = (i + 1) as f64 * h;
        finite_or(&next, t_next)?;
        f = field(t_next, &next)?;
        finite_or(&f, t_next)?;
        x = next;
    }
    times.push(n as f64 * h);
    states.push(x);
    derivs.push(f);
    Ok(Trajectory { times, states, derivs })
}

/// One step of the fourth-order commutator-free scheme for `ġ = ξ g`
/// (right) or `ġ = g ξ` (left), given `ξ` at the start, midpoint and end
/// of the step.
pub fn cf4_step(
    algebra: &LieAlgebra,
    chirality: Chirality,
    g: &DMatrix<f64>,
    xi0: &DVector<f64>,
    xi_half: &DVector<f64>,
    xi1: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let a = (xi0 * 3.0 + xi_half * 4.0 - xi1) * (h / 12.0);
    let b = (-xi0 + xi_half * 4.0 + xi1 * 3.0) * (h / 12.0);
    let ea = crate::algebra::group_exp_matrix(algebra, &a);
    let eb = crate::algebra::group_exp_matrix(algebra, &b);
    match chirality {
        Chirality::Right => eb * ea * g,
        Chirality::Left => g * ea * eb,
    }
}

/// One RK4 step on matrix entries for the reconstruction equation.
pub fn rk4_group_step(
    algebra: &LieAlgebra,
    chirality: Chirality,
    g: &DMatrix<f64>,
    xi0: &DVector<f64>,
    xi_half: &DVector<f64>,
    xi1: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let x0 = algebra.hat_raw(xi0);
    let xh = algebra.hat_raw(xi_half);
    let x1 = algebra.hat_raw(xi1);
    let f = |x: &DMatrix<f64>, m: &DMatrix<f64>| match chirality {
        Chirality::Right => x * m,
        Chirality::Left => m * x,
    };
    let k1 = f(&x0, g);
    let k2 = f(&xh, &(g + &k1 * (0.5 * h)));
    let k3 = f(&xh, &(g + &k2 * (0.5 * h)));
    let k4 = f(&x1, &(g + &k3 * h));
    g + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_field_is_constant() {
        let x0 = DVector::from_column_slice(&[1.0, -2.0]);
        let tr = integrate(
            |_, x| Ok(DVector::zeros(x.len())),
            &x0,
            1.0,
            &IntegratorConfig::with_dt(0.1),
        )
        .unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.states.iter().all(|s| s == &x0));
        assert_relative_eq!(tr.times[10], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn step_count_hits_horizon() {
        let c = IntegratorConfig::with_dt(1e-3);
        assert_eq!(c.steps(10.0).unwrap().0, 10_000);
        assert_eq!(c.steps(0.0025).unwrap().0, 3);
        assert!(IntegratorConfig::with_dt(0.0).steps(1.0).is_err());
        assert!(c.steps(-1.0).is_err());
    }

    #[test]
    fn linear_field_converges_at_fourth_order() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.1]);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let exact = (a.clone() * 2.0).exp() * &x0;
        let err = |dt: f64| {
            let tr = integrate(|_, x| Ok(&a * x), &x0, 2.0, &IntegratorConfig::with_dt(dt)).unwrap();
            (tr.last() - &exact).norm()
        };
        let e1 = err(0.02);
        let e2 = err(0.01);
        let order = (e1 / e2).log2();
        assert!((3.7..=4.3).contains(&order), "order {order}");
    }

    #[test]
    fn divergence_reports_time() {
        let x0 = DVector::from_element(1, 1.0);
        let err = integrate(
            |_, x| Ok(x.map(|v| v * v * 1e6)),
            &x0,
            1.0,
            &IntegratorConfig::with_dt(0.01),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { time } if time > 0.0 && time <= 1.0));
    }

    #[test]
    fn cf4_constant_generator_is_exact() {
        let alg = LieAlgebra::so3();
        let x = DVector::from_column_slice(&[0.3, -0.5, 0.9]);
        let g0 = alg.exp(&crate::AlgebraVector::from_slice(&[0.1, 0.2, 0.3])).unwrap();
        for ch in [Chirality::Left, Chirality::Right] {
            let g1 = cf4_step(&alg, ch, g0.matrix(), &x, &x, &x, 0.7);
            let e = alg.exp(&crate::AlgebraVector(x.clone() * 0.7)).unwrap();
            let expected = match ch {
                Chirality::Right => e.matrix() * g0.matrix(),
                Chirality::Left => g0.matrix() * e.matrix(),
            };
            assert_relative_eq!(g1, expected, epsilon = 1e-14);
        }
    }
}
