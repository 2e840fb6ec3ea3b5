//! Construction of core objects from a validated scenario. Every failure
//! here is a schema error pointing at the field that caused it.

use geomech::bundle::{Connection, KaluzaKlein2};
use geomech::models::{quadratic2, quadratic3, rigid_body, spline2, ReducedLagrangianModel};
use geomech::{AlgebraVector, BaseMetric, DualVector, GroupElement, Inertia, LieAlgebra};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, SchemaContext};
use crate::scenario::{ConnectionSpec, Family, MatrixSpec, Scenario};

pub fn algebra(s: &Scenario) -> Result<LieAlgebra, CliError> {
    LieAlgebra::named(s.group()?).at("/group")
}

pub fn vector(v: &[f64], n: usize, pointer: &str) -> Result<DVector<f64>, CliError> {
    if v.len() != n {
        return Err(CliError::schema(
            pointer,
            format!("expected {n} entries, found {}", v.len()),
        ));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(CliError::schema(format!("{pointer}/{i}"), "must be finite"));
    }
    Ok(DVector::from_column_slice(v))
}

pub fn algebra_vector(v: &[f64], alg: &LieAlgebra, pointer: &str) -> Result<AlgebraVector, CliError> {
    vector(v, alg.dim(), pointer).map(AlgebraVector)
}

pub fn dual_vector(v: &[f64], alg: &LieAlgebra, pointer: &str) -> Result<DualVector, CliError> {
    vector(v, alg.dim(), pointer).map(DualVector)
}

/// A list of `slots` vectors of length `n`.
pub fn jet(v: &[Vec<f64>], slots: usize, n: usize, pointer: &str) -> Result<Vec<DVector<f64>>, CliError> {
    if v.len() != slots {
        return Err(CliError::schema(
            pointer,
            format!("expected {slots} slots, found {}", v.len()),
        ));
    }
    v.iter()
        .enumerate()
        .map(|(i, x)| vector(x, n, &format!("{pointer}/{i}")))
        .collect()
}

/// `rows × cols` matrix given as a list of rows.
pub fn rows(v: &[Vec<f64>], nrows: usize, ncols: usize, pointer: &str) -> Result<DMatrix<f64>, CliError> {
    let r = jet(v, nrows, ncols, pointer)?;
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

pub fn matrix(spec: &MatrixSpec, n: usize, pointer: &str) -> Result<DMatrix<f64>, CliError> {
    match spec {
        MatrixSpec::Diagonal(d) => Ok(DMatrix::from_diagonal(&vector(d, n, pointer)?)),
        MatrixSpec::Full(r) => rows(r, n, n, pointer),
    }
}

pub fn inertia(spec: &MatrixSpec, alg: &LieAlgebra, pointer: &str) -> Result<Inertia, CliError> {
    Inertia::new(matrix(spec, alg.dim(), pointer)?).at(pointer)
}

pub fn group_element(log: Option<&Vec<f64>>, alg: &LieAlgebra, pointer: &str) -> Result<GroupElement, CliError> {
    match log {
        Some(v) => alg.exp(&algebra_vector(v, alg, pointer)?).at(pointer),
        None => Ok(GroupElement::identity(alg)),
    }
}

pub fn model(s: &Scenario, alg: &LieAlgebra) -> Result<ReducedLagrangianModel, CliError> {
    let spec = s.model()?;
    let family = spec
        .family
        .ok_or_else(|| CliError::schema("/model/family", "required"))?;
    let ch = s.chirality;
    let inertia = inertia(&spec.inertia, alg, "/model/inertia")?;
    match family {
        Family::RigidBody => rigid_body(alg, inertia, ch).at("/model/inertia"),
        Family::Spline2 => {
            if !spec.tau.is_finite() {
                return Err(CliError::schema("/model/tau", "must be finite"));
            }
            let pointer = if spec.bi_invariant {
                "/model/bi_invariant"
            } else {
                "/model/inertia"
            };
            spline2(alg, inertia, spec.bi_invariant, spec.tau, ch).at(pointer)
        }
        Family::Quadratic2 => {
            let potential = spec
                .potential
                .as_ref()
                .ok_or_else(|| CliError::schema("/model/potential", "required for the quadratic2 family"))?;
            let potential = matrix(potential, alg.dim(), "/model/potential")?;
            quadratic2(alg, potential, inertia, ch).at("/model/potential")
        }
        Family::Quadratic3 => quadratic3(alg, inertia, ch).at("/model/inertia"),
    }
}

pub fn metric(s: &Scenario) -> Result<BaseMetric, CliError> {
    let base = s.base.as_ref().ok_or_else(|| CliError::schema("/base", "required"))?;
    let n = match &base.metric {
        MatrixSpec::Diagonal(d) => d.len(),
        MatrixSpec::Full(r) => r.len(),
    };
    if n == 0 {
        return Err(CliError::schema("/base/metric", "base dimension must be at least 1"));
    }
    BaseMetric::new(matrix(&base.metric, n, "/base/metric")?).at("/base/metric")
}

pub fn connection(s: &Scenario, alg: &LieAlgebra, m: usize) -> Result<Connection, CliError> {
    let spec = s
        .connection
        .as_ref()
        .ok_or_else(|| CliError::schema("/connection", "required"))?;
    let d = alg.dim();
    let ch = s.chirality;
    match spec {
        ConnectionSpec::Zero => Ok(Connection::zero(alg, m, ch)),
        ConnectionSpec::Constant { coefficients } => {
            let c = rows(coefficients, d, m, "/connection/coefficients")?;
            Connection::constant(alg, ch, c).at("/connection/coefficients")
        }
        ConnectionSpec::AbelianSymmetricGauge { field_strength } => {
            if m != 2 {
                return Err(CliError::schema(
                    "/base/metric",
                    format!("the symmetric gauge lives on a 2-dimensional base, found {m}"),
                ));
            }
            if !field_strength.is_finite() {
                return Err(CliError::schema("/connection/field_strength", "must be finite"));
            }
            Connection::abelian_symmetric_gauge(alg, ch, *field_strength).at("/connection")
        }
        ConnectionSpec::Affine { constant, linear } => {
            let c = rows(constant, d, m, "/connection/constant")?;
            if !linear.is_empty() && linear.len() != m {
                return Err(CliError::schema(
                    "/connection/linear",
                    format!(
                        "expected {m} matrices (one per base coordinate), found {}",
                        linear.len()
                    ),
                ));
            }
            let l = linear
                .iter()
                .enumerate()
                .map(|(i, r)| rows(r, d, m, &format!("/connection/linear/{i}")))
                .collect::<Result<Vec<_>, _>>()?;
            Connection::affine(alg, ch, c, l).at("/connection")
        }
    }
}

/// Fiber inertia `κ̄` of `wong`/`wong2`.
pub fn kappa(s: &Scenario, alg: &LieAlgebra) -> Result<Inertia, CliError> {
    let k = inertia(&s.model()?.inertia, alg, "/model/inertia")?;
    let residual = k.ad_invariance_residual(alg).at("/model/inertia")?;
    if residual > geomech::models::AD_INVARIANCE_TOL {
        return Err(CliError::schema(
            "/model/inertia",
            format!("the charge inertia must be ad-invariant (residual {residual:.3e})"),
        ));
    }
    Ok(k)
}

pub fn lengths(s: &Scenario) -> Result<(f64, f64), CliError> {
    let m = s.model()?;
    for (name, v) in [("lambda1", m.lambda1), ("lambda2", m.lambda2)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::schema(
                format!("/model/{name}"),
                "must be finite and non-negative",
            ));
        }
    }
    Ok((m.lambda1, m.lambda2))
}

pub fn kaluza_klein(s: &Scenario, alg: &LieAlgebra, metric: BaseMetric) -> Result<KaluzaKlein2, CliError> {
    let spec = s.model()?;
    let (l1, l2) = lengths(s)?;
    let potential = inertia(&spec.inertia, alg, "/model/inertia")?;
    let kinetic = match &spec.kinetic {
        Some(k) => inertia(k, alg, "/model/kinetic")?,
        None => potential.clone(),
    };
    KaluzaKlein2::new(metric, l1, potential, kinetic, l2).at("/model")
}
