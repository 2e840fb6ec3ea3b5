//! JSON scenario schema.
//!
//! A scenario names a simulation `kind`, the group, the model, optional
//! bundle data (base metric and connection), the initial data and the
//! integration horizon. Every field except `kind` has a default or is only
//! required by some kinds; [`Scenario::validate`] enforces the per-kind
//! requirements and reports the offending field as a JSON pointer.

use std::path::PathBuf;

use geomech::solvers::Scheme;
use geomech::verify::Suite;
use geomech::Chirality;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Version of both the scenario and the summary schema.
pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = geomech::verify::DEFAULT_SEED;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Ep,
    Olp,
    Wong,
    Wong2,
    Lp2,
    Ohp,
    SplineBvp,
    Verify,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Ep => "ep",
            Kind::Olp => "olp",
            Kind::Wong => "wong",
            Kind::Wong2 => "wong2",
            Kind::Lp2 => "lp2",
            Kind::Ohp => "ohp",
            Kind::SplineBvp => "spline_bvp",
            Kind::Verify => "verify",
        }
    }

    pub fn is_bundle(self) -> bool {
        matches!(self, Kind::Wong | Kind::Wong2 | Kind::Lp2 | Kind::Ohp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    RigidBody,
    Spline2,
    Quadratic2,
    Quadratic3,
}

impl Family {
    pub fn order(self) -> usize {
        match self {
            Family::RigidBody => 1,
            Family::Spline2 | Family::Quadratic2 => 2,
            Family::Quadratic3 => 3,
        }
    }
}

/// A symmetric matrix given either by its diagonal or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Lagrangian family of `ep`, `olp` and `spline_bvp` scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// Optional order check against the family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Inertia of the Lagrangian, or the fiber inertia `κ̄` (`K₁`) of
    /// bundle scenarios.
    pub inertia: MatrixSpec,
    /// Second fiber inertia `K₂` of `lp2`/`ohp` scenarios; defaults to `inertia`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinetic: Option<MatrixSpec>,
    /// Symmetric potential matrix of `quadratic2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<MatrixSpec>,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub bi_invariant: bool,
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Zero,
    /// `A = C` with `C` given as `d` rows of `m` entries.
    Constant {
        coefficients: Vec<Vec<f64>>,
    },
    /// Abelian field of strength `field_strength` on `ℝ²`.
    AbelianSymmetricGauge {
        field_strength: f64,
    },
    /// `A(x) = C + Σ_i x_i L_i`.
    Affine {
        constant: Vec<Vec<f64>>,
        linear: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    /// Constant metric on the flat base; its size fixes the base dimension.
    pub metric: MatrixSpec,
}

/// Initial data; which fields are required depends on the kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    /// Algebra coordinates of `log g(0)`; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Vec<f64>>,
    /// Full jet `(ξ, …, ξ^(2k−2))` for `ep` and `olp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jet: Option<Vec<Vec<f64>>>,
    /// Base jet `(ρ, ρ̇[, ρ̈, ρ⃛])`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<Vec<f64>>>,
    /// Charge jet: `(μ̄)` for `wong`, `(μ̄[, Dμ̄, D²μ̄])` for `wong2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<Vec<Vec<f64>>>,
    /// Fiber jet `(σ, σ̇)` for `lp2`/`ohp` when `λ2 > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    /// Fiber momentum for `lp2`/`ohp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    /// Algebra coordinates of `log g(0)` and `log g(T)`.
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    /// Boundary velocities `ξ(0)` and `ξ(T)`.
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    50
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_chirality() -> Chirality {
    Chirality::Right
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_scheme() -> Scheme {
    Scheme::CommutatorFree4
}

fn default_sample_every() -> usize {
    1
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default = "default_chirality")]
    pub chirality: Chirality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    /// Horizon; `spline_bvp` defaults to 1.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Write every `sample_every`-th sample to the CSV.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Output directory for `trajectory.csv` and `summary.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Suite of a `verify` scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
}

/// Command-line overrides applied on top of a parsed scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Convert a serde path into a JSON pointer.
fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

/// Extract the field name from serde's "missing field `x`" message.
fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

impl Scenario {
    /// Parse and validate a scenario document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut pointer = pointer_of(e.path());
            let message = e.inner().to_string();
            if let Some(field) = missing_field(&message) {
                pointer.push('/');
                pointer.push_str(field);
            }
            CliError::schema(pointer, message)
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(dt) = o.dt {
            self.dt = dt;
        }
        if let Some(t) = o.t_end {
            self.t_end = Some(t);
        }
        if let Some(out) = &o.output {
            self.output = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        self.validate()
    }

    /// Normalized scenario text, as echoed by `--dump-config`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Horizon with the per-kind default filled in.
    pub fn horizon(&self) -> f64 {
        self.t_end.unwrap_or(1.0)
    }

    pub fn model(&self) -> Result<&ModelSpec, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::schema("/model", format!("required for kind '{}'", self.kind.name())))
    }

    pub fn initial(&self) -> Result<&InitialData, CliError> {
        self.initial
            .as_ref()
            .ok_or_else(|| CliError::schema("/initial", format!("required for kind '{}'", self.kind.name())))
    }

    pub fn group(&self) -> Result<&str, CliError> {
        self.group
            .as_deref()
            .ok_or_else(|| CliError::schema("/group", format!("required for kind '{}'", self.kind.name())))
    }

    pub fn suite(&self) -> Result<Suite, CliError> {
        let name = self
            .suite
            .as_deref()
            .ok_or_else(|| CliError::schema("/suite", "required for kind 'verify'"))?;
        name.parse().map_err(|e| CliError::schema("/suite", e))
    }

    /// Kind-independent checks that need no algebra; dimensional
    /// consistency is checked when the scenario is built.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::schema(
                "/schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::schema(
                "/dt",
                format!("must be positive and finite, got {}", self.dt),
            ));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::schema("/T", format!("must be positive and finite, got {t}")));
            }
        }
        if self.sample_every == 0 {
            return Err(CliError::schema("/sample_every", "must be at least 1"));
        }
        if self.kind == Kind::Verify {
            self.suite()?;
            return Ok(());
        }
        self.group()?;
        let model = self.model()?;
        match self.kind {
            Kind::Ep | Kind::Olp | Kind::SplineBvp => {
                let family = model.family.ok_or_else(|| {
                    CliError::schema("/model/family", format!("required for kind '{}'", self.kind.name()))
                })?;
                if let Some(k) = model.k {
                    if k != family.order() {
                        return Err(CliError::schema(
                            "/model/k",
                            format!("order {k} does not match family order {}", family.order()),
                        ));
                    }
                }
                if self.kind == Kind::SplineBvp {
                    if family != Family::Spline2 {
                        return Err(CliError::schema("/model/family", "spline_bvp needs the spline2 family"));
                    }
                    if self.boundary.is_none() {
                        return Err(CliError::schema("/boundary", "required for kind 'spline_bvp'"));
                    }
                } else {
                    self.initial()?;
                }
            }
            _ => {
                if self.base.is_none() {
                    return Err(CliError::schema(
                        "/base",
                        format!("required for kind '{}'", self.kind.name()),
                    ));
                }
                if self.connection.is_none() {
                    return Err(CliError::schema(
                        "/connection",
                        format!("required for kind '{}'", self.kind.name()),
                    ));
                }
                self.initial()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointers_name_the_missing_field() {
        let err = Scenario::from_json(r#"{"kind": "ep"}"#).unwrap_err();
        match err {
            CliError::Schema { pointer, .. } => assert_eq!(pointer, "/group"),
            other => panic!("unexpected {other:?}"),
        }
        let err = Scenario::from_json(r#"{"group": "so3"}"#).unwrap_err();
        match err {
            CliError::Schema { pointer, .. } => assert_eq!(pointer, "/kind"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pointers_reach_nested_fields() {
        let text = r#"{"kind": "ep", "group": "so3", "model": {"family": "rigid_body", "inertia": [1, "x", 3]},
                      "initial": {"jet": [[1, 0, 0]]}}"#;
        match Scenario::from_json(text).unwrap_err() {
            CliError::Schema { pointer, .. } => assert_eq!(pointer, "/model/inertia"),
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"kind": "ep", "group": "so3", "model": {"family": "rigid_body", "inertia": [1, 2, 3]},
                      "initial": {"jet": [[1, 0, 0]], "extra": 1}}"#;
        match Scenario::from_json(text).unwrap_err() {
            CliError::Schema { pointer, message } => {
                assert_eq!(pointer, "/initial/extra");
                assert!(message.contains("unknown field"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defaults_are_filled_and_round_trip() {
        let text = r#"{"kind": "verify", "suite": "algebra"}"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.seed, 42);
        assert_eq!(s.dt, DEFAULT_DT);
        assert_eq!(s.chirality, Chirality::Right);
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn overrides_are_validated() {
        let mut s = Scenario::from_json(r#"{"kind": "verify", "suite": "ep"}"#).unwrap();
        let err = s
            .apply(&Overrides {
                dt: Some(-1.0),
                ..Overrides::default()
            })
            .unwrap_err();
        assert!(matches!(err, CliError::Schema { ref pointer, .. } if pointer == "/dt"));
    }

    #[test]
    fn order_and_family_must_agree() {
        let text = r#"{"kind": "ep", "group": "so3", "model": {"family": "spline2", "k": 3, "inertia": [1, 1, 1]},
                      "initial": {"jet": [[1, 0, 0]]}}"#;
        assert!(matches!(
            Scenario::from_json(text).unwrap_err(),
            CliError::Schema { ref pointer, .. } if pointer == "/model/k"
        ));
    }
}
