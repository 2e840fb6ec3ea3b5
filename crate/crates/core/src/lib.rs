//! Higher-order reduced geometric mechanics on matrix Lie groups.
//!
//! * [`algebra`]: Lie algebras, group elements, inertia tensors.
//! * [`models`]: built-in reduced Lagrangians and Hamiltonians.
//! * [`euler_poincare`]: kth-order Euler–Poincaré dynamics, reconstruction,
//!   group-jet reduction and the discrete-action stationarity oracle.
//! * [`ostrogradsky`]: reduced Legendre transform, energy, the
//!   Ostrogradsky–Lie–Poisson flow and its Poisson bracket.
//! * [`bundle`]: Lagrange–Poincaré and Ostrogradsky–Hamilton–Poincaré
//!   dynamics on trivial principal bundles with flat base (Wong's equations
//!   and their second-order generalization).
//! * [`solvers`]: fixed-step integrators, finite-difference Jacobians and
//!   the shooting solver for Riemannian 2-spline boundary-value problems.
//! * [`verify`]: seeded property suites used by the CLI and the tests.

pub mod algebra;
pub mod bundle;
pub mod error;
pub mod euler_poincare;
pub mod models;
pub mod ostrogradsky;
pub mod par;
pub mod solvers;
pub mod verify;

pub use algebra::{
    exp_map, log_map, AlgebraVector, BaseMetric, Chirality, DualVector, GroupElement, GroupKind, Inertia, LieAlgebra,
    LieAlgebraDef,
};
pub use error::{Error, Result};
