//! Fixed-step integrators, finite-difference Jacobians and the shooting
//! solver for 2-spline boundary-value problems.

mod fd;
mod integrate;
mod shooting;

pub use fd::{fd_gradient, fd_jacobian, fd_jacobian_seq, DEFAULT_FD_EPS};
pub use integrate::{cf4_step, integrate, rk4_group_step, rk4_step, IntegratorConfig, Scheme, Trajectory};
pub use shooting::{euclidean_cubic_seed, shoot_spline, ShootingProblem, ShootingReport};
