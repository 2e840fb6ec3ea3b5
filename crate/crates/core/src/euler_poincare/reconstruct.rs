use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, Chirality, GroupElement, LieAlgebra};
use crate::error::{Error, Result};
use crate::solvers::{cf4_step, rk4_group_step, IntegratorConfig, Scheme};

/// Midpoint of the sample interval `[i, i+1]` by cubic Lagrange
/// interpolation on the four nearest samples.
fn lagrange_midpoint(xs: &[AlgebraVector], i: usize) -> DVector<f64> {
    let n = xs.len();
    let x = |j: usize| &xs[j].0;
    if n < 4 {
        return (x(i) + x(i + 1)) * 0.5;
    }
    if i == 0 {
        x(0) * (5.0 / 16.0) + x(1) * (15.0 / 16.0) - x(2) * (5.0 / 16.0) + x(3) * (1.0 / 16.0)
    } else if i + 2 >= n {
        x(i - 2) * (1.0 / 16.0) - x(i - 1) * (5.0 / 16.0) + x(i) * (15.0 / 16.0) + x(i + 1) * (5.0 / 16.0)
    } else {
        (x(i) + x(i + 1)) * (9.0 / 16.0) - (x(i - 1) + x(i + 2)) * (1.0 / 16.0)
    }
}

/// Integrate `ġ = ξ g` (right) or `ġ = g ξ` (left) along a uniformly
/// sampled `ξ` series, starting from `g0`.
///
/// Interval midpoints of `ξ` come from cubic interpolation, so the result
/// is fourth-order accurate in `dt` with either scheme. Rotation groups
/// are re-projected every `config.reprojection_interval` steps.
pub fn reconstruct(
    xi_path: &[AlgebraVector],
    g0: &GroupElement,
    chirality: Chirality,
    dt: f64,
    config: &IntegratorConfig,
) -> Result<Vec<GroupElement>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let alg = g0.algebra();
    for x in xi_path {
        alg.check("reconstruction velocity", x.dim())?;
    }
    let mut out = Vec::with_capacity(xi_path.len().max(1));
    let mut g = g0.clone();
    out.push(g.clone());
    for i in 0..xi_path.len().saturating_sub(1) {
        let mid = lagrange_midpoint(xi_path, i);
        let (a, b) = (&xi_path[i].0, &xi_path[i + 1].0);
        let next = match config.scheme {
            Scheme::CommutatorFree4 => cf4_step(alg, chirality, g.matrix(), a, &mid, b, dt),
            Scheme::Rk4 => rk4_group_step(alg, chirality, g.matrix(), a, &mid, b, dt),
        };
        g = GroupElement::from_parts(alg.clone(), next);
        if config.reprojection_interval > 0 && (i + 1) % config.reprojection_interval == 0 {
            g.reproject();
        }
        out.push(g.clone());
    }
    Ok(out)
}

/// Reduced jet `(ξ, ξ̇, …, ξ^(k−1))` of a group curve at one instant.
///
/// `derivs` holds the matrices `g, ġ, …, g^(k)`. The velocity is
/// `ξ = ġ g⁻¹` (right) or `g⁻¹ ġ` (left); its derivatives follow from the
/// Leibniz rule with the derivatives of `W = g⁻¹`.
pub fn reduce_group_jet(
    algebra: &LieAlgebra,
    derivs: &[DMatrix<f64>],
    chirality: Chirality,
    k: usize,
) -> Result<Vec<AlgebraVector>> {
    if k == 0 || k > 3 {
        return Err(Error::Unsupported(format!(
            "group-jet reduction for order {k} (supported: 1 to 3)"
        )));
    }
    if derivs.len() < k + 1 {
        return Err(Error::DimensionMismatch {
            what: "group curve derivatives",
            expected: k + 1,
            found: derivs.len(),
        });
    }
    let n = algebra.group_dim();
    for m in derivs {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "group curve derivative matrix",
                expected: n,
                found: m.nrows(),
            });
        }
    }
    let w0 = derivs[0]
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("group curve value"))?;
    let g1 = &derivs[1];
    // derivatives of W = g⁻¹ from g W = I
    let mut w = vec![w0.clone()];
    if k >= 2 {
        w.push(-(&w0 * g1 * &w0));
    }
    if k >= 3 {
        let g2 = &derivs[2];
        let w1 = &w[1];
        w.push(-(w1 * g1 * &w0 + &w0 * g2 * &w0 + &w0 * g1 * w1));
    }
    let mut out = Vec::with_capacity(k);
    for order in 0..k {
        // ξ^(order) = Σ_j C(order, j) g^(j+1) W^(order−j)  (right)
        let mut acc = DMatrix::zeros(n, n);
        for j in 0..=order {
            let c = binomial(order, j);
            let gd = &derivs[j + 1];
            let wd = &w[order - j];
            acc += match chirality {
                Chirality::Right => gd * wd * c,
                Chirality::Left => wd * gd * c,
            };
        }
        out.push(AlgebraVector(algebra.vee_raw(&acc)));
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> AlgebraVector {
        AlgebraVector::from_slice(x)
    }

    #[test]
    fn one_parameter_subgroup_has_constant_velocity() {
        let alg = LieAlgebra::so3();
        let x = v(&[0.4, -0.3, 1.1]);
        let xh = alg.hat(&x).unwrap();
        let g = alg.exp(&x.scale(0.8)).unwrap();
        let derivs = vec![
            g.matrix().clone(),
            &xh * g.matrix(),
            &xh * &xh * g.matrix(),
            &xh * &xh * &xh * g.matrix(),
        ];
        for ch in [Chirality::Left, Chirality::Right] {
            let jet = reduce_group_jet(&alg, &derivs, ch, 3).unwrap();
            assert_relative_eq!(jet[0].0, x.0, epsilon = 1e-14);
            assert!(jet[1].amax() < 1e-14);
            assert!(jet[2].amax() < 1e-14);
        }
    }

    #[test]
    fn identity_curve_has_zero_jet() {
        let alg = LieAlgebra::se3();
        let mut derivs = vec![DMatrix::identity(4, 4)];
        derivs.extend(std::iter::repeat_n(DMatrix::zeros(4, 4), 3));
        let jet = reduce_group_jet(&alg, &derivs, Chirality::Right, 3).unwrap();
        assert!(jet.iter().all(|x| x.amax() == 0.0));
    }

    #[test]
    fn order_limits() {
        let alg = LieAlgebra::so3();
        let derivs = vec![DMatrix::identity(3, 3); 5];
        assert!(matches!(
            reduce_group_jet(&alg, &derivs, Chirality::Left, 4),
            Err(Error::Unsupported(_))
        ));
        let singular = vec![DMatrix::zeros(3, 3); 3];
        assert!(matches!(
            reduce_group_jet(&alg, &singular, Chirality::Left, 2),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn constant_velocity_reconstruction_is_exact() {
        let alg = LieAlgebra::so3();
        let x = v(&[0.3, 0.5, -0.2]);
        let g0 = alg.exp(&v(&[0.1, -0.4, 0.2])).unwrap();
        let n = 1001;
        let dt = 1e-3;
        let path = vec![x.clone(); n];
        for ch in [Chirality::Left, Chirality::Right] {
            let gs = reconstruct(&path, &g0, ch, dt, &IntegratorConfig::default()).unwrap();
            let e = alg.exp(&x).unwrap();
            let expected = match ch {
                Chirality::Right => e.matrix() * g0.matrix(),
                Chirality::Left => g0.matrix() * e.matrix(),
            };
            assert_relative_eq!(gs.last().unwrap().matrix(), &expected, epsilon = 1e-10);
        }
        let zero = vec![AlgebraVector::zeros(3); 10];
        let gs = reconstruct(&zero, &g0, Chirality::Left, 0.1, &IntegratorConfig::default()).unwrap();
        assert!(gs.iter().all(|g| g.matrix() == g0.matrix()));
    }
}
