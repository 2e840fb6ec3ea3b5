use geomech::bundle::{
    ad_covariant_derivative, coad_covariant_derivative, gauged_bracket, wong2_vector_field, wong_vector_field,
    Connection, FlatState, OHPPartials, OHPState, Wong2State, WongState,
};
use geomech::euler_poincare::{discrete_action_gradient, integrate_ep, smooth_variations, EPState};
use geomech::models::{
    hamiltonian, quadratic2, quadratic3, rigid_body, spline2, ReducedHamiltonian, ReducedLagrangian,
    ReducedLagrangianModel,
};
use geomech::ostrogradsky::{
    jacobi_residual, legendre, olp_vector_field, reduced_bracket, CoordinateObservable, OLPState, Observable,
    QuadraticObservable,
};
use geomech::solvers::{integrate, shoot_spline, IntegratorConfig, Scheme, ShootingProblem};
use geomech::{AlgebraVector, BaseMetric, Chirality, DualVector, GroupElement, Inertia, LieAlgebra};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sl2() -> LieAlgebra {
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    LieAlgebra::from_basis("sl2", vec![h, e, f]).unwrap()
}

fn algebra(index: usize) -> LieAlgebra {
    match index {
        0 => LieAlgebra::so3(),
        1 => LieAlgebra::se3(),
        _ => sl2(),
    }
}

fn chirality(right: bool) -> Chirality {
    if right {
        Chirality::Right
    } else {
        Chirality::Left
    }
}

fn rvec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

fn avec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> AlgebraVector {
    AlgebraVector(rvec(rng, d, scale))
}

fn skewed_inertia(rng: &mut ChaCha8Rng, d: usize) -> Inertia {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.4..0.4));
    Inertia::new(&a * a.transpose() + DMatrix::identity(d, d)).unwrap()
}

/// One model of every built-in family on so(3).
fn so3_models(rng: &mut ChaCha8Rng, ch: Chirality) -> Vec<ReducedLagrangianModel> {
    let alg = LieAlgebra::so3();
    let potential = {
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        &a + a.transpose()
    };
    vec![
        rigid_body(&alg, skewed_inertia(rng, 3), ch).unwrap(),
        spline2(&alg, skewed_inertia(rng, 3), false, 0.0, ch).unwrap(),
        spline2(&alg, skewed_inertia(rng, 3), false, rng.random_range(0.1..1.0), ch).unwrap(),
        spline2(
            &alg,
            Inertia::identity(3).scaled(rng.random_range(0.5..2.0)).unwrap(),
            true,
            0.3,
            ch,
        )
        .unwrap(),
        quadratic2(&alg, potential, skewed_inertia(rng, 3), ch).unwrap(),
        quadratic3(&alg, skewed_inertia(rng, 3), ch).unwrap(),
    ]
}

fn random_jet(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<AlgebraVector> {
    (0..len).map(|_| avec(rng, 3, scale)).collect()
}

fn random_olp(rng: &mut ChaCha8Rng, k: usize, d: usize) -> OLPState {
    OLPState::from_vector(&rvec(rng, (2 * k - 1) * d, 1.0), k, d).unwrap()
}

fn so3_affine(rng: &mut ChaCha8Rng, ch: Chirality) -> Connection {
    let c = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
    let lin = (0..2)
        .map(|_| DMatrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    Connection::affine(&LieAlgebra::so3(), ch, c, lin).unwrap()
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(alg in 0usize..3, seed in any::<u64>()) {
        let alg = algebra(alg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = avec(&mut rng, alg.dim(), 1.0);
        let y = avec(&mut rng, alg.dim(), 1.0);
        let xy = alg.bracket(&x, &y).unwrap();
        let yx = alg.bracket(&y, &x).unwrap();
        prop_assert!(max_abs(&(&xy.0 + &yx.0)) <= 1e-14);
        prop_assert!(alg.bracket(&x, &x).unwrap().amax() <= 1e-14);
    }

    #[test]
    fn bracket_satisfies_jacobi(alg in 0usize..3, seed in any::<u64>()) {
        let alg = algebra(alg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = alg.dim();
        let (x, y, z) = (avec(&mut rng, d, 1.0), avec(&mut rng, d, 1.0), avec(&mut rng, d, 1.0));
        let br = |a: &AlgebraVector, b: &AlgebraVector| alg.bracket(a, b).unwrap();
        let cyclic = br(&x, &br(&y, &z)).0 + br(&y, &br(&z, &x)).0 + br(&z, &br(&x, &y)).0;
        prop_assert!(max_abs(&cyclic) <= 1e-12);
    }

    #[test]
    fn coadjoint_action_is_dual_to_the_bracket(alg in 0usize..3, seed in any::<u64>()) {
        let alg = algebra(alg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = alg.dim();
        let x = avec(&mut rng, d, 1.0);
        let y = avec(&mut rng, d, 1.0);
        let mu = DualVector(rvec(&mut rng, d, 1.0));
        let lhs = alg.ad_star(&x, &mu).unwrap().pair(&y);
        let rhs = mu.pair(&alg.bracket(&x, &y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn adjoint_action_is_an_automorphism(alg in 0usize..3, seed in any::<u64>()) {
        let alg = algebra(alg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = alg.dim();
        let g = alg.exp(&avec(&mut rng, d, 1.0)).unwrap();
        let x = avec(&mut rng, d, 1.0);
        let y = avec(&mut rng, d, 1.0);
        let lhs = g.adjoint(&alg.bracket(&x, &y).unwrap()).unwrap();
        let rhs = alg.bracket(&g.adjoint(&x).unwrap(), &g.adjoint(&y).unwrap()).unwrap();
        prop_assert!(max_abs(&(&lhs.0 - &rhs.0)) <= 1e-10);
    }

    #[test]
    fn log_inverts_exp_on_the_unit_ball(alg in 0usize..2, seed in any::<u64>(), radius in 0.0f64..1.0) {
        let alg = algebra(alg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = rvec(&mut rng, alg.dim(), 1.0);
        let x = AlgebraVector(dir.normalize() * radius);
        let back = alg.log(&alg.exp(&x).unwrap()).unwrap();
        prop_assert!(max_abs(&(&back.0 - &x.0)) <= 1e-10);
    }

    #[test]
    fn model_gradients_match_finite_differences(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for model in so3_models(&mut rng, chirality(right)) {
            let k = model.order();
            let jet = random_jet(&mut rng, k, 1.0);
            let grads = model.grads(&jet).unwrap();
            let eps = 1e-5;
            for slot in 0..k {
                for c in 0..3 {
                    let shifted = |h: f64| {
                        let mut j = jet.clone();
                        j[slot].0[c] += h;
                        model.eval(&j).unwrap()
                    };
                    let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
                    let g = grads[slot].0[c];
                    prop_assert!((g - fd).abs() <= 1e-6 * g.abs().max(1.0), "slot {slot} coordinate {c}: {g} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn accel_is_a_right_inverse_of_the_top_momentum(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for model in so3_models(&mut rng, chirality(right)) {
            let k = model.order();
            let lower = random_jet(&mut rng, 2 * k - 2, 1.0);
            let m = DualVector(rvec(&mut rng, 3, 2.0));
            let mut full = lower.clone();
            full.push(model.accel(&lower, &m).unwrap());
            let pi0 = &model.momenta(&full).unwrap()[0];
            prop_assert!(max_abs(&(&pi0.0 - &m.0)) <= 1e-9 * m.amax().max(1.0));
        }
    }

    #[test]
    fn bi_invariant_metric_has_no_coadjoint_twist(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let alg = LieAlgebra::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inertia = Inertia::identity(3).scaled(scale).unwrap();
        let xi = avec(&mut rng, 3, 1.0);
        let twist = alg.ad_star(&xi, &inertia.flat(&xi).unwrap()).unwrap();
        prop_assert!(twist.amax() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn reduced_bracket_axioms(seed in any::<u64>(), right in any::<bool>(), k in 1usize..4) {
        let alg = LieAlgebra::so3();
        let ch = chirality(right);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = random_olp(&mut rng, k, 3);
        let obs: Vec<QuadraticObservable> = (0..3).map(|_| QuadraticObservable::random(k, 3, &mut rng)).collect();
        let (f, g, h) = (&obs[0], &obs[1], &obs[2]);
        let (df, dg, dh) = (f.partials(&st).unwrap(), g.partials(&st).unwrap(), h.partials(&st).unwrap());
        let br = |a, b| reduced_bracket(&alg, ch, &st, a, b);

        prop_assert!((br(&df, &dg) + br(&dg, &df)).abs() <= 1e-12);

        let (fv, gv) = (f.eval(&st).unwrap(), g.eval(&st).unwrap());
        let product = OLPState::flatten_partials(&dg) * fv + OLPState::flatten_partials(&df) * gv;
        let d_fg = OLPState::unflatten_partials(&product, k, 3).unwrap();
        let lhs = br(&d_fg, &dh);
        let rhs = fv * br(&dg, &dh) + gv * br(&df, &dh);
        let scale = (fv * br(&dg, &dh)).abs() + (gv * br(&df, &dh)).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));

        prop_assert!(jacobi_residual(&alg, ch, &st, [f, g, h]).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn hamiltonian_flow_is_the_bracket_with_h(seed in any::<u64>(), right in any::<bool>()) {
        let ch = chirality(right);
        let alg = LieAlgebra::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for model in so3_models(&mut rng, ch) {
            let h = hamiltonian(&model);
            let k = model.order();
            let st = random_olp(&mut rng, k, 3);
            let flow = olp_vector_field(&h, &st).unwrap().to_vector();
            let dh = ReducedHamiltonian::partials(&h, &st).unwrap();
            for index in 0..flow.len() {
                let c = CoordinateObservable { order: k, dim: 3, index };
                let br = reduced_bracket(&alg, ch, &st, &c.partials(&st).unwrap(), &dh);
                prop_assert!((br - flow[index]).abs() <= 1e-9 * flow[index].abs().max(1.0));
            }
        }
    }

    #[test]
    fn legendre_transform_is_dual_to_the_hamiltonian(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for model in so3_models(&mut rng, chirality(right)) {
            let k = model.order();
            let full = random_jet(&mut rng, 2 * k - 1, 1.0);
            let st = legendre(&model, &full).unwrap();
            let h = hamiltonian(&model);
            let d = ReducedHamiltonian::partials(&h, &st).unwrap();
            for (i, (dp, x)) in d.d_pi.iter().zip(&full).take(k).enumerate() {
                prop_assert!(max_abs(&(&dp.0 - &x.0)) <= 1e-9, "slot {i}");
            }
        }
    }

    #[test]
    fn curvature_is_antisymmetric(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conn = so3_affine(&mut rng, chirality(right));
        let x = rvec(&mut rng, 2, 2.0);
        let (u, v) = (rvec(&mut rng, 2, 1.0), rvec(&mut rng, 2, 1.0));
        let b = conn.curvature_at(&x).unwrap();
        let uv = b.eval(&u, &v).unwrap();
        let vu = b.eval(&v, &u).unwrap();
        prop_assert!(max_abs(&(&uv.0 + &vu.0)) <= 1e-14);
        prop_assert!(b.eval(&u, &u).unwrap().amax() <= 1e-14);
    }

    #[test]
    fn analytic_exterior_derivative_matches_finite_differences(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conn = so3_affine(&mut rng, chirality(right));
        prop_assert!(conn.has_analytic_exterior());
        let points: Vec<DVector<f64>> = (0..4).map(|_| rvec(&mut rng, 2, 2.0)).collect();
        prop_assert!(conn.exterior_derivative_residual(&points).unwrap() <= 1e-6);
    }

    #[test]
    fn covariant_derivatives_obey_the_product_rule(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conn = so3_affine(&mut rng, chirality(right));
        let (x, xd) = (rvec(&mut rng, 2, 1.0), rvec(&mut rng, 2, 1.0));
        let (sigma, sigma_dot) = (avec(&mut rng, 3, 1.0), avec(&mut rng, 3, 1.0));
        let (mu, mu_dot) = (DualVector(rvec(&mut rng, 3, 1.0)), DualVector(rvec(&mut rng, 3, 1.0)));
        let ds = ad_covariant_derivative(&conn, &x, &xd, &sigma, &sigma_dot).unwrap();
        let dm = coad_covariant_derivative(&conn, &x, &xd, &mu, &mu_dot).unwrap();
        let plain = mu_dot.pair(&sigma) + mu.pair(&sigma_dot);
        prop_assert!((dm.pair(&sigma) + mu.pair(&ds) - plain).abs() <= 1e-12);
    }

    #[test]
    fn gauged_bracket_is_antisymmetric_and_leibniz(seed in any::<u64>(), right in any::<bool>(), k in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conn = so3_affine(&mut rng, chirality(right));
        let n = OHPState::flat_len(k, 2, 3);
        let st = OHPState::from_vector(&rvec(&mut rng, n, 1.0), k, 2, 3).unwrap();
        let grads: Vec<DVector<f64>> = (0..3).map(|_| rvec(&mut rng, n, 1.0)).collect();
        let p = |v: &DVector<f64>| OHPPartials::from_vector(v, k, 2, 3).unwrap();
        let br = |a: &DVector<f64>, b: &DVector<f64>| gauged_bracket(&conn, &st, &p(a), &p(b)).unwrap();

        prop_assert!((br(&grads[0], &grads[1]) + br(&grads[1], &grads[0])).abs() <= 1e-12);

        let (fv, gv) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let product = &grads[1] * fv + &grads[0] * gv;
        let lhs = br(&product, &grads[2]);
        let rhs = fv * br(&grads[1], &grads[2]) + gv * br(&grads[0], &grads[2]);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn zero_length_second_order_wong_is_wong(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conn = so3_affine(&mut rng, chirality(right));
        let metric = BaseMetric::new(DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.8])).unwrap();
        let kappa = Inertia::identity(3).scaled(rng.random_range(0.5..2.0)).unwrap();
        let s = WongState {
            rho: rvec(&mut rng, 2, 1.0),
            rho_dot: rvec(&mut rng, 2, 1.0),
            mu: DualVector(rvec(&mut rng, 3, 1.0)),
        };
        let first = wong_vector_field(&metric, &kappa, &conn, &s).unwrap();
        let second = wong2_vector_field(&metric, &kappa, &conn, 0.0, 0.0, &Wong2State::from_wong(&s)).unwrap();
        prop_assert_eq!(first.to_vector(), second.to_vector());
    }
}

/// Five-point central first derivative at node `i`.
fn stencil(series: &[AlgebraVector], i: usize, dt: f64) -> DVector<f64> {
    (&series[i - 2].0 - &series[i - 1].0 * 8.0 + &series[i + 1].0 * 8.0 - &series[i + 2].0) / (12.0 * dt)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn integrated_jets_are_derivatives_of_each_other(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dt = 1e-3;
        for model in so3_models(&mut rng, chirality(right)).into_iter().skip(1) {
            let k = model.order();
            let full = random_jet(&mut rng, 2 * k - 1, 0.5);
            let g0 = LieAlgebra::so3().exp(&avec(&mut rng, 3, 1.0)).unwrap();
            let st = EPState::from_full_jet(&model, g0, &full).unwrap();
            let tr = integrate_ep(&model, &st, 0.2, &IntegratorConfig::with_dt(dt)).unwrap();
            for slot in 0..2 * k - 2 {
                let series: Vec<AlgebraVector> = tr.jets.iter().map(|j| j[slot].clone()).collect();
                for i in 2..tr.len() - 2 {
                    let err = max_abs(&(stencil(&series, i, dt) - &tr.jets[i][slot + 1].0));
                    prop_assert!(err <= 1e-8, "{}: slot {slot} node {i}: {err:e}", model.family().name());
                }
            }
        }
    }

    #[test]
    fn noether_momentum_is_conserved(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for model in so3_models(&mut rng, chirality(right)) {
            let k = model.order();
            let full = random_jet(&mut rng, 2 * k - 1, 0.3);
            let g0 = LieAlgebra::so3().exp(&avec(&mut rng, 3, 1.0)).unwrap();
            let st = EPState::from_full_jet(&model, g0, &full).unwrap();
            let tr = integrate_ep(&model, &st, 2.0, &IntegratorConfig::default()).unwrap();
            prop_assert!(tr.noether_drift().unwrap() <= 1e-8, "{}", model.family().name());
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order(omega in 0.5f64..3.0, damping in 0.0f64..0.5) {
        let field = |_: f64, y: &DVector<f64>| {
            Ok(DVector::from_column_slice(&[y[1], -omega * omega * y[0] - 2.0 * damping * y[1]]))
        };
        let y0 = DVector::from_column_slice(&[1.0, 0.0]);
        let w = (omega * omega - damping * damping).sqrt();
        let t = 2.0;
        let decay = (-damping * t).exp();
        let (c, s) = ((w * t).cos(), (w * t).sin());
        let exact = DVector::from_column_slice(&[
            decay * (c + damping / w * s),
            -decay * (omega * omega / w) * s,
        ]);
        let err = |dt: f64| (integrate(field, &y0, t, &IntegratorConfig::with_dt(dt)).unwrap().last() - &exact).norm();
        let order = (err(0.04) / err(0.02)).log2();
        prop_assert!((3.7..=4.3).contains(&order), "observed order {order}");
    }

    #[test]
    fn group_integrators_converge_at_fourth_order(seed in any::<u64>(), right in any::<bool>(), rk4 in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = LieAlgebra::so3();
        let model = rigid_body(&alg, Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(), chirality(right)).unwrap();
        let w0 = avec(&mut rng, 3, 1.0).scale(2.0);
        let st = EPState::from_full_jet(&model, GroupElement::identity(&alg), &[w0]).unwrap();
        let config = |dt: f64| IntegratorConfig {
            dt,
            scheme: if rk4 { Scheme::Rk4 } else { Scheme::CommutatorFree4 },
            reprojection_interval: 0,
        };
        let end = |dt: f64| integrate_ep(&model, &st, 1.0, &config(dt)).unwrap().g.last().unwrap().matrix().clone();
        let reference = end(1e-3);
        let err = |dt: f64| (end(dt) - &reference).amax();
        let order = (err(0.04) / err(0.02)).log2();
        prop_assert!((3.7..=4.3).contains(&order), "observed order {order}");
    }

    #[test]
    fn newton_line_search_never_increases_the_residual(seed in any::<u64>(), right in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = LieAlgebra::so3();
        let model = spline2(&alg, skewed_inertia(&mut rng, 3), false, 0.0, chirality(right)).unwrap();
        let g0 = alg.exp(&avec(&mut rng, 3, 1.0)).unwrap();
        let g1 = alg.exp(&avec(&mut rng, 3, 0.6)).unwrap().compose(&g0);
        let mut p = ShootingProblem::new(model, g0, g1, avec(&mut rng, 3, 0.3), avec(&mut rng, 3, 0.3), 1.0);
        p.config = IntegratorConfig::with_dt(5e-3);
        let r = shoot_spline(&p).unwrap();
        for w in r.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0], "residual rose from {} to {}", w[0], w[1]);
        }
    }
}

#[test]
fn reconstruction_stays_on_the_group_for_ten_thousand_steps() {
    let alg = LieAlgebra::so3();
    for ch in [Chirality::Right, Chirality::Left] {
        let model = rigid_body(&alg, Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(), ch).unwrap();
        let st = EPState::from_full_jet(
            &model,
            GroupElement::identity(&alg),
            &[AlgebraVector::from_slice(&[1.0, 0.5, -0.3])],
        )
        .unwrap();
        let config = IntegratorConfig {
            reprojection_interval: 0,
            ..IntegratorConfig::default()
        };
        let tr = integrate_ep(&model, &st, 10.0, &config).unwrap();
        assert_eq!(tr.len(), 10_001);
        assert!(tr.max_constraint_defect() <= 1e-8, "{}", tr.max_constraint_defect());
    }
}

/// Largest discrete-action directional derivative along a shooting
/// solution solved at step `dt`.
fn shooting_stationarity(ch: Chirality, dt: f64) -> f64 {
    let alg = LieAlgebra::so3();
    let model = spline2(&alg, Inertia::diagonal(&[1.0, 2.0, 3.0]).unwrap(), false, 0.2, ch).unwrap();
    let g0 = alg.exp(&AlgebraVector::from_slice(&[0.3, -0.2, 0.5])).unwrap();
    let g1 = alg.exp(&AlgebraVector::from_slice(&[-0.6, 0.4, 0.9])).unwrap();
    let mut p = ShootingProblem::new(
        model.clone(),
        g0,
        g1,
        AlgebraVector::from_slice(&[0.2, 0.0, -0.1]),
        AlgebraVector::from_slice(&[0.0, 0.3, 0.1]),
        1.0,
    );
    p.config = IntegratorConfig::with_dt(dt);
    p.tol = 1e-10;
    let r = shoot_spline(&p).unwrap();
    let path = &r.trajectory.g;
    let vars = smooth_variations(3, path.len(), 4, 17);
    let grads = discrete_action_gradient(&model, path, dt, &vars).unwrap();
    grads.iter().fold(0.0, |a, g| a.max(g.abs()))
}

#[test]
fn shooting_solutions_are_stationary_for_the_discrete_action() {
    for ch in [Chirality::Right, Chirality::Left] {
        let coarse = shooting_stationarity(ch, 2e-3);
        let fine = shooting_stationarity(ch, 1e-3);
        let order = (coarse / fine).log2();
        assert!(
            (1.8..=2.2).contains(&order),
            "{ch:?}: observed order {order} ({coarse:e} -> {fine:e})"
        );
    }
}
