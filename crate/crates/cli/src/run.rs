//! Execution of each scenario kind.

use geomech::algebra::GroupKind;
use geomech::bundle::{
    integrate_lp2, integrate_ohp, integrate_wong, integrate_wong2, lp2_energy, reconstruct_lp2, wong2_energy,
    wong2_vector_field, wong_casimir, wong_energy, wong_vector_field, BundleHamiltonian, KaluzaKleinHamiltonian,
    LP2State, Wong2State, WongState,
};
use geomech::euler_poincare::{integrate_ep, EPState};
use geomech::models::{hamiltonian, ReducedLagrangian};
use geomech::ostrogradsky::{integrate_olp, legendre, reduced_energy};
use geomech::solvers::{shoot_spline, IntegratorConfig, ShootingProblem};
use geomech::{verify, AlgebraVector, DualVector, GroupElement, LieAlgebra};
use nalgebra::DVector;

use crate::build;
use crate::error::{CliError, NumericalContext, SchemaContext};
use crate::output::{indexed, Outcome, ShootingSummary, Summary, Table};
use crate::scenario::{Kind, Scenario};

/// Run a validated scenario.
pub fn run(s: &Scenario) -> Result<Outcome, CliError> {
    match s.kind {
        Kind::Ep => run_ep(s),
        Kind::Olp => run_olp(s),
        Kind::Wong => run_wong(s),
        Kind::Wong2 => run_wong2(s),
        Kind::Lp2 => run_lp2(s),
        Kind::Ohp => run_ohp(s),
        Kind::SplineBvp => run_spline_bvp(s),
        Kind::Verify => run_verify(s),
    }
}

fn config(s: &Scenario) -> IntegratorConfig {
    IntegratorConfig {
        dt: s.dt,
        scheme: s.scheme,
        ..IntegratorConfig::default()
    }
}

/// Sample indices `0, e, 2e, …` plus the last sample.
fn sample_indices(len: usize, every: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(every).collect();
    if len > 0 && idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

fn summary(s: &Scenario, columns: &[String], times: &[f64]) -> Summary {
    let mut out = Summary::new(s.kind, s.group.clone(), s.chirality);
    out.t_end = times.last().copied().unwrap_or(0.0);
    out.dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    out.samples = sample_indices(times.len(), s.sample_every).len();
    out.columns = columns.to_vec();
    out
}

fn drift(values: &[f64]) -> f64 {
    values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max)
}

fn group_columns(alg: &LieAlgebra) -> Vec<String> {
    let n = alg.group_dim();
    (0..n * n).map(|i| format!("g_{}_{}", i / n, i % n)).collect()
}

fn slot_columns(prefix: &str, slots: usize, dim: usize) -> Vec<String> {
    (0..slots).flat_map(|j| indexed(&format!("{prefix}{j}"), dim)).collect()
}

fn flat<'a>(parts: impl IntoIterator<Item = &'a DVector<f64>>) -> Vec<f64> {
    parts.into_iter().flat_map(|v| v.iter().copied()).collect()
}

fn initial_g0(s: &Scenario, alg: &LieAlgebra) -> Result<GroupElement, CliError> {
    build::group_element(s.initial()?.g0.as_ref(), alg, "/initial/g0")
}

fn required<'a, T>(field: &'a Option<T>, pointer: &str, kind: Kind) -> Result<&'a T, CliError> {
    field
        .as_ref()
        .ok_or_else(|| CliError::schema(pointer, format!("required for kind '{}'", kind.name())))
}

fn full_jet(s: &Scenario, alg: &LieAlgebra, k: usize) -> Result<Vec<AlgebraVector>, CliError> {
    let jet = required(&s.initial()?.jet, "/initial/jet", s.kind)?;
    Ok(build::jet(jet, 2 * k - 1, alg.dim(), "/initial/jet")?
        .into_iter()
        .map(AlgebraVector)
        .collect())
}

fn run_ep(s: &Scenario) -> Result<Outcome, CliError> {
    let alg = build::algebra(s)?;
    let model = build::model(s, &alg)?;
    let k = model.order();
    let d = alg.dim();
    let jet = full_jet(s, &alg, k)?;
    let g0 = initial_g0(s, &alg)?;
    let st = EPState::from_full_jet(&model, g0, &jet).at("/initial/jet")?;
    let tr = integrate_ep(&model, &st, s.horizon(), &config(s)).numerics("Euler-Poincaré integration")?;
    let noether = tr.noether().numerics("Noether momentum")?;
    let energies = tr
        .jets
        .iter()
        .map(|j| reduced_energy(&model, j))
        .collect::<geomech::Result<Vec<_>>>()
        .numerics("reduced energy")?;

    let mut columns = vec!["t".to_string()];
    columns.extend(group_columns(&alg));
    columns.extend(slot_columns("xi", 2 * k - 1, d));
    columns.extend(indexed("m", d));
    columns.extend(indexed("noether", d));
    columns.push("energy".into());
    let mut table = Table::new(columns);
    for i in sample_indices(tr.len(), s.sample_every) {
        let mut row = vec![tr.times[i]];
        row.extend(tr.g[i].row_major());
        row.extend(flat(tr.jets[i].iter().map(|x| &x.0)));
        row.extend(tr.m[i].0.iter());
        row.extend(noether[i].0.iter());
        row.push(energies[i]);
        table.push(row);
    }

    let last = tr.len() - 1;
    let mut sum = summary(s, &table.columns, &tr.times);
    sum.final_state.insert("g".into(), tr.g[last].row_major());
    for (j, x) in tr.jets[last].iter().enumerate() {
        sum.final_state.insert(format!("xi{j}"), x.0.iter().copied().collect());
    }
    sum.final_state
        .insert("m".into(), tr.m[last].0.iter().copied().collect());
    let noether_drift = noether
        .iter()
        .map(|v| (&v.0 - &noether[0].0).norm())
        .fold(0.0, f64::max);
    sum.monitors.insert("noether_drift".into(), noether_drift);
    sum.monitors.insert("energy_drift".into(), drift(&energies));
    sum.monitors
        .insert("constraint_defect".into(), tr.max_constraint_defect());
    Ok(Outcome { table, summary: sum })
}

fn run_olp(s: &Scenario) -> Result<Outcome, CliError> {
    let alg = build::algebra(s)?;
    let model = build::model(s, &alg)?;
    let k = model.order();
    let d = alg.dim();
    let jet = full_jet(s, &alg, k)?;
    let g0 = initial_g0(s, &alg)?;
    let s0 = legendre(&model, &jet).at("/initial/jet")?;
    let h = hamiltonian(&model);
    let tr = integrate_olp(&h, &g0, &s0, s.horizon(), &config(s)).numerics("Ostrogradsky–Lie–Poisson integration")?;
    let energies = tr.energies(&h).numerics("Hamiltonian")?;

    let mut columns = vec!["t".to_string()];
    columns.extend(group_columns(&alg));
    columns.extend(slot_columns("xi", k - 1, d));
    columns.extend((1..k).flat_map(|j| indexed(&format!("pi{j}"), d)));
    columns.extend(indexed("pi0", d));
    columns.push("h".into());
    let mut table = Table::new(columns);
    for i in sample_indices(tr.len(), s.sample_every) {
        let st = &tr.states[i];
        let mut row = vec![tr.times[i]];
        row.extend(tr.g[i].row_major());
        row.extend(flat(st.xi_jet.iter().map(|x| &x.0)));
        row.extend(flat(st.pi.iter().map(|p| &p.0)));
        row.extend(st.pi0.0.iter());
        row.push(energies[i]);
        table.push(row);
    }

    let last = &tr.states[tr.len() - 1];
    let mut sum = summary(s, &table.columns, &tr.times);
    sum.final_state.insert("g".into(), tr.g[tr.len() - 1].row_major());
    for (j, x) in last.xi_jet.iter().enumerate() {
        sum.final_state.insert(format!("xi{j}"), x.0.iter().copied().collect());
    }
    for (j, p) in last.pi.iter().enumerate() {
        sum.final_state
            .insert(format!("pi{}", j + 1), p.0.iter().copied().collect());
    }
    sum.final_state
        .insert("pi0".into(), last.pi0.0.iter().copied().collect());
    sum.monitors.insert("energy_drift".into(), drift(&energies));
    if alg.kind() == GroupKind::So3 {
        sum.monitors.insert("casimir_drift".into(), tr.casimir_drift());
    }
    let defect = tr.g.iter().map(GroupElement::constraint_defect).fold(0.0, f64::max);
    sum.monitors.insert("constraint_defect".into(), defect);
    Ok(Outcome { table, summary: sum })
}

/// Base metric, connection and algebra shared by the bundle kinds.
struct Bundle {
    alg: LieAlgebra,
    metric: geomech::BaseMetric,
    conn: geomech::bundle::Connection,
    m: usize,
}

fn bundle(s: &Scenario) -> Result<Bundle, CliError> {
    let alg = build::algebra(s)?;
    let metric = build::metric(s)?;
    let m = metric.dim();
    let conn = build::connection(s, &alg, m)?;
    Ok(Bundle { alg, metric, conn, m })
}

fn base_jet(s: &Scenario, slots: usize, m: usize) -> Result<Vec<DVector<f64>>, CliError> {
    let rho = required(&s.initial()?.rho, "/initial/rho", s.kind)?;
    build::jet(rho, slots, m, "/initial/rho")
}

fn charge_jet(s: &Scenario, slots: usize, alg: &LieAlgebra) -> Result<Vec<DualVector>, CliError> {
    let c = required(&s.initial()?.charge, "/initial/charge", s.kind)?;
    Ok(build::jet(c, slots, alg.dim(), "/initial/charge")?
        .into_iter()
        .map(DualVector)
        .collect())
}

fn run_wong(s: &Scenario) -> Result<Outcome, CliError> {
    let b = bundle(s)?;
    let d = b.alg.dim();
    let kappa = build::kappa(s, &b.alg)?;
    let rho = base_jet(s, 2, b.m)?;
    let mu = charge_jet(s, 1, &b.alg)?.remove(0);
    let st = WongState {
        rho: rho[0].clone(),
        rho_dot: rho[1].clone(),
        mu,
    };
    wong_vector_field(&b.metric, &kappa, &b.conn, &st).at("/initial")?;
    let tr = integrate_wong(&b.metric, &kappa, &b.conn, &st, s.horizon(), &config(s)).numerics("Wong integration")?;

    let mut columns = vec!["t".to_string()];
    columns.extend(indexed("rho", b.m));
    columns.extend(indexed("rho_dot", b.m));
    columns.extend(indexed("mu", d));
    columns.extend(["energy".to_string(), "casimir".to_string()]);
    let mut table = Table::new(columns);
    for i in sample_indices(tr.len(), s.sample_every) {
        let st = &tr.states[i];
        let mut row = vec![tr.times[i]];
        row.extend(flat([&st.rho, &st.rho_dot, &st.mu.0]));
        row.push(wong_energy(&b.metric, &kappa, st));
        row.push(wong_casimir(&kappa, st));
        table.push(row);
    }

    let last = tr.last();
    let mut sum = summary(s, &table.columns, &tr.times);
    sum.final_state.insert("rho".into(), last.rho.iter().copied().collect());
    sum.final_state
        .insert("rho_dot".into(), last.rho_dot.iter().copied().collect());
    sum.final_state.insert("mu".into(), last.mu.0.iter().copied().collect());
    let energy = tr
        .drift(|st| Ok(wong_energy(&b.metric, &kappa, st)))
        .numerics("energy")?;
    let casimir = tr.drift(|st| Ok(wong_casimir(&kappa, st))).numerics("casimir")?;
    sum.monitors.insert("energy_drift".into(), energy);
    sum.monitors.insert("casimir_drift".into(), casimir);
    if b.alg.is_abelian() {
        let mu0 = &tr.states[0].mu.0;
        let charge = tr.states.iter().map(|st| (&st.mu.0 - mu0).amax()).fold(0.0, f64::max);
        sum.monitors.insert("charge_drift".into(), charge);
    }
    Ok(Outcome { table, summary: sum })
}

fn run_wong2(s: &Scenario) -> Result<Outcome, CliError> {
    let b = bundle(s)?;
    let d = b.alg.dim();
    let kappa = build::kappa(s, &b.alg)?;
    let (l1, l2) = build::lengths(s)?;
    let rho = base_jet(s, if l1 > 0.0 { 4 } else { 2 }, b.m)?;
    let charge = charge_jet(s, if l2 > 0.0 { 3 } else { 1 }, &b.alg)?;
    let st = Wong2State::from_charge_jet(rho, &charge, l2).at("/initial/charge")?;
    wong2_vector_field(&b.metric, &kappa, &b.conn, l1, l2, &st).at("/initial")?;
    let tr = integrate_wong2(&b.metric, &kappa, &b.conn, l1, l2, &st, s.horizon(), &config(s))
        .numerics("second-order Wong integration")?;

    let (nr, nc) = (st.rho.len(), st.charge.len());
    let mut columns = vec!["t".to_string()];
    columns.extend(slot_columns("rho", nr, b.m));
    columns.extend(slot_columns("charge", nc, d));
    columns.extend(indexed("p", d));
    columns.push("energy".into());
    let mut table = Table::new(columns);
    let energy = |st: &Wong2State| wong2_energy(&b.metric, &kappa, l1, l2, st);
    for i in sample_indices(tr.len(), s.sample_every) {
        let st = &tr.states[i];
        let mut row = vec![tr.times[i]];
        row.extend(flat(st.rho.iter()));
        row.extend(flat(st.charge.iter().map(|c| &c.0)));
        row.extend(st.p.0.iter());
        row.push(energy(st));
        table.push(row);
    }

    let last = tr.last();
    let mut sum = summary(s, &table.columns, &tr.times);
    for (j, r) in last.rho.iter().enumerate() {
        sum.final_state.insert(format!("rho{j}"), r.iter().copied().collect());
    }
    for (j, c) in last.charge.iter().enumerate() {
        sum.final_state
            .insert(format!("charge{j}"), c.0.iter().copied().collect());
    }
    sum.final_state.insert("p".into(), last.p.0.iter().copied().collect());
    sum.monitors
        .insert("energy_drift".into(), tr.drift(|st| Ok(energy(st))).numerics("energy")?);
    let p_casimir = tr.drift(|st| Ok(kappa.dual_norm_sq(&st.p))).numerics("casimir")?;
    sum.monitors.insert("casimir_drift".into(), p_casimir);
    Ok(Outcome { table, summary: sum })
}

fn lp2_initial(s: &Scenario, lag: &geomech::bundle::KaluzaKlein2, b: &Bundle) -> Result<LP2State, CliError> {
    let init = s.initial()?;
    let rho = base_jet(s, lag.base_slots(), b.m)?;
    let sigma = match (&init.sigma, lag.fiber_slots()) {
        (None, 0) => Vec::new(),
        (Some(v), n) => build::jet(v, n, b.alg.dim(), "/initial/sigma")?,
        (None, _) => return Err(CliError::schema("/initial/sigma", "required when lambda2 > 0")),
    };
    let m = required(&init.m, "/initial/m", s.kind)?;
    Ok(LP2State {
        rho,
        sigma: sigma.into_iter().map(AlgebraVector).collect(),
        m: build::dual_vector(m, &b.alg, "/initial/m")?,
    })
}

fn run_lp2(s: &Scenario) -> Result<Outcome, CliError> {
    let b = bundle(s)?;
    let d = b.alg.dim();
    let lag = build::kaluza_klein(s, &b.alg, b.metric.clone())?;
    let st = lp2_initial(s, &lag, &b)?;
    geomech::bundle::lp2_vector_field(&lag, &b.conn, &st).at("/initial")?;
    let cfg = config(s);
    let tr = integrate_lp2(&lag, &b.conn, &st, s.horizon(), &cfg).numerics("Lagrange–Poincaré integration")?;
    let g0 = initial_g0(s, &b.alg)?;
    let gs = reconstruct_lp2(&lag, &b.conn, &g0, &tr, &cfg).numerics("reconstruction")?;

    let mut columns = vec!["t".to_string()];
    columns.extend(group_columns(&b.alg));
    columns.extend(slot_columns("rho", st.rho.len(), b.m));
    columns.extend(slot_columns("sigma", st.sigma.len(), d));
    columns.extend(indexed("m", d));
    columns.push("energy".into());
    let mut table = Table::new(columns);
    for i in sample_indices(tr.len(), s.sample_every) {
        let st = &tr.states[i];
        let mut row = vec![tr.times[i]];
        row.extend(gs[i].row_major());
        row.extend(flat(st.rho.iter()));
        row.extend(flat(st.sigma.iter().map(|x| &x.0)));
        row.extend(st.m.0.iter());
        row.push(lp2_energy(&lag, st));
        table.push(row);
    }

    let last = tr.last();
    let mut sum = summary(s, &table.columns, &tr.times);
    sum.final_state.insert("g".into(), gs[gs.len() - 1].row_major());
    for (j, r) in last.rho.iter().enumerate() {
        sum.final_state.insert(format!("rho{j}"), r.iter().copied().collect());
    }
    for (j, x) in last.sigma.iter().enumerate() {
        sum.final_state
            .insert(format!("sigma{j}"), x.0.iter().copied().collect());
    }
    sum.final_state.insert("m".into(), last.m.0.iter().copied().collect());
    sum.monitors.insert(
        "energy_drift".into(),
        tr.drift(|st| Ok(lp2_energy(&lag, st))).numerics("energy")?,
    );
    let defect = gs.iter().map(GroupElement::constraint_defect).fold(0.0, f64::max);
    sum.monitors.insert("constraint_defect".into(), defect);
    Ok(Outcome { table, summary: sum })
}

fn run_ohp(s: &Scenario) -> Result<Outcome, CliError> {
    let b = bundle(s)?;
    let d = b.alg.dim();
    let lag = build::kaluza_klein(s, &b.alg, b.metric.clone())?;
    let lp = lp2_initial(s, &lag, &b)?;
    let h = KaluzaKleinHamiltonian::new(lag, &b.alg).at("/model")?;
    let st = h.legendre(&lp).at("/initial")?;
    geomech::bundle::ohp_vector_field(&h, &b.conn, &st).at("/initial")?;
    let tr = integrate_ohp(&h, &b.conn, &st, s.horizon(), &config(s)).numerics("Hamilton–Poincaré integration")?;
    let energies = tr
        .states
        .iter()
        .map(|x| h.eval(x))
        .collect::<geomech::Result<Vec<_>>>()
        .numerics("Hamiltonian")?;

    let k = h.order();
    let mut columns = vec!["t".to_string()];
    columns.extend(slot_columns("rho", k, b.m));
    columns.extend(slot_columns("gamma", k, b.m));
    columns.extend(slot_columns("sigma", k - 1, d));
    columns.extend((1..k).flat_map(|j| indexed(&format!("pi{j}"), d)));
    columns.extend(indexed("pi0", d));
    columns.push("h".into());
    let mut table = Table::new(columns);
    for i in sample_indices(tr.len(), s.sample_every) {
        let st = &tr.states[i];
        let mut row = vec![tr.times[i]];
        row.extend(flat(st.rho.iter()));
        row.extend(flat(st.gamma.iter()));
        row.extend(flat(st.sigma.iter().map(|x| &x.0)));
        row.extend(flat(st.pi.iter().map(|p| &p.0)));
        row.extend(st.pi0.0.iter());
        row.push(energies[i]);
        table.push(row);
    }

    let last = tr.last();
    let mut sum = summary(s, &table.columns, &tr.times);
    for (j, r) in last.rho.iter().enumerate() {
        sum.final_state.insert(format!("rho{j}"), r.iter().copied().collect());
    }
    for (j, g) in last.gamma.iter().enumerate() {
        sum.final_state.insert(format!("gamma{j}"), g.iter().copied().collect());
    }
    for (j, x) in last.sigma.iter().enumerate() {
        sum.final_state
            .insert(format!("sigma{j}"), x.0.iter().copied().collect());
    }
    for (j, p) in last.pi.iter().enumerate() {
        sum.final_state
            .insert(format!("pi{}", j + 1), p.0.iter().copied().collect());
    }
    sum.final_state
        .insert("pi0".into(), last.pi0.0.iter().copied().collect());
    sum.monitors.insert("energy_drift".into(), drift(&energies));
    Ok(Outcome { table, summary: sum })
}

fn run_spline_bvp(s: &Scenario) -> Result<Outcome, CliError> {
    let alg = build::algebra(s)?;
    let model = build::model(s, &alg)?;
    let d = alg.dim();
    let bd = required(&s.boundary, "/boundary", s.kind)?;
    let g0 = build::group_element(Some(&bd.g0), &alg, "/boundary/g0")?;
    let g1 = build::group_element(Some(&bd.g1), &alg, "/boundary/g1")?;
    let v0 = build::algebra_vector(&bd.v0, &alg, "/boundary/v0")?;
    let v1 = build::algebra_vector(&bd.v1, &alg, "/boundary/v1")?;
    if !(bd.tol > 0.0 && bd.tol.is_finite()) {
        return Err(CliError::schema("/boundary/tol", "must be positive and finite"));
    }
    if bd.max_iter == 0 {
        return Err(CliError::schema("/boundary/max_iter", "must be at least 1"));
    }
    let mut p = ShootingProblem::new(model.clone(), g0, g1, v0, v1, s.horizon());
    p.tol = bd.tol;
    p.max_iter = bd.max_iter;
    p.config = config(s);
    let r = shoot_spline(&p).numerics("shooting")?;
    let tr = &r.trajectory;

    let mut columns = vec!["t".to_string()];
    columns.extend(group_columns(&alg));
    columns.extend(slot_columns("xi", 3, d));
    let mut table = Table::new(columns);
    for i in sample_indices(tr.len(), s.sample_every) {
        let mut row = vec![tr.times[i]];
        row.extend(tr.g[i].row_major());
        row.extend(flat(tr.jets[i].iter().map(|x| &x.0)));
        table.push(row);
    }

    let last = tr.len() - 1;
    let mut sum = summary(s, &table.columns, &tr.times);
    sum.final_state.insert("g".into(), tr.g[last].row_major());
    for (j, x) in tr.jets[last].iter().enumerate() {
        sum.final_state.insert(format!("xi{j}"), x.0.iter().copied().collect());
    }
    sum.monitors.insert("residual".into(), r.residual);
    sum.monitors
        .insert("noether_drift".into(), tr.noether_drift().numerics("Noether momentum")?);
    sum.monitors
        .insert("constraint_defect".into(), tr.max_constraint_defect());
    sum.shooting = Some(ShootingSummary {
        iterations: r.iterations,
        residual: r.residual,
        residual_history: r.residual_history.clone(),
        initial_jet: r.initial_jet().iter().map(|x| x.0.iter().copied().collect()).collect(),
    });
    Ok(Outcome { table, summary: sum })
}

fn run_verify(s: &Scenario) -> Result<Outcome, CliError> {
    let report = verify::run(s.suite()?, s.seed);
    let mut sum = Summary::new(s.kind, s.group.clone(), s.chirality);
    let failed = report.failures().count() as f64;
    sum.monitors.insert("failed_checks".into(), failed);
    sum.verify = Some(report);
    Ok(Outcome {
        table: Table::default(),
        summary: sum,
    })
}
