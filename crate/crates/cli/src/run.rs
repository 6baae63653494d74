//! Orchestration of the four experiment kinds into result tables.

use std::fmt;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use mflab_core::audit::{self, Identity};
use mflab_core::flow::HartreeField;
use mflab_core::fock::{self, FockVector, SectorVector};
use mflab_core::linalg::{self, CVec};
use mflab_core::liouville::{self, CylindricalTestFunction, ParticleMeasure, TimeWindow};
use mflab_core::many_body::{self, ManyBodySystem, ModelSpec};
use mflab_core::wigner::{self, Picture, StatePreparation};
use mflab_core::Error;

use crate::config::{ExperimentConfig, ExperimentKind, FieldError, Probes};
use crate::table::{Cell, ColumnKind, ResultTable};

use ColumnKind::{Complex as Cx, Int, Real, Text};

/// Phase-circle quadrature points for the circle target.
pub const CIRCLE_POINTS: usize = 64;

/// Thresholds reported in the algebra-audit summary.
pub const ALGEBRA_TOL: f64 = 1e-10;
pub const COMMUTATOR_TOL: f64 = 1e-8;
pub const KLMN_TOL: f64 = 1e-10;

/// A core failure with the grid point that produced it.
#[derive(Debug)]
pub struct RunError {
    pub module: &'static str,
    pub op: &'static str,
    pub point: String,
    pub source: Error,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.module, self.op)?;
        if !self.point.is_empty() {
            write!(f, " at {}", self.point)?;
        }
        write!(f, ": {}", self.source)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl RunError {
    pub fn is_numerical(&self) -> bool {
        self.source.is_numerical()
    }
}

/// Experiment failure: rejected configuration or a failing computation.
#[derive(Debug)]
pub enum ExperimentError {
    Invalid(Vec<FieldError>),
    Run(RunError),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(errs) => {
                let parts: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
                write!(f, "invalid configuration: {}", parts.join("; "))
            }
            Self::Run(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<RunError> for ExperimentError {
    fn from(e: RunError) -> Self {
        Self::Run(e)
    }
}

trait Context<T> {
    fn at(self, module: &'static str, op: &'static str, point: impl FnOnce() -> String) -> Result<T, RunError>;
}

impl<T> Context<T> for mflab_core::Result<T> {
    fn at(self, module: &'static str, op: &'static str, point: impl FnOnce() -> String) -> Result<T, RunError> {
        self.map_err(|source| RunError {
            module,
            op,
            point: point(),
            source,
        })
    }
}

fn none() -> String {
    String::new()
}

fn push(table: &mut ResultTable, row: Vec<Cell>) {
    table.push(row).expect("row matches the table layout");
}

fn int(v: i64) -> Cell {
    Cell::Int(v)
}

/// Probe vectors of the sweep, indexed by `probe_id`.
pub fn resolve_probes(config: &ExperimentConfig) -> Vec<Vec<C64>> {
    match &config.sweep.probes {
        Probes::Random { count, max_norm } => {
            wigner::default_probes(&config.model, *count, *max_norm, config.numerics.seed)
        }
        Probes::Explicit(list) => list.clone(),
    }
}

/// Runs one experiment. Tables come back in a fixed order; rows follow the
/// grid order `t`, then `n`, then `probe_id`, unless stated otherwise.
pub fn run_experiment(config: &ExperimentConfig, kind: ExperimentKind) -> Result<Vec<ResultTable>, ExperimentError> {
    let errors = config.validate_for(kind);
    if !errors.is_empty() {
        return Err(ExperimentError::Invalid(errors));
    }
    let tables = match kind {
        ExperimentKind::Convergence => convergence(config)?,
        ExperimentKind::Duhamel => duhamel(config)?,
        ExperimentKind::Liouville => liouville_run(config)?,
        ExperimentKind::AlgebraAudit => algebra_audit(config)?,
    };
    Ok(tables)
}

fn state_prep(config: &ExperimentConfig) -> StatePreparation {
    config.prep.state().expect("validated many-body preparation")
}

fn prepared(
    model: &ModelSpec,
    prep: &StatePreparation,
    n: usize,
) -> Result<(ManyBodySystem, SectorVector), RunError> {
    let sys = ManyBodySystem::new(model, n).at("many-body", "build_hamiltonian", || format!("n={n}"))?;
    let psi = prep
        .prepare(model.d(), n)
        .at("wigner-analysis", "prepare_state", || format!("n={n}"))?;
    Ok((sys, psi))
}

fn convergence(config: &ExperimentConfig) -> Result<Vec<ResultTable>, RunError> {
    let model = &config.model;
    let prep = state_prep(config);
    let times = &config.sweep.times;
    let n_list = &config.sweep.n_list;
    let flow = &config.numerics.flow;

    let rows = wigner::convergence_metric(model, &prep, times, n_list, flow)
        .at("wigner-analysis", "convergence_metric", none)?;
    let mut dist = ResultTable::new(
        "convergence",
        &[("t", Real), ("n", Int), ("probe_id", Int), ("distance", Real)],
    );
    for r in rows {
        push(&mut dist, vec![r.t.into(), r.n.into(), int(-1), r.distance.into()]);
    }

    let probes = resolve_probes(config);
    let atoms = prep.classical_atoms().at("wigner-analysis", "classical_atoms", none)?;
    let field = HartreeField::new(model).at("meanfield-flow", "hartree_field", none)?;
    // moved[t][atom] = (weight, interaction-picture position)
    let moved: Vec<Vec<(f64, CVec)>> = times
        .iter()
        .map(|&t| {
            atoms
                .iter()
                .map(|(w, z)| {
                    let run = field
                        .integrate_interaction(z, 0.0, t, flow)
                        .at("meanfield-flow", "interaction_flow", || format!("t={t}"))?;
                    Ok((*w, run.state.z))
                })
                .collect::<Result<Vec<_>, RunError>>()
        })
        .collect::<Result<_, RunError>>()?;

    let per_n: Vec<Vec<C64>> = n_list
        .par_iter()
        .map(|&n| {
            let (sys, psi) = prepared(model, &prep, n)?;
            let mut out = Vec::with_capacity(times.len() * probes.len());
            for &t in times {
                for (k, xi) in probes.iter().enumerate() {
                    let g = wigner::characteristic_function(&sys, &psi, t, xi, Picture::Interaction)
                        .at("wigner-analysis", "characteristic_function", || {
                            format!("n={n}, t={t}, probe_id={k}")
                        })?;
                    out.push(g);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, RunError>>()?;

    let mut chr = ResultTable::new(
        "characteristic",
        &[
            ("t", Real),
            ("n", Int),
            ("probe_id", Int),
            ("g", Cx),
            ("dirac_target", Cx),
            ("dirac_error", Real),
            ("circle_target", Cx),
            ("circle_error", Real),
        ],
    );
    for (ti, &t) in times.iter().enumerate() {
        let targets: Vec<(C64, C64)> = probes
            .iter()
            .map(|xi| {
                moved[ti].iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |acc, (w, z)| {
                    (
                        acc.0 + wigner::dirac_characteristic(xi, z.as_slice()) * *w,
                        acc.1 + wigner::circle_characteristic(xi, z.as_slice(), CIRCLE_POINTS) * *w,
                    )
                })
            })
            .collect();
        for (ni, &n) in n_list.iter().enumerate() {
            for (k, (dirac, circle)) in targets.iter().enumerate() {
                let g = per_n[ni][ti * probes.len() + k];
                push(
                    &mut chr,
                    vec![
                        t.into(),
                        n.into(),
                        k.into(),
                        g.into(),
                        (*dirac).into(),
                        (g - dirac).norm().into(),
                        (*circle).into(),
                        (g - circle).norm().into(),
                    ],
                );
            }
        }
    }
    Ok(vec![dist, chr])
}

/// Odd node count of the half-resolution Simpson rule.
fn coarse_nodes(nodes: usize) -> Option<usize> {
    let c = nodes.div_ceil(2);
    (c >= 3 && c % 2 == 1).then_some(c)
}

fn duhamel(config: &ExperimentConfig) -> Result<Vec<ResultTable>, RunError> {
    let model = &config.model;
    let prep = state_prep(config);
    let probes = resolve_probes(config);
    let nodes = config.numerics.simpson_nodes;
    let coarse = coarse_nodes(nodes);
    let times: Vec<f64> = config.sweep.times.iter().copied().filter(|&t| t > 0.0).collect();

    let per_n: Vec<Vec<Vec<Cell>>> = config
        .sweep
        .n_list
        .par_iter()
        .map(|&n| {
            let (sys, psi) = prepared(model, &prep, n)?;
            let mut rows = Vec::new();
            for &t in &times {
                for (k, xi) in probes.iter().enumerate() {
                    let point = || format!("n={n}, t={t}, probe_id={k}");
                    let fine = wigner::duhamel_residual_for(&sys, &psi, xi, t, nodes)
                        .at("wigner-analysis", "duhamel_residual", point)?;
                    let coarse_res = match coarse {
                        Some(c) => {
                            wigner::duhamel_residual_for(&sys, &psi, xi, t, c)
                                .at("wigner-analysis", "duhamel_residual", point)?
                                .residual
                        }
                        None => f64::NAN,
                    };
                    let order = (coarse_res / fine.residual).log2();
                    rows.push((
                        t,
                        k,
                        vec![
                            n.into(),
                            fine.nodes.into(),
                            fine.residual.into(),
                            coarse_res.into(),
                            order.into(),
                            fine.j0.into(),
                            fine.jt.into(),
                            fine.integral.into(),
                        ],
                    ));
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, RunError>>()?
        .into_iter()
        .map(|rows| {
            rows.into_iter()
                .map(|(t, k, mut cells)| {
                    let n = cells.remove(0);
                    let mut row = vec![t.into(), n, k.into()];
                    row.extend(cells);
                    row
                })
                .collect()
        })
        .collect();

    let mut table = ResultTable::new(
        "duhamel",
        &[
            ("t", Real),
            ("n", Int),
            ("probe_id", Int),
            ("nodes", Int),
            ("residual", Real),
            ("coarse_residual", Real),
            ("order", Real),
            ("j0", Cx),
            ("jt", Cx),
            ("integral", Cx),
        ],
    );
    let per_point = times.len() * probes.len();
    for idx in 0..per_point {
        for rows in &per_n {
            push(&mut table, rows[idx].clone());
        }
    }
    Ok(vec![table])
}

/// Mass-weighted mean of the atoms.
fn barycenter(mu: &ParticleMeasure) -> CVec {
    let mut acc = CVec::zeros(mu.d());
    for (w, z) in mu.atoms() {
        acc += z * C64::new(*w, 0.0);
    }
    acc
}

/// Rank-two test function around the barycenter, moved along the initial
/// velocity by `shift`.
pub fn default_test_function(
    model: &ModelSpec,
    mu: &ParticleMeasure,
    radius: f64,
    shift: f64,
    window: TimeWindow,
) -> mflab_core::Result<CylindricalTestFunction> {
    let field = HartreeField::new(model)?;
    let zbar = barycenter(mu);
    let v0 = field.velocity(0.0, &zbar);
    let directions = vec![zbar.as_slice().to_vec(), v0.as_slice().to_vec()];
    let probe = CylindricalTestFunction::new(&directions, &[C64::new(0.0, 0.0); 2], radius, window)?;
    let center = probe.project(&(&zbar + &v0 * C64::new(shift, 0.0)));
    CylindricalTestFunction::new(&directions, &center, radius, window)
}

fn measure_table(schema: &str, mu: &ParticleMeasure) -> ResultTable {
    let names = mu.column_names();
    let cols: Vec<(&str, ColumnKind)> = names.iter().map(|n| (n.as_str(), Real)).collect();
    let mut table = ResultTable::new(schema, &cols);
    for row in mu.to_columns() {
        push(&mut table, row.into_iter().map(Cell::Real).collect());
    }
    table
}

fn liouville_run(config: &ExperimentConfig) -> Result<Vec<ResultTable>, RunError> {
    let model = &config.model;
    let settings = &config.numerics.liouville;
    let horizon = config.horizon();
    let spec = config.prep.measure().at("liouville-transport", "measure_spec", none)?;
    let mu = liouville::sample_measure(&spec, config.numerics.seed, true)
        .at("liouville-transport", "sample_measure", none)?;
    let (t0, t1) = settings.window.unwrap_or((0.1 * horizon, 0.9 * horizon));
    let window = TimeWindow { t0, t1 };
    let f = default_test_function(model, &mu, settings.radius, settings.shift, window)
        .at("liouville-transport", "test_function", none)?;
    let report = liouville::liouville_check(model, &mu, &f, horizon, settings.steps, &config.numerics.flow)
        .at("liouville-transport", "liouville_check", || format!("steps={}", settings.steps))?;

    let mut summary = ResultTable::new(
        "liouville",
        &[
            ("t", Real),
            ("n", Int),
            ("probe_id", Int),
            ("atoms", Int),
            ("steps", Int),
            ("transported", Real),
            ("bracket", Real),
            ("coarse", Real),
            ("floor", Real),
            ("frozen", Real),
            ("within_floor", Int),
            ("below_control", Int),
        ],
    );
    push(
        &mut summary,
        vec![
            horizon.into(),
            int(0),
            int(0),
            mu.len().into(),
            report.steps.into(),
            report.transported.into(),
            report.bracket.into(),
            report.coarse.into(),
            report.floor.into(),
            report.frozen.into(),
            int(report.within_floor(3.0) as i64),
            int(report.below_control(0.1) as i64),
        ],
    );

    let mut moments = ResultTable::new(
        "moments",
        &[
            ("t", Real),
            ("n", Int),
            ("probe_id", Int),
            ("m2_qa", Real),
            ("unit_ball_mass", Real),
            ("m1", Real),
            ("m2", Real),
            ("m3", Real),
            ("m4", Real),
        ],
    );
    for (t, m) in &report.moments {
        let mut row = vec![(*t).into(), int(0), int(-1), m.m2_qa.into(), m.unit_ball_mass.into()];
        row.extend(m.moments.iter().map(|x| Cell::Real(*x)));
        push(&mut moments, row);
    }
    Ok(vec![
        summary,
        moments,
        measure_table("measure_initial", &mu),
        measure_table("measure_final", &report.terminal),
    ])
}

fn algebra_audit(config: &ExperimentConfig) -> Result<Vec<ResultTable>, RunError> {
    let model = &config.model;
    let num = &config.numerics;
    let probes = resolve_probes(config);
    let n_list = &config.sweep.n_list;
    let times = &config.sweep.times;

    let cases = audit::randomized_audit(num.audit_cases, num.seed, num.audit_n_max)
        .at("wick-calculus", "randomized_audit", none)?;
    let mut identities = ResultTable::new(
        "audit",
        &[
            ("t", Real),
            ("n", Int),
            ("probe_id", Int),
            ("d", Int),
            ("p", Int),
            ("q", Int),
            ("identity", Text),
            ("residual", Real),
        ],
    );
    for cs in &cases {
        for (id, r) in &cs.residuals {
            push(
                &mut identities,
                vec![
                    cs.t.into(),
                    cs.n.into(),
                    cs.case.into(),
                    cs.d.into(),
                    cs.p.into(),
                    cs.q.into(),
                    id.name().into(),
                    (*r).into(),
                ],
            );
        }
    }

    let n_probes = probes.len();
    let grid: Vec<(f64, usize, usize)> = times
        .iter()
        .flat_map(|&s| n_list.iter().flat_map(move |&n| (0..n_probes).map(move |k| (s, n, k))))
        .collect();
    let comm: Vec<f64> = grid
        .par_iter()
        .map(|&(s, n, k)| {
            audit::commutator_residual(model, &probes[k], s, n)
                .at("wick-calculus", "commutator_identity", || format!("n={n}, t={s}, probe_id={k}"))
        })
        .collect::<Result<_, RunError>>()?;
    let mut commutator = ResultTable::new(
        "commutator",
        &[("t", Real), ("n", Int), ("probe_id", Int), ("residual", Real)],
    );
    for (&(s, n, k), r) in grid.iter().zip(&comm) {
        push(&mut commutator, vec![s.into(), n.into(), k.into(), (*r).into()]);
    }

    let cert = many_body::estimate_form_bound(model, &num.a_grid).at("many-body", "estimate_form_bound", none)?;
    let per_n: Vec<(f64, f64, f64)> = n_list
        .par_iter()
        .map(|&n| {
            let point = || format!("n={n}");
            let direct = many_body::build_pair_form(model, n).at("many-body", "build_pair_form", point)?;
            let wick = many_body::build_pair_form_wick(model, n).at("many-body", "build_pair_form", point)?;
            let h = many_body::build_hamiltonian(model, n).at("many-body", "build_hamiltonian", point)?;
            let hw = many_body::build_hamiltonian_wick(model, n).at("many-body", "build_hamiltonian", point)?;
            let margin = many_body::klmn_margin(model, n, &cert).at("many-body", "klmn_margin", point)?;
            Ok((
                linalg::max_abs(&(direct.matrix() - wick.matrix())),
                linalg::max_abs(&(h.matrix() - hw.matrix())),
                margin,
            ))
        })
        .collect::<Result<_, RunError>>()?;
    let mut routes = ResultTable::new(
        "pair_form",
        &[
            ("t", Real),
            ("n", Int),
            ("probe_id", Int),
            ("pair_form_routes", Real),
            ("hamiltonian_routes", Real),
        ],
    );
    let mut klmn = ResultTable::new(
        "klmn",
        &[("t", Real), ("n", Int), ("probe_id", Int), ("a", Real), ("b", Real), ("margin", Real)],
    );
    for (&n, (pair, ham, margin)) in n_list.iter().zip(&per_n) {
        push(&mut routes, vec![0.0.into(), n.into(), int(-1), (*pair).into(), (*ham).into()]);
        push(
            &mut klmn,
            vec![0.0.into(), n.into(), int(-1), cert.a.into(), cert.b.into(), (*margin).into()],
        );
    }

    // Exact normal-ordered Weyl blocks against the dense truncated exponential,
    // on the sectors the truncation policy retains. Rows whose image leaks
    // into the boundary sectors are kept but marked uncertified.
    let policy = num.truncation;
    let weyl_prep = config.prep.state();
    let retained: Vec<usize> = n_list
        .iter()
        .copied()
        .filter(|&n| n + policy.buffer <= policy.n_max)
        .collect();
    let weyl_grid: Vec<(usize, usize)> = retained
        .iter()
        .flat_map(|&n| (0..n_probes).map(move |k| (n, k)))
        .collect();
    let weyl_rows: Vec<(f64, f64)> = weyl_grid
        .par_iter()
        .map(|&(n, k)| {
            let point = || format!("n={n}, probe_id={k}");
            let psi = match &weyl_prep {
                Some(p) => p.prepare(model.d(), n),
                None => StatePreparation::Hermite(vec![C64::new(1.0, 0.0); model.d()]).prepare(model.d(), n),
            }
            .at("wigner-analysis", "prepare_state", point)?;
            let eps = 1.0 / n as f64;
            let f = wigner::weyl_argument(&probes[k]);
            let exact = wigner::weyl_expectation(&psi, &f, eps).at("fock-core", "weyl_operator", point)?;
            let dense = fock::weyl_operator(&f, policy, eps).at("fock-core", "weyl_operator", point)?;
            let v = FockVector::from_sector(&psi, policy.n_max, eps).at("fock-core", "weyl_operator", point)?;
            let (out, tail) = dense.apply_uncertified(&v).at("fock-core", "weyl_operator", point)?;
            Ok(((exact - psi.coeffs().dotc(out.sector(n))).norm(), tail))
        })
        .collect::<Result<_, RunError>>()?;
    let mut weyl = ResultTable::new(
        "weyl",
        &[
            ("t", Real),
            ("n", Int),
            ("probe_id", Int),
            ("n_max", Int),
            ("tail", Real),
            ("certified", Int),
            ("difference", Real),
        ],
    );
    let certified = |tail: f64| tail <= policy.tail_tol;
    for (&(n, k), (diff, tail)) in weyl_grid.iter().zip(&weyl_rows) {
        push(
            &mut weyl,
            vec![
                0.0.into(),
                n.into(),
                k.into(),
                policy.n_max.into(),
                (*tail).into(),
                int(certified(*tail) as i64),
                (*diff).into(),
            ],
        );
    }

    let mut summary = ResultTable::new(
        "audit_summary",
        &[("identity", Text), ("max_residual", Real), ("threshold", Real), ("pass", Int)],
    );
    let mut add = |name: &str, value: f64, threshold: f64| {
        push(
            &mut summary,
            vec![name.into(), value.into(), threshold.into(), int((value <= threshold) as i64)],
        );
    };
    for (id, worst) in audit::max_by_identity(&cases) {
        debug_assert!(Identity::ALL.contains(&id));
        add(id.name(), worst, ALGEBRA_TOL);
    }
    let max = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, f64::max);
    add("commutator", max(&mut comm.iter().copied()), COMMUTATOR_TOL);
    add("pair_form_routes", max(&mut per_n.iter().map(|r| r.0.max(r.1))), ALGEBRA_TOL);
    // Reported as the deficit below zero.
    add("klmn_deficit", max(&mut per_n.iter().map(|r| -r.2)), KLMN_TOL);
    // Only certified rows count; the tail tolerance bounds a squared norm.
    let certified_diffs = weyl_rows.iter().filter(|r| certified(r.1)).map(|r| r.0);
    add("weyl_dense_vs_exact", max(&mut certified_diffs.into_iter()), policy.tail_tol.sqrt());

    Ok(vec![identities, commutator, routes, klmn, weyl, summary])
}
