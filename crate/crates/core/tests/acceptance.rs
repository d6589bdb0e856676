//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Runs every criterion in order; `PHASEFRAC_ACCEPTANCE=3,11` restricts the
//! run to a subset. The process fails when a criterion outside
//! [`EXPECTED_FAILURES`] fails or when an expected failure starts passing.

use std::ops::ControlFlow;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use phasefrac::bench::{build_setup, execute, solver_config, Case, CaseOutcome, RunSpec};
use phasefrac::dynamics::rayleigh_wave_speed;
use phasefrac::fatigue::{fatigue_degradation, FatigueParams};
use phasefrac::fem::{
    element_residual_and_tangent, ElementContribution, ElementInput, ElementOrder, ElementOutputs,
    EnergySplit, HistoryMode, MaterialParams,
};
use phasefrac::mesh::{
    generate_structured_quad_mesh, BcTarget, DirichletSpec, Field, GridSpec, Mesh, Prescribed,
};
use phasefrac::solvers::{
    check_field, run_load_program, run_load_program_with, solve_increment, BfgsUpdates, FieldStats,
    FluxScales, IncrementController, LoadProgram, LoadStep, Model, Scheme, SolverConfig,
    Tolerances,
};
use phasefrac::system::{
    build_dof_map, Assembler, EvalOptions, HistorySource, IntegrationPointState, SolutionState,
};

#[path = "common/q4_energy.rs"]
mod oracle;

/// Criteria that cannot be met by a faithful implementation; see the README.
const EXPECTED_FAILURES: &[usize] = &[10];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// History monotonicity of every benchmark run, for criterion 12.
static RUNS: Mutex<Vec<(String, bool)>> = Mutex::new(Vec::new());

fn record(label: &str, out: &CaseOutcome) {
    RUNS.lock()
        .unwrap()
        .push((label.to_string(), out.run.history_monotone));
}

fn run(label: &str, spec: &RunSpec) -> CaseOutcome {
    let setup = build_setup(spec).unwrap();
    let out = execute(spec, &setup, None).unwrap();
    record(label, &out);
    out
}

// ---------------------------------------------------------------- 1

fn spd(n: usize, seed: u64, shift: f64) -> DMatrix<f64> {
    let mut state = seed;
    let b = DMatrix::from_fn(n, n, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    });
    &b * b.transpose() + DMatrix::identity(n, n) * shift
}

fn c1_bfgs() -> Verdict {
    let (mut worst_inv, mut worst_sec, mut pairs) = (0.0f64, 0.0f64, 0);
    for n in 2..=20 {
        for seed in 0..4u64 {
            let k0 = spd(n, 17 * n as u64 + seed, n as f64);
            let a = spd(n, 1000 + 31 * n as u64 + seed, 0.5 * n as f64);
            let lu = k0.clone().lu();
            let mut b = BfgsUpdates::new();
            let mut k = k0.clone();
            for step in 0..6 {
                let s = DVector::from_fn(n, |i, _| {
                    ((i * 7 + step * 3 + seed as usize) as f64 * 0.37).sin()
                });
                let y = &a * &s;
                if !b.push(s.as_slice().to_vec(), y.as_slice().to_vec()) {
                    return Verdict::new(false, "a positive-curvature pair was rejected");
                }
                pairs += 1;
                let ks = &k * &s;
                k = &k + (&y * y.transpose()) / y.dot(&s) - (&ks * ks.transpose()) / s.dot(&ks);
                let mut h = DMatrix::zeros(n, n);
                for j in 0..n {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    let col = b.apply_inverse(
                        |r| {
                            lu.solve(&DVector::from_column_slice(r))
                                .unwrap()
                                .as_slice()
                                .to_vec()
                        },
                        &e,
                    );
                    h.set_column(j, &DVector::from_vec(col));
                }
                worst_inv = worst_inv.max((&k * &h - DMatrix::identity(n, n)).amax());
                worst_sec = worst_sec
                    .max((&k * &s - &y).norm() / y.norm())
                    .max((&h * &y - &s).norm() / s.norm());
            }
        }
    }
    Verdict::new(
        worst_inv <= 1e-12 && worst_sec <= 1e-10,
        format!("{pairs} pairs, n = 2..20: max|K_direct H - I| = {worst_inv:.1e} (tol 1e-12), secant {worst_sec:.1e} (tol 1e-10)"),
    )
}

// ---------------------------------------------------------------- 2

const QUAD4: [[f64; 2]; 4] = [[0.0, 0.0], [1.1, 0.1], [1.3, 0.9], [-0.1, 1.2]];

fn element(
    order: ElementOrder,
    x: &[[f64; 2]],
    u: &[f64],
    phi: &[f64],
    history: HistoryMode<'_>,
    split: EnergySplit,
    p: &MaterialParams,
) -> ElementContribution {
    let input = ElementInput {
        order,
        coords: x,
        u,
        phi,
        history,
        fatigue: None,
        inertia: None,
        thickness: 1.0,
    };
    element_residual_and_tangent(&input, p, split, ElementOutputs::ALL).unwrap()
}

fn rel_err(k: &[Vec<f64>], fd: &[Vec<f64>]) -> f64 {
    let scale = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = k
        .iter()
        .zip(fd)
        .flat_map(|(a, b)| a.iter().zip(b))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    err / scale
}

fn element_fd_error() -> f64 {
    let p = MaterialParams::new(210.0, 0.3, 2.7e-3, 0.1).unwrap();
    let mut worst = 0.0f64;
    for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
        let mut x = QUAD4.to_vec();
        if order == ElementOrder::Quadratic {
            for i in 0..4 {
                let (a, b) = (QUAD4[i], QUAD4[(i + 1) % 4]);
                x.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }
        let nn = order.nodes();
        let u: Vec<f64> = (0..2 * nn)
            .map(|i| 1e-2 * ((i as f64 * 1.7).sin() + 0.3))
            .collect();
        let phi: Vec<f64> = (0..nn)
            .map(|i| 0.2 + 0.15 * (i as f64 * 0.9).cos())
            .collect();
        let h: Vec<f64> = (0..order.n_ip()).map(|q| 0.5 + 0.1 * q as f64).collect();
        for split in [
            EnergySplit::Isotropic,
            EnergySplit::VolumetricDeviatoric,
            EnergySplit::Spectral,
        ] {
            let hm = HistoryMode::Fixed(&h);
            let base = element(order, &x, &u, &phi, hm, split, &p);
            let mut fd = vec![vec![0.0; 2 * nn]; 2 * nn];
            for j in 0..2 * nn {
                let (mut up, mut um) = (u.clone(), u.clone());
                up[j] += 1e-7;
                um[j] -= 1e-7;
                let (rp, rm) = (
                    element(order, &x, &up, &phi, hm, split, &p),
                    element(order, &x, &um, &phi, hm, split, &p),
                );
                for i in 0..2 * nn {
                    fd[i][j] = (rp.r_u()[i] - rm.r_u()[i]) / 2e-7;
                }
            }
            worst = worst.max(rel_err(&base.k_uu_dense(), &fd));
            let mut fd = vec![vec![0.0; nn]; nn];
            for j in 0..nn {
                let (mut pp, mut pm) = (phi.clone(), phi.clone());
                pp[j] += 1e-6;
                pm[j] -= 1e-6;
                let (rp, rm) = (
                    element(order, &x, &u, &pp, hm, split, &p),
                    element(order, &x, &u, &pm, hm, split, &p),
                );
                for i in 0..nn {
                    fd[i][j] = (rp.r_phi()[i] - rm.r_phi()[i]) / 2e-6;
                }
            }
            worst = worst.max(rel_err(&base.k_pp_dense(), &fd));
        }
    }
    worst
}

fn global_fd_error() -> f64 {
    let p = MaterialParams::new(100.0, 0.25, 1e-2, 0.5).unwrap();
    let specs = vec![
        DirichletSpec::on_set(Field::Ux, "bottom", Prescribed::Constant(0.0)),
        DirichletSpec::on_set(Field::Uy, "bottom", Prescribed::Constant(0.0)),
        DirichletSpec::on_set(Field::Uy, "top", Prescribed::Ramp(0.02)),
    ];
    let mut worst = 0.0f64;
    for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
        let mesh =
            generate_structured_quad_mesh(&GridSpec::new(2.0, 2.0, 1.0).order(order)).unwrap();
        let dofs = build_dof_map(&mesh, &specs).unwrap();
        let asm = Assembler::new(&mesh, &dofs);
        let nn = mesh.n_nodes();
        let u: Vec<f64> = (0..2 * nn).map(|i| 1e-2 * (0.7 * i as f64).sin()).collect();
        let phi: Vec<f64> = (0..nn)
            .map(|i| 0.3 + 0.2 * (1.3 * i as f64).cos())
            .collect();
        let h: Vec<f64> = (0..mesh.n_elements() * mesh.n_ip())
            .map(|q| 0.01 * (1 + q % 5) as f64)
            .collect();
        let ip = vec![IntegrationPointState::default(); h.len()];
        let eval = |u: &[f64], phi: &[f64]| {
            let opts = EvalOptions::residual(EnergySplit::Spectral, HistorySource::Given(&h))
                .with_tangents(true, true);
            asm.evaluate(&mesh, u, phi, &ip, &p, &opts).unwrap()
        };
        let base = eval(&u, &phi);
        let (kuu, kpp) = (
            base.kuu.as_ref().unwrap().to_dense(),
            base.kpp.as_ref().unwrap().to_dense(),
        );
        let free_u: Vec<(usize, usize)> = dofs
            .u_equations()
            .iter()
            .enumerate()
            .filter_map(|(s, e)| e.map(|e| (s, e)))
            .collect();
        let mut fd = vec![vec![0.0; kuu.len()]; kuu.len()];
        for &(sj, ej) in &free_u {
            let (mut up, mut um) = (u.clone(), u.clone());
            up[sj] += 1e-7;
            um[sj] -= 1e-7;
            let (rp, rm) = (eval(&up, &phi).r_u, eval(&um, &phi).r_u);
            for &(si, ei) in &free_u {
                fd[ei][ej] = (rp[si] - rm[si]) / 2e-7;
            }
        }
        worst = worst.max(rel_err(&kuu, &fd));
        let free_p: Vec<(usize, usize)> = dofs
            .phi_equations()
            .iter()
            .enumerate()
            .filter_map(|(n, e)| e.map(|e| (n, e)))
            .collect();
        let mut fd = vec![vec![0.0; kpp.len()]; kpp.len()];
        for &(nj, ej) in &free_p {
            let (mut pp, mut pm) = (phi.clone(), phi.clone());
            pp[nj] += 1e-6;
            pm[nj] -= 1e-6;
            let (rp, rm) = (eval(&u, &pp).r_phi, eval(&u, &pm).r_phi);
            for &(ni, ei) in &free_p {
                fd[ei][ej] = (rp[ni] - rm[ni]) / 2e-6;
            }
        }
        worst = worst.max(rel_err(&kpp, &fd));
    }
    worst
}

fn energy_gradient_error() -> f64 {
    let p = MaterialParams::new(210.0, 0.3, 2.7e-3, 0.1).unwrap();
    let mat = oracle::Material {
        lambda: p.lambda(),
        mu: p.mu(),
        gc: p.gc,
        l: p.length_scale,
        k: p.k_residual,
    };
    let u: Vec<f64> = (0..8)
        .map(|i| 1e-2 * ((i as f64 * 1.7).sin() + 0.3))
        .collect();
    let phi: Vec<f64> = (0..4)
        .map(|i| 0.2 + 0.15 * (i as f64 * 0.9).cos())
        .collect();
    let zero = [0.0; 4];
    let e = element(
        ElementOrder::Linear,
        &QUAD4,
        &u,
        &phi,
        HistoryMode::Trial(&zero),
        EnergySplit::Isotropic,
        &p,
    );
    let fd = |field_u: bool, j: usize| {
        let (mut a, mut b) = if field_u {
            (u.clone(), u.clone())
        } else {
            (phi.clone(), phi.clone())
        };
        a[j] += 1e-6;
        b[j] -= 1e-6;
        let (ep, em) = if field_u {
            (
                oracle::energy(&QUAD4, &a, &phi, &mat),
                oracle::energy(&QUAD4, &b, &phi, &mat),
            )
        } else {
            (
                oracle::energy(&QUAD4, &u, &a, &mat),
                oracle::energy(&QUAD4, &u, &b, &mat),
            )
        };
        (ep - em) / 2e-6
    };
    let rel = |r: &[f64], g: Vec<f64>| {
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        r.iter()
            .zip(&g)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    };
    rel(e.r_u(), (0..8).map(|j| fd(true, j)).collect())
        .max(rel(e.r_phi(), (0..4).map(|j| fd(false, j)).collect()))
}

fn c2_tangents() -> Verdict {
    let (el, gl, en) = (
        element_fd_error(),
        global_fd_error(),
        energy_gradient_error(),
    );
    Verdict::new(
        el < 1e-6 && gl < 1e-6 && en < 1e-6,
        format!(
            "element {el:.1e}, 4-element global {gl:.1e}, residual vs energy {en:.1e} (tol 1e-6)"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn c3_homogeneous() -> Verdict {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for strain in [0.005, 0.02, 0.05] {
        let mesh = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            order: ElementOrder::Linear,
            elements: vec![vec![0, 1, 2, 3]],
            node_sets: Default::default(),
            element_sets: Default::default(),
            thickness: 1.0,
        };
        let specs: Vec<DirichletSpec> = mesh
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(n, x)| {
                [
                    DirichletSpec {
                        field: Field::Ux,
                        target: BcTarget::Nodes(vec![n]),
                        value: Prescribed::Ramp(strain * x[0]),
                    },
                    DirichletSpec {
                        field: Field::Uy,
                        target: BcTarget::Nodes(vec![n]),
                        value: Prescribed::Constant(0.0),
                    },
                ]
            })
            .collect();
        let params = MaterialParams::new(210_000.0, 0.3, 2.7, 0.024).unwrap();
        let model = Model::new(mesh, &specs, params, EnergySplit::Isotropic).unwrap();
        let h = 0.5 * params.lambda() * strain * strain + params.mu() * strain * strain;
        let exact = 2.0 * h * params.length_scale / (params.gc + 2.0 * h * params.length_scale);
        for scheme in Scheme::ALL {
            let mut cfg = SolverConfig::for_scheme(scheme);
            cfg.max_iterations = 50;
            let step = LoadStep {
                lambda: 1.0,
                time: 1.0,
                dt: 1.0,
                dynamic: false,
            };
            let res = solve_increment(
                &model,
                &model.initial_state(),
                &step,
                &cfg,
                &FluxScales::default(),
            )
            .unwrap();
            if !res.converged {
                failures.push(format!("{scheme} at {strain}"));
            }
            worst = res
                .state
                .phi
                .iter()
                .fold(worst, |m, v| m.max((v - exact).abs()));
        }
    }
    Verdict::new(
        failures.is_empty() && worst <= 1e-8,
        format!("strain 0.005/0.02/0.05, all schemes: max |phi - 2Hl/(Gc+2Hl)| = {worst:.1e} (tol 1e-8){}", if failures.is_empty() { String::new() } else { format!(", not converged: {failures:?}") }),
    )
}

// ---------------------------------------------------------------- 4 and 7

struct Critical {
    increment: usize,
    previous: SolutionState,
    step: LoadStep,
    scales: FluxScales,
}

/// Runs the SENT preset and keeps the starting point of the increment in
/// which the crack grew the most.
fn sent_with_critical() -> (CaseOutcome, Critical) {
    let spec = RunSpec::preset(Case::Sent);
    let setup = build_setup(&spec).unwrap();
    let config = solver_config(&spec);
    let controller = IncrementController::new(1.0 / spec.increments as f64, spec.adaptive);
    let mut best: Option<(f64, Critical)> = None;
    let mut last_a = 0.0;
    let run = run_load_program_with(
        &setup.model,
        &LoadProgram::ramp(),
        &config,
        controller,
        &setup.monitors,
        |ev| {
            let da = ev.record.crack_length_mm - last_a;
            last_a = ev.record.crack_length_mm;
            if best.as_ref().map_or(true, |(b, _)| da > *b) {
                best = Some((
                    da,
                    Critical {
                        increment: ev.record.increment,
                        previous: ev.previous.clone(),
                        step: ev.step,
                        scales: ev.scales,
                    },
                ));
            }
            ControlFlow::Continue(())
        },
    )
    .unwrap();
    // the summary from the ordinary entry point, for the counted quantities
    let out = execute(&spec, &setup, None).unwrap();
    assert_eq!(out.run.log, run.log, "instrumented and plain runs differ");
    record("sent bfgs", &out);
    (out, best.unwrap().1)
}

fn c4_sent(out: &CaseOutcome) -> Verdict {
    let log = &out.run.log.records;
    let dt0 = 1.0 / RunSpec::preset(Case::Sent).increments as f64;
    let restarts = &out.run.adaptive_restarts;
    let dt1 = restarts.first().map(|&i| log[i - 1].dt);
    let ratio = dt1.map_or(f64::NAN, |d| d / dt0);
    let ligament = 0.5;
    let growth: Vec<usize> = log
        .windows(2)
        .filter(|w| w[1].crack_length_mm > w[0].crack_length_mm)
        .map(|w| w[1].increment)
        .collect();
    let one_shot = growth.len() == 1
        && log
            .iter()
            .any(|r| r.increment == growth[0] && r.crack_length_mm >= ligament * (1.0 - 1e-9))
        && restarts.first().is_some_and(|&r| growth[0] > r);
    Verdict::new(
        out.summary.completed && log.len() <= 50 && restarts.len() == 1 && (ratio - 0.1).abs() < 1e-9 && one_shot,
        format!(
            "{} increments (max 50), {} cumulative iterations, restarts at {:?} (need exactly 1), dt1/dt0 = {:.4} (need 0.1), crack grew in increments {:?} from 0 to {} mm",
            log.len(),
            out.summary.cum_iterations,
            restarts,
            ratio,
            growth,
            out.summary.final_crack_length_mm
        ),
    )
}

fn c7_newton(critical: &Critical) -> Verdict {
    let spec = RunSpec::preset(Case::Sent);
    let setup = build_setup(&spec).unwrap();
    let base = solver_config(&spec);
    let solve = |scheme: Scheme, line_search: bool| {
        let cfg = SolverConfig {
            scheme,
            line_search,
            ..base.clone()
        };
        let res = solve_increment(
            &setup.model,
            &critical.previous,
            &critical.step,
            &cfg,
            &critical.scales,
        )
        .unwrap();
        (res.converged, res.iterations)
    };
    let bfgs = solve(Scheme::MonolithicBfgs, base.line_search);
    let newton_ls = solve(Scheme::MonolithicNewton, true);
    let newton = solve(Scheme::MonolithicNewton, false);
    Verdict::new(
        bfgs.0 && !newton_ls.0 && !newton.0,
        format!(
            "increment {} (dt {:.4}, max {} iterations): BFGS converged={} in {}, Newton+LS converged={} after {}, Newton converged={} after {}",
            critical.increment, critical.step.dt, base.max_iterations, bfgs.0, bfgs.1, newton_ls.0, newton_ls.1, newton.0, newton.1
        ),
    )
}

// ---------------------------------------------------------------- 5

fn c5_staggered(mono: &CaseOutcome) -> Verdict {
    let reference = mono.summary.critical_displacement_mm.unwrap_or(f64::NAN);
    let mut errors = Vec::new();
    let mut parts = Vec::new();
    let mut stag_iters = 0;
    for n in [100, 1000, 10_000] {
        let mut spec = RunSpec::preset(Case::Sent);
        spec.scheme = Scheme::Staggered;
        spec.increments = n;
        spec.adaptive = false;
        let out = run(&format!("sent staggered {n}"), &spec);
        // a run that never loses half its peak is bounded by the end of the ramp
        let (uc, bound) = match out.summary.critical_displacement_mm {
            Some(u) => (u, ""),
            None => (spec.geometry.applied, " (lower bound)"),
        };
        let err = (uc - reference).abs() / reference;
        errors.push(err);
        stag_iters = out.summary.cum_iterations;
        parts.push(format!("{n}: {:.1}%{bound}", 100.0 * err));
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let cost = mono.summary.cum_iterations as f64 / stag_iters as f64;
    Verdict::new(
        monotone && errors[0] > 0.05 && cost <= 0.1,
        format!(
            "u_crit error vs monolithic {reference:.4e} mm: {} (monotone, first > 5%); iterations monolithic {} / staggered 10^4 {} = {:.3} (max 0.1)",
            parts.join(", "),
            mono.summary.cum_iterations,
            stag_iters,
            cost
        ),
    )
}

// ---------------------------------------------------------------- 6

fn c6_shear() -> Verdict {
    let out = run("shear bfgs", &RunSpec::preset(Case::Shear));
    let slope = out.summary.crack_slope.unwrap_or(f64::NAN);
    Verdict::new(
        out.summary.completed && slope < 0.0,
        format!(
            "{} increments, crack path slope {slope:.3} (need < 0)",
            out.summary.increments
        ),
    )
}

// ---------------------------------------------------------------- 8

fn c8_fatigue() -> Verdict {
    // f = 1 limit against a plain quasi-static run
    let mut spec = RunSpec::preset(Case::Sent);
    spec.geometry.coarse_he = 0.1;
    spec.material.length_scale = 0.05;
    spec.refine = 1.0;
    spec.adaptive = false;
    spec.geometry.applied = 8e-3;
    let plain = build_setup(&spec).unwrap();
    let specs: Vec<DirichletSpec> = plain
        .model
        .dofs
        .constraints()
        .iter()
        .map(|c| DirichletSpec {
            field: c.field,
            target: BcTarget::Nodes(vec![c.node]),
            value: c.value,
        })
        .collect();
    let with = Model::new(
        plain.model.mesh.clone(),
        &specs,
        plain.model.params,
        plain.model.split,
    )
    .unwrap()
    .with_fatigue(FatigueParams::inactive())
    .unwrap();
    let cfg = solver_config(&spec);
    let go = |m: &Model| {
        run_load_program(
            m,
            &LoadProgram::ramp(),
            &cfg,
            IncrementController::new(0.05, false),
            &plain.monitors,
        )
        .unwrap()
    };
    let (a, b) = (go(&plain.model), go(&with));
    let identical = a.log == b.log
        && a.state.u == b.state.u
        && a.state.phi == b.state.phi
        && a.state.history() == b.state.history();
    let f_one = [0.0, 1.0, 1e300]
        .iter()
        .all(|&x| fatigue_degradation(x, &FatigueParams::inactive()) == 1.0);

    // alpha-bar along the desk preset, checked at every increment
    let preset = RunSpec::preset(Case::Fatigue);
    let setup = build_setup(&preset).unwrap();
    let mut alpha_monotone = true;
    let cyc = run_load_program_with(
        &setup.model,
        &LoadProgram::cyclic(preset.fatigue.ratio, 8),
        &solver_config(&preset),
        IncrementController::new(0.25, false),
        &setup.monitors,
        |ev| {
            alpha_monotone &= ev
                .state
                .ip
                .iter()
                .zip(&ev.previous.ip)
                .all(|(n, o)| n.alpha_bar >= o.alpha_bar);
            ControlFlow::Continue(())
        },
    )
    .unwrap();
    RUNS.lock()
        .unwrap()
        .push(("fatigue 8 cycles".into(), cyc.history_monotone));

    let mut cycles = Vec::new();
    let mut a_monotone = true;
    for split in [EnergySplit::Spectral, EnergySplit::Isotropic] {
        let mut s = RunSpec::preset(Case::Fatigue);
        s.split = split;
        let out = run(&format!("fatigue {split:?}"), &s);
        a_monotone &= out.cycles.windows(2).all(|w| w[1].a_mm >= w[0].a_mm);
        cycles.push(out.summary.cycles_to_failure);
    }
    let ratio = match (cycles[0], cycles[1]) {
        (Some(s), Some(i)) => s as f64 / i as f64,
        _ => f64::NAN,
    };
    Verdict::new(
        identical && f_one && alpha_monotone && a_monotone && (1.5..=2.5).contains(&ratio),
        format!(
            "f=1 run identical (log, u, phi, H): {identical}; alpha-bar monotone: {alpha_monotone}; a(N) monotone: {a_monotone}; cycles to failure spectral {:?} / isotropic {:?} = {ratio:.2} (need [1.5, 2.5])",
            cycles[0], cycles[1]
        ),
    )
}

// ---------------------------------------------------------------- 9

fn c9_increments_per_cycle() -> Verdict {
    let checkpoints = [50, 60];
    let mut rows = Vec::new();
    for (scheme, per) in [
        (Scheme::Staggered, 8),
        (Scheme::Staggered, 32),
        (Scheme::Staggered, 64),
        (Scheme::MonolithicBfgs, 4),
    ] {
        let mut spec = RunSpec::preset(Case::Fatigue);
        spec.scheme = scheme;
        spec.fatigue.increments_per_cycle = per;
        spec.fatigue.max_cycles = checkpoints[1];
        let out = run(&format!("fatigue {scheme} {per}/cycle"), &spec);
        let at = |n: usize| {
            let i = out.cycles.iter().position(|c| c.cycle == n);
            i.map_or((f64::NAN, f64::NAN), |i| {
                (out.crack_surface[i], out.cycles[i].a_mm)
            })
        };
        let monotone = out.cycles.windows(2).all(|w| w[1].a_mm >= w[0].a_mm);
        rows.push((format!("{scheme}/{per}"), checkpoints.map(at), monotone));
    }
    let mono = &rows[3];
    let mut pass = mono.2;
    for k in 0..checkpoints.len() {
        let gammas: Vec<f64> = rows.iter().map(|r| r.1[k].0).collect();
        pass &= gammas.windows(2).all(|w| w[0] < w[1]);
        pass &= rows[..3].iter().all(|r| r.1[k].1 <= mono.1[k].1);
    }
    let table: Vec<String> = rows
        .iter()
        .map(|(name, v, _)| format!("{name} Gamma {:.5}/{:.5} a {:.4}", v[0].0, v[1].0, v[1].1))
        .collect();
    Verdict::new(
        pass,
        format!(
            "at N = 50/60: {} (need Gamma increasing towards monolithic, staggered a <= monolithic a, monolithic a(N) monotone: {})",
            table.join("; "),
            mono.2
        ),
    )
}

// ---------------------------------------------------------------- 10

fn c10_dynamics() -> Verdict {
    let v = rayleigh_wave_speed(32_000.0, 0.2, 2450.0);
    let speed_ok = (v - 2125.0).abs() <= 0.01 * 2125.0;
    let mut outs = Vec::new();
    for scheme in [Scheme::MonolithicBfgs, Scheme::Staggered] {
        let mut spec = RunSpec::preset(Case::Dynamic);
        spec.scheme = scheme;
        spec.geometry.coarse_he = 1.0;
        spec.material.length_scale = 1.0;
        outs.push((
            spec.geometry.height,
            run(&format!("dynamic {scheme}"), &spec),
        ));
    }
    let (height, mono) = (outs[0].0, &outs[0].1);
    let stag = &outs[1].1;
    let mid = 0.5 * height;
    let tips = &mono.summary.branch_tips;
    let branched =
        tips.len() >= 2 && tips.iter().any(|t| t[1] > mid) && tips.iter().any(|t| t[1] < mid);
    let energy_ok = outs
        .iter()
        .all(|(_, o)| o.summary.completed && o.summary.energy_balanced == Some(true));
    let ratio = mono.summary.cum_iterations as f64 / stag.summary.cum_iterations as f64;
    Verdict::new(
        speed_ok && branched && energy_ok && ratio <= 0.5,
        format!(
            "v_R = {v:.1} m/s (2125 +- 1%): {speed_ok}; tips {:?}: branched {branched}; energy inequality every step: {energy_ok}; iterations monolithic {} / staggered {} = {ratio:.2} (max 0.5)",
            tips.iter().map(|t| [(t[0] * 10.0).round() / 10.0, (t[1] * 10.0).round() / 10.0]).collect::<Vec<_>>(),
            mono.summary.cum_iterations,
            stag.summary.cum_iterations
        ),
    )
}

// ---------------------------------------------------------------- 11

fn c11_convergence() -> Verdict {
    let tol = Tolerances::default();
    let stats = |r_max, c_max| FieldStats {
        r_max,
        q_tilde: 1.0,
        c_max,
        delta_a_max: 1.0,
    };
    let cases = [
        (stats(0.004, 0.009), true),
        (stats(0.004, 0.011), false),
        (stats(0.006, 0.009), false),
        (stats(0.006, 0.011), false),
    ];
    let ok = cases
        .iter()
        .all(|&(s, expect)| check_field(s, tol).converged() == expect);
    let residual_flags: Vec<bool> = cases
        .iter()
        .map(|(s, _)| check_field(*s, tol).residual_ok)
        .collect();
    Verdict::new(
        ok && residual_flags == [true, true, false, false],
        format!("R = {}, C = {}: (pass,pass) (pass,fail) (fail,pass) (fail,fail) -> converged only for the first", tol.residual, tol.correction),
    )
}

// ---------------------------------------------------------------- 12

fn c12_irreversibility() -> Verdict {
    if RUNS.lock().unwrap().is_empty() {
        for scheme in Scheme::ALL {
            let mut spec = RunSpec::preset(Case::Sent);
            spec.scheme = scheme;
            spec.geometry.coarse_he = 0.1;
            spec.material.length_scale = 0.05;
            spec.refine = 1.0;
            spec.geometry.applied = 8e-3;
            run(&format!("small sent {scheme}"), &spec);
        }
    }
    let runs = RUNS.lock().unwrap();
    let bad: Vec<&String> = runs.iter().filter(|r| !r.1).map(|r| &r.0).collect();
    Verdict::new(
        bad.is_empty(),
        format!(
            "{} instrumented runs, H non-decreasing at every point and increment; violations: {:?}",
            runs.len(),
            bad
        ),
    )
}

fn main() {
    let selected: Option<Vec<usize>> = std::env::var("PHASEFRAC_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |c: usize| selected.as_ref().map_or(true, |s| s.contains(&c));
    let mut sent: Option<(CaseOutcome, Critical)> = None;
    let need_sent = |s: &mut Option<(CaseOutcome, Critical)>| {
        if s.is_none() {
            *s = Some(sent_with_critical());
        }
    };

    let mut results = Vec::new();
    for c in 1..=12 {
        if !wanted(c) {
            continue;
        }
        let t = Instant::now();
        if matches!(c, 4 | 5 | 7) {
            need_sent(&mut sent);
        }
        let verdict = catch_unwind(AssertUnwindSafe(|| match c {
            1 => c1_bfgs(),
            2 => c2_tangents(),
            3 => c3_homogeneous(),
            4 => c4_sent(&sent.as_ref().unwrap().0),
            5 => c5_staggered(&sent.as_ref().unwrap().0),
            6 => c6_shear(),
            7 => c7_newton(&sent.as_ref().unwrap().1),
            8 => c8_fatigue(),
            9 => c9_increments_per_cycle(),
            10 => c10_dynamics(),
            11 => c11_convergence(),
            12 => c12_irreversibility(),
            _ => unreachable!(),
        }))
        .unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        let expected = EXPECTED_FAILURES.contains(&c);
        let tag = match (verdict.pass, expected) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (expected)",
            (true, true) => "PASS (unexpected)",
        };
        println!(
            "criterion {c:>2}: {tag}  [{:.1} s] {}",
            t.elapsed().as_secs_f64(),
            verdict.detail
        );
        results.push((c, verdict.pass, expected));
    }

    let passed = results.iter().filter(|r| r.1).count();
    let unexpected: Vec<usize> = results.iter().filter(|r| r.1 == r.2).map(|r| r.0).collect();
    println!(
        "{passed}/{} criteria pass; expected failures {EXPECTED_FAILURES:?}",
        results.len()
    );
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
