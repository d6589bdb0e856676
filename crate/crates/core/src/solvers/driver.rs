//! Marches a load program increment by increment.

use std::ops::ControlFlow;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::adaptive::{IncrementController, StepDecision};
use super::config::SolverConfig;
use super::increment::{solve_increment, FluxScales};
use super::model::{LoadStep, Model};
use super::runlog::{IncrementRecord, RunLog};
use crate::fatigue::{crack_length, Ligament};
use crate::system::{reaction, Evaluation, SolutionState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Waveform {
    /// `lambda = t / t_end`.
    Ramp,
    /// Triangular cycles of unit period: 0 up to 1 at `t = 0.25`, then
    /// between 1 and `ratio`, with extrema at quarter-period multiples.
    Triangle { ratio: f64 },
    /// `lambda = 1` from the first increment on.
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadProgram {
    pub waveform: Waveform,
    pub t_end: f64,
    /// Include inertia (Backward Euler).
    pub dynamic: bool,
}

impl LoadProgram {
    pub fn ramp() -> Self {
        Self {
            waveform: Waveform::Ramp,
            t_end: 1.0,
            dynamic: false,
        }
    }

    pub fn cyclic(ratio: f64, cycles: usize) -> Self {
        Self {
            waveform: Waveform::Triangle { ratio },
            t_end: cycles as f64,
            dynamic: false,
        }
    }

    pub fn dynamic_step(t_end: f64) -> Self {
        Self {
            waveform: Waveform::Step,
            t_end,
            dynamic: true,
        }
    }

    pub fn load_factor(&self, t: f64) -> f64 {
        match self.waveform {
            Waveform::Ramp => t / self.t_end,
            Waveform::Step => 1.0,
            Waveform::Triangle { ratio } => {
                if t <= 0.25 {
                    return 4.0 * t;
                }
                let q = (t - 0.25).rem_euclid(1.0);
                if q < 0.5 {
                    1.0 + (ratio - 1.0) * q / 0.5
                } else {
                    ratio + (1.0 - ratio) * (q - 0.5) / 0.5
                }
            }
        }
    }

    /// Smallest breakpoint strictly after `t` (up to `tol`).
    pub fn next_breakpoint(&self, t: f64, tol: f64) -> f64 {
        match self.waveform {
            Waveform::Triangle { .. } => {
                let k = ((t + tol) / 0.25).floor() + 1.0;
                (k * 0.25).min(self.t_end)
            }
            _ => self.t_end,
        }
    }
}

/// What to measure after each increment.
#[derive(Debug, Clone, Default)]
pub struct Monitors {
    /// Nodes and component whose summed internal force is the reaction.
    pub reaction: Option<(Vec<usize>, usize)>,
    /// Applied displacement at unit load factor (mm).
    pub applied: f64,
    pub ligament: Option<Ligament>,
    pub crack_threshold: f64,
}

impl Monitors {
    pub fn new() -> Self {
        Self {
            crack_threshold: 0.95,
            ..Self::default()
        }
    }
}

/// Accepted increment, handed to observers.
pub struct IncrementEvent<'a> {
    pub record: &'a IncrementRecord,
    pub previous: &'a SolutionState,
    pub state: &'a SolutionState,
    pub eval: &'a Evaluation,
    pub lambda: f64,
    pub step: LoadStep,
    /// Flux scales the increment was solved with.
    pub scales: FluxScales,
    pub wall_seconds: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub log: RunLog,
    pub state: SolutionState,
    pub controller: IncrementController,
    /// Elapsed wall time at each accepted increment.
    pub wall_seconds: Vec<f64>,
    /// Increment numbers that were restarted by the adaptive reduction.
    pub adaptive_restarts: Vec<usize>,
    /// Every committed history value was at least its predecessor.
    pub history_monotone: bool,
    pub aborted: Option<Error>,
    pub stopped_early: bool,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.aborted.is_none()
    }
}

pub fn run_load_program(
    model: &Model,
    program: &LoadProgram,
    config: &SolverConfig,
    controller: IncrementController,
    monitors: &Monitors,
) -> Result<RunOutcome> {
    run_load_program_with(model, program, config, controller, monitors, |_| {
        ControlFlow::Continue(())
    })
}

/// Runs the program, calling `observer` after every accepted increment; the
/// observer may stop the run early.
pub fn run_load_program_with(
    model: &Model,
    program: &LoadProgram,
    config: &SolverConfig,
    mut controller: IncrementController,
    monitors: &Monitors,
    mut observer: impl FnMut(&IncrementEvent<'_>) -> ControlFlow<()>,
) -> Result<RunOutcome> {
    config.validate()?;
    let clock = Instant::now();
    let mut state = model.initial_state();
    let mut scales = FluxScales::default();
    let mut log = RunLog::default();
    let mut wall = Vec::new();
    let mut restarts = Vec::new();
    let mut monotone = true;
    let mut cum = 0;
    let mut ip_phi_prev = model.ip_phase(&state.phi);
    let mut aborted = None;
    let mut stopped = false;
    let t_scale = controller.dt_reference;

    while state.time < program.t_end - 1e-9 * t_scale {
        let t = state.time;
        let bp = program.next_breakpoint(t, 1e-9 * t_scale);
        let mut t_new = t + controller.dt;
        if t_new > bp - 1e-6 * controller.dt {
            t_new = bp;
        }
        let step = LoadStep {
            lambda: program.load_factor(t_new),
            time: t_new,
            dt: t_new - t,
            dynamic: program.dynamic,
        };
        let res = solve_increment(model, &state, &step, config, &scales)?;
        cum += res.iterations;
        if !res.converged {
            let reason = res.failure.unwrap_or_default();
            warn!("increment at t = {t_new:.6e} did not converge: {reason}");
            if controller.cut_back() {
                continue;
            }
            aborted = Some(Error::Aborted {
                time: t_new,
                cutbacks: controller.consecutive_cutbacks(),
                reason,
            });
            break;
        }
        let ip_phi = model.ip_phase(&res.state.phi);
        if let StepDecision::Restart { dt } = controller.adaptive_step_check(&ip_phi_prev, &ip_phi)
        {
            info!("sudden damage at t = {t_new:.6e}; restarting with dt = {dt:.3e}");
            restarts.push(log.len() + 1);
            continue;
        }
        monotone &= res
            .state
            .ip
            .iter()
            .zip(&state.ip)
            .all(|(n, o)| n.history >= o.history);
        let used_scales = scales;
        scales.commit(res.mean_flux);
        controller.accepted(res.iterations);
        let eval = res.eval.expect("converged increments carry an evaluation");
        let record = IncrementRecord {
            increment: log.len() + 1,
            time: t_new,
            dt: step.dt,
            iterations: res.iterations,
            cum_iterations: cum,
            u_applied_mm: monitors.applied * step.lambda,
            reaction_n: monitors
                .reaction
                .as_ref()
                .map_or(0.0, |(nodes, c)| reaction(&eval.r_u, nodes, *c)),
            crack_length_mm: monitors.ligament.as_ref().map_or(0.0, |l| {
                crack_length(&res.state.phi, &model.mesh, monitors.crack_threshold, l)
            }),
        };
        let elapsed = clock.elapsed().as_secs_f64();
        let flow = observer(&IncrementEvent {
            record: &record,
            previous: &state,
            state: &res.state,
            eval: &eval,
            lambda: step.lambda,
            step,
            scales: used_scales,
            wall_seconds: elapsed,
        });
        log.records.push(record);
        wall.push(elapsed);
        state = res.state;
        ip_phi_prev = ip_phi;
        if flow.is_break() {
            stopped = true;
            break;
        }
    }
    Ok(RunOutcome {
        log,
        state,
        controller,
        wall_seconds: wall,
        adaptive_restarts: restarts,
        history_monotone: monotone,
        aborted,
        stopped_early: stopped,
    })
}
