//! Nonlinear solution of a single increment.

use log::debug;

use super::bfgs::BfgsUpdates;
use super::config::{Scheme, SolverConfig};
use super::convergence::{
    check_convergence, check_field, ConvergenceVerdict, FieldStats, FluxAverager, Tolerances,
};
use super::model::{LoadStep, Model, Residual};
use crate::system::{BlockFactor, Evaluation, HistorySource, SolutionState};
use crate::Result;

/// Flux scales of both fields, carried across increments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FluxScales {
    pub u: FluxAverager,
    pub phi: FluxAverager,
}

impl FluxScales {
    pub fn commit(&mut self, flux: [f64; 2]) {
        self.u.commit(flux[0]);
        self.phi.commit(flux[1]);
    }
}

#[derive(Debug, Clone)]
pub struct IncrementResult {
    pub converged: bool,
    /// Number of linear solves.
    pub iterations: usize,
    /// Converged state with committed history; the start state otherwise.
    pub state: SolutionState,
    /// Evaluation at the final iterate.
    pub eval: Option<Evaluation>,
    /// Mean absolute flux of `u` and `phi` at the final iterate.
    pub mean_flux: [f64; 2],
    pub verdict: Option<ConvergenceVerdict>,
    pub failure: Option<String>,
}

impl IncrementResult {
    fn failed(start: &SolutionState, iterations: usize, reason: String) -> Self {
        debug!("increment failed after {iterations} iterations: {reason}");
        Self {
            converged: false,
            iterations,
            state: start.clone(),
            eval: None,
            mean_flux: [0.0; 2],
            verdict: None,
            failure: Some(reason),
        }
    }
}

fn tolerances(cfg: &SolverConfig) -> Tolerances {
    Tolerances {
        residual: cfg.residual_tol,
        correction: cfg.correction_tol,
        linear: cfg.linear_tol,
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Iterate {
    u: Vec<f64>,
    phi: Vec<f64>,
    res: Residual,
}

fn field_stats(
    model: &Model,
    it: &Iterate,
    start_u: &[f64],
    start_phi: &[f64],
    correction: &[f64],
    scales: &FluxScales,
) -> (FieldStats, FieldStats) {
    let n_u = model.dofs.n_u();
    let stats_u = FieldStats {
        r_max: max_abs(&it.res.r[..n_u]),
        q_tilde: scales.u.q_tilde(it.res.mean_flux_u),
        c_max: max_abs(&correction[..n_u]),
        delta_a_max: max_diff(&it.u, start_u),
    };
    let stats_phi = FieldStats {
        r_max: max_abs(&it.res.r[n_u..]),
        q_tilde: scales.phi.q_tilde(it.res.mean_flux_phi),
        c_max: max_abs(&correction[n_u..]),
        delta_a_max: max_diff(&it.phi, start_phi),
    };
    (stats_u, stats_phi)
}

fn scaled_norm(model: &Model, res: &Residual, q: [f64; 2]) -> f64 {
    let n_u = model.dofs.n_u();
    let qu = if q[0] > 0.0 { q[0] } else { 1.0 };
    let qp = if q[1] > 0.0 { q[1] } else { 1.0 };
    ((norm(&res.r[..n_u]) / qu).powi(2) + (norm(&res.r[n_u..]) / qp).powi(2)).sqrt()
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn factor_blocks(model: &Model, eval: &Evaluation, u: bool, phi: bool) -> Result<BlockFactor> {
    let a = &model.assembler;
    BlockFactor::new(
        if u {
            eval.kuu.as_ref().map(|k| (a.u_symbolic(), k))
        } else {
            None
        },
        if phi {
            eval.kpp.as_ref().map(|k| (a.phi_symbolic(), k))
        } else {
            None
        },
    )
}

/// Solves one increment with the configured scheme.
pub fn solve_increment(
    model: &Model,
    start: &SolutionState,
    step: &LoadStep,
    config: &SolverConfig,
    scales: &FluxScales,
) -> Result<IncrementResult> {
    match config.scheme {
        Scheme::Staggered => solve_increment_staggered(model, start, step, config, scales),
        _ => solve_increment_monolithic(model, start, step, config, scales),
    }
}

/// Monolithic solve of both fields with the block-diagonal tangent, either
/// reassembled every iteration (Newton) or updated by BFGS.
pub fn solve_increment_monolithic(
    model: &Model,
    start: &SolutionState,
    step: &LoadStep,
    config: &SolverConfig,
    scales: &FluxScales,
) -> Result<IncrementResult> {
    let tol = tolerances(config);
    let mut u = start.u.clone();
    let mut phi = start.phi.clone();
    model.dofs.apply_prescribed(&mut u, &mut phi, step.lambda);
    let (start_u, start_phi) = (u.clone(), phi.clone());
    // The prescribed increment enters the first iteration as a linearised
    // constraint, so the history still comes from the converged strains.
    let res = model.residual_with(start, &u, &phi, step, HistorySource::Committed, true, true)?;
    let mut cur = Iterate { u, phi, res };
    let mut factor = match factor_blocks(model, &cur.res.eval, true, true) {
        Ok(f) => f,
        Err(e) => return Ok(IncrementResult::failed(start, 0, e.to_string())),
    };
    let mut bfgs = BfgsUpdates::new();
    let bfgs_mode = config.scheme == Scheme::MonolithicBfgs;
    let etas: &[f64] = if config.line_search {
        &[1.0, 0.5, 0.25, 0.125]
    } else {
        &[1.0]
    };

    for iteration in 1..=config.max_iterations {
        let neg_r: Vec<f64> = cur.res.r.iter().map(|x| -x).collect();
        let d = if bfgs.is_empty() {
            factor.solve(&neg_r)
        } else {
            bfgs.apply_inverse(|q| factor.solve(q), &neg_r)
        };
        if !finite(&d) {
            return Ok(IncrementResult::failed(
                start,
                iteration,
                "non-finite correction".into(),
            ));
        }
        let q = [
            scales.u.q_tilde(cur.res.mean_flux_u),
            scales.phi.q_tilde(cur.res.mean_flux_phi),
        ];
        let norm0 = scaled_norm(model, &cur.res, q);
        let mut chosen: Option<(f64, Iterate)> = None;
        let mut full: Option<Iterate> = None;
        for &eta in etas {
            let mut u = cur.u.clone();
            let mut phi = cur.phi.clone();
            model.dofs.scatter_add(&d, eta, &mut u, &mut phi);
            let res = model.residual(start, &u, &phi, step, false, false)?;
            let n = scaled_norm(model, &res, q);
            let trial = Iterate { u, phi, res };
            if n.is_finite() && n < norm0 {
                chosen = Some((eta, trial));
                break;
            }
            if full.is_none() && n.is_finite() {
                full = Some(trial);
            }
        }
        // no trial reduced the residual: keep the full quasi-Newton step
        let best = chosen.or_else(|| full.map(|t| (1.0, t)));
        let Some((eta, next)) = best else {
            return Ok(IncrementResult::failed(
                start,
                iteration,
                "non-finite residual".into(),
            ));
        };
        let s: Vec<f64> = d.iter().map(|x| eta * x).collect();
        let y: Vec<f64> = next
            .res
            .r
            .iter()
            .zip(&cur.res.r)
            .map(|(a, b)| a - b)
            .collect();
        cur = next;

        let (su, sp) = field_stats(model, &cur, &start_u, &start_phi, &s, scales);
        let verdict = check_convergence(su, sp, tol);
        debug!(
            "it {iteration} eta {eta}: r_u {:.3e}/{:.3e} c_u {:.3e}/{:.3e} r_phi {:.3e}/{:.3e} c_phi {:.3e}/{:.3e}",
            su.r_max, su.q_tilde, su.c_max, su.delta_a_max, sp.r_max, sp.q_tilde, sp.c_max, sp.delta_a_max
        );
        if verdict.converged() {
            let mean_flux = [cur.res.mean_flux_u, cur.res.mean_flux_phi];
            let state = model.commit(start, cur.u, cur.phi, &cur.res.eval, step);
            return Ok(IncrementResult {
                converged: true,
                iterations: iteration,
                state,
                eval: Some(cur.res.eval),
                mean_flux,
                verdict: Some(verdict),
                failure: None,
            });
        }
        if iteration == config.max_iterations {
            break;
        }

        let reform = !bfgs_mode || bfgs.len() >= config.bfgs_max_updates;
        if reform {
            bfgs.clear();
            let res = model.residual(start, &cur.u, &cur.phi, step, true, true)?;
            factor = match factor_blocks(model, &res.eval, true, true) {
                Ok(f) => f,
                Err(e) => return Ok(IncrementResult::failed(start, iteration, e.to_string())),
            };
            cur.res = res;
        } else {
            bfgs.push(s, y);
        }
    }
    Ok(IncrementResult::failed(
        start,
        config.max_iterations,
        format!("no convergence in {} iterations", config.max_iterations),
    ))
}

/// One pass of alternating minimisation: `u` with `phi` frozen, then `phi`
/// with the history updated from the new displacement.
pub fn solve_increment_staggered(
    model: &Model,
    start: &SolutionState,
    step: &LoadStep,
    config: &SolverConfig,
    scales: &FluxScales,
) -> Result<IncrementResult> {
    let tol = tolerances(config);
    let n_u = model.dofs.n_u();
    let mut u = start.u.clone();
    let mut phi = start.phi.clone();
    model.dofs.apply_prescribed(&mut u, &mut phi, step.lambda);
    let (start_u, start_phi) = (u.clone(), phi.clone());
    let mut iterations = 0;

    // displacement sub-problem; its tangent is exact, so it is factored once
    let res = model.residual(start, &u, &phi, step, true, false)?;
    let factor = match factor_blocks(model, &res.eval, true, false) {
        Ok(f) => f,
        Err(e) => return Ok(IncrementResult::failed(start, 0, e.to_string())),
    };
    let mut cur = Iterate { u, phi, res };
    let mut u_done = false;
    let mut mean_flux_u = 0.0;
    while iterations < config.max_iterations {
        let neg_r: Vec<f64> = cur.res.r[..n_u].iter().map(|x| -x).collect();
        let mut d = factor.solve_u(&neg_r);
        iterations += 1;
        if !finite(&d) {
            return Ok(IncrementResult::failed(
                start,
                iterations,
                "non-finite correction".into(),
            ));
        }
        d.resize(model.dofs.n_unknowns(), 0.0);
        model.dofs.scatter_add(&d, 1.0, &mut cur.u, &mut cur.phi);
        cur.res = model.residual(start, &cur.u, &cur.phi, step, false, false)?;
        let (su, _) = field_stats(model, &cur, &start_u, &start_phi, &d, scales);
        if check_field(su, tol).converged() {
            u_done = true;
            mean_flux_u = cur.res.mean_flux_u;
            break;
        }
    }
    if !u_done {
        return Ok(IncrementResult::failed(
            start,
            iterations,
            "displacement sub-problem did not converge".into(),
        ));
    }

    // phase sub-problem at the new displacement; the trial history is now fixed
    cur.res = model.residual(start, &cur.u, &cur.phi, step, false, true)?;
    let factor = match factor_blocks(model, &cur.res.eval, false, true) {
        Ok(f) => f,
        Err(e) => return Ok(IncrementResult::failed(start, iterations, e.to_string())),
    };
    let mut verdict = None;
    while iterations < config.max_iterations {
        let neg_r: Vec<f64> = cur.res.r[n_u..].iter().map(|x| -x).collect();
        let dp = factor.solve_phi(&neg_r);
        iterations += 1;
        if !finite(&dp) {
            return Ok(IncrementResult::failed(
                start,
                iterations,
                "non-finite correction".into(),
            ));
        }
        let mut d = vec![0.0; n_u];
        d.extend(dp);
        model.dofs.scatter_add(&d, 1.0, &mut cur.u, &mut cur.phi);
        cur.res = model.residual(start, &cur.u, &cur.phi, step, false, false)?;
        let (su, sp) = field_stats(model, &cur, &start_u, &start_phi, &d, scales);
        let v = check_field(sp, tol);
        if v.converged() {
            verdict = Some(ConvergenceVerdict {
                u: check_field(FieldStats { c_max: 0.0, ..su }, tol),
                phi: v,
            });
            break;
        }
    }
    let Some(verdict) = verdict else {
        return Ok(IncrementResult::failed(
            start,
            iterations,
            "phase sub-problem did not converge".into(),
        ));
    };
    let mean_flux = [mean_flux_u, cur.res.mean_flux_phi];
    let state = model.commit(start, cur.u, cur.phi, &cur.res.eval, step);
    Ok(IncrementResult {
        converged: true,
        iterations,
        state,
        eval: Some(cur.res.eval),
        mean_flux,
        verdict: Some(verdict),
        failure: None,
    })
}
