//! Cycle-by-cycle fatigue: cumulative history variable, asymptotic
//! degradation of the fracture toughness, and crack-length extraction.

use std::io::Write;
use std::ops::ControlFlow;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fem::{gauss_points, kinematics};
use crate::mesh::{resolve_boundary_set, Mesh, Region};
use crate::solvers::{
    run_load_program_with, IncrementController, LoadProgram, Model, Monitors, RunOutcome,
    SolverConfig,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FatigueParams {
    /// Threshold `alpha_T` (MPa) below which toughness is not degraded.
    pub alpha_t: f64,
    /// Exponent of the asymptotic branch, 1 or 2.
    #[serde(default = "default_exponent")]
    pub exponent: u32,
}

fn default_exponent() -> u32 {
    1
}

impl FatigueParams {
    pub fn new(alpha_t: f64, exponent: u32) -> Result<Self> {
        let p = Self { alpha_t, exponent };
        p.validate()?;
        Ok(p)
    }

    /// `alpha_T = inf`: fatigue never degrades the toughness.
    pub fn inactive() -> Self {
        Self {
            alpha_t: f64::INFINITY,
            exponent: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.alpha_t > 0.0) {
            errors.push(format!("alpha_t must be positive, got {}", self.alpha_t));
        }
        if !matches!(self.exponent, 1 | 2) {
            errors.push(format!("exponent must be 1 or 2, got {}", self.exponent));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(errors))
        }
    }
}

/// `alpha_bar + max(alpha_new - alpha_prev, 0)`: only loading accumulates.
pub fn accumulate_fatigue(alpha_new: f64, alpha_prev: f64, alpha_bar_prev: f64) -> f64 {
    alpha_bar_prev + (alpha_new - alpha_prev).max(0.0)
}

/// `f = 1` up to the threshold, then `(2 alpha_T / (alpha_bar + alpha_T))^p`.
pub fn fatigue_degradation(alpha_bar: f64, params: &FatigueParams) -> f64 {
    if alpha_bar <= params.alpha_t {
        1.0
    } else {
        (2.0 * params.alpha_t / (alpha_bar + params.alpha_t)).powi(params.exponent as i32)
    }
}

/// Nodes on the expected crack path, measured from the notch tip.
#[derive(Debug, Clone, PartialEq)]
pub struct Ligament {
    pub tip: [f64; 2],
    pub nodes: Vec<usize>,
    pub length: f64,
}

impl Ligament {
    /// All nodes on the segment from `tip` to `end`.
    pub fn along(mesh: &Mesh, tip: [f64; 2], end: [f64; 2]) -> Result<Self> {
        let region = Region::NearSegment {
            start: tip,
            end,
            distance: 0.0,
        };
        let nodes = resolve_boundary_set(mesh, &region)?;
        Ok(Self {
            tip,
            nodes,
            length: (end[0] - tip[0]).hypot(end[1] - tip[1]),
        })
    }

    /// Every node of `region`, for cracks whose path is not known in
    /// advance. `length` is the distance to the farthest node.
    pub fn within(mesh: &Mesh, tip: [f64; 2], region: &Region) -> Result<Self> {
        let nodes = resolve_boundary_set(mesh, region)?;
        let length = nodes
            .iter()
            .map(|&n| distance(tip, mesh.nodes[n]))
            .fold(0.0, f64::max);
        Ok(Self { tip, nodes, length })
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from the tip to the farthest ligament node with
/// `phi >= threshold`; zero when no node qualifies.
pub fn crack_length(phi: &[f64], mesh: &Mesh, threshold: f64, ligament: &Ligament) -> f64 {
    ligament
        .nodes
        .iter()
        .filter(|&&n| phi[n] >= threshold)
        .map(|&n| distance(ligament.tip, mesh.nodes[n]))
        .fold(0.0, f64::max)
}

/// Regularised crack length `int (phi^2 / 2l + l/2 |grad phi|^2) dA`, which
/// is close to `a` for a fully developed straight crack of length `a`.
/// Unlike [`crack_length`] it changes continuously with the field.
pub fn crack_surface(mesh: &Mesh, phi: &[f64], length_scale: f64) -> Result<f64> {
    let gps = gauss_points(mesh.order);
    let mut total = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        let coords = mesh.element_coords(e);
        let phi_e: Vec<f64> = el.iter().map(|&n| phi[n]).collect();
        for gp in gps {
            let k =
                kinematics(mesh.order, &coords, gp.xi, gp.eta, &[]).map_err(|err| match err {
                    Error::DistortedElement { det_j, .. } => {
                        Error::DistortedElement { element: e, det_j }
                    }
                    other => other,
                })?;
            let p = k.interpolate(&phi_e);
            let g = k.gradient(&phi_e);
            let density =
                p * p / (2.0 * length_scale) + 0.5 * length_scale * (g[0] * g[0] + g[1] * g[1]);
            total += gp.weight * k.det_j * density;
        }
    }
    Ok(total)
}

/// Crack length at the peak of one load cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclePoint {
    pub cycle: usize,
    pub a_mm: f64,
    pub cum_iterations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicSettings {
    /// Load ratio `R` of the triangular waveform.
    pub ratio: f64,
    pub max_cycles: usize,
    /// Must be a multiple of 4 so that extrema fall on increment ends.
    pub increments_per_cycle: usize,
}

#[derive(Debug)]
pub struct CyclicOutcome {
    pub run: RunOutcome,
    pub points: Vec<CyclePoint>,
    /// [`crack_surface`] at each entry of `points`.
    pub surface: Vec<f64>,
    /// Cycle in which the crack reached the end of the ligament.
    pub cycles_to_failure: Option<usize>,
}

/// Marches a triangular load history cycle by cycle, logging the crack
/// length at every peak, until the ligament is cut or `max_cycles` is
/// reached. The model must carry [`FatigueParams`] for toughness to degrade.
pub fn run_cyclic_program(
    model: &Model,
    settings: &CyclicSettings,
    config: &SolverConfig,
    monitors: &Monitors,
) -> Result<CyclicOutcome> {
    let n = settings.increments_per_cycle;
    if n == 0 || n % 4 != 0 {
        return Err(Error::InvalidConfig(format!(
            "increments per cycle must be a positive multiple of 4, got {n}"
        )));
    }
    if settings.max_cycles == 0 || !settings.ratio.is_finite() || settings.ratio > 1.0 {
        return Err(Error::InvalidConfig(
            "cyclic runs need max_cycles > 0 and a finite ratio <= 1".into(),
        ));
    }
    let ligament = monitors.ligament.clone().ok_or_else(|| {
        Error::InvalidConfig("cyclic runs need a ligament to measure the crack".into())
    })?;
    let program = LoadProgram::cyclic(settings.ratio, settings.max_cycles);
    let controller = IncrementController::new(1.0 / n as f64, false);
    let mut points = Vec::new();
    let mut surface = Vec::new();
    let mut failed_at = None;
    let mut error = None;
    let tol = 1e-9 / n as f64;
    let run = run_load_program_with(model, &program, config, controller, monitors, |ev| {
        let a = ev.record.crack_length_mm;
        let t = ev.record.time;
        let phase = (t - 0.25).rem_euclid(1.0);
        let at_peak = t > 0.25 - tol && (phase < tol || phase > 1.0 - tol);
        if at_peak || a >= ligament.length * (1.0 - 1e-9) {
            let cycle = (t - 0.25 + tol).floor() as usize + 1;
            let gamma = match crack_surface(&model.mesh, &ev.state.phi, model.params.length_scale) {
                Ok(g) => g,
                Err(e) => {
                    error = Some(e);
                    return ControlFlow::Break(());
                }
            };
            if points
                .last()
                .map_or(true, |p: &CyclePoint| p.cycle != cycle)
            {
                points.push(CyclePoint {
                    cycle,
                    a_mm: a,
                    cum_iterations: ev.record.cum_iterations,
                    wall_seconds: ev.wall_seconds,
                });
                surface.push(gamma);
            } else if let Some(p) = points.last_mut() {
                p.a_mm = p.a_mm.max(a);
                p.cum_iterations = ev.record.cum_iterations;
                p.wall_seconds = ev.wall_seconds;
                if let Some(g) = surface.last_mut() {
                    *g = gamma;
                }
            }
            if a >= ligament.length * (1.0 - 1e-9) {
                failed_at = Some(cycle);
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = error {
        return Err(e);
    }
    Ok(CyclicOutcome {
        run,
        points,
        surface,
        cycles_to_failure: failed_at,
    })
}

pub fn write_crack_growth_csv(points: &[CyclePoint], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_crack_growth_csv(input: impl std::io::Read) -> Result<Vec<CyclePoint>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

pub fn save_crack_growth(points: &[CyclePoint], path: &Path) -> Result<()> {
    write_crack_growth_csv(points, std::fs::File::create(path)?)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Format {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_quad_mesh, GridSpec};

    #[test]
    fn accumulation_sums_positive_increments() {
        let mut bar = 0.0;
        let mut prev = 0.0;
        for a in [0.0, 10.0, 5.0, 12.0] {
            bar = accumulate_fatigue(a, prev, bar);
            prev = a;
        }
        assert_eq!(bar, 17.0);
        assert_eq!(accumulate_fatigue(0.0, 10.0, 4.0), 4.0);
        assert_eq!(accumulate_fatigue(3.0, 3.0, 4.0), 4.0);
    }

    #[test]
    fn degradation_branches() {
        let p = FatigueParams::new(56.25, 1).unwrap();
        assert_eq!(fatigue_degradation(0.5 * p.alpha_t, &p), 1.0);
        assert_eq!(fatigue_degradation(p.alpha_t, &p), 1.0);
        assert!((fatigue_degradation(3.0 * p.alpha_t, &p) - 0.5).abs() < 1e-15);
        assert!(fatigue_degradation(1e300, &p) < 1e-290);
        assert_eq!(fatigue_degradation(1e300, &FatigueParams::inactive()), 1.0);
        assert!(FatigueParams::new(1.0, 3).is_err());
        assert!(FatigueParams::new(0.0, 1).is_err());
    }

    #[test]
    fn crack_length_extremes() {
        let mesh = generate_structured_quad_mesh(&GridSpec::new(1.0, 1.0, 0.25)).unwrap();
        let lig = Ligament::along(&mesh, [0.5, 0.5], [1.0, 0.5]).unwrap();
        assert_eq!(lig.nodes.len(), 3);
        let mut phi = vec![0.0; mesh.n_nodes()];
        assert_eq!(crack_length(&phi, &mesh, 0.95, &lig), 0.0);
        for &n in &lig.nodes {
            phi[n] = 1.0;
        }
        assert!((crack_length(&phi, &mesh, 0.95, &lig) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn crack_growth_csv_round_trips() {
        let pts = vec![
            CyclePoint {
                cycle: 1,
                a_mm: 0.0,
                cum_iterations: 8,
                wall_seconds: 0.25,
            },
            CyclePoint {
                cycle: 2,
                a_mm: 0.0125,
                cum_iterations: 17,
                wall_seconds: 0.5,
            },
        ];
        let mut buf = Vec::new();
        write_crack_growth_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cycle,a_mm,cum_iterations,wall_seconds\n"));
        assert_eq!(read_crack_growth_csv(&buf[..]).unwrap(), pts);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "cycle,a_mm,cum_iterations,wall_seconds\n1,0,3,0.1\n2,x,4,0.2\n";
        match read_crack_growth_csv(text.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn crack_surface_of_a_band() {
        // phi = exp(-|y - 0.5| / l) across a 1 x 1 plate is a crack of length 1
        let l = 0.05;
        let mesh = generate_structured_quad_mesh(&GridSpec::new(1.0, 1.0, 0.005)).unwrap();
        let phi: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|p| (-(p[1] - 0.5).abs() / l).exp())
            .collect();
        let g = crack_surface(&mesh, &phi, l).unwrap();
        assert!((g - 1.0).abs() < 0.01, "gamma = {g}");
        assert_eq!(
            crack_surface(&mesh, &vec![0.0; mesh.n_nodes()], l).unwrap(),
            0.0
        );
    }
}
