//! Implicit elastodynamics with Backward Euler, energy bookkeeping and
//! wave-speed helpers.

use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use log::warn;

use crate::fem::{
    element_residual_and_tangent, ElementInput, ElementOutputs, EnergySplit, HistoryMode,
    MaterialParams, MAX_IP,
};
use crate::mesh::Mesh;
use crate::solvers::{
    run_load_program_with, IncrementController, LoadProgram, Model, Monitors, RunOutcome,
    SolverConfig,
};
use crate::system::SolutionState;
use crate::vtk::write_vtk;
use crate::{Error, Result};

/// Backward Euler update: `v = (u - u_old) / dt`, `a = (v - v_old) / dt`.
pub fn backward_euler_kinematics(
    u_new: &[f64],
    u_old: &[f64],
    v_old: &[f64],
    dt: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert!(dt > 0.0, "time step must be positive");
    let v: Vec<f64> = u_new.iter().zip(u_old).map(|(a, b)| (a - b) / dt).collect();
    let a = v.iter().zip(v_old).map(|(vn, vo)| (vn - vo) / dt).collect();
    (v, a)
}

/// Shear wave speed in m/s for `E` in MPa and density in kg/m^3.
pub fn shear_wave_speed(young_mpa: f64, poisson: f64, density_kg_m3: f64) -> f64 {
    let mu_pa = young_mpa * 1e6 / (2.0 * (1.0 + poisson));
    (mu_pa / density_kg_m3).sqrt()
}

/// Rayleigh wave speed (m/s), `v_s (0.862 + 1.14 nu) / (1 + nu)`.
pub fn rayleigh_wave_speed(young_mpa: f64, poisson: f64, density_kg_m3: f64) -> f64 {
    shear_wave_speed(young_mpa, poisson, density_kg_m3) * (0.862 + 1.14 * poisson) / (1.0 + poisson)
}

/// kg/m^3 to the tonne/mm^3 used internally.
pub fn density_to_internal(kg_per_m3: f64) -> f64 {
    kg_per_m3 * 1e-12
}

/// Nodal consistent mass `int rho N_a N_b` for every element, applied per
/// displacement component.
#[derive(Debug, Clone)]
pub struct ElementMasses {
    blocks: Vec<Vec<f64>>,
    nodes: usize,
}

impl ElementMasses {
    pub fn new(mesh: &Mesh, params: &MaterialParams) -> Result<Self> {
        let m = mesh.order.nodes();
        let zeros = vec![0.0; 2 * m];
        let h = [0.0; MAX_IP];
        let mut blocks = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let coords = mesh.element_coords(e);
            let input = ElementInput {
                order: mesh.order,
                coords: &coords,
                u: &zeros,
                phi: &zeros[..m],
                history: HistoryMode::Fixed(&h),
                fatigue: None,
                inertia: None,
                thickness: mesh.thickness,
            };
            let outputs = ElementOutputs {
                mass: true,
                ..ElementOutputs::RESIDUAL
            };
            let c = element_residual_and_tangent(&input, params, EnergySplit::Isotropic, outputs)
                .map_err(|err| match err {
                Error::DistortedElement { det_j, .. } => {
                    Error::DistortedElement { element: e, det_j }
                }
                other => other,
            })?;
            blocks.push(
                (0..m)
                    .flat_map(|a| (0..m).map(move |b| (a, b)))
                    .map(|(a, b)| c.mass[a][b])
                    .collect(),
            );
        }
        Ok(Self { blocks, nodes: m })
    }

    /// `0.5 v^T M v` for an interleaved nodal velocity.
    pub fn kinetic_energy(&self, mesh: &Mesh, v: &[f64]) -> f64 {
        let m = self.nodes;
        let mut ke = 0.0;
        for (el, block) in mesh.elements.iter().zip(&self.blocks) {
            for a in 0..m {
                for b in 0..m {
                    let (na, nb) = (el[a], el[b]);
                    ke +=
                        block[a * m + b] * (v[2 * na] * v[2 * nb] + v[2 * na + 1] * v[2 * nb + 1]);
                }
            }
        }
        0.5 * ke
    }

    pub fn total_mass(&self) -> f64 {
        self.blocks.iter().flatten().sum()
    }
}

/// Stored energy `int [(1 - phi)^2 + k] psi_0` of a converged evaluation.
pub fn strain_energy(ip: &[crate::fem::IpResults], params: &MaterialParams) -> f64 {
    ip.iter()
        .map(|r| r.weight * ((1.0 - r.phi).powi(2) + params.k_residual) * r.psi)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub time: f64,
    pub kinetic: f64,
    pub strain: f64,
    /// Cumulative work of the external load.
    pub external_work: f64,
}

impl EnergyRecord {
    /// Kinetic plus strain energy never exceeds the work done on the body.
    pub fn balanced(&self) -> bool {
        self.kinetic + self.strain <= self.external_work * (1.0 + 1e-9) + 1e-14
    }
}

#[derive(Debug, Clone)]
pub struct DynamicSettings {
    pub dt: f64,
    pub t_end: f64,
    /// Write a snapshot every this many increments (0 disables).
    pub snapshot_every: usize,
    pub snapshot_dir: Option<PathBuf>,
}

impl DynamicSettings {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_every: 25,
            snapshot_dir: None,
        }
    }
}

#[derive(Debug)]
pub struct DynamicOutcome {
    pub run: RunOutcome,
    pub energy: Vec<EnergyRecord>,
    pub snapshots: Vec<PathBuf>,
}

impl DynamicOutcome {
    pub fn energy_balanced(&self) -> bool {
        self.energy.iter().all(EnergyRecord::balanced)
    }
}

fn snapshot(dir: &Path, mesh: &Mesh, state: &SolutionState, index: usize) -> Result<PathBuf> {
    let path = dir.join(format!("phi_{index:05}.vtk"));
    write_vtk(&path, mesh, Some(state), &format!("t = {:e} s", state.time))?;
    Ok(path)
}

/// Fixed-step Backward Euler march under a suddenly applied load. A
/// non-converged increment ends the run; no cutback is attempted.
pub fn run_dynamic_program(
    model: &Model,
    settings: &DynamicSettings,
    config: &SolverConfig,
    monitors: &Monitors,
) -> Result<DynamicOutcome> {
    if !(settings.dt > 0.0 && settings.t_end > 0.0) {
        return Err(Error::InvalidConfig(
            "dynamic runs need dt > 0 and t_end > 0".into(),
        ));
    }
    if model.params.density <= 0.0 {
        return Err(Error::InvalidMaterial(
            "dynamic runs need a positive density".into(),
        ));
    }
    if let Some(vr) = wave_speed_mm_per_s(&model.params) {
        let he = model.mesh.min_element_size();
        if settings.dt > 2.0 * he / vr {
            warn!(
                "dt = {:e} s exceeds 2 he / v_r = {:e} s",
                settings.dt,
                2.0 * he / vr
            );
        }
    }
    if let Some(dir) = &settings.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }
    let masses = ElementMasses::new(&model.mesh, &model.params)?;
    let program = LoadProgram::dynamic_step(settings.t_end);
    let controller = IncrementController::fixed(settings.dt);
    let mut energy = Vec::new();
    let mut snapshots = Vec::new();
    let mut work = 0.0;
    let mut failure = None;
    let mut count = 0;
    let run = run_load_program_with(model, &program, config, controller, monitors, |ev| {
        if let Some(f) = &model.reference_force {
            work += ev.lambda
                * f.iter()
                    .zip(ev.state.u.iter().zip(&ev.previous.u))
                    .map(|(fi, (a, b))| fi * (a - b))
                    .sum::<f64>();
        }
        energy.push(EnergyRecord {
            time: ev.state.time,
            kinetic: masses.kinetic_energy(&model.mesh, &ev.state.velocity),
            strain: strain_energy(&ev.eval.ip, &model.params),
            external_work: work,
        });
        count += 1;
        if let Some(dir) = &settings.snapshot_dir {
            if settings.snapshot_every > 0 && count % settings.snapshot_every == 0 {
                match snapshot(dir, &model.mesh, ev.state, count) {
                    Ok(p) => snapshots.push(p),
                    Err(e) => {
                        failure = Some(e);
                        return ControlFlow::Break(());
                    }
                }
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(dir) = &settings.snapshot_dir {
        if count == 0 || settings.snapshot_every == 0 || count % settings.snapshot_every != 0 {
            snapshots.push(snapshot(dir, &model.mesh, &run.state, count)?);
        }
    }
    Ok(DynamicOutcome {
        run,
        energy,
        snapshots,
    })
}

fn wave_speed_mm_per_s(params: &MaterialParams) -> Option<f64> {
    let mu = params.mu();
    (params.density > 0.0).then(|| {
        (mu / params.density).sqrt() * (0.862 + 1.14 * params.poisson) / (1.0 + params.poisson)
    })
}
