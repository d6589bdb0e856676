use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::spec::{Case, RunSpec};
use crate::dynamics::{
    density_to_internal, rayleigh_wave_speed, run_dynamic_program, DynamicSettings, EnergyRecord,
};
use crate::fatigue::{
    run_cyclic_program, save_crack_growth, CyclePoint, CyclicSettings, FatigueParams, Ligament,
};
use crate::fem::{EnergySplit, MaterialParams};
use crate::mesh::{
    generate_structured_quad_mesh, read_mesh, DirichletSpec, Field, GridSpec, Mesh, NotchSpec,
    Prescribed, RefinementBand, Region,
};
use crate::solvers::{
    run_load_program, IncrementController, LoadProgram, Model, Monitors, RunOutcome, Scheme,
    SolverConfig,
};
use crate::vtk::write_vtk;
use crate::{Error, Result};

/// Threshold on `phi` that counts a node as cracked.
pub const CRACK_THRESHOLD: f64 = 0.95;

/// Enough of a mesh to tell whether two runs were computed on the same one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSignature {
    pub nodes: usize,
    pub elements: usize,
    pub unknowns: usize,
    pub min_element_size: f64,
    /// FNV-1a over coordinates and connectivity, as hex.
    pub fingerprint: String,
}

impl MeshSignature {
    pub fn of(model: &Model) -> Self {
        let mesh = &model.mesh;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for p in &mesh.nodes {
            feed(&p[0].to_le_bytes());
            feed(&p[1].to_le_bytes());
        }
        for el in &mesh.elements {
            for n in el {
                feed(&(*n as u64).to_le_bytes());
            }
        }
        Self {
            nodes: mesh.n_nodes(),
            elements: mesh.n_elements(),
            unknowns: model.dofs.n_unknowns(),
            min_element_size: mesh.min_element_size(),
            fingerprint: format!("{h:016x}"),
        }
    }
}

/// Headline numbers of one run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub case: Case,
    pub scheme: Scheme,
    pub split: EnergySplit,
    pub mesh: MeshSignature,
    pub increments: usize,
    pub cum_iterations: usize,
    pub wall_seconds: f64,
    pub peak_reaction_n: f64,
    pub critical_displacement_mm: Option<f64>,
    pub final_crack_length_mm: f64,
    pub adaptive_restarts: Vec<usize>,
    pub cutbacks: usize,
    pub history_monotone: bool,
    pub completed: bool,
    pub abort_reason: Option<String>,
    pub cycles_to_failure: Option<usize>,
    pub energy_balanced: Option<bool>,
    /// Mean slope of the cracked-node centroid path ahead of the notch tip.
    pub crack_slope: Option<f64>,
    /// Farthest cracked points above and below the notch line.
    pub branch_tips: Vec<[f64; 2]>,
}

impl RunSummary {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            line: 0,
            message: e.to_string(),
        })?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })
    }
}

/// A model ready to run, with what to measure on it.
pub struct Setup {
    pub model: Model,
    pub monitors: Monitors,
    pub notch_tip: [f64; 2],
}

/// Everything a finished case produced.
#[derive(Debug)]
pub struct CaseOutcome {
    pub summary: RunSummary,
    pub run: RunOutcome,
    pub cycles: Vec<CyclePoint>,
    pub crack_surface: Vec<f64>,
    pub energy: Vec<EnergyRecord>,
    /// Files written by [`run_case`]; empty for [`execute`].
    pub files: Vec<PathBuf>,
}

fn notched_grid(spec: &RunSpec) -> GridSpec {
    let g = &spec.geometry;
    let y = 0.5 * g.height;
    let he = spec.fine_he();
    let grid = match g.band {
        Some([x_min, x_max, y_min, y_max]) => {
            GridSpec::new(g.width, g.height, g.coarse_he).band(RefinementBand {
                x_min,
                x_max,
                y_min,
                y_max,
                he,
            })
        }
        None => GridSpec::new(g.width, g.height, he),
    };
    grid.notch(NotchSpec::duplicated([0.0, y], [g.notch_length, y]))
}

pub fn build_mesh(spec: &RunSpec) -> Result<Mesh> {
    match (&spec.case, &spec.custom) {
        (Case::Custom, Some(c)) => {
            let file = std::fs::File::open(&c.mesh)?;
            read_mesh(BufReader::new(file))
        }
        (Case::Custom, None) => Err(Error::InvalidConfig("custom case without a mesh".into())),
        _ => generate_structured_quad_mesh(&notched_grid(spec)),
    }
}

fn material(spec: &RunSpec) -> Result<MaterialParams> {
    let m = &spec.material;
    let p = MaterialParams::new(m.young, m.poisson, m.gc, m.length_scale)?;
    Ok(if spec.case == Case::Dynamic {
        p.with_density(density_to_internal(m.density))
    } else {
        p
    })
}

/// Builds the mesh, boundary conditions and monitors of a case.
pub fn build_setup(spec: &RunSpec) -> Result<Setup> {
    spec.validate()?;
    let mesh = build_mesh(spec)?;
    let params = material(spec)?;
    let g = &spec.geometry;
    let tip = [g.notch_length, 0.5 * g.height];
    let fixed = |f, set: &str| DirichletSpec::on_set(f, set, Prescribed::Constant(0.0));
    let mut monitors = Monitors::new();
    monitors.crack_threshold = CRACK_THRESHOLD;
    monitors.applied = g.applied;

    let (model, notch_tip) = match spec.case {
        Case::Sent | Case::Fatigue => {
            let bcs = [
                fixed(Field::Ux, "bottom"),
                fixed(Field::Uy, "bottom"),
                fixed(Field::Ux, "top"),
                DirichletSpec::on_set(Field::Uy, "top", Prescribed::Ramp(g.applied)),
            ];
            monitors.reaction = Some((mesh.node_set("top")?.to_vec(), 1));
            monitors.ligament = Some(Ligament::along(&mesh, tip, [g.width, tip[1]])?);
            let mut model = Model::new(mesh, &bcs, params, spec.split)?;
            if spec.case == Case::Fatigue {
                model = model.with_fatigue(FatigueParams::new(
                    spec.fatigue.alpha_t,
                    spec.fatigue.exponent,
                )?)?;
            }
            (model, tip)
        }
        Case::Shear => {
            let bcs = [
                fixed(Field::Ux, "bottom"),
                fixed(Field::Uy, "bottom"),
                fixed(Field::Uy, "top"),
                DirichletSpec::on_set(Field::Ux, "top", Prescribed::Ramp(g.applied)),
                fixed(Field::Uy, "left"),
                fixed(Field::Uy, "right"),
            ];
            monitors.reaction = Some((mesh.node_set("top")?.to_vec(), 0));
            let (y_min, y_max) = g.band.map_or((0.0, g.height), |b| (b[2], b[3]));
            let region = Region::Rect {
                x_min: tip[0],
                x_max: g.width,
                y_min,
                y_max,
            };
            monitors.ligament = Some(Ligament::within(&mesh, tip, &region)?);
            (Model::new(mesh, &bcs, params, spec.split)?, tip)
        }
        Case::Dynamic => {
            monitors.applied = 0.0;
            monitors.ligament = Some(Ligament::along(&mesh, tip, [g.width, tip[1]])?);
            let t = spec.dynamic.traction;
            let model = Model::new(mesh, &[], params, spec.split)?
                .with_traction("top", [0.0, t])?
                .with_traction("bottom", [0.0, -t])?;
            (model, tip)
        }
        Case::Custom => {
            let c = spec.custom.as_ref().ok_or_else(|| {
                Error::InvalidConfig("custom case without a [custom] table".into())
            })?;
            let bcs: Vec<DirichletSpec> = c
                .dirichlet
                .iter()
                .map(|b| {
                    let v = if b.ramp {
                        Prescribed::Ramp(b.value)
                    } else {
                        Prescribed::Constant(b.value)
                    };
                    DirichletSpec::on_set(b.field, &b.set, v)
                })
                .collect();
            if let Some((set, comp)) = &c.reaction {
                monitors.reaction = Some((mesh.node_set(set)?.to_vec(), *comp));
            }
            monitors.applied = c.dirichlet.iter().find(|b| b.ramp).map_or(0.0, |b| b.value);
            let tip = match c.ligament {
                Some([x0, y0, x1, y1]) => {
                    monitors.ligament = Some(Ligament::along(&mesh, [x0, y0], [x1, y1])?);
                    [x0, y0]
                }
                None => tip,
            };
            let mut model = Model::new(mesh, &bcs, params, spec.split)?;
            for t in &c.traction {
                model = model.with_traction(&t.set, t.traction)?;
            }
            (model, tip)
        }
    };
    Ok(Setup {
        model,
        monitors,
        notch_tip,
    })
}

pub fn solver_config(spec: &RunSpec) -> SolverConfig {
    let s = &spec.solver;
    let mut c = SolverConfig::for_scheme(spec.scheme);
    c.residual_tol = s.residual_tol;
    c.correction_tol = s.correction_tol;
    c.max_iterations = s.max_iterations;
    c.bfgs_max_updates = s.bfgs_max_updates;
    if let Some(ls) = s.line_search {
        c.line_search = ls;
    }
    c
}

/// Time step of a dynamic run: the configured value or `he / v_R`.
pub fn dynamic_time_step(spec: &RunSpec) -> f64 {
    spec.dynamic.dt.unwrap_or_else(|| {
        let m = &spec.material;
        let v_r = rayleigh_wave_speed(m.young, m.poisson, m.density) * 1e3;
        spec.fine_he() / v_r
    })
}

/// Mean of `(y_c - y_tip) / (x - x_tip)` over grid columns ahead of the tip,
/// where `y_c` is the centroid of the cracked nodes in the column.
pub fn crack_path_slope(mesh: &Mesh, phi: &[f64], threshold: f64, tip: [f64; 2]) -> Option<f64> {
    let tol = 1e-9 * mesh.domain_size();
    let mut cols: Vec<(f64, f64, usize)> = Vec::new();
    let mut pts: Vec<[f64; 2]> = mesh
        .nodes
        .iter()
        .zip(phi)
        .filter(|(p, &f)| f >= threshold && p[0] > tip[0] + tol)
        .map(|(p, _)| *p)
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for p in pts {
        match cols.last_mut() {
            Some(c) if (c.0 - p[0]).abs() <= tol => {
                c.1 += p[1];
                c.2 += 1;
            }
            _ => cols.push((p[0], p[1], 1)),
        }
    }
    if cols.is_empty() {
        return None;
    }
    let sum: f64 = cols
        .iter()
        .map(|&(x, ysum, n)| (ysum / n as f64 - tip[1]) / (x - tip[0]))
        .sum();
    Some(sum / cols.len() as f64)
}

/// Farthest cracked node from the tip on each side of the notch line, ignoring
/// nodes within `margin` of that line. Two entries mean the crack branched.
pub fn branch_tips(
    mesh: &Mesh,
    phi: &[f64],
    threshold: f64,
    tip: [f64; 2],
    margin: f64,
) -> Vec<[f64; 2]> {
    let farthest = |upper: bool| {
        mesh.nodes
            .iter()
            .zip(phi)
            .filter(|(p, &f)| {
                let dy = p[1] - tip[1];
                f >= threshold && p[0] > tip[0] && if upper { dy > margin } else { dy < -margin }
            })
            .map(|(p, _)| *p)
            .max_by(|a, b| {
                let d = |p: &[f64; 2]| (p[0] - tip[0]).hypot(p[1] - tip[1]);
                d(a).total_cmp(&d(b))
            })
    };
    [farthest(true), farthest(false)]
        .into_iter()
        .flatten()
        .collect()
}

/// Runs a case without writing anything except dynamic snapshots, when
/// `snapshot_dir` is given.
pub fn execute(spec: &RunSpec, setup: &Setup, snapshot_dir: Option<&Path>) -> Result<CaseOutcome> {
    let config = solver_config(spec);
    let model = &setup.model;
    let monitors = &setup.monitors;
    let mut cycles = Vec::new();
    let mut surface = Vec::new();
    let mut energy = Vec::new();
    let mut cycles_to_failure = None;
    let mut energy_balanced = None;
    let run = match spec.case {
        Case::Sent | Case::Shear | Case::Custom => {
            let controller = IncrementController::new(1.0 / spec.increments as f64, spec.adaptive);
            run_load_program(model, &LoadProgram::ramp(), &config, controller, monitors)?
        }
        Case::Fatigue => {
            let settings = CyclicSettings {
                ratio: spec.fatigue.ratio,
                max_cycles: spec.fatigue.max_cycles,
                increments_per_cycle: spec.fatigue.increments_per_cycle,
            };
            let out = run_cyclic_program(model, &settings, &config, monitors)?;
            cycles = out.points;
            surface = out.surface;
            cycles_to_failure = out.cycles_to_failure;
            out.run
        }
        Case::Dynamic => {
            let mut settings = DynamicSettings::new(dynamic_time_step(spec), spec.dynamic.t_end);
            settings.snapshot_every = spec.dynamic.snapshot_every;
            settings.snapshot_dir = snapshot_dir.map(Path::to_path_buf);
            let out = run_dynamic_program(model, &settings, &config, monitors)?;
            energy_balanced = Some(out.energy_balanced());
            energy = out.energy;
            out.run
        }
    };
    let mesh = &model.mesh;
    let phi = &run.state.phi;
    let margin = 2.0 * spec.material.length_scale.max(mesh.min_element_size());
    let summary = RunSummary {
        case: spec.case,
        scheme: spec.scheme,
        split: spec.split,
        mesh: MeshSignature::of(model),
        increments: run.log.len(),
        cum_iterations: run.log.cum_iterations(),
        wall_seconds: run.wall_seconds.last().copied().unwrap_or(0.0),
        peak_reaction_n: run.log.peak_reaction(),
        critical_displacement_mm: run.log.critical_displacement(),
        final_crack_length_mm: run.log.last().map_or(0.0, |r| r.crack_length_mm),
        adaptive_restarts: run.adaptive_restarts.clone(),
        cutbacks: run.controller.total_cutbacks(),
        history_monotone: run.history_monotone,
        completed: run.completed(),
        abort_reason: run.aborted.as_ref().map(ToString::to_string),
        cycles_to_failure,
        energy_balanced,
        crack_slope: crack_path_slope(mesh, phi, CRACK_THRESHOLD, setup.notch_tip),
        branch_tips: branch_tips(mesh, phi, CRACK_THRESHOLD, setup.notch_tip, margin),
    };
    Ok(CaseOutcome {
        summary,
        run,
        cycles,
        crack_surface: surface,
        energy,
        files: Vec::new(),
    })
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format {
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

fn write_iterations(path: &Path, run: &RunOutcome) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record([
        "increment",
        "time",
        "iterations",
        "cum_iterations",
        "wall_seconds",
    ])
    .map_err(csv_error)?;
    for (r, wall) in run.log.records.iter().zip(&run.wall_seconds) {
        w.write_record([
            r.increment.to_string(),
            r.time.to_string(),
            r.iterations.to_string(),
            r.cum_iterations.to_string(),
            wall.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn write_force_displacement(path: &Path, run: &RunOutcome) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["u_applied_mm", "reaction_N"])
        .map_err(csv_error)?;
    for r in &run.log.records {
        w.write_record([r.u_applied_mm.to_string(), r.reaction_n.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn write_energy(path: &Path, energy: &[EnergyRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["time", "kinetic", "strain", "external_work"])
        .map_err(csv_error)?;
    for e in energy {
        w.write_record([
            e.time.to_string(),
            e.kinetic.to_string(),
            e.strain.to_string(),
            e.external_work.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs a case and writes its outputs into `spec.out`:
///
/// | file | content |
/// |---|---|
/// | `spec.json` | the resolved run specification |
/// | `runlog.csv` | one row per accepted increment |
/// | `force_displacement.csv` | applied displacement and reaction |
/// | `iterations.csv` | iterations and wall time per increment |
/// | `a_n.csv` | crack length per cycle (fatigue) |
/// | `energy.csv` | energy balance per step (dynamic) |
/// | `vtk/phi_*.vtk` | snapshots (dynamic) |
/// | `final.vtk` | last converged state |
/// | `summary.json` | [`RunSummary`] |
///
/// A solver abort is not an error here; it is reported in the summary and
/// the outputs up to the abort are still written.
pub fn run_case(spec: &RunSpec) -> Result<CaseOutcome> {
    let setup = build_setup(spec)?;
    let dir = &spec.out;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut record = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };
    let spec_path = record("spec.json");
    std::fs::write(
        &spec_path,
        serde_json::to_string_pretty(spec).map_err(|e| Error::Format {
            line: 0,
            message: e.to_string(),
        })? + "\n",
    )?;
    let snapshots = (spec.case == Case::Dynamic).then(|| dir.join("vtk"));
    let mut outcome = execute(spec, &setup, snapshots.as_deref())?;

    outcome.run.log.save(&record("runlog.csv"))?;
    write_force_displacement(&record("force_displacement.csv"), &outcome.run)?;
    write_iterations(&record("iterations.csv"), &outcome.run)?;
    if spec.case == Case::Fatigue {
        save_crack_growth(&outcome.cycles, &record("a_n.csv"))?;
    }
    if spec.case == Case::Dynamic {
        write_energy(&record("energy.csv"), &outcome.energy)?;
    }
    let title = format!(
        "{} {} t = {:e}",
        spec.case, spec.scheme, outcome.run.state.time
    );
    write_vtk(
        &record("final.vtk"),
        &setup.model.mesh,
        Some(&outcome.run.state),
        &title,
    )?;
    outcome.summary.save(&record("summary.json"))?;
    if let Some(d) = snapshots {
        if let Ok(rd) = std::fs::read_dir(&d) {
            let mut snaps: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
            snaps.sort();
            files.extend(snaps);
        }
    }
    outcome.files = files;
    Ok(outcome)
}

/// Writes the mesh of a case as VTK without solving anything.
pub fn preview_mesh(spec: &RunSpec, path: &Path) -> Result<MeshSignature> {
    let setup = build_setup(spec)?;
    write_vtk(
        path,
        &setup.model.mesh,
        None,
        &format!("{} mesh", spec.case),
    )?;
    Ok(MeshSignature::of(&setup.model))
}
