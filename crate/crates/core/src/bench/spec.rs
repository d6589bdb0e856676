use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fem::EnergySplit;
use crate::mesh::Field;
use crate::solvers::Scheme;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    Sent,
    Shear,
    Fatigue,
    Dynamic,
    Custom,
}

impl Case {
    pub const ALL: [Case; 5] = [
        Case::Sent,
        Case::Shear,
        Case::Fatigue,
        Case::Dynamic,
        Case::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Case::Sent => "sent",
            Case::Shear => "shear",
            Case::Fatigue => "fatigue",
            Case::Dynamic => "dynamic",
            Case::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Case::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                format!("unknown case `{s}` (expected sent, shear, fatigue, dynamic or custom)")
            })
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rectangular specimen with a horizontal edge notch from the left edge at
/// mid-height, meshed with a fine band of spacing `length_scale / refine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub notch_length: f64,
    /// Spacing outside the band (mm).
    pub coarse_he: f64,
    /// `[x_min, x_max, y_min, y_max]`; `None` for a uniform mesh at the band
    /// spacing.
    pub band: Option<[f64; 4]>,
    /// Applied displacement at the end of the ramp, or the cycle amplitude (mm).
    pub applied: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    /// MPa
    pub young: f64,
    pub poisson: f64,
    /// N/mm
    pub gc: f64,
    /// mm
    pub length_scale: f64,
    /// kg/m^3; only used by dynamic runs.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub residual_tol: f64,
    pub correction_tol: f64,
    pub max_iterations: usize,
    pub line_search: Option<bool>,
    pub bfgs_max_updates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatigueSpec {
    /// MPa
    pub alpha_t: f64,
    pub exponent: u32,
    pub ratio: f64,
    pub max_cycles: usize,
    pub increments_per_cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicSpec {
    /// MPa, pulling the top and bottom edges apart.
    pub traction: f64,
    /// s; `None` picks `he / v_R`.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub field: Field,
    pub set: String,
    pub value: f64,
    /// Scale `value` with the load factor.
    pub ramp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionSpec {
    pub set: String,
    /// MPa at unit load factor.
    pub traction: [f64; 2],
}

/// User-supplied mesh and boundary conditions, run as a quasi-static ramp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomSpec {
    pub mesh: PathBuf,
    pub dirichlet: Vec<BoundarySpec>,
    pub traction: Vec<TractionSpec>,
    /// Node set and component (0 = x, 1 = y) whose reaction is logged.
    pub reaction: Option<(String, usize)>,
    /// `[x_tip, y_tip, x_end, y_end]` along which the crack length is measured.
    pub ligament: Option<[f64; 4]>,
}

/// Everything needed to reproduce one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub case: Case,
    pub scheme: Scheme,
    pub split: EnergySplit,
    /// Reference number of increments over the load ramp.
    pub increments: usize,
    pub adaptive: bool,
    /// `length_scale / he` in the refined band.
    pub refine: f64,
    pub out: PathBuf,
    pub geometry: Geometry,
    pub material: MaterialSpec,
    pub solver: SolverSpec,
    pub fatigue: FatigueSpec,
    pub dynamic: DynamicSpec,
    pub custom: Option<CustomSpec>,
}

impl RunSpec {
    pub fn preset(case: Case) -> Self {
        let solver = SolverSpec {
            residual_tol: 0.005,
            correction_tol: 0.01,
            max_iterations: 400,
            line_search: None,
            bfgs_max_updates: 8,
        };
        let fatigue = FatigueSpec {
            alpha_t: 56.25,
            exponent: 1,
            ratio: -1.0,
            max_cycles: 400,
            increments_per_cycle: 4,
        };
        let dynamic = DynamicSpec {
            traction: 1.0,
            dt: None,
            t_end: 80e-6,
            snapshot_every: 25,
        };
        let steel = MaterialSpec {
            young: 210_000.0,
            poisson: 0.3,
            gc: 2.7,
            length_scale: 0.024,
            density: 7850.0,
        };
        let base = RunSpec {
            case,
            scheme: Scheme::MonolithicBfgs,
            split: EnergySplit::VolumetricDeviatoric,
            increments: 20,
            adaptive: true,
            refine: 2.0,
            out: PathBuf::from(format!("runs/{}", case.name())),
            geometry: Geometry {
                width: 1.0,
                height: 1.0,
                notch_length: 0.5,
                coarse_he: 0.04,
                band: Some([0.45, 1.0, 0.45, 0.55]),
                applied: 7e-3,
            },
            material: steel,
            solver,
            fatigue,
            dynamic,
            custom: None,
        };
        match case {
            Case::Sent | Case::Custom => base,
            Case::Shear => RunSpec {
                increments: 50,
                geometry: Geometry {
                    band: Some([0.45, 1.0, 0.0, 0.55]),
                    applied: 0.02,
                    ..base.geometry.clone()
                },
                ..base
            },
            Case::Fatigue => RunSpec {
                split: EnergySplit::Isotropic,
                adaptive: false,
                refine: 4.0,
                geometry: Geometry {
                    width: 0.1,
                    height: 0.1,
                    notch_length: 0.05,
                    coarse_he: 0.005,
                    band: Some([0.048, 0.1, 0.042, 0.058]),
                    applied: 6e-4,
                },
                material: MaterialSpec {
                    length_scale: 0.004,
                    ..base.material.clone()
                },
                ..base
            },
            Case::Dynamic => RunSpec {
                adaptive: false,
                refine: 1.0,
                geometry: Geometry {
                    width: 100.0,
                    height: 40.0,
                    notch_length: 50.0,
                    coarse_he: 0.25,
                    band: None,
                    applied: 0.0,
                },
                material: MaterialSpec {
                    young: 32_000.0,
                    poisson: 0.2,
                    gc: 0.003,
                    length_scale: 0.25,
                    density: 2450.0,
                },
                ..base
            },
        }
    }

    /// Element size in the refined band (or everywhere for a uniform mesh).
    pub fn fine_he(&self) -> f64 {
        self.material.length_scale / self.refine
    }

    /// Lists every violated constraint rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                e.push(msg);
            }
        };
        let m = &self.material;
        check(
            m.young > 0.0,
            format!("material.young must be positive, got {}", m.young),
        );
        check(
            (0.0..0.5).contains(&m.poisson),
            format!("material.poisson must lie in [0, 0.5), got {}", m.poisson),
        );
        check(
            m.gc > 0.0,
            format!("material.gc must be positive, got {}", m.gc),
        );
        check(
            m.length_scale > 0.0,
            format!(
                "material.length_scale must be positive, got {}",
                m.length_scale
            ),
        );
        check(
            self.refine > 0.0,
            format!("refine must be positive, got {}", self.refine),
        );
        check(self.increments >= 1, "increments must be at least 1".into());
        check(
            !self.out.as_os_str().is_empty(),
            "out must not be empty".into(),
        );

        // custom runs read their mesh from a file, so the generator settings do not apply
        if self.case != Case::Custom {
            let g = &self.geometry;
            check(
                g.width > 0.0 && g.height > 0.0,
                "geometry width and height must be positive".into(),
            );
            check(
                g.notch_length > 0.0 && g.notch_length < g.width,
                format!(
                    "geometry.notch_length must lie in (0, width), got {}",
                    g.notch_length
                ),
            );
            check(
                g.coarse_he > 0.0,
                "geometry.coarse_he must be positive".into(),
            );
            if let Some([x0, x1, y0, y1]) = g.band {
                check(
                    x0 < x1 && y0 < y1 && x0 >= 0.0 && y0 >= 0.0 && x1 <= g.width && y1 <= g.height,
                    format!(
                        "geometry.band {:?} must be a non-empty rectangle inside the specimen",
                        [x0, x1, y0, y1]
                    ),
                );
            }
            let he = self.fine_he();
            check(
                he <= g.coarse_he * (1.0 + 1e-12) || g.band.is_none(),
                format!(
                    "band spacing {he} is coarser than geometry.coarse_he {}",
                    g.coarse_he
                ),
            );
        }
        check(
            self.geometry.applied.is_finite(),
            "geometry.applied must be finite".into(),
        );

        let s = &self.solver;
        check(
            s.residual_tol > 0.0,
            "solver.residual_tol must be positive".into(),
        );
        check(
            s.correction_tol > 0.0,
            "solver.correction_tol must be positive".into(),
        );
        check(
            s.max_iterations >= 1,
            "solver.max_iterations must be at least 1".into(),
        );
        check(
            s.bfgs_max_updates >= 1,
            "solver.bfgs_max_updates must be at least 1".into(),
        );

        if self.case == Case::Fatigue {
            let f = &self.fatigue;
            check(f.alpha_t > 0.0, "fatigue.alpha_t must be positive".into());
            check(
                matches!(f.exponent, 1 | 2),
                format!("fatigue.exponent must be 1 or 2, got {}", f.exponent),
            );
            check(
                f.ratio <= 1.0 && f.ratio.is_finite(),
                format!("fatigue.ratio must be at most 1, got {}", f.ratio),
            );
            check(
                f.max_cycles >= 1,
                "fatigue.max_cycles must be at least 1".into(),
            );
            check(
                f.increments_per_cycle >= 4 && f.increments_per_cycle % 4 == 0,
                format!(
                    "fatigue.increments_per_cycle must be a positive multiple of 4, got {}",
                    f.increments_per_cycle
                ),
            );
        }
        if self.case == Case::Dynamic {
            let d = &self.dynamic;
            check(
                m.density > 0.0,
                "material.density must be positive for dynamic runs".into(),
            );
            check(
                d.traction.is_finite(),
                "dynamic.traction must be finite".into(),
            );
            check(
                d.dt.map_or(true, |dt| dt > 0.0),
                "dynamic.dt must be positive".into(),
            );
            check(d.t_end > 0.0, "dynamic.t_end must be positive".into());
        }
        if self.case == Case::Custom {
            match &self.custom {
                None => e.push("case `custom` needs a [custom] table with a mesh file".into()),
                Some(c) => {
                    if !c.mesh.is_file() {
                        e.push(format!("custom.mesh `{}` does not exist", c.mesh.display()));
                    }
                    if c.dirichlet.is_empty() && c.traction.is_empty() {
                        e.push("custom case needs at least one dirichlet or traction entry".into());
                    }
                    for b in &c.dirichlet {
                        if b.field == Field::Phase && (b.value != 1.0 || b.ramp) {
                            e.push(format!(
                                "phase prescription on `{}` must be the constant 1",
                                b.set
                            ));
                        }
                    }
                    if let Some((_, comp)) = &c.reaction {
                        if *comp > 1 {
                            e.push(format!(
                                "custom.reaction component must be 0 or 1, got {comp}"
                            ));
                        }
                    }
                }
            }
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(e))
        }
    }
}

// Overlay read from a config file: every key optional, unknown keys rejected.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    case: Option<Case>,
    scheme: Option<Scheme>,
    split: Option<EnergySplit>,
    increments: Option<usize>,
    adaptive: Option<bool>,
    refine: Option<f64>,
    out: Option<PathBuf>,
    geometry: Option<RawGeometry>,
    material: Option<RawMaterial>,
    solver: Option<RawSolver>,
    fatigue: Option<RawFatigue>,
    dynamic: Option<RawDynamic>,
    custom: Option<RawCustom>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCustom {
    mesh: PathBuf,
    #[serde(default)]
    dirichlet: Vec<RawBoundary>,
    #[serde(default)]
    traction: Vec<TractionSpec>,
    reaction: Option<RawReaction>,
    ligament: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    field: Field,
    set: String,
    value: f64,
    #[serde(default)]
    ramp: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReaction {
    set: String,
    component: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    width: Option<f64>,
    height: Option<f64>,
    notch_length: Option<f64>,
    coarse_he: Option<f64>,
    band: Option<[f64; 4]>,
    uniform: Option<bool>,
    applied: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    young: Option<f64>,
    poisson: Option<f64>,
    gc: Option<f64>,
    length_scale: Option<f64>,
    density: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    residual_tol: Option<f64>,
    correction_tol: Option<f64>,
    max_iterations: Option<usize>,
    line_search: Option<bool>,
    bfgs_max_updates: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFatigue {
    alpha_t: Option<f64>,
    exponent: Option<u32>,
    ratio: Option<f64>,
    max_cycles: Option<usize>,
    increments_per_cycle: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamic {
    traction: Option<f64>,
    dt: Option<f64>,
    t_end: Option<f64>,
    snapshot_every: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RawSpec {
    fn apply(self, spec: &mut RunSpec, base_dir: &Path) {
        if let Some(c) = self.custom {
            spec.custom = Some(CustomSpec {
                mesh: base_dir.join(c.mesh),
                dirichlet: c
                    .dirichlet
                    .into_iter()
                    .map(|b| BoundarySpec {
                        field: b.field,
                        set: b.set,
                        value: b.value,
                        ramp: b.ramp,
                    })
                    .collect(),
                traction: c.traction,
                reaction: c.reaction.map(|r| (r.set, r.component)),
                ligament: c.ligament,
            });
        }
        set(&mut spec.scheme, self.scheme);
        set(&mut spec.split, self.split);
        set(&mut spec.increments, self.increments);
        set(&mut spec.adaptive, self.adaptive);
        set(&mut spec.refine, self.refine);
        set(&mut spec.out, self.out);
        if let Some(g) = self.geometry {
            let t = &mut spec.geometry;
            set(&mut t.width, g.width);
            set(&mut t.height, g.height);
            set(&mut t.notch_length, g.notch_length);
            set(&mut t.coarse_he, g.coarse_he);
            if g.band.is_some() {
                t.band = g.band;
            }
            if g.uniform == Some(true) {
                t.band = None;
            }
            set(&mut t.applied, g.applied);
        }
        if let Some(m) = self.material {
            let t = &mut spec.material;
            set(&mut t.young, m.young);
            set(&mut t.poisson, m.poisson);
            set(&mut t.gc, m.gc);
            set(&mut t.length_scale, m.length_scale);
            set(&mut t.density, m.density);
        }
        if let Some(s) = self.solver {
            let t = &mut spec.solver;
            set(&mut t.residual_tol, s.residual_tol);
            set(&mut t.correction_tol, s.correction_tol);
            set(&mut t.max_iterations, s.max_iterations);
            if s.line_search.is_some() {
                t.line_search = s.line_search;
            }
            set(&mut t.bfgs_max_updates, s.bfgs_max_updates);
        }
        if let Some(f) = self.fatigue {
            let t = &mut spec.fatigue;
            set(&mut t.alpha_t, f.alpha_t);
            set(&mut t.exponent, f.exponent);
            set(&mut t.ratio, f.ratio);
            set(&mut t.max_cycles, f.max_cycles);
            set(&mut t.increments_per_cycle, f.increments_per_cycle);
        }
        if let Some(d) = self.dynamic {
            let t = &mut spec.dynamic;
            set(&mut t.traction, d.traction);
            if d.dt.is_some() {
                t.dt = d.dt;
            }
            set(&mut t.t_end, d.t_end);
            set(&mut t.snapshot_every, d.snapshot_every);
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn key_on_line(text: &str, line: usize) -> Option<String> {
    let l = text.lines().nth(line.checked_sub(1)?)?;
    let (key, _) = l.split_once('=')?;
    let key = key.trim();
    (!key.is_empty() && !key.starts_with('#')).then(|| key.to_string())
}

/// Parses config text. `case_hint` supplies the preset when the text has no
/// `case` key.
pub fn parse_config(text: &str, path: &Path, case_hint: Option<Case>) -> Result<RunSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| line_of(text, s.start));
        let mut message = e.message().to_string();
        if let Some(key) = key_on_line(text, line) {
            message = format!("key `{key}`: {message}");
        }
        Error::ConfigParse {
            path: path.to_path_buf(),
            line,
            message,
        }
    })?;
    let case = match (raw.case, case_hint) {
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => {
            return Err(Error::ConfigValidation(vec![
                "no `case` given (sent, shear, fatigue, dynamic or custom)".into(),
            ]))
        }
    };
    let mut spec = RunSpec::preset(case);
    let base_dir = path.parent().unwrap_or(Path::new(""));
    raw.apply(&mut spec, base_dir);
    spec.validate()?;
    Ok(spec)
}

/// Reads and validates a config file; see `docs/config.md` for the grammar.
pub fn load_config(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path, None)
}
