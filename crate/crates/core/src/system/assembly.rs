use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;

use super::dofs::DofMap;
use super::profile::ProfileSymbolic;
use super::sparse::{CsrMatrix, CsrPattern};
use super::state::IntegrationPointState;
use crate::fem::{
    element_residual_and_tangent, ElementInput, ElementOutputs, EnergySplit, HistoryMode, Inertia,
    IpResults, MaterialParams, MAX_IP, MAX_NODES,
};
use crate::mesh::Mesh;
use crate::Result;

const SKIP: usize = usize::MAX;
/// Upper bound on the number of partial sums; fixed so that results do not
/// depend on the thread count.
const MAX_CHUNKS: usize = 16;
const MIN_CHUNK: usize = 64;

/// Where the phase residual takes its history values from.
#[derive(Debug, Clone, Copy)]
pub enum HistorySource<'a> {
    /// The committed values stored in the state.
    Committed,
    /// Running maximum of the committed values and the current `psi_plus`.
    Trial,
    /// Explicit per-IP values.
    Given(&'a [f64]),
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions<'a> {
    pub split: EnergySplit,
    pub history: HistorySource<'a>,
    pub tangent_u: bool,
    pub tangent_phi: bool,
    /// Full nodal acceleration and `1 / dt^2` for Backward Euler.
    pub inertia: Option<(&'a [f64], f64)>,
    /// Multiply the fracture terms by the per-IP fatigue factor.
    pub fatigue: bool,
}

impl<'a> EvalOptions<'a> {
    pub fn residual(split: EnergySplit, history: HistorySource<'a>) -> Self {
        Self {
            split,
            history,
            tangent_u: false,
            tangent_phi: false,
            inertia: None,
            fatigue: false,
        }
    }

    pub fn with_tangents(mut self, u: bool, phi: bool) -> Self {
        self.tangent_u = u;
        self.tangent_phi = phi;
        self
    }
}

/// Assembled quantities on the full nodal layout plus the free-DOF tangent
/// blocks.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Internal (plus inertial) displacement residual, all slots.
    pub r_u: Vec<f64>,
    pub r_phi: Vec<f64>,
    pub flux_u: Vec<f64>,
    pub flux_phi: Vec<f64>,
    pub ip: Vec<IpResults>,
    pub kuu: Option<CsrMatrix>,
    pub kpp: Option<CsrMatrix>,
}

/// Precomputed scatter maps from element matrices into the global blocks.
#[derive(Debug)]
pub struct Assembler {
    n_ip: usize,
    u_pattern: Arc<CsrPattern>,
    phi_pattern: Arc<CsrPattern>,
    u_symbolic: Arc<ProfileSymbolic>,
    phi_symbolic: Arc<ProfileSymbolic>,
    u_pos: Vec<Vec<usize>>,
    phi_pos: Vec<Vec<usize>>,
    chunks: Vec<Range<usize>>,
}

impl Assembler {
    pub fn new(mesh: &Mesh, dofs: &DofMap) -> Self {
        let m = mesh.order.nodes();
        let u_eq: Vec<Vec<usize>> = mesh
            .elements
            .iter()
            .map(|el| {
                el.iter()
                    .flat_map(|&n| [2 * n, 2 * n + 1])
                    .map(|s| dofs.u_eq(s).unwrap_or(SKIP))
                    .collect()
            })
            .collect();
        let phi_eq: Vec<Vec<usize>> = mesh
            .elements
            .iter()
            .map(|el| el.iter().map(|&n| dofs.phi_eq(n).unwrap_or(SKIP)).collect())
            .collect();
        let free = |v: &Vec<usize>| v.iter().copied().filter(|&e| e != SKIP).collect::<Vec<_>>();
        let u_groups: Vec<Vec<usize>> = u_eq.iter().map(free).collect();
        let phi_groups: Vec<Vec<usize>> = phi_eq.iter().map(free).collect();
        let u_pattern = Arc::new(CsrPattern::from_groups(
            dofs.n_u(),
            u_groups.iter().map(Vec::as_slice),
        ));
        let phi_pattern = Arc::new(CsrPattern::from_groups(
            dofs.n_phi(),
            phi_groups.iter().map(Vec::as_slice),
        ));
        let positions = |eqs: &[Vec<usize>], pat: &CsrPattern| -> Vec<Vec<usize>> {
            eqs.iter()
                .map(|local| {
                    let mut pos = Vec::with_capacity(local.len() * local.len());
                    for &a in local {
                        for &b in local {
                            pos.push(if a == SKIP || b == SKIP {
                                SKIP
                            } else {
                                pat.position(a, b).expect("pattern covers element")
                            });
                        }
                    }
                    pos
                })
                .collect()
        };
        let u_pos = positions(&u_eq, &u_pattern);
        let phi_pos = positions(&phi_eq, &phi_pattern);
        let ne = mesh.n_elements();
        let chunk = ne.div_ceil(MAX_CHUNKS).max(MIN_CHUNK);
        let chunks = (0..ne)
            .step_by(chunk)
            .map(|s| s..(s + chunk).min(ne))
            .collect();
        debug_assert_eq!(m * m, phi_pos.first().map_or(m * m, Vec::len));
        Self {
            n_ip: mesh.n_ip(),
            u_symbolic: Arc::new(ProfileSymbolic::new(&u_pattern)),
            phi_symbolic: Arc::new(ProfileSymbolic::new(&phi_pattern)),
            u_pattern,
            phi_pattern,
            u_pos,
            phi_pos,
            chunks,
        }
    }

    pub fn u_pattern(&self) -> &Arc<CsrPattern> {
        &self.u_pattern
    }

    pub fn phi_pattern(&self) -> &Arc<CsrPattern> {
        &self.phi_pattern
    }

    pub fn u_symbolic(&self) -> &Arc<ProfileSymbolic> {
        &self.u_symbolic
    }

    pub fn phi_symbolic(&self) -> &Arc<ProfileSymbolic> {
        &self.phi_symbolic
    }

    /// Consistent mass restricted to the free displacement DOFs.
    pub fn mass_matrix(&self, mesh: &Mesh, params: &MaterialParams) -> Result<CsrMatrix> {
        let mut mass = CsrMatrix::zeros(self.u_pattern.clone());
        let m = mesh.order.nodes();
        let zeros = [0.0; 2 * MAX_NODES];
        let h = [0.0; MAX_IP];
        for (e, el) in mesh.elements.iter().enumerate() {
            let coords: Vec<[f64; 2]> = el.iter().map(|&n| mesh.nodes[n]).collect();
            let input = ElementInput {
                order: mesh.order,
                coords: &coords,
                u: &zeros[..2 * m],
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
            let c = element_residual_and_tangent(&input, params, EnergySplit::Isotropic, outputs)?;
            let pos = &self.u_pos[e];
            for a in 0..2 * m {
                for b in 0..2 * m {
                    if a % 2 != b % 2 {
                        continue;
                    }
                    let p = pos[a * 2 * m + b];
                    if p != SKIP {
                        mass.values[p] += c.mass[a / 2][b / 2];
                    }
                }
            }
        }
        Ok(mass)
    }

    /// Assembles at nodal fields `u`, `phi` with per-IP internal variables
    /// `ip` (history and fatigue factor).
    pub fn evaluate(
        &self,
        mesh: &Mesh,
        u: &[f64],
        phi: &[f64],
        ip_state: &[IntegrationPointState],
        params: &MaterialParams,
        opts: &EvalOptions<'_>,
    ) -> Result<Evaluation> {
        let m = mesh.order.nodes();
        let n_ip = self.n_ip;
        let nn = mesh.n_nodes();
        let outputs = ElementOutputs {
            tangent_u: opts.tangent_u,
            tangent_phi: opts.tangent_phi,
            mass: false,
        };
        let mut ip = vec![IpResults::default(); mesh.n_elements() * n_ip];

        struct Partial {
            r_u: Vec<f64>,
            r_phi: Vec<f64>,
            flux_u: Vec<f64>,
            flux_phi: Vec<f64>,
            kuu: Vec<f64>,
            kpp: Vec<f64>,
        }

        let chunk_len = self.chunks.first().map_or(1, |c| c.len());
        let partials: Vec<Partial> = ip
            .par_chunks_mut(chunk_len * n_ip)
            .zip(self.chunks.par_iter())
            .map(|(ip_out, range)| -> Result<Partial> {
                let mut part = Partial {
                    r_u: vec![0.0; 2 * nn],
                    r_phi: vec![0.0; nn],
                    flux_u: vec![0.0; 2 * nn],
                    flux_phi: vec![0.0; nn],
                    kuu: if opts.tangent_u {
                        vec![0.0; self.u_pattern.nnz()]
                    } else {
                        Vec::new()
                    },
                    kpp: if opts.tangent_phi {
                        vec![0.0; self.phi_pattern.nnz()]
                    } else {
                        Vec::new()
                    },
                };
                let mut coords = [[0.0; 2]; MAX_NODES];
                let mut u_e = [0.0; 2 * MAX_NODES];
                let mut a_e = [0.0; 2 * MAX_NODES];
                let mut phi_e = [0.0; MAX_NODES];
                let mut h = [0.0; MAX_IP];
                let mut f = [1.0; MAX_IP];
                for e in range.clone() {
                    let el = &mesh.elements[e];
                    for (k, &n) in el.iter().enumerate() {
                        coords[k] = mesh.nodes[n];
                        u_e[2 * k] = u[2 * n];
                        u_e[2 * k + 1] = u[2 * n + 1];
                        phi_e[k] = phi[n];
                        if let Some((acc, _)) = opts.inertia {
                            a_e[2 * k] = acc[2 * n];
                            a_e[2 * k + 1] = acc[2 * n + 1];
                        }
                    }
                    let ips = &ip_state[e * n_ip..(e + 1) * n_ip];
                    for q in 0..n_ip {
                        h[q] = match opts.history {
                            HistorySource::Given(given) => given[e * n_ip + q],
                            _ => ips[q].history,
                        };
                        f[q] = if opts.fatigue { ips[q].fatigue } else { 1.0 };
                    }
                    let history = match opts.history {
                        HistorySource::Trial => HistoryMode::Trial(&h[..n_ip]),
                        _ => HistoryMode::Fixed(&h[..n_ip]),
                    };
                    let input = ElementInput {
                        order: mesh.order,
                        coords: &coords[..m],
                        u: &u_e[..2 * m],
                        phi: &phi_e[..m],
                        history,
                        fatigue: Some(&f[..n_ip]),
                        inertia: opts.inertia.map(|(_, inv_dt2)| Inertia {
                            accel: &a_e[..2 * m],
                            inv_dt2,
                        }),
                        thickness: mesh.thickness,
                    };
                    let c = element_residual_and_tangent(&input, params, opts.split, outputs)
                        .map_err(|err| match err {
                            crate::Error::DistortedElement { det_j, .. } => {
                                crate::Error::DistortedElement { element: e, det_j }
                            }
                            other => other,
                        })?;
                    let base = (e - range.start) * n_ip;
                    ip_out[base..base + n_ip].copy_from_slice(c.ip());
                    for (k, &n) in el.iter().enumerate() {
                        part.r_u[2 * n] += c.r_u[2 * k];
                        part.r_u[2 * n + 1] += c.r_u[2 * k + 1];
                        part.flux_u[2 * n] += c.flux_u[2 * k];
                        part.flux_u[2 * n + 1] += c.flux_u[2 * k + 1];
                        part.r_phi[n] += c.r_phi[k];
                        part.flux_phi[n] += c.flux_phi[k];
                    }
                    if opts.tangent_u {
                        let pos = &self.u_pos[e];
                        for a in 0..2 * m {
                            for b in 0..2 * m {
                                let p = pos[a * 2 * m + b];
                                if p != SKIP {
                                    part.kuu[p] += c.k_uu[a][b];
                                }
                            }
                        }
                    }
                    if opts.tangent_phi {
                        let pos = &self.phi_pos[e];
                        for a in 0..m {
                            for b in 0..m {
                                let p = pos[a * m + b];
                                if p != SKIP {
                                    part.kpp[p] += c.k_pp[a][b];
                                }
                            }
                        }
                    }
                }
                Ok(part)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut parts = partials.into_iter();
        let first = parts.next().expect("at least one chunk");
        let mut acc = first;
        for p in parts {
            let add =
                |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            add(&mut acc.r_u, &p.r_u);
            add(&mut acc.r_phi, &p.r_phi);
            add(&mut acc.flux_u, &p.flux_u);
            add(&mut acc.flux_phi, &p.flux_phi);
            add(&mut acc.kuu, &p.kuu);
            add(&mut acc.kpp, &p.kpp);
        }
        Ok(Evaluation {
            r_u: acc.r_u,
            r_phi: acc.r_phi,
            flux_u: acc.flux_u,
            flux_phi: acc.flux_phi,
            ip,
            kuu: opts.tangent_u.then(|| CsrMatrix {
                pattern: self.u_pattern.clone(),
                values: acc.kuu,
            }),
            kpp: opts.tangent_phi.then(|| CsrMatrix {
                pattern: self.phi_pattern.clone(),
                values: acc.kpp,
            }),
        })
    }
}
