use super::kinematics::kinematics;
use super::material::MaterialParams;
use super::shape::{gauss_points, ElementOrder};
use super::split::{split_energy, update_history, EnergySplit};
use crate::Result;

pub const MAX_NODES: usize = super::shape::MAX_NODES;
pub const MAX_IP: usize = 9;
const MAX_UDOF: usize = 2 * MAX_NODES;

/// Source of the history field used in the phase residual.
#[derive(Debug, Clone, Copy)]
pub enum HistoryMode<'a> {
    /// Use the given per-IP values as they are.
    Fixed(&'a [f64]),
    /// Start from the committed per-IP values and take the running maximum
    /// with `psi_plus` of the current strain.
    Trial(&'a [f64]),
}

/// Inertia contribution for Backward Euler: `M a` in the residual and
/// `M / dt^2` in the displacement tangent.
#[derive(Debug, Clone, Copy)]
pub struct Inertia<'a> {
    pub accel: &'a [f64],
    pub inv_dt2: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ElementInput<'a> {
    pub order: ElementOrder,
    pub coords: &'a [[f64; 2]],
    pub u: &'a [f64],
    pub phi: &'a [f64],
    pub history: HistoryMode<'a>,
    /// Per-IP fatigue degradation `f`; `None` means `f = 1`.
    pub fatigue: Option<&'a [f64]>,
    pub inertia: Option<Inertia<'a>>,
    pub thickness: f64,
}

/// Which blocks to compute. Residuals and IP results are always produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementOutputs {
    pub tangent_u: bool,
    pub tangent_phi: bool,
    pub mass: bool,
}

impl ElementOutputs {
    pub const RESIDUAL: Self = Self {
        tangent_u: false,
        tangent_phi: false,
        mass: false,
    };
    pub const ALL: Self = Self {
        tangent_u: true,
        tangent_phi: true,
        mass: false,
    };
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IpResults {
    /// History value used in the phase residual.
    pub history: f64,
    pub psi_plus: f64,
    pub psi: f64,
    pub phi: f64,
    pub strain: [f64; 3],
    pub weight: f64,
}

/// Element residuals, tangent blocks and consistent mass. Only the leading
/// `nodes` (phase) or `2 * nodes` (displacement) entries are meaningful.
#[derive(Debug, Clone)]
pub struct ElementContribution {
    pub nodes: usize,
    pub n_ip: usize,
    pub r_u: [f64; MAX_UDOF],
    pub r_phi: [f64; MAX_NODES],
    /// Magnitude of the internal nodal forces, used to set the residual scale.
    pub flux_u: [f64; MAX_UDOF],
    pub flux_phi: [f64; MAX_NODES],
    pub k_uu: [[f64; MAX_UDOF]; MAX_UDOF],
    pub k_pp: [[f64; MAX_NODES]; MAX_NODES],
    /// Scalar consistent mass `int rho N_i N_j dV`; the full 2m x 2m matrix is
    /// this block applied to each displacement component.
    pub mass: [[f64; MAX_NODES]; MAX_NODES],
    pub ip: [IpResults; MAX_IP],
}

impl ElementContribution {
    fn zeroed(nodes: usize, n_ip: usize) -> Self {
        Self {
            nodes,
            n_ip,
            r_u: [0.0; MAX_UDOF],
            r_phi: [0.0; MAX_NODES],
            flux_u: [0.0; MAX_UDOF],
            flux_phi: [0.0; MAX_NODES],
            k_uu: [[0.0; MAX_UDOF]; MAX_UDOF],
            k_pp: [[0.0; MAX_NODES]; MAX_NODES],
            mass: [[0.0; MAX_NODES]; MAX_NODES],
            ip: [IpResults::default(); MAX_IP],
        }
    }

    pub fn r_u(&self) -> &[f64] {
        &self.r_u[..2 * self.nodes]
    }

    pub fn r_phi(&self) -> &[f64] {
        &self.r_phi[..self.nodes]
    }

    pub fn ip(&self) -> &[IpResults] {
        &self.ip[..self.n_ip]
    }

    /// Dense copy of `K_uu`.
    pub fn k_uu_dense(&self) -> Vec<Vec<f64>> {
        let n = 2 * self.nodes;
        (0..n).map(|i| self.k_uu[i][..n].to_vec()).collect()
    }

    pub fn k_pp_dense(&self) -> Vec<Vec<f64>> {
        let n = self.nodes;
        (0..n).map(|i| self.k_pp[i][..n].to_vec()).collect()
    }
}

/// Integrates the displacement and phase residuals of one element
///
/// ```text
/// r_u   = int [(1-phi)^2 + k] B_u^T sigma_0 + rho N^T a
/// r_phi = int -2(1-phi) N H + f Gc [N phi / l + l B_phi^T grad phi]
/// ```
///
/// together with the block-diagonal tangents `K_uu`, `K_phiphi`. External
/// tractions are added by the caller.
pub fn element_residual_and_tangent(
    input: &ElementInput<'_>,
    params: &MaterialParams,
    split: EnergySplit,
    outputs: ElementOutputs,
) -> Result<ElementContribution> {
    let order = input.order;
    let m = order.nodes();
    let gps = gauss_points(order);
    let mut out = ElementContribution::zeroed(m, gps.len());
    let c = params.elasticity();
    let gc = params.gc;
    let l = params.length_scale;
    let k = params.k_residual;
    let want_mass = outputs.mass || input.inertia.is_some();

    for (q, gp) in gps.iter().enumerate() {
        let kin = kinematics(order, input.coords, gp.xi, gp.eta, input.u)?;
        let dv = gp.weight * kin.det_j * input.thickness;
        let n = kin.shape.values();
        let grad = &kin.grad[..m];
        let phi = kin.interpolate(input.phi);
        let gphi = kin.gradient(input.phi);
        let sr = split_energy(&kin.strain, params, split);
        let h = match input.history {
            HistoryMode::Fixed(h) => h[q],
            HistoryMode::Trial(h) => update_history(h[q], sr.psi_plus)?,
        };
        let f = input.fatigue.map_or(1.0, |f| f[q]);
        out.ip[q] = IpResults {
            history: h,
            psi_plus: sr.psi_plus,
            psi: sr.psi,
            phi,
            strain: kin.strain,
            weight: dv,
        };

        let one_m = 1.0 - phi;
        let g = one_m * one_m + k;
        let s = sr.stress;
        for (a, d) in grad.iter().enumerate() {
            let fx = d[0] * s[0] + d[1] * s[2];
            let fy = d[1] * s[1] + d[0] * s[2];
            out.r_u[2 * a] += g * fx * dv;
            out.r_u[2 * a + 1] += g * fy * dv;
        }

        let drive = -2.0 * one_m * h;
        for a in 0..m {
            let d = drive * n[a] * dv;
            let crack =
                f * gc * (n[a] * phi / l + l * (grad[a][0] * gphi[0] + grad[a][1] * gphi[1])) * dv;
            out.r_phi[a] += d + crack;
            out.flux_phi[a] += d.abs() + crack.abs();
        }

        if outputs.tangent_u {
            // K_uu = g B^T C B, exploiting the plane-strain structure of C
            for a in 0..m {
                let (ax, ay) = (grad[a][0], grad[a][1]);
                // rows of C B_a for the two dofs of node a
                let cbx = [c[0][0] * ax, c[1][0] * ax, c[2][2] * ay];
                let cby = [c[0][1] * ay, c[1][1] * ay, c[2][2] * ax];
                for b in 0..m {
                    let (bx, by) = (grad[b][0], grad[b][1]);
                    let w = g * dv;
                    out.k_uu[2 * a][2 * b] += w * (cbx[0] * bx + cbx[2] * by);
                    out.k_uu[2 * a][2 * b + 1] += w * (cbx[1] * by + cbx[2] * bx);
                    out.k_uu[2 * a + 1][2 * b] += w * (cby[0] * bx + cby[2] * by);
                    out.k_uu[2 * a + 1][2 * b + 1] += w * (cby[1] * by + cby[2] * bx);
                }
            }
        }
        if outputs.tangent_phi {
            let react = (2.0 * h + f * gc / l) * dv;
            let diff = f * gc * l * dv;
            for a in 0..m {
                for b in 0..m {
                    out.k_pp[a][b] += react * n[a] * n[b]
                        + diff * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
                }
            }
        }
        if want_mass {
            let w = params.density * dv;
            for a in 0..m {
                for b in 0..m {
                    out.mass[a][b] += w * n[a] * n[b];
                }
            }
        }
    }

    for a in 0..2 * m {
        out.flux_u[a] = out.r_u[a].abs();
    }

    if let Some(inertia) = input.inertia {
        for a in 0..m {
            for b in 0..m {
                let mab = out.mass[a][b];
                out.r_u[2 * a] += mab * inertia.accel[2 * b];
                out.r_u[2 * a + 1] += mab * inertia.accel[2 * b + 1];
                if outputs.tangent_u {
                    out.k_uu[2 * a][2 * b] += mab * inertia.inv_dt2;
                    out.k_uu[2 * a + 1][2 * b + 1] += mab * inertia.inv_dt2;
                }
            }
        }
    }
    Ok(out)
}
