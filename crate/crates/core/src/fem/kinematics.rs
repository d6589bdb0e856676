use super::shape::{shape_eval, ElementOrder, Shape, MAX_NODES};
use crate::{Error, Result};

/// Physical-space quantities at one point of an element.
#[derive(Debug, Clone, Copy)]
pub struct Kinematics {
    pub shape: Shape,
    /// `dN/dx`, `dN/dy` per node; these are the rows of `B_phi`.
    pub grad: [[f64; 2]; MAX_NODES],
    pub det_j: f64,
    /// `{eps_xx, eps_yy, gamma_xy}` from the element displacement vector.
    pub strain: [f64; 3],
}

impl Kinematics {
    pub fn len(&self) -> usize {
        self.shape.len
    }

    pub fn is_empty(&self) -> bool {
        self.shape.len == 0
    }

    /// Dense `B_u` (3 x 2m), row-major.
    pub fn b_u(&self) -> Vec<[f64; 3]> {
        let mut cols = Vec::with_capacity(2 * self.len());
        for g in &self.grad[..self.len()] {
            cols.push([g[0], 0.0, g[1]]);
            cols.push([0.0, g[1], g[0]]);
        }
        cols
    }

    pub fn interpolate(&self, nodal: &[f64]) -> f64 {
        self.shape
            .values()
            .iter()
            .zip(nodal)
            .map(|(n, v)| n * v)
            .sum()
    }

    pub fn gradient(&self, nodal: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (d, v) in self.grad[..self.len()].iter().zip(nodal) {
            g[0] += d[0] * v;
            g[1] += d[1] * v;
        }
        g
    }
}

/// Maps a reference point to physical space. `u_e` is `[ux0, uy0, ux1, ...]`;
/// pass an empty slice to skip the strain.
pub fn kinematics(
    order: ElementOrder,
    coords: &[[f64; 2]],
    xi: f64,
    eta: f64,
    u_e: &[f64],
) -> Result<Kinematics> {
    let shape = shape_eval(order, xi, eta);
    let n = shape.len;
    let mut jac = [[0.0; 2]; 2];
    for (d, x) in shape.dn[..n].iter().zip(coords) {
        jac[0][0] += d[0] * x[0];
        jac[0][1] += d[0] * x[1];
        jac[1][0] += d[1] * x[0];
        jac[1][1] += d[1] * x[1];
    }
    let det_j = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if !(det_j > 0.0) {
        return Err(Error::DistortedElement {
            element: usize::MAX,
            det_j,
        });
    }
    let inv = [
        [jac[1][1] / det_j, -jac[0][1] / det_j],
        [-jac[1][0] / det_j, jac[0][0] / det_j],
    ];
    let mut grad = [[0.0; 2]; MAX_NODES];
    for (g, d) in grad.iter_mut().zip(&shape.dn[..n]) {
        g[0] = inv[0][0] * d[0] + inv[0][1] * d[1];
        g[1] = inv[1][0] * d[0] + inv[1][1] * d[1];
    }
    let mut strain = [0.0; 3];
    if !u_e.is_empty() {
        for (i, g) in grad[..n].iter().enumerate() {
            let (ux, uy) = (u_e[2 * i], u_e[2 * i + 1]);
            strain[0] += g[0] * ux;
            strain[1] += g[1] * uy;
            strain[2] += g[1] * ux + g[0] * uy;
        }
    }
    Ok(Kinematics {
        shape,
        grad,
        det_j,
        strain,
    })
}
