use std::collections::HashSet;

use crate::fem::ElementOrder;
use crate::mesh::Mesh;
use crate::Result;

const LINEAR_EDGES: [[usize; 2]; 4] = [[0, 1], [1, 2], [2, 3], [3, 0]];
// corner, mid-side, corner
const QUADRATIC_EDGES: [[usize; 3]; 4] = [[0, 4, 1], [1, 5, 2], [2, 6, 3], [3, 7, 0]];

/// Consistent nodal forces for a uniform traction `t` (MPa) acting on every
/// element edge whose nodes all belong to `set`. Returned with the
/// interleaved displacement layout.
pub fn edge_traction(mesh: &Mesh, set: &str, t: [f64; 2]) -> Result<Vec<f64>> {
    let members: HashSet<usize> = mesh.node_set(set)?.iter().copied().collect();
    let mut f = vec![0.0; 2 * mesh.n_nodes()];
    let gauss = [
        (-(0.6f64).sqrt(), 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        ((0.6f64).sqrt(), 5.0 / 9.0),
    ];
    let edges: Vec<Vec<usize>> = match mesh.order {
        ElementOrder::Linear => LINEAR_EDGES.iter().map(|e| e.to_vec()).collect(),
        ElementOrder::Quadratic => QUADRATIC_EDGES.iter().map(|e| e.to_vec()).collect(),
    };
    for el in &mesh.elements {
        for edge in &edges {
            let nodes: Vec<usize> = edge.iter().map(|&k| el[k]).collect();
            if !nodes.iter().all(|n| members.contains(n)) {
                continue;
            }
            let x: Vec<[f64; 2]> = nodes.iter().map(|&n| mesh.nodes[n]).collect();
            for &(s, w) in &gauss {
                let (n, dn): (Vec<f64>, Vec<f64>) = if nodes.len() == 2 {
                    (vec![0.5 * (1.0 - s), 0.5 * (1.0 + s)], vec![-0.5, 0.5])
                } else {
                    (
                        vec![0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)],
                        vec![s - 0.5, -2.0 * s, s + 0.5],
                    )
                };
                let dx: f64 = dn.iter().zip(&x).map(|(d, p)| d * p[0]).sum();
                let dy: f64 = dn.iter().zip(&x).map(|(d, p)| d * p[1]).sum();
                let ds = dx.hypot(dy) * w * mesh.thickness;
                for (a, &node) in nodes.iter().enumerate() {
                    f[2 * node] += n[a] * t[0] * ds;
                    f[2 * node + 1] += n[a] * t[1] * ds;
                }
            }
        }
    }
    Ok(f)
}

/// Sum of the internal force component `component` (0 = x, 1 = y) over
/// `nodes`. At constrained DOFs this is the support reaction.
pub fn reaction(r_u: &[f64], nodes: &[usize], component: usize) -> f64 {
    nodes.iter().map(|&n| r_u[2 * n + component]).sum()
}
