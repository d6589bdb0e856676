use crate::mesh::{DirichletSpec, Field, Mesh, Prescribed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub node: usize,
    pub field: Field,
    pub value: Prescribed,
}

impl Constraint {
    /// Index into the full nodal arrays (`u` interleaved, or `phi`).
    pub fn slot(&self) -> usize {
        match self.field {
            Field::Ux => 2 * self.node,
            Field::Uy => 2 * self.node + 1,
            Field::Phase => self.node,
        }
    }
}

/// Equation numbering of the stacked unknown vector `z = {u, phi}`.
///
/// Displacement unknowns come first (`0..n_u`), phase unknowns follow
/// (`n_u..n_u + n_phi`). Constrained DOFs carry no equation number.
#[derive(Debug, Clone)]
pub struct DofMap {
    n_nodes: usize,
    u_eq: Vec<Option<usize>>,
    phi_eq: Vec<Option<usize>>,
    n_u: usize,
    n_phi: usize,
    constraints: Vec<Constraint>,
}

impl DofMap {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_u + self.n_phi
    }

    /// Total number of nodal DOFs, constrained or not.
    pub fn n_total(&self) -> usize {
        3 * self.n_nodes
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Equation of the displacement slot `2 * node + component`.
    pub fn u_eq(&self, slot: usize) -> Option<usize> {
        self.u_eq[slot]
    }

    /// Equation (within the phase block) of `node`.
    pub fn phi_eq(&self, node: usize) -> Option<usize> {
        self.phi_eq[node]
    }

    pub fn u_equations(&self) -> &[Option<usize>] {
        &self.u_eq
    }

    pub fn phi_equations(&self) -> &[Option<usize>] {
        &self.phi_eq
    }

    /// Writes the prescribed values for load factor `lambda` into the full
    /// nodal arrays.
    pub fn apply_prescribed(&self, u: &mut [f64], phi: &mut [f64], lambda: f64) {
        for c in &self.constraints {
            let v = c.value.at(lambda);
            match c.field {
                Field::Phase => phi[c.node] = v,
                _ => u[c.slot()] = v,
            }
        }
    }

    /// Gathers the free entries of the full nodal arrays into a stacked vector.
    pub fn gather(&self, u: &[f64], phi: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_unknowns()];
        for (slot, eq) in self.u_eq.iter().enumerate() {
            if let Some(eq) = eq {
                z[*eq] = u[slot];
            }
        }
        for (node, eq) in self.phi_eq.iter().enumerate() {
            if let Some(eq) = eq {
                z[self.n_u + eq] = phi[node];
            }
        }
        z
    }

    /// Adds `scale * dz` to the free entries of the full nodal arrays.
    pub fn scatter_add(&self, dz: &[f64], scale: f64, u: &mut [f64], phi: &mut [f64]) {
        for (slot, eq) in self.u_eq.iter().enumerate() {
            if let Some(eq) = eq {
                u[slot] += scale * dz[*eq];
            }
        }
        for (node, eq) in self.phi_eq.iter().enumerate() {
            if let Some(eq) = eq {
                phi[node] += scale * dz[self.n_u + eq];
            }
        }
    }
}

/// Numbers every unconstrained (node, field) pair. Node order is kept; the
/// linear solver applies its own fill-reducing permutation.
pub fn build_dof_map(mesh: &Mesh, specs: &[DirichletSpec]) -> Result<DofMap> {
    let nn = mesh.n_nodes();
    let mut fixed: Vec<Option<Prescribed>> = vec![None; 3 * nn];
    let mut constraints = Vec::new();
    for spec in specs {
        spec.validate()?;
        for &node in spec.nodes(mesh)? {
            if node >= nn {
                return Err(Error::InvalidBoundaryCondition(format!(
                    "node {node} does not exist"
                )));
            }
            let c = Constraint {
                node,
                field: spec.field,
                value: spec.value,
            };
            let key = match spec.field {
                Field::Phase => 2 * nn + node,
                _ => c.slot(),
            };
            match fixed[key] {
                None => {
                    fixed[key] = Some(spec.value);
                    constraints.push(c);
                }
                Some(prev) if prev == spec.value => {}
                Some(_) => {
                    return Err(Error::ConflictingPrescription {
                        node,
                        field: spec.field.name(),
                    })
                }
            }
        }
    }
    let mut u_eq = vec![None; 2 * nn];
    let mut n_u = 0;
    for (slot, eq) in u_eq.iter_mut().enumerate() {
        if fixed[slot].is_none() {
            *eq = Some(n_u);
            n_u += 1;
        }
    }
    let mut phi_eq = vec![None; nn];
    let mut n_phi = 0;
    for (node, eq) in phi_eq.iter_mut().enumerate() {
        if fixed[2 * nn + node].is_none() {
            *eq = Some(n_phi);
            n_phi += 1;
        }
    }
    constraints.sort_by_key(|c| (c.node, c.field as u8));
    Ok(DofMap {
        n_nodes: nn,
        u_eq,
        phi_eq,
        n_u,
        n_phi,
        constraints,
    })
}
