//! Structured quadrilateral meshes, named regions and Dirichlet data.

mod generate;
mod io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fem::{gauss_points, kinematics, ElementOrder};
use crate::{Error, Result};

pub use generate::{generate_structured_quad_mesh, GridSpec, RefinementBand};
pub use io::{read_mesh, write_mesh};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub order: ElementOrder,
    /// Counter-clockwise connectivity, 4 or 8 nodes per element.
    pub elements: Vec<Vec<usize>>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub element_sets: BTreeMap<String, Vec<usize>>,
    pub thickness: f64,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_ip(&self) -> usize {
        self.order.n_ip()
    }

    pub fn element_coords(&self, e: usize) -> Vec<[f64; 2]> {
        self.elements[e].iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Largest bounding-box side, used to scale geometric tolerances.
    pub fn domain_size(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    }

    /// Shortest corner-to-corner element edge.
    pub fn min_element_size(&self) -> f64 {
        self.elements
            .iter()
            .flat_map(|el| {
                (0..4).map(move |i| {
                    let a = self.nodes[el[i]];
                    let b = self.nodes[el[(i + 1) % 4]];
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownNodeSet(name.to_string()))
    }

    /// Checks connectivity, set references and that `det J > 0` at every
    /// Gauss point.
    pub fn validate(&self) -> Result<()> {
        let m = self.order.nodes();
        let nn = self.nodes.len();
        for (e, el) in self.elements.iter().enumerate() {
            if el.len() != m {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has {} nodes, expected {m}",
                    el.len()
                )));
            }
            if let Some(&bad) = el.iter().find(|&&n| n >= nn) {
                return Err(Error::InvalidMesh(format!(
                    "element {e} references node {bad}"
                )));
            }
            let coords = self.element_coords(e);
            for gp in gauss_points(self.order) {
                match kinematics(self.order, &coords, gp.xi, gp.eta, &[]) {
                    Ok(_) => {}
                    Err(Error::DistortedElement { det_j, .. }) => {
                        return Err(Error::DistortedElement { element: e, det_j })
                    }
                    Err(other) => return Err(other),
                }
            }
        }
        for (name, set) in &self.node_sets {
            if let Some(&bad) = set.iter().find(|&&n| n >= nn) {
                return Err(Error::InvalidMesh(format!(
                    "node set `{name}` references node {bad}"
                )));
            }
        }
        for (name, set) in &self.element_sets {
            if let Some(&bad) = set.iter().find(|&&e| e >= self.elements.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element set `{name}` references element {bad}"
                )));
            }
        }
        Ok(())
    }

    /// Builds the node-to-node adjacency (nodes sharing an element).
    pub fn node_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for el in &self.elements {
            for &a in el {
                adj[a].extend(el.iter().copied());
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// Geometric predicate for selecting nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    XEquals(f64),
    YEquals(f64),
    Rect {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    /// Points within `distance` of the segment.
    NearSegment {
        start: [f64; 2],
        end: [f64; 2],
        distance: f64,
    },
    All(Vec<Region>),
}

impl Region {
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        match self {
            Region::XEquals(x) => (p[0] - x).abs() <= tol,
            Region::YEquals(y) => (p[1] - y).abs() <= tol,
            Region::Rect {
                x_min,
                x_max,
                y_min,
                y_max,
            } => {
                p[0] >= x_min - tol
                    && p[0] <= x_max + tol
                    && p[1] >= y_min - tol
                    && p[1] <= y_max + tol
            }
            Region::NearSegment {
                start,
                end,
                distance,
            } => point_segment_distance(p, *start, *end) <= distance + tol,
            Region::All(parts) => parts.iter().all(|r| r.contains(p, tol)),
        }
    }
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Returns the sorted indices of all nodes inside `region`, using a
/// tolerance of `1e-9` times the domain size. An empty match is an error.
pub fn resolve_boundary_set(mesh: &Mesh, region: &Region) -> Result<Vec<usize>> {
    let tol = 1e-9 * mesh.domain_size();
    let found: Vec<usize> = mesh
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, p)| region.contains(**p, tol))
        .map(|(i, _)| i)
        .collect();
    if found.is_empty() {
        Err(Error::EmptyNodeSet(format!("{region:?}")))
    } else {
        Ok(found)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotchRepresentation {
    /// Crack faces are topologically disconnected by duplicating the nodes
    /// on the segment (except interior tips).
    DuplicatedNodes,
    /// The segment is represented by `phi = 1` Dirichlet conditions.
    PhasePrescribed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchSpec {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub representation: NotchRepresentation,
}

impl NotchSpec {
    pub fn duplicated(start: [f64; 2], end: [f64; 2]) -> Self {
        Self {
            start,
            end,
            representation: NotchRepresentation::DuplicatedNodes,
        }
    }

    pub fn prescribed(start: [f64; 2], end: [f64; 2]) -> Self {
        Self {
            start,
            end,
            representation: NotchRepresentation::PhasePrescribed,
        }
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Ux,
    Uy,
    Phase,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Ux => "ux",
            Field::Uy => "uy",
            Field::Phase => "phi",
        }
    }
}

/// Value of a Dirichlet condition at load factor `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Prescribed {
    Constant(f64),
    /// `value * lambda(t)`.
    Ramp(f64),
}

impl Prescribed {
    pub fn at(self, load_factor: f64) -> f64 {
        match self {
            Prescribed::Constant(v) => v,
            Prescribed::Ramp(v) => v * load_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BcTarget {
    Set(String),
    Nodes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpec {
    pub field: Field,
    pub target: BcTarget,
    pub value: Prescribed,
}

impl DirichletSpec {
    pub fn on_set(field: Field, set: &str, value: Prescribed) -> Self {
        Self {
            field,
            target: BcTarget::Set(set.to_string()),
            value,
        }
    }

    pub fn nodes<'a>(&'a self, mesh: &'a Mesh) -> Result<&'a [usize]> {
        match &self.target {
            BcTarget::Set(name) => mesh.node_set(name),
            BcTarget::Nodes(list) => Ok(list),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.field == Field::Phase && self.value != Prescribed::Constant(1.0) {
            return Err(Error::InvalidBoundaryCondition(
                "phase-field prescriptions must be the constant value 1".into(),
            ));
        }
        Ok(())
    }
}

/// Flags every node within `h_e / 2` of the notch segment with `phi = 1`.
pub fn prescribe_initial_crack(mesh: &Mesh, notch: &NotchSpec) -> Result<DirichletSpec> {
    if notch.representation != NotchRepresentation::PhasePrescribed {
        return Err(Error::InvalidNotch(
            "initial crack prescription needs a phase-field-prescribed notch".into(),
        ));
    }
    let (lo, hi) = mesh.bounding_box();
    let tol = 1e-9 * mesh.domain_size();
    for p in [notch.start, notch.end] {
        if p[0] < lo[0] - tol || p[0] > hi[0] + tol || p[1] < lo[1] - tol || p[1] > hi[1] + tol {
            return Err(Error::NotchOutsideDomain {
                start: notch.start,
                end: notch.end,
            });
        }
    }
    let region = Region::NearSegment {
        start: notch.start,
        end: notch.end,
        distance: 0.5 * mesh.min_element_size(),
    };
    let nodes = resolve_boundary_set(mesh, &region)?;
    Ok(DirichletSpec {
        field: Field::Phase,
        target: BcTarget::Nodes(nodes),
        value: Prescribed::Constant(1.0),
    })
}
