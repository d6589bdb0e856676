use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Mesh, NotchRepresentation, NotchSpec};
use crate::fem::ElementOrder;
use crate::{Error, Result};

/// Rectangle in which the grid spacing drops to `he`. The grid is a tensor
/// product, so the fine x-spacing extends over the full height and the fine
/// y-spacing over the full width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementBand {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub he: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width: f64,
    pub height: f64,
    pub he: f64,
    pub notch: Option<NotchSpec>,
    pub order: ElementOrder,
    pub band: Option<RefinementBand>,
    pub thickness: f64,
}

impl GridSpec {
    pub fn new(width: f64, height: f64, he: f64) -> Self {
        Self {
            width,
            height,
            he,
            notch: None,
            order: ElementOrder::Linear,
            band: None,
            thickness: 1.0,
        }
    }

    pub fn notch(mut self, notch: NotchSpec) -> Self {
        self.notch = Some(notch);
        self
    }

    pub fn order(mut self, order: ElementOrder) -> Self {
        self.order = order;
        self
    }

    pub fn band(mut self, band: RefinementBand) -> Self {
        self.band = Some(band);
        self
    }
}

fn grid_line(length: f64, he: f64, band: Option<(f64, f64, f64)>, extra: &[f64]) -> Vec<f64> {
    let tol = 1e-9 * length;
    let mut breaks = vec![0.0, length];
    if let Some((lo, hi, _)) = band {
        breaks.push(lo.clamp(0.0, length));
        breaks.push(hi.clamp(0.0, length));
    }
    breaks.extend(extra.iter().map(|v| v.clamp(0.0, length)));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= tol);

    let mut pts = vec![0.0];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let h = match band {
            Some((lo, hi, h)) if mid > lo && mid < hi => h,
            _ => he,
        };
        let n = ((b - a) / h - 1e-6).ceil().max(1.0) as usize;
        for k in 1..=n {
            pts.push(if k == n {
                b
            } else {
                a + (b - a) * k as f64 / n as f64
            });
        }
    }
    pts
}

fn with_midpoints(line: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * line.len() - 1);
    for w in line.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*line.last().unwrap());
    out
}

/// Generates a structured quadrilateral mesh of `[0, width] x [0, height]`.
///
/// Boundary node sets `top`, `bottom`, `left`, `right` are always created.
/// A duplicated-node notch must be axis-aligned; its nodes are split so
/// that elements on either side reference different nodes (interior tips
/// stay shared) and the sets `notch_lower`/`notch_upper` record both faces.
pub fn generate_structured_quad_mesh(spec: &GridSpec) -> Result<Mesh> {
    let GridSpec {
        width,
        height,
        he,
        order,
        ..
    } = *spec;
    if !(width > 0.0 && height > 0.0 && he > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "width, height and he must be positive (got {width}, {height}, {he})"
        )));
    }
    if he >= width.min(height) {
        return Err(Error::InvalidGeometry(format!(
            "he = {he} must be smaller than min(width, height) = {}",
            width.min(height)
        )));
    }
    if let Some(b) = &spec.band {
        if !(b.he > 0.0 && b.x_max > b.x_min && b.y_max > b.y_min) {
            return Err(Error::InvalidGeometry(format!(
                "invalid refinement band {b:?}"
            )));
        }
    }
    let tol = 1e-9 * width.max(height);

    let mut x_extra = Vec::new();
    let mut y_extra = Vec::new();
    if let Some(n) = &spec.notch {
        for p in [n.start, n.end] {
            if p[0] < -tol || p[0] > width + tol || p[1] < -tol || p[1] > height + tol {
                return Err(Error::NotchOutsideDomain {
                    start: n.start,
                    end: n.end,
                });
            }
        }
        if n.representation == NotchRepresentation::DuplicatedNodes {
            let horizontal = (n.start[1] - n.end[1]).abs() <= tol;
            let vertical = (n.start[0] - n.end[0]).abs() <= tol;
            if n.length() <= tol || !(horizontal || vertical) {
                return Err(Error::InvalidNotch(
                    "duplicated-node notches must be non-degenerate and axis-aligned".into(),
                ));
            }
            x_extra.extend([n.start[0], n.end[0]]);
            y_extra.extend([n.start[1], n.end[1]]);
        }
    }

    let bx = spec.band.map(|b| (b.x_min, b.x_max, b.he));
    let by = spec.band.map(|b| (b.y_min, b.y_max, b.he));
    let mut xs = grid_line(width, he, bx, &x_extra);
    let mut ys = grid_line(height, he, by, &y_extra);
    let (nex, ney) = (xs.len() - 1, ys.len() - 1);
    if order == ElementOrder::Quadratic {
        xs = with_midpoints(&xs);
        ys = with_midpoints(&ys);
    }
    let step = if order == ElementOrder::Quadratic {
        2
    } else {
        1
    };

    // node (i, j) exists unless it is the centre of a quadratic element
    let mut id = vec![usize::MAX; xs.len() * ys.len()];
    let mut nodes = Vec::new();
    let idx = |i: usize, j: usize| i * ys.len() + j;
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            if step == 2 && i % 2 == 1 && j % 2 == 1 {
                continue;
            }
            id[idx(i, j)] = nodes.len();
            nodes.push([x, y]);
        }
    }

    let mut elements = Vec::with_capacity(nex * ney);
    for i in 0..nex {
        for j in 0..ney {
            let (i0, j0) = (step * i, step * j);
            let (i1, j1) = (i0 + step, j0 + step);
            let mut el = vec![
                id[idx(i0, j0)],
                id[idx(i1, j0)],
                id[idx(i1, j1)],
                id[idx(i0, j1)],
            ];
            if step == 2 {
                el.extend([
                    id[idx(i0 + 1, j0)],
                    id[idx(i1, j0 + 1)],
                    id[idx(i0 + 1, j1)],
                    id[idx(i0, j0 + 1)],
                ]);
            }
            elements.push(el);
        }
    }

    let mut node_sets = BTreeMap::new();
    if let Some(n) = spec
        .notch
        .filter(|n| n.representation == NotchRepresentation::DuplicatedNodes)
    {
        let horizontal = (n.start[1] - n.end[1]).abs() <= tol;
        // axis along the notch, and the normal axis
        let (ax, nx) = if horizontal { (0, 1) } else { (1, 0) };
        let lo = n.start[ax].min(n.end[ax]);
        let hi = n.start[ax].max(n.end[ax]);
        let line = n.start[nx];
        let extent = if horizontal { width } else { height };
        let on_boundary = |v: f64| v.abs() <= tol || (v - extent).abs() <= tol;
        let mut dup: HashMap<usize, usize> = HashMap::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for k in 0..nodes.len() {
            let p = nodes[k];
            if (p[nx] - line).abs() > tol {
                continue;
            }
            let s = p[ax];
            let interior = s > lo + tol && s < hi - tol;
            let mouth = (s - lo).abs() <= tol && on_boundary(lo)
                || (s - hi).abs() <= tol && on_boundary(hi);
            if interior || mouth {
                let new = nodes.len();
                nodes.push(p);
                dup.insert(k, new);
                lower.push(k);
                upper.push(new);
            }
        }
        for el in &mut elements {
            let centroid = el[..4].iter().map(|&k| nodes[k][nx]).sum::<f64>() / 4.0;
            if centroid > line {
                for k in el.iter_mut() {
                    if let Some(&d) = dup.get(k) {
                        *k = d;
                    }
                }
            }
        }
        node_sets.insert("notch_lower".to_string(), lower);
        node_sets.insert("notch_upper".to_string(), upper);
    }

    let scan = |pred: &dyn Fn([f64; 2]) -> bool| -> Vec<usize> {
        nodes
            .iter()
            .enumerate()
            .filter(|(_, p)| pred(**p))
            .map(|(i, _)| i)
            .collect()
    };
    node_sets.insert("bottom".into(), scan(&|p| p[1].abs() <= tol));
    node_sets.insert("top".into(), scan(&|p| (p[1] - height).abs() <= tol));
    node_sets.insert("left".into(), scan(&|p| p[0].abs() <= tol));
    node_sets.insert("right".into(), scan(&|p| (p[0] - width).abs() <= tol));

    let mut element_sets = BTreeMap::new();
    element_sets.insert("all".to_string(), (0..elements.len()).collect());
    if let Some(b) = &spec.band {
        let inside: Vec<usize> = elements
            .iter()
            .enumerate()
            .filter(|(_, el)| {
                let cx = el[..4].iter().map(|&k| nodes[k][0]).sum::<f64>() / 4.0;
                let cy = el[..4].iter().map(|&k| nodes[k][1]).sum::<f64>() / 4.0;
                cx > b.x_min && cx < b.x_max && cy > b.y_min && cy < b.y_max
            })
            .map(|(i, _)| i)
            .collect();
        element_sets.insert("band".to_string(), inside);
    }

    let mesh = Mesh {
        nodes,
        order,
        elements,
        node_sets,
        element_sets,
        thickness: spec.thickness,
    };
    mesh.validate()?;
    Ok(mesh)
}
