use serde::{Deserialize, Serialize};

pub(crate) const MAX_NODES: usize = 8;

/// Interpolation order of the quadrilateral family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementOrder {
    /// 4-node bilinear quadrilateral.
    Linear,
    /// 8-node serendipity quadrilateral.
    Quadratic,
}

impl ElementOrder {
    pub fn from_degree(degree: u32) -> Option<Self> {
        match degree {
            1 => Some(Self::Linear),
            2 => Some(Self::Quadratic),
            _ => None,
        }
    }

    pub fn degree(self) -> u32 {
        match self {
            Self::Linear => 1,
            Self::Quadratic => 2,
        }
    }

    pub fn nodes(self) -> usize {
        match self {
            Self::Linear => 4,
            Self::Quadratic => 8,
        }
    }

    pub fn gauss_per_dir(self) -> usize {
        match self {
            Self::Linear => 2,
            Self::Quadratic => 3,
        }
    }

    pub fn n_ip(self) -> usize {
        self.gauss_per_dir() * self.gauss_per_dir()
    }

    /// Reference coordinates of the element nodes (corners counter-clockwise,
    /// then mid-side nodes of edges 0-1, 1-2, 2-3, 3-0).
    pub fn reference_nodes(self) -> &'static [[f64; 2]] {
        const Q8: [[f64; 2]; 8] = [
            [-1.0, -1.0],
            [1.0, -1.0],
            [1.0, 1.0],
            [-1.0, 1.0],
            [0.0, -1.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [-1.0, 0.0],
        ];
        match self {
            Self::Linear => &Q8[..4],
            Self::Quadratic => &Q8[..],
        }
    }
}

/// Shape-function values and parametric derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub len: usize,
    pub n: [f64; MAX_NODES],
    /// `dN/dxi`, `dN/deta` per node.
    pub dn: [[f64; 2]; MAX_NODES],
}

impl Shape {
    pub fn values(&self) -> &[f64] {
        &self.n[..self.len]
    }

    pub fn derivatives(&self) -> &[[f64; 2]] {
        &self.dn[..self.len]
    }
}

pub fn shape_eval(order: ElementOrder, xi: f64, eta: f64) -> Shape {
    let mut s = Shape {
        len: order.nodes(),
        n: [0.0; MAX_NODES],
        dn: [[0.0; 2]; MAX_NODES],
    };
    let refs = order.reference_nodes();
    match order {
        ElementOrder::Linear => {
            for (i, r) in refs.iter().enumerate() {
                let a = 1.0 + r[0] * xi;
                let b = 1.0 + r[1] * eta;
                s.n[i] = 0.25 * a * b;
                s.dn[i] = [0.25 * r[0] * b, 0.25 * r[1] * a];
            }
        }
        ElementOrder::Quadratic => {
            for (i, r) in refs.iter().enumerate() {
                let (xr, yr) = (r[0], r[1]);
                if i < 4 {
                    let a = 1.0 + xr * xi;
                    let b = 1.0 + yr * eta;
                    let c = xr * xi + yr * eta - 1.0;
                    s.n[i] = 0.25 * a * b * c;
                    s.dn[i] = [0.25 * xr * b * (c + a), 0.25 * yr * a * (c + b)];
                } else if xr == 0.0 {
                    let b = 1.0 + yr * eta;
                    s.n[i] = 0.5 * (1.0 - xi * xi) * b;
                    s.dn[i] = [-xi * b, 0.5 * (1.0 - xi * xi) * yr];
                } else {
                    let a = 1.0 + xr * xi;
                    s.n[i] = 0.5 * (1.0 - eta * eta) * a;
                    s.dn[i] = [0.5 * (1.0 - eta * eta) * xr, -eta * a];
                }
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPoint {
    pub xi: f64,
    pub eta: f64,
    pub weight: f64,
}

/// Tensor-product Gauss-Legendre rule: 2x2 for linear, 3x3 for quadratic.
pub fn gauss_points(order: ElementOrder) -> &'static [GaussPoint] {
    use std::sync::OnceLock;
    static LINEAR: OnceLock<Vec<GaussPoint>> = OnceLock::new();
    static QUADRATIC: OnceLock<Vec<GaussPoint>> = OnceLock::new();
    let build = |pts: &[(f64, f64)]| {
        let mut out = Vec::with_capacity(pts.len() * pts.len());
        for &(eta, we) in pts {
            for &(xi, wx) in pts {
                out.push(GaussPoint {
                    xi,
                    eta,
                    weight: wx * we,
                });
            }
        }
        out
    };
    match order {
        ElementOrder::Linear => LINEAR.get_or_init(|| {
            let g = 1.0 / 3f64.sqrt();
            build(&[(-g, 1.0), (g, 1.0)])
        }),
        ElementOrder::Quadratic => QUADRATIC.get_or_init(|| {
            let g = (0.6f64).sqrt();
            build(&[(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)])
        }),
    }
}
