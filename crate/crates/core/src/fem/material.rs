use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Elastic and fracture constants of an isotropic plane-strain solid.
///
/// `gc` is in N/mm, `length_scale` in mm, `density` in tonne/mm^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub young: f64,
    pub poisson: f64,
    pub gc: f64,
    pub length_scale: f64,
    pub density: f64,
    /// Residual stiffness kept in fully broken material.
    pub k_residual: f64,
}

impl MaterialParams {
    pub const DEFAULT_K: f64 = 1e-7;

    pub fn new(young: f64, poisson: f64, gc: f64, length_scale: f64) -> Result<Self> {
        let p = Self {
            young,
            poisson,
            gc,
            length_scale,
            density: 0.0,
            k_residual: Self::DEFAULT_K,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k_residual = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.young > 0.0) {
            bad.push(format!("E must be > 0 (got {})", self.young));
        }
        if !(0.0..0.5).contains(&self.poisson) {
            bad.push(format!("nu must be in [0, 0.5) (got {})", self.poisson));
        }
        if !(self.gc > 0.0) {
            bad.push(format!("Gc must be > 0 (got {})", self.gc));
        }
        if !(self.length_scale > 0.0) {
            bad.push(format!(
                "length scale must be > 0 (got {})",
                self.length_scale
            ));
        }
        if !(self.density >= 0.0) {
            bad.push(format!("density must be >= 0 (got {})", self.density));
        }
        if !(self.k_residual > 0.0 && self.k_residual < 1e-2) {
            bad.push(format!(
                "k must satisfy 0 < k << 1 (got {})",
                self.k_residual
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidMaterial(bad.join("; ")))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.young * self.poisson / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson))
    }

    pub fn mu(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// Bulk modulus for n = 2 (plane strain).
    pub fn bulk_2d(&self) -> f64 {
        self.lambda() + self.mu()
    }

    /// P-wave (constrained) modulus `lambda + 2 mu`.
    pub fn p_modulus(&self) -> f64 {
        self.lambda() + 2.0 * self.mu()
    }

    /// Plane-strain elasticity matrix in Voigt form with engineering shear.
    pub fn elasticity(&self) -> [[f64; 3]; 3] {
        let l = self.lambda();
        let m = self.mu();
        [[l + 2.0 * m, l, 0.0], [l, l + 2.0 * m, 0.0], [0.0, 0.0, m]]
    }

    pub fn stress(&self, eps: &[f64; 3]) -> [f64; 3] {
        let l = self.lambda();
        let m = self.mu();
        let tr = eps[0] + eps[1];
        [
            l * tr + 2.0 * m * eps[0],
            l * tr + 2.0 * m * eps[1],
            m * eps[2],
        ]
    }
}
