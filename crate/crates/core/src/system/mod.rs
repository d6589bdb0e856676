//! Global degrees of freedom, sparse assembly and the linear-solve contract.
//!
//! The global tangent is block diagonal: a displacement block and a phase
//! block with no coupling. Each block is factored on its own.

mod assembly;
mod dofs;
mod loads;
mod profile;
mod sparse;
mod state;

use std::sync::Arc;

pub use assembly::{Assembler, EvalOptions, Evaluation, HistorySource};
pub use dofs::{build_dof_map, Constraint, DofMap};
pub use loads::{edge_traction, reaction};
pub use profile::{ProfileCholesky, ProfileSymbolic};
pub use sparse::{CsrMatrix, CsrPattern};
pub use state::{IntegrationPointState, SolutionState};

use crate::Result;

/// Reduced linear system `K dz = R` on the free DOFs, stacked as
/// `[u-block, phi-block]`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub kuu: CsrMatrix,
    pub kpp: CsrMatrix,
    pub residual: Vec<f64>,
}

impl SparseSystem {
    pub fn n_u(&self) -> usize {
        self.kuu.n()
    }

    pub fn n(&self) -> usize {
        self.kuu.n() + self.kpp.n()
    }

    /// `K x` for the stacked operator.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let nu = self.n_u();
        let mut y = self.kuu.mul_vec(&x[..nu]);
        y.extend(self.kpp.mul_vec(&x[nu..]));
        y
    }
}

/// Factors of the two diagonal blocks. Either may be absent when only one
/// field is being solved.
#[derive(Debug, Clone)]
pub struct BlockFactor {
    n_u: usize,
    n_phi: usize,
    u: Option<ProfileCholesky>,
    phi: Option<ProfileCholesky>,
}

impl BlockFactor {
    pub fn new(
        kuu: Option<(&Arc<ProfileSymbolic>, &CsrMatrix)>,
        kpp: Option<(&Arc<ProfileSymbolic>, &CsrMatrix)>,
    ) -> Result<Self> {
        let u = kuu
            .map(|(s, k)| ProfileCholesky::factor(s.clone(), k))
            .transpose()?;
        let phi = kpp
            .map(|(s, k)| ProfileCholesky::factor(s.clone(), k))
            .transpose()?;
        Ok(Self {
            n_u: u.as_ref().map_or(0, ProfileCholesky::n),
            n_phi: phi.as_ref().map_or(0, ProfileCholesky::n),
            u,
            phi,
        })
    }

    pub fn has_u(&self) -> bool {
        self.u.is_some()
    }

    pub fn has_phi(&self) -> bool {
        self.phi.is_some()
    }

    pub fn solve_u(&self, r: &[f64]) -> Vec<f64> {
        self.u
            .as_ref()
            .expect("displacement block factored")
            .solve(r)
    }

    pub fn solve_phi(&self, r: &[f64]) -> Vec<f64> {
        self.phi.as_ref().expect("phase block factored").solve(r)
    }

    /// Solves the stacked system; both blocks must be present.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.n_u + self.n_phi);
        let mut x = self.solve_u(&r[..self.n_u]);
        x.extend(self.solve_phi(&r[self.n_u..]));
        x
    }
}

/// Solves `K dz = R` by factoring each block.
pub fn solve_linear(system: &SparseSystem) -> Result<Vec<f64>> {
    let su = Arc::new(ProfileSymbolic::new(&system.kuu.pattern));
    let sp = Arc::new(ProfileSymbolic::new(&system.kpp.pattern));
    let f = BlockFactor::new(Some((&su, &system.kuu)), Some((&sp, &system.kpp)))?;
    Ok(f.solve(&system.residual))
}
