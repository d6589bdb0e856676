use crate::fatigue::{accumulate_fatigue, fatigue_degradation, FatigueParams};
use crate::fem::{gauss_points, shape_eval, EnergySplit, MaterialParams};
use crate::mesh::{DirichletSpec, Mesh};
use crate::system::{
    build_dof_map, edge_traction, Assembler, DofMap, EvalOptions, Evaluation, HistorySource,
    SolutionState,
};
use crate::Result;

/// Everything that stays fixed over a run: mesh, constraints, material and
/// the reference external force.
#[derive(Debug)]
pub struct Model {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub assembler: Assembler,
    pub params: MaterialParams,
    pub split: EnergySplit,
    /// External nodal force at unit load factor.
    pub reference_force: Option<Vec<f64>>,
    pub fatigue: Option<FatigueParams>,
}

/// Load level and time for one increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadStep {
    pub lambda: f64,
    pub time: f64,
    pub dt: f64,
    /// Include Backward Euler inertia.
    pub dynamic: bool,
}

/// Residual on the free DOFs plus the full evaluation it came from.
#[derive(Debug, Clone)]
pub(crate) struct Residual {
    pub r: Vec<f64>,
    pub eval: Evaluation,
    pub mean_flux_u: f64,
    pub mean_flux_phi: f64,
}

impl Model {
    pub fn new(
        mesh: Mesh,
        specs: &[DirichletSpec],
        params: MaterialParams,
        split: EnergySplit,
    ) -> Result<Self> {
        for s in specs {
            s.validate()?;
        }
        params.validate()?;
        let dofs = build_dof_map(&mesh, specs)?;
        let assembler = Assembler::new(&mesh, &dofs);
        Ok(Self {
            mesh,
            dofs,
            assembler,
            params,
            split,
            reference_force: None,
            fatigue: None,
        })
    }

    /// Adds a uniform traction on the edges of a node set.
    pub fn with_traction(mut self, set: &str, traction: [f64; 2]) -> Result<Self> {
        let f = edge_traction(&self.mesh, set, traction)?;
        match &mut self.reference_force {
            Some(existing) => existing.iter_mut().zip(&f).for_each(|(a, b)| *a += b),
            None => self.reference_force = Some(f),
        }
        Ok(self)
    }

    pub fn with_fatigue(mut self, fatigue: FatigueParams) -> Result<Self> {
        fatigue.validate()?;
        self.fatigue = Some(fatigue);
        Ok(self)
    }

    /// Zero fields with prescribed values at load factor 0.
    pub fn initial_state(&self) -> SolutionState {
        let mut s = SolutionState::new(
            self.mesh.n_nodes(),
            self.mesh.n_elements(),
            self.mesh.n_ip(),
        );
        self.dofs.apply_prescribed(&mut s.u, &mut s.phi, 0.0);
        s
    }

    pub fn n_ip_total(&self) -> usize {
        self.mesh.n_elements() * self.mesh.n_ip()
    }

    /// Phase field interpolated at every integration point.
    pub fn ip_phase(&self, phi: &[f64]) -> Vec<f64> {
        let gps = gauss_points(self.mesh.order);
        let shapes: Vec<_> = gps
            .iter()
            .map(|g| shape_eval(self.mesh.order, g.xi, g.eta))
            .collect();
        let mut out = Vec::with_capacity(self.n_ip_total());
        for el in &self.mesh.elements {
            for s in &shapes {
                out.push(el.iter().zip(s.values()).map(|(&n, w)| w * phi[n]).sum());
            }
        }
        out
    }

    /// Evaluates residuals (and optionally tangents) at trial fields `u`,
    /// `phi` for an increment starting from `start`.
    pub(crate) fn residual(
        &self,
        start: &SolutionState,
        u: &[f64],
        phi: &[f64],
        step: &LoadStep,
        tangent_u: bool,
        tangent_phi: bool,
    ) -> Result<Residual> {
        self.residual_with(
            start,
            u,
            phi,
            step,
            HistorySource::Trial,
            tangent_u,
            tangent_phi,
        )
    }

    /// As [`Model::residual`] with an explicit history source.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn residual_with(
        &self,
        start: &SolutionState,
        u: &[f64],
        phi: &[f64],
        step: &LoadStep,
        history: HistorySource<'_>,
        tangent_u: bool,
        tangent_phi: bool,
    ) -> Result<Residual> {
        let accel;
        let inertia = if step.dynamic {
            let inv_dt = 1.0 / step.dt;
            accel = u
                .iter()
                .zip(&start.u)
                .zip(&start.velocity)
                .map(|((un, uo), vo)| ((un - uo) * inv_dt - vo) * inv_dt)
                .collect::<Vec<_>>();
            Some((accel.as_slice(), inv_dt * inv_dt))
        } else {
            None
        };
        let opts = EvalOptions {
            split: self.split,
            history,
            tangent_u,
            tangent_phi,
            inertia,
            fatigue: self.fatigue.is_some(),
        };
        let eval = self
            .assembler
            .evaluate(&self.mesh, u, phi, &start.ip, &self.params, &opts)?;
        let mut r = vec![0.0; self.dofs.n_unknowns()];
        let n_u = self.dofs.n_u();
        for (slot, eq) in self.dofs.u_equations().iter().enumerate() {
            if let Some(eq) = eq {
                let f = self
                    .reference_force
                    .as_ref()
                    .map_or(0.0, |f| step.lambda * f[slot]);
                r[*eq] = eval.r_u[slot] - f;
            }
        }
        for (node, eq) in self.dofs.phi_equations().iter().enumerate() {
            if let Some(eq) = eq {
                r[n_u + eq] = eval.r_phi[node];
            }
        }
        let mean_flux_u = eval.flux_u.iter().sum::<f64>() / eval.flux_u.len().max(1) as f64;
        let mean_flux_phi = eval.flux_phi.iter().sum::<f64>() / eval.flux_phi.len().max(1) as f64;
        Ok(Residual {
            r,
            eval,
            mean_flux_u,
            mean_flux_phi,
        })
    }

    /// Builds the converged state: commits the trial history, advances the
    /// fatigue variables and, for dynamic steps, the velocity and
    /// acceleration.
    pub(crate) fn commit(
        &self,
        start: &SolutionState,
        u: Vec<f64>,
        phi: Vec<f64>,
        eval: &Evaluation,
        step: &LoadStep,
    ) -> SolutionState {
        let mut ip = start.ip.clone();
        for (s, r) in ip.iter_mut().zip(&eval.ip) {
            s.history = r.history;
            if let Some(fp) = &self.fatigue {
                let g = (1.0 - r.phi) * (1.0 - r.phi);
                let alpha = g * r.psi_plus;
                s.alpha_bar = accumulate_fatigue(alpha, s.alpha, s.alpha_bar);
                s.alpha = alpha;
                s.fatigue = fatigue_degradation(s.alpha_bar, fp);
            }
        }
        let (velocity, accel) = if step.dynamic {
            let inv_dt = 1.0 / step.dt;
            let v: Vec<f64> = u
                .iter()
                .zip(&start.u)
                .map(|(a, b)| (a - b) * inv_dt)
                .collect();
            let a = v
                .iter()
                .zip(&start.velocity)
                .map(|(vn, vo)| (vn - vo) * inv_dt)
                .collect();
            (v, a)
        } else {
            (start.velocity.clone(), start.accel.clone())
        };
        SolutionState {
            time: step.time,
            u,
            phi,
            ip,
            velocity,
            accel,
        }
    }
}
