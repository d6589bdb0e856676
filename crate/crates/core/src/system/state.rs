use serde::{Deserialize, Serialize};

/// Per-integration-point internal variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationPointState {
    /// History field `H` (MPa), non-decreasing over increments.
    pub history: f64,
    /// Fatigue loading variable `alpha` at the last converged increment.
    pub alpha: f64,
    /// Cumulative fatigue variable `alpha_bar`, non-decreasing.
    pub alpha_bar: f64,
    /// Fatigue degradation `f(alpha_bar)` in `(0, 1]`.
    pub fatigue: f64,
}

impl Default for IntegrationPointState {
    fn default() -> Self {
        Self {
            history: 0.0,
            alpha: 0.0,
            alpha_bar: 0.0,
            fatigue: 1.0,
        }
    }
}

/// Nodal unknowns plus integration-point variables. `u`, `velocity` and
/// `accel` are interleaved `[x0, y0, x1, y1, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionState {
    pub time: f64,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    /// `n_elements * n_ip` entries, element-major.
    pub ip: Vec<IntegrationPointState>,
    pub velocity: Vec<f64>,
    pub accel: Vec<f64>,
}

impl SolutionState {
    pub fn new(n_nodes: usize, n_elements: usize, n_ip: usize) -> Self {
        Self {
            time: 0.0,
            u: vec![0.0; 2 * n_nodes],
            phi: vec![0.0; n_nodes],
            ip: vec![IntegrationPointState::default(); n_elements * n_ip],
            velocity: vec![0.0; 2 * n_nodes],
            accel: vec![0.0; 2 * n_nodes],
        }
    }

    pub fn history(&self) -> Vec<f64> {
        self.ip.iter().map(|s| s.history).collect()
    }
}
