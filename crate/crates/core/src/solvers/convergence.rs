//! Residual and correction tests with a time-averaged flux scale.

/// Per-field quantities entering the convergence tests.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldStats {
    /// Largest absolute residual over the free DOFs of the field.
    pub r_max: f64,
    /// Time-averaged flux `q~`.
    pub q_tilde: f64,
    /// Largest absolute entry of the last correction.
    pub c_max: f64,
    /// Largest change of the field since the start of the increment.
    pub delta_a_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVerdict {
    pub stats: FieldStats,
    pub residual_ok: bool,
    pub correction_ok: bool,
}

impl FieldVerdict {
    pub fn converged(&self) -> bool {
        self.residual_ok && self.correction_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceVerdict {
    pub u: FieldVerdict,
    pub phi: FieldVerdict,
}

impl ConvergenceVerdict {
    pub fn converged(&self) -> bool {
        self.u.converged() && self.phi.converged()
    }
}

/// Tolerances for [`check_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub residual: f64,
    pub correction: f64,
    pub linear: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 0.005,
            correction: 0.01,
            linear: 1e-8,
        }
    }
}

/// Applies the residual test and, when it passes, the correction test.
///
/// A zero flux scale only accepts an exactly zero residual. A residual below
/// `linear * q` is accepted without looking at the correction, which lets a
/// linear problem converge after a single solve.
pub fn check_field(stats: FieldStats, tol: Tolerances) -> FieldVerdict {
    let residual_ok = if stats.q_tilde > 0.0 {
        stats.r_max <= tol.residual * stats.q_tilde
    } else {
        stats.r_max == 0.0
    };
    let correction_ok = residual_ok
        && (stats.r_max <= tol.linear * stats.q_tilde
            || stats.r_max == 0.0
            || stats.c_max <= tol.correction * stats.delta_a_max);
    FieldVerdict {
        stats,
        residual_ok,
        correction_ok,
    }
}

pub fn check_convergence(u: FieldStats, phi: FieldStats, tol: Tolerances) -> ConvergenceVerdict {
    ConvergenceVerdict {
        u: check_field(u, tol),
        phi: check_field(phi, tol),
    }
}

/// Running average of the per-increment mean flux. Increments with zero flux
/// are not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FluxAverager {
    sum: f64,
    count: usize,
}

impl FluxAverager {
    /// Average including a current, uncommitted value.
    pub fn q_tilde(&self, current: f64) -> f64 {
        if current > 0.0 {
            (self.sum + current) / (self.count + 1) as f64
        } else if self.count > 0 {
            self.sum / self.count as f64
        } else {
            0.0
        }
    }

    pub fn commit(&mut self, mean: f64) {
        if mean > 0.0 {
            self.sum += mean;
            self.count += 1;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}
