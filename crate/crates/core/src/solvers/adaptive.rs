//! Increment-size control: growth, cutback and the one-shot reduction
//! triggered by sudden damage.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepDecision {
    Accept,
    /// Discard the increment and retry it with the reduced size.
    Restart {
        dt: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSettings {
    pub phi_trigger: f64,
    pub dphi_trigger: f64,
    pub reduction: f64,
    pub growth: f64,
    /// Grow only when the increment needed at most this many iterations.
    pub growth_iterations: usize,
    pub cutback: f64,
    pub max_cutbacks: usize,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            phi_trigger: 0.7,
            dphi_trigger: 0.5,
            reduction: 0.1,
            growth: 1.5,
            growth_iterations: 5,
            cutback: 0.5,
            max_cutbacks: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementController {
    pub dt_reference: f64,
    pub dt: f64,
    pub adaptive: bool,
    /// Growth and cutback enabled; fixed-step marching disables both.
    pub variable: bool,
    pub settings: ControllerSettings,
    triggered: bool,
    trigger_count: usize,
    consecutive_cutbacks: usize,
    total_cutbacks: usize,
}

impl IncrementController {
    pub fn new(dt_reference: f64, adaptive: bool) -> Self {
        Self {
            dt_reference,
            dt: dt_reference,
            adaptive,
            variable: true,
            settings: ControllerSettings::default(),
            triggered: false,
            trigger_count: 0,
            consecutive_cutbacks: 0,
            total_cutbacks: 0,
        }
    }

    /// Constant step, no adaptive reduction, no growth or cutback.
    pub fn fixed(dt: f64) -> Self {
        Self {
            variable: false,
            ..Self::new(dt, false)
        }
    }

    pub fn with_settings(mut self, settings: ControllerSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn already_triggered(&self) -> bool {
        self.triggered
    }

    /// Number of times the reduction fired (0 or 1).
    pub fn trigger_count(&self) -> usize {
        self.trigger_count
    }

    pub fn total_cutbacks(&self) -> usize {
        self.total_cutbacks
    }

    /// Restart iff some integration point went from `phi < phi_trigger` to
    /// an increase of at least `dphi_trigger`, and the reduction has not
    /// fired before.
    pub fn adaptive_step_check(&mut self, phi_prev: &[f64], phi_new: &[f64]) -> StepDecision {
        if !self.adaptive || self.triggered {
            return StepDecision::Accept;
        }
        let s = &self.settings;
        let jump = phi_prev
            .iter()
            .zip(phi_new)
            .any(|(p, n)| *p < s.phi_trigger && n - p >= s.dphi_trigger);
        if !jump {
            return StepDecision::Accept;
        }
        self.triggered = true;
        self.trigger_count += 1;
        self.dt *= s.reduction;
        StepDecision::Restart { dt: self.dt }
    }

    /// Call after an accepted increment.
    pub fn accepted(&mut self, iterations: usize) {
        self.consecutive_cutbacks = 0;
        if self.variable && iterations <= self.settings.growth_iterations {
            self.dt = (self.dt * self.settings.growth).min(self.dt_reference);
        }
    }

    /// Halves the step after a failed attempt. Returns `false` when the
    /// cutback budget is exhausted or the step is fixed.
    pub fn cut_back(&mut self) -> bool {
        if !self.variable || self.consecutive_cutbacks >= self.settings.max_cutbacks {
            return false;
        }
        self.consecutive_cutbacks += 1;
        self.total_cutbacks += 1;
        self.dt *= self.settings.cutback;
        true
    }

    pub fn consecutive_cutbacks(&self) -> usize {
        self.consecutive_cutbacks
    }
}
