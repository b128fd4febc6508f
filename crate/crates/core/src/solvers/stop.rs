//! Outer stopping rules.

use std::collections::VecDeque;

use crate::model::Termination;

/// Number of outer iterations spanned by the slow-change test.
pub const GRADIENT_WINDOW: usize = 10;

/// Relative slack of the slow-change test, as a multiple of `τ ||∇¹||`.
pub const SLOW_CHANGE_FACTOR: f64 = 1e-3;

/// Reference values fixed at the first outer iteration plus the recent
/// gradient-norm history.
#[derive(Debug, Clone, PartialEq)]
pub struct StopState {
    pub initial_objective: f64,
    pub initial_gradient_norm: f64,
    pub previous_objective: f64,
    window: VecDeque<f64>,
}

impl StopState {
    pub fn new(initial_objective: f64, initial_gradient_norm: f64) -> Self {
        Self {
            initial_objective,
            initial_gradient_norm,
            previous_objective: initial_objective,
            window: VecDeque::with_capacity(GRADIENT_WINDOW + 1),
        }
    }

    /// Appends the values of a finished outer iteration.
    pub fn record(&mut self, objective: f64, gradient_norm: f64) {
        self.previous_objective = objective;
        self.window.push_back(gradient_norm);
        while self.window.len() > GRADIENT_WINDOW {
            self.window.pop_front();
        }
    }

    /// Gradient norm recorded `GRADIENT_WINDOW` iterations before the one
    /// about to be checked, once that many have been recorded.
    pub fn lagged_gradient_norm(&self) -> Option<f64> {
        if self.window.len() == GRADIENT_WINDOW {
            self.window.front().copied()
        } else {
            None
        }
    }

    pub fn window(&self) -> impl Iterator<Item = &f64> {
        self.window.iter()
    }
}

/// `(F_prev - F_curr) / (F_initial - F_curr) <= τ`. A non-positive
/// denominator means no net progress since the start and stops the solve.
pub fn check_stop_objective(f_prev: f64, f_curr: f64, f_initial: f64, tau: f64) -> bool {
    let denom = f_initial - f_curr;
    if !(denom > 0.0) {
        return true;
    }
    (f_prev - f_curr) / denom <= tau
}

/// Which gradient rule fires, if any: `||∇^t|| <= τ ||∇¹||`, else the
/// slow-change test against the norm `GRADIENT_WINDOW` iterations back.
pub fn gradient_stop_reason(state: &StopState, current: f64, tau: f64) -> Option<Termination> {
    let reference = state.initial_gradient_norm;
    if current <= tau * reference {
        return Some(Termination::ToleranceMet);
    }
    if let Some(lagged) = state.lagged_gradient_norm() {
        if (current - lagged).abs() <= SLOW_CHANGE_FACTOR * tau * reference {
            return Some(Termination::SlowGradientChange);
        }
    }
    None
}

pub fn check_stop_gradient(state: &StopState, current: f64, tau: f64) -> bool {
    gradient_stop_reason(state, current, tau).is_some()
}
