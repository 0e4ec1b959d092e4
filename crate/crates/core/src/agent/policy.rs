use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ValueNetwork;
use crate::env::Action;
use crate::line_model::Minute;
use crate::scalar::Real;

/// Rule-constrained ε-greedy action selection.
///
/// The headway rules take precedence: once `t_ml` reaches `T_max` the bus must
/// leave, below `T_min` it must not. In between, a uniform random action with
/// probability `epsilon`, otherwise the greedy action (ties toward `Hold`).
pub fn select_action<T: Real, R: Rng + ?Sized>(
    q: &ValueNetwork<T>,
    s: &[T],
    t_ml: Minute,
    bounds: (Minute, Minute),
    epsilon: f64,
    rng: &mut R,
) -> Action {
    if let Some(a) = rule_action(t_ml, bounds) {
        return a;
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return random_action(rng);
    }
    q.greedy(s)
}

/// The action forced by the headway bounds, if any.
#[inline]
pub fn rule_action(t_ml: Minute, (min_interval, max_interval): (Minute, Minute)) -> Option<Action> {
    if t_ml >= max_interval {
        Some(Action::Depart)
    } else if t_ml < min_interval {
        Some(Action::Hold)
    } else {
        None
    }
}

/// Rule-constrained uniform random policy.
pub fn random_constrained<R: Rng + ?Sized>(
    t_ml: Minute,
    bounds: (Minute, Minute),
    rng: &mut R,
) -> Action {
    rule_action(t_ml, bounds).unwrap_or_else(|| random_action(rng))
}

#[inline]
fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    if rng.random::<bool>() {
        Action::Depart
    } else {
        Action::Hold
    }
}

/// Linear ε decay from `start` to `end` over the first `decay_fraction` of steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.6,
        }
    }
}

impl EpsilonSchedule {
    /// Number of steps over which ε decays.
    pub fn decay_steps(&self, total_steps: u64) -> u64 {
        (self.decay_fraction * total_steps as f64).round() as u64
    }

    pub fn value(&self, step: u64, total_steps: u64) -> f64 {
        let decay = self.decay_steps(total_steps);
        if decay == 0 || step >= decay {
            return self.end;
        }
        let f = step as f64 / decay as f64;
        self.start + (self.end - self.start) * f
    }
}
