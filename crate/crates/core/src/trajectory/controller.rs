use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bloch::{wrap_angle, AtomParams, PolarState};
use crate::error::{Error, Result};

/// Feedback law applied after each measurement update.
///
/// Every law acts by modulating the drive about the y axis, i.e. by rotating
/// the state in the x-z plane. Rotations change the angle only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Controller {
    None,
    /// Rotation proportional to the current just measured,
    /// `2 lambda I dt / sqrt(eta)`.
    Markovian {
        lambda: f64,
    },
    /// Infinitely strong state-estimate feedback: the estimated angle is
    /// rotated onto `theta0` every step.
    BayesianProjection {
        theta0: f64,
    },
    /// Finite-gain state-estimate feedback adding `-2 beta (theta - theta0)`
    /// to the angular drift.
    BayesianGain {
        beta: f64,
        theta0: f64,
    },
    /// Markovian feedback driven by the current measured `tau` earlier.
    Delayed {
        lambda: f64,
        tau: f64,
    },
    /// Feedback computed from a second filter that runs with (possibly
    /// wrong) model parameters on the same current record.
    DualFilter {
        estimator: AtomParams,
        inner: Box<Controller>,
    },
}

impl Controller {
    pub fn validate(&self) -> Result<()> {
        match self {
            Controller::None | Controller::Markovian { .. } | Controller::BayesianProjection { .. } => Ok(()),
            Controller::BayesianGain { beta, .. } if *beta >= 0.0 => Ok(()),
            Controller::BayesianGain { beta, .. } => Err(Error::InvalidParameter {
                name: "beta",
                value: *beta,
                reason: "feedback strength must be non-negative",
            }),
            Controller::Delayed { tau, .. } if *tau >= 0.0 => Ok(()),
            Controller::Delayed { tau, .. } => {
                Err(Error::InvalidParameter { name: "tau", value: *tau, reason: "delay must be non-negative" })
            }
            Controller::DualFilter { estimator, inner } => {
                estimator.validate()?;
                if matches!(**inner, Controller::DualFilter { .. }) {
                    return Err(Error::InvalidConfig("dual filters cannot be nested"));
                }
                inner.validate()
            }
        }
    }

    /// Feedback law actually applied, with the estimator parameters if any.
    pub(crate) fn split(&self) -> (&Controller, Option<&AtomParams>) {
        match self {
            Controller::DualFilter { estimator, inner } => (inner, Some(estimator)),
            other => (other, None),
        }
    }

    fn needs_eta(&self) -> bool {
        matches!(self, Controller::Markovian { .. } | Controller::Delayed { .. })
    }
}

/// Number of steps the current is held back for a delay `tau`.
pub fn delay_steps(tau: f64, dt: f64) -> usize {
    if tau <= 0.0 {
        0
    } else {
        // Guard against tau / dt landing a rounding error above an integer.
        (tau / dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Mutable controller memory carried along one trajectory.
#[derive(Debug, Clone)]
pub struct ControllerState {
    delay: VecDeque<f64>,
    delay_len: usize,
    /// Second filter state for [`Controller::DualFilter`].
    pub estimate: Option<PolarState>,
}

impl ControllerState {
    pub fn new(controller: &Controller, dt: f64, estimate: Option<PolarState>) -> Self {
        let (law, estimator) = controller.split();
        let delay_len = match law {
            Controller::Delayed { tau, .. } => delay_steps(*tau, dt),
            _ => 0,
        };
        Self { delay: VecDeque::with_capacity(delay_len + 1), delay_len, estimate: estimator.and(estimate) }
    }
}

/// Rotation applied by the feedback law, given the state the controller
/// believes in and the current increment `I dt` of this step.
pub fn control_angle(
    law: &Controller,
    believed: &PolarState,
    believed_eta: f64,
    idt: f64,
    memory: &mut ControllerState,
    dt: f64,
) -> f64 {
    debug_assert!(!law.needs_eta() || believed_eta > 0.0);
    match law {
        Controller::None | Controller::DualFilter { .. } => 0.0,
        Controller::Markovian { lambda } => 2.0 * lambda * idt / believed_eta.sqrt(),
        Controller::BayesianProjection { theta0 } => wrap_angle(theta0 - believed.theta),
        Controller::BayesianGain { beta, theta0 } => {
            // Exact solution of d(theta) = -2 beta (theta - theta0) dt over
            // one step; explicit Euler is unstable once 2 beta dt > 1.
            let error = wrap_angle(believed.theta - theta0);
            -error * (1.0 - (-2.0 * beta * dt).exp())
        }
        Controller::Delayed { lambda, .. } => {
            let used = if memory.delay_len == 0 {
                idt
            } else {
                memory.delay.push_back(idt);
                if memory.delay.len() > memory.delay_len {
                    memory.delay.pop_front().unwrap_or(0.0)
                } else {
                    0.0
                }
            };
            2.0 * lambda * used / believed_eta.sqrt()
        }
    }
}

/// Rotates a state about the y axis; the radius is untouched.
pub fn rotate(state: PolarState, angle: f64) -> PolarState {
    PolarState { r: state.r, theta: wrap_angle(state.theta + angle) }
}

/// Applies the feedback to the state just updated by the measurement.
///
/// Returns the new state, the updated estimator state and the rotation
/// angle. With a dual filter, the control is computed from the estimate and
/// the same physical rotation is applied to both.
pub fn apply_controller(
    state: PolarState,
    controller: &Controller,
    params: &AtomParams,
    idt: f64,
    memory: &mut ControllerState,
    dt: f64,
) -> (PolarState, Option<PolarState>, f64) {
    let (law, estimator) = controller.split();
    let (believed, believed_eta) = match (estimator, memory.estimate) {
        (Some(est_params), Some(est)) => (est, est_params.eta),
        _ => (state, params.eta),
    };
    let angle = control_angle(law, &believed, believed_eta, idt, memory, dt);
    let next = rotate(state, angle);
    debug_assert_eq!(next.r.to_bits(), state.r.to_bits());
    let estimate = memory.estimate.map(|e| rotate(e, angle));
    memory.estimate = estimate;
    (next, estimate, angle)
}
