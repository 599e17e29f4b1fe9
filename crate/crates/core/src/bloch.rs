//! Two-level atom in Bloch form: state types, the unconditioned master
//! equation and its stationary solution without feedback.
//!
//! The decay rate is fixed to one and sets the time unit. The atom is driven
//! about the y axis, so every stationary state lies in the x-z plane and is
//! conveniently described by a radius `r` (the purity measure) and an angle
//! `theta` measured from the excited state: `x = r sin(theta)`,
//! `z = r cos(theta)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_dephasing, check_eta, Error, Result};

/// Largest |y| accepted by [`to_polar`].
pub const PLANE_TOLERANCE: f64 = 1e-9;

/// Below this radius the polar angle is undefined and reported as zero.
pub const ANGLE_UNDEFINED_RADIUS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const GROUND: BlochVector = BlochVector { x: 0.0, y: 0.0, z: -1.0 };
    pub const EXCITED: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        purity(self).sqrt()
    }

    /// Radius in the x-z plane.
    pub fn in_plane_radius(&self) -> f64 {
        self.x.hypot(self.z)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        purity(self) <= 1.0 + tol
    }
}

/// In-plane state `(r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
}

impl PolarState {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    /// The pure target state `cos(theta0/2)|e> + sin(theta0/2)|g>`.
    pub fn pure(theta0: f64) -> Self {
        Self { r: 1.0, theta: wrap_angle(theta0) }
    }

    pub fn ground() -> Self {
        Self { r: 1.0, theta: PI }
    }

    /// Maps a negative radius through the origin: `(-r, theta)` and
    /// `(r, theta + pi)` describe the same Bloch vector.
    pub fn canonical(self) -> Self {
        if self.r < 0.0 {
            Self { r: -self.r, theta: wrap_angle(self.theta + PI) }
        } else {
            Self { r: self.r, theta: wrap_angle(self.theta) }
        }
    }

    pub fn x(&self) -> f64 {
        self.r * self.theta.sin()
    }

    pub fn z(&self) -> f64 {
        self.r * self.theta.cos()
    }
}

/// Physical configuration of the monitored atom, in units of the decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Driving amplitude (half the Rabi frequency).
    pub alpha: f64,
    /// Dephasing rate.
    pub gamma_deph: f64,
    /// Homodyne detection efficiency.
    pub eta: f64,
}

impl AtomParams {
    pub fn new(alpha: f64, gamma_deph: f64, eta: f64) -> Result<Self> {
        let p = Self { alpha, gamma_deph, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "driving amplitude must be finite",
            });
        }
        check_dephasing(self.gamma_deph)?;
        // eta = 0 is a legal (unmonitored) atom here; feedback routines
        // require eta > 0 separately.
        if self.eta == 0.0 {
            return Ok(());
        }
        check_eta(self.eta)
    }
}

/// Targets with `|cos(theta0)|` below this are treated as equatorial.
pub const EQUATOR_TOLERANCE: f64 = 1e-12;

pub fn is_equatorial(theta0: f64) -> bool {
    theta0.cos().abs() < EQUATOR_TOLERANCE
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t > PI {
        t -= two_pi;
    } else if t <= -PI {
        t += two_pi;
    }
    t
}

/// Purity `p = 2 Tr[rho^2] - 1 = x^2 + y^2 + z^2`.
pub fn purity(b: &BlochVector) -> f64 {
    b.x * b.x + b.y * b.y + b.z * b.z
}

/// `theta = atan2(x, z)`, so `theta = 0` is the excited state and
/// `theta = pi` the ground state.
pub fn to_polar(b: &BlochVector) -> Result<PolarState> {
    if b.y.abs() >= PLANE_TOLERANCE {
        return Err(Error::OutOfPlane(b.y));
    }
    let r = b.in_plane_radius();
    let theta = if r < ANGLE_UNDEFINED_RADIUS { 0.0 } else { wrap_angle(b.x.atan2(b.z)) };
    Ok(PolarState { r, theta })
}

pub fn from_polar(s: &PolarState) -> BlochVector {
    BlochVector { x: s.x(), y: 0.0, z: s.z() }
}

/// Right-hand side of the Bloch equations without feedback.
///
/// Transverse components decay at `1/2 + gamma_deph`.
pub fn drift_no_feedback(b: &BlochVector, p: &AtomParams) -> BlochVector {
    let transverse = 0.5 + p.gamma_deph;
    BlochVector {
        x: -transverse * b.x + 2.0 * p.alpha * b.z,
        y: -transverse * b.y,
        z: -(1.0 + b.z) - 2.0 * p.alpha * b.x,
    }
}

/// Stationary Bloch vector of the driven, damped and dephased atom.
pub fn stationary_no_feedback(alpha: f64, gamma_deph: f64) -> BlochVector {
    let g = 1.0 + 2.0 * gamma_deph;
    let den = g + 8.0 * alpha * alpha;
    BlochVector { x: -4.0 * alpha / den, y: 0.0, z: -g / den }
}

/// Stationary states reachable by driving alone, as `(theta, r)` pairs.
pub fn locus_no_feedback(gamma_deph: f64, alpha_grid: &[f64]) -> Vec<(f64, f64)> {
    alpha_grid
        .iter()
        .map(|&alpha| {
            let s = to_polar(&stationary_no_feedback(alpha, gamma_deph)).expect("stationary states have y = 0");
            (s.theta, s.r)
        })
        .collect()
}
