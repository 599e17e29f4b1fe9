//! Closed-form analytics for Markovian feedback, where the homodyne current
//! modulates the driving through `H_fb = I(t) lambda sigma_y / sqrt(eta)`.

use serde::{Deserialize, Serialize};

use crate::bloch::{is_equatorial, BlochVector};
use crate::error::{check_dephasing, check_eta, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovDesign {
    pub lambda: f64,
    pub alpha: f64,
    pub theta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovStationary {
    pub bloch: BlochVector,
    pub r_ss: f64,
    pub denominator_d: f64,
}

/// Optimal feedback gain for a target angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovOptimum {
    pub lambda: f64,
    pub r0: f64,
    /// Set for equatorial targets, which Markovian feedback cannot stabilize
    /// (`r0 = 0` and `lambda` is a convention).
    pub equatorial: bool,
}

impl MarkovOptimum {
    /// Full design (gain and matching drive); `None` on the equator.
    pub fn design(&self, theta0: f64, eta: f64, gamma_deph: f64) -> Option<MarkovDesign> {
        if self.equatorial {
            return None;
        }
        driving_for_target(self.lambda, theta0, eta, gamma_deph).ok().map(|alpha| MarkovDesign {
            lambda: self.lambda,
            alpha,
            theta0,
        })
    }
}

// 1 + 4 lambda + 2 Gamma + 4 lambda^2 / eta
fn longitudinal_factor(lambda: f64, eta: f64, gamma_deph: f64) -> f64 {
    1.0 + 4.0 * lambda + 2.0 * gamma_deph + 4.0 * lambda * lambda / eta
}

// 1 + 2 lambda + 2 lambda^2 / eta
fn transverse_factor(lambda: f64, eta: f64) -> f64 {
    1.0 + 2.0 * lambda + 2.0 * lambda * lambda / eta
}

/// Stationary Bloch vector of the feedback master equation.
pub fn stationary_with_feedback(alpha: f64, lambda: f64, eta: f64, gamma_deph: f64) -> Result<MarkovStationary> {
    check_eta(eta)?;
    check_dephasing(gamma_deph)?;
    let p = longitudinal_factor(lambda, eta, gamma_deph);
    let m = transverse_factor(lambda, eta);
    let d = 8.0 * alpha * alpha + p * m;
    if !(d > 0.0) {
        return Err(Error::NonPositiveDenominator(d));
    }
    let u = 1.0 + 2.0 * lambda;
    let bloch = BlochVector { x: -4.0 * alpha * u / d, y: 0.0, z: -u * p / d };
    Ok(MarkovStationary { bloch, r_ss: bloch.in_plane_radius(), denominator_d: d })
}

/// Driving amplitude that places the stationary state on the ray `theta0`.
pub fn driving_for_target(lambda: f64, theta0: f64, eta: f64, gamma_deph: f64) -> Result<f64> {
    check_eta(eta)?;
    if is_equatorial(theta0) {
        return Err(Error::EquatorialTarget);
    }
    Ok(longitudinal_factor(lambda, eta, gamma_deph) / 4.0 * theta0.tan())
}

/// Stationary radius as a function of the gain once the drive has been
/// matched with [`driving_for_target`].
///
/// The sign follows the closed form `(1 + 2 lambda) cos(theta0) / den`: it is
/// negative when the state sits on the target side of the origin and
/// positive on the antipodal side. See [`target_radius`].
pub fn rss_of_lambda(lambda: f64, theta0: f64, eta: f64, gamma_deph: f64) -> Result<f64> {
    check_eta(eta)?;
    let s = theta0.sin();
    let den = transverse_factor(lambda, eta) + (gamma_deph - 0.5) * s * s;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok((1.0 + 2.0 * lambda) * theta0.cos() / den)
}

/// Signed stationary radius along the target ray (positive on the target
/// side). This is the quantity the optimal gain maximizes.
pub fn target_radius(lambda: f64, theta0: f64, eta: f64, gamma_deph: f64) -> Result<f64> {
    rss_of_lambda(lambda, theta0, eta, gamma_deph).map(|r| -r)
}

/// Coefficients `[a, b, c]` of `a r^2 + b r + c = 0`, whose nonnegative
/// root is the best Markovian purity.
pub fn r0_quadratic(theta0: f64, eta: f64, gamma_deph: f64) -> [f64; 3] {
    let (s, c) = theta0.sin_cos();
    [(1.0 - eta + c * c) / 2.0 + gamma_deph * s * s, (1.0 - eta) * c, -eta * c * c / 2.0]
}

pub fn r0_quadratic_residual(r0: f64, theta0: f64, eta: f64, gamma_deph: f64) -> f64 {
    let [a, b, c] = r0_quadratic(theta0, eta, gamma_deph);
    (a * r0 + b) * r0 + c
}

// Nonnegative root of a r^2 + b r + c with a >= 0 and c <= 0, avoiding
// cancellation.
fn nonnegative_root(a: f64, b: f64, c: f64) -> f64 {
    if a == 0.0 {
        return if b == 0.0 { 0.0 } else { -c / b };
    }
    let sq = (b * b - 4.0 * a * c).max(0.0).sqrt();
    if b >= 0.0 {
        let denom = b + sq;
        if denom == 0.0 {
            0.0
        } else {
            -2.0 * c / denom
        }
    } else {
        (sq - b) / (2.0 * a)
    }
}

/// Best achievable stationary purity `r0` and the gain achieving it.
pub fn optimal_gain(theta0: f64, eta: f64, gamma_deph: f64) -> Result<MarkovOptimum> {
    check_eta(eta)?;
    check_dephasing(gamma_deph)?;
    if is_equatorial(theta0) {
        // z_ss = 0 forces x_ss = 0: the stationary state is maximally mixed.
        return Ok(MarkovOptimum { lambda: -eta / 2.0, r0: 0.0, equatorial: true });
    }
    let [a, b, c] = r0_quadratic(theta0, eta, gamma_deph);
    let r0 = nonnegative_root(a, b, c);
    let lambda = -eta / 2.0 * (1.0 + theta0.cos() / r0);
    Ok(MarkovOptimum { lambda, r0, equatorial: false })
}

/// Drive and gain under ideal detection without dephasing.
///
/// Both equatorial targets map to the same parameters, which is why neither
/// can be stabilized.
pub fn perfect_conditions(theta0: f64) -> (f64, f64) {
    let (s, c) = theta0.sin_cos();
    (c * s / 4.0, -(1.0 + c) / 2.0)
}

/// Best purity near the excited state: `eta / (2 - eta)`.
pub fn excited_state_purity(eta: f64) -> f64 {
    eta / (2.0 - eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{stationary_no_feedback, to_polar, wrap_angle};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_gain_reduces_to_driving_only() {
        for &(alpha, g) in &[(0.0, 0.0), (0.3, 0.0), (-1.2, 0.4), (2.0, 3.0)] {
            let s = stationary_with_feedback(alpha, 0.0, 0.7, g).unwrap();
            let n = stationary_no_feedback(alpha, g);
            assert!(close(s.bloch.x, n.x, 1e-15) && close(s.bloch.z, n.z, 1e-15));
        }
    }

    #[test]
    fn excited_state_examples() {
        let s = stationary_with_feedback(0.0, -1.0, 1.0, 0.0).unwrap();
        assert_eq!(s.bloch, BlochVector::new(0.0, 0.0, 1.0));
        let s = stationary_with_feedback(0.0, -1.0, 0.8, 0.0).unwrap();
        assert!(close(s.bloch.z, 2.0 / 3.0, 1e-15));
        assert!(close(excited_state_purity(1.0), 1.0, 0.0));
        assert!(close(excited_state_purity(0.8), 2.0 / 3.0, 1e-15));
        assert!(close(excited_state_purity(0.5), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn singular_denominator_is_an_error() {
        // eta = 1, Gamma = 0, lambda = -1/2, alpha = 0 makes D vanish.
        let err = stationary_with_feedback(0.0, -0.5, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDenominator(_)));
        let err = rss_of_lambda(-0.5, FRAC_PI_2, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDenominator(_)));
    }

    #[test]
    fn driving_examples() {
        assert_eq!(driving_for_target(-0.7, 0.0, 0.8, 0.1).unwrap(), 0.0);
        assert!(driving_for_target(-0.7, PI, 0.8, 0.1).unwrap().abs() < 1e-15);
        assert_eq!(driving_for_target(-0.7, FRAC_PI_2, 0.8, 0.1), Err(Error::EquatorialTarget));
        assert_eq!(driving_for_target(-0.7, -FRAC_PI_2, 0.8, 0.1), Err(Error::EquatorialTarget));

        let lambda = -(1.0 + 2f64.sqrt() / 2.0) / 2.0;
        let alpha = driving_for_target(lambda, FRAC_PI_4, 1.0, 0.0).unwrap();
        assert!(close(alpha, 0.25 + lambda + lambda * lambda, 1e-15));
        let s = stationary_with_feedback(alpha, lambda, 1.0, 0.0).unwrap();
        let polar = to_polar(&s.bloch).unwrap();
        assert!(close(polar.theta, FRAC_PI_4, 1e-12));
    }

    #[test]
    fn rss_examples() {
        assert!(close(rss_of_lambda(0.0, 0.0, 1.0, 0.0).unwrap(), 1.0, 0.0));
        assert!(close(rss_of_lambda(-1.0, 0.0, 1.0, 0.0).unwrap(), -1.0, 1e-15));
        assert!(close(rss_of_lambda(-1.0, 0.0, 0.8, 0.0).unwrap().abs(), 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn optimal_examples() {
        let o = optimal_gain(0.0, 0.8, 0.0).unwrap();
        assert!(close(o.r0, 2.0 / 3.0, 1e-15));
        assert!(close(o.lambda, -1.0, 1e-15));

        // Root of 0.5 r^2 + (0.5/sqrt 2) r - 0.125 = 0.
        let o = optimal_gain(FRAC_PI_4, 0.5, 0.0).unwrap();
        let expected = (-(0.5 / 2f64.sqrt()) + (0.125 + 0.25f64).sqrt()) / 1.0;
        assert!(close(o.r0, expected, 1e-15));
        assert!(close(o.r0, 0.25882, 1e-5));

        for &(eta, g) in &[(0.3, 0.0), (0.8, 0.2), (1.0, 0.0), (1.0, 2.0)] {
            let o = optimal_gain(PI, eta, g).unwrap();
            assert!(close(o.r0, 1.0, 1e-15));
            assert!(close(o.lambda, 0.0, 1e-15));
        }
    }

    #[test]
    fn equatorial_target_is_flagged() {
        for &theta0 in &[FRAC_PI_2, -FRAC_PI_2] {
            let o = optimal_gain(theta0, 1.0, 0.0).unwrap();
            assert!(o.equatorial);
            assert_eq!(o.r0, 0.0);
            assert!(o.design(theta0, 1.0, 0.0).is_none());
        }
    }

    #[test]
    fn perfect_condition_examples() {
        assert_eq!(perfect_conditions(0.0), (0.0, -1.0));
        let (a, l) = perfect_conditions(PI);
        assert!(a.abs() < 1e-16 && l.abs() < 1e-16);
        let (a1, l1) = perfect_conditions(FRAC_PI_2);
        let (a2, l2) = perfect_conditions(-FRAC_PI_2);
        assert!(close(a1, a2, 1e-16) && close(a1, 0.0, 1e-16));
        assert!(close(l1, l2, 1e-16) && close(l1, -0.5, 1e-16));
    }

    #[test]
    fn perfect_conditions_reach_unit_purity_off_equator() {
        for k in -7..=8 {
            let theta0 = k as f64 * PI / 8.0;
            if is_equatorial(theta0) {
                continue;
            }
            let (alpha, lambda) = perfect_conditions(theta0);
            let o = optimal_gain(theta0, 1.0, 0.0).unwrap();
            assert!(close(o.r0, 1.0, 1e-12), "theta0 = {theta0}");
            assert!(close(o.lambda, lambda, 1e-12));
            assert!(close(driving_for_target(lambda, theta0, 1.0, 0.0).unwrap(), alpha, 1e-12));
            let s = stationary_with_feedback(alpha, lambda, 1.0, 0.0).unwrap();
            assert!(close(s.r_ss, 1.0, 1e-12));
        }
    }

    fn grid() -> Vec<(f64, f64, f64)> {
        let mut g = Vec::new();
        for &gamma in &[0.0, 0.05, 0.5] {
            for &eta in &[0.2, 0.5, 0.8, 0.95, 1.0] {
                for k in -7..=8 {
                    g.push((k as f64 * PI / 8.0, eta, gamma));
                }
            }
        }
        g
    }

    #[test]
    fn quadratic_residual_on_grid() {
        for (theta0, eta, gamma) in grid() {
            let o = optimal_gain(theta0, eta, gamma).unwrap();
            let res = r0_quadratic_residual(o.r0, theta0, eta, gamma);
            assert!(res.abs() < 1e-12, "{theta0} {eta} {gamma}: {res}");
            assert!(o.r0 >= 0.0 && o.r0 <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn optimum_matches_dense_scan() {
        // Independent argmax over lambda in [-3, 1].
        for (theta0, eta, gamma) in grid() {
            let o = optimal_gain(theta0, eta, gamma).unwrap();
            let n = 40_001;
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                let lambda = -3.0 + 4.0 * i as f64 / (n - 1) as f64;
                if let Ok(r) = target_radius(lambda, theta0, eta, gamma) {
                    best = best.max(r);
                }
            }
            if o.equatorial {
                assert!(best <= 1e-12);
                continue;
            }
            let at_opt = target_radius(o.lambda, theta0, eta, gamma).unwrap();
            assert!(close(at_opt, o.r0, 1e-9), "{theta0} {eta} {gamma}");
            assert!(best <= at_opt + 1e-12);
            assert!(at_opt - best < 1e-6, "{theta0} {eta} {gamma}: {at_opt} vs {best}");
        }
    }

    #[test]
    fn design_lands_on_target_with_optimal_purity() {
        for (theta0, eta, gamma) in grid() {
            let o = optimal_gain(theta0, eta, gamma).unwrap();
            let Some(d) = o.design(theta0, eta, gamma) else {
                assert!(o.equatorial);
                continue;
            };
            let s = stationary_with_feedback(d.alpha, d.lambda, eta, gamma).unwrap();
            let polar = to_polar(&s.bloch).unwrap();
            assert!(close(s.r_ss, o.r0, 1e-9), "{theta0} {eta} {gamma}");
            if o.r0 > 1e-9 {
                assert!(wrap_angle(polar.theta - theta0).abs() < 1e-9, "{theta0} {eta} {gamma}");
            }
        }
    }

    #[test]
    fn equatorial_gap_closes_continuously_off_perfect() {
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let theta0 = FRAC_PI_2 - 10f64.powi(-k);
            let r0 = optimal_gain(theta0, 0.8, 0.0).unwrap().r0;
            assert!(r0 < prev);
            prev = r0;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn dephasing_keeps_hemispheres_symmetric() {
        for &g in &[0.01, 0.05, 0.5, 3.0] {
            for k in 0..=16 {
                let theta0 = k as f64 * PI / 16.0;
                let a = optimal_gain(theta0, 1.0, g).unwrap().r0;
                let b = optimal_gain(PI - theta0, 1.0, g).unwrap().r0;
                assert!(close(a, b, 1e-12), "{theta0} {g}");
            }
        }
    }

    // Ensemble-averaged Bloch equations with feedback, obtained by averaging
    // the measurement kick followed by the feedback rotation. Independent of
    // the closed-form stationary state.
    fn averaged_drift(b: [f64; 2], alpha: f64, lambda: f64, eta: f64, g: f64) -> [f64; 2] {
        let [x, z] = b;
        [
            -(0.5 + g + 2.0 * lambda + 2.0 * lambda * lambda / eta) * x + 2.0 * alpha * z,
            -(1.0 + 2.0 * lambda) * (1.0 + z) - 2.0 * alpha * x - 2.0 * lambda * lambda / eta * z,
        ]
    }

    fn relax(alpha: f64, lambda: f64, eta: f64, g: f64) -> [f64; 2] {
        let dt = 1e-3;
        let mut b = [0.0, -1.0];
        let add = |b: [f64; 2], k: [f64; 2], h: f64| [b[0] + h * k[0], b[1] + h * k[1]];
        for _ in 0..200_000 {
            let k1 = averaged_drift(b, alpha, lambda, eta, g);
            let k2 = averaged_drift(add(b, k1, dt / 2.0), alpha, lambda, eta, g);
            let k3 = averaged_drift(add(b, k2, dt / 2.0), alpha, lambda, eta, g);
            let k4 = averaged_drift(add(b, k3, dt), alpha, lambda, eta, g);
            b[0] += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            b[1] += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        b
    }

    #[test]
    fn closed_form_matches_relaxed_dynamics() {
        for &(alpha, lambda, eta, g) in
            &[(0.3, -0.6, 0.8, 0.0), (-0.2, -1.1, 0.5, 0.05), (0.0, -1.0, 0.9, 0.3), (1.0, 0.4, 1.0, 0.0)]
        {
            let s = stationary_with_feedback(alpha, lambda, eta, g).unwrap();
            let b = relax(alpha, lambda, eta, g);
            assert!(close(b[0], s.bloch.x, 1e-9), "{alpha} {lambda}: {b:?} {s:?}");
            assert!(close(b[1], s.bloch.z, 1e-9), "{alpha} {lambda}: {b:?} {s:?}");
        }
    }
}
