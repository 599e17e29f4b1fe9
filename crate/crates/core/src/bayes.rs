//! State-estimate ("Bayesian") feedback.
//!
//! With infinitely strong feedback the estimated angle is pinned to the
//! target `theta0` and the conditioned purity obeys the one-dimensional Itô
//! equation `dr = A(r) dt + sqrt(B(r)) dW`. Its stationary mean follows from
//! the zero-flux solution of the Fokker-Planck equation,
//!
//! ```text
//! P(r) ∝ C(r) exp(2 ∫ A C dr'),   C = 1 / B,
//! ```
//!
//! normalised on `[0, 1]`. `A(r) r` is a quadratic in `r` and
//! `B(r) = eta sin²(theta0) (1 - r²)²`, so `A C` is rational and its
//! antiderivative is evaluated in closed form by partial fractions. The
//! density spans hundreds of orders of magnitude near `r = 1`; it is
//! integrated in log space after the substitution `r = 1 - exp(-u)`, which
//! turns the essential singularity at `r = 1` into a smooth double-exponential
//! tail.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bloch::is_equatorial;
use crate::error::{check_dephasing, check_eta, Error, Result};
use crate::markov::optimal_gain;
use crate::quadrature::{integrate, QuadResult};

/// `|sin(theta0)|` below this means the target is on the z axis.
pub const AXIS_TOLERANCE: f64 = 1e-9;
/// Efficiency and dephasing thresholds for exact perfect conditions.
pub const PERFECT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftDiffusion {
    pub a: f64,
    pub b: f64,
    /// `1 / B`, absent where the diffusion vanishes.
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// The outer integrals run over `[0, 1 - endpoint_margin]`.
    pub endpoint_margin: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-10, endpoint_margin: 1e-12, max_subdivisions: 2000 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.endpoint_margin > 0.0 && self.endpoint_margin < 1e-6) {
            return Err(Error::InvalidParameter {
                name: "endpoint_margin",
                value: self.endpoint_margin,
                reason: "must lie in (0, 1e-6)",
            });
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter { name: "rel_tol", value: self.rel_tol, reason: "must be positive" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialCase {
    Generic,
    /// `sin(theta0) = 0`: no diffusion, `r` relaxes to the fixed point of `A`.
    DeterministicAxis,
    /// `eta = 1`, no dephasing: every target is stabilized perfectly.
    PerfectConditions,
    /// `theta0 = ±pi/2`: negative excursions of `r` are folded back.
    EquatorialReflected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpeResult {
    pub r_ss: f64,
    /// Integral of the density rescaled by `exp(-log_scale)`.
    pub normalization: f64,
    /// Log of the peak of the (u-space) log density used for rescaling.
    pub log_scale: f64,
    pub err_estimate: f64,
    pub special_case: SpecialCase,
}

pub fn drift_a(r: f64, theta0: f64, eta: f64, gamma_deph: f64) -> Result<f64> {
    let (s, mut c) = theta0.sin_cos();
    if is_equatorial(theta0) {
        c = 0.0;
    }
    if r == 0.0 && c != 0.0 {
        return Err(Error::SingularDrift);
    }
    let inv_r = if c == 0.0 { 0.0 } else { 1.0 / r };
    Ok(-r * (1.0 + c * c) / 2.0 - gamma_deph * r * s * s - c + eta / 2.0 * (c * c * inv_r + 2.0 * c + r))
}

pub fn diffusion_b(r: f64, theta0: f64, eta: f64) -> f64 {
    let s = theta0.sin();
    let w = 1.0 - r * r;
    eta * s * s * w * w
}

pub fn drift_diffusion(r: f64, theta0: f64, eta: f64, gamma_deph: f64) -> Result<DriftDiffusion> {
    let a = drift_a(r, theta0, eta, gamma_deph)?;
    let b = diffusion_b(r, theta0, eta);
    Ok(DriftDiffusion { a, b, c: (b > 0.0).then(|| 1.0 / b) })
}

/// Coefficients of `A(r) r = p2 r² + p1 r + p0`.
fn drift_polynomial(s: f64, c: f64, eta: f64, gamma_deph: f64) -> [f64; 3] {
    [-(1.0 + c * c) / 2.0 - gamma_deph * s * s + eta / 2.0, -c + eta * c, eta * c * c / 2.0]
}

/// Closed-form pieces of the stationary density for a non-axial target.
#[derive(Debug, Clone, Copy)]
pub struct StationaryDensity {
    sin2: f64,
    eta: f64,
    // A C = coef_log_r / r + coef_log_1m / (1 - r) + coef_pole_1m / (1 - r)²
    //     + coef_log_1p / (1 + r) + coef_pole_1p / (1 + r)²,
    // all divided by eta sin².
    coef_log_r: f64,
    coef_log_1m: f64,
    coef_pole_1m: f64,
    coef_log_1p: f64,
    coef_pole_1p: f64,
}

impl StationaryDensity {
    pub fn new(theta0: f64, eta: f64, gamma_deph: f64) -> Result<Self> {
        check_eta(eta)?;
        check_dephasing(gamma_deph)?;
        let (s, mut c) = theta0.sin_cos();
        if s.abs() < AXIS_TOLERANCE {
            return Err(Error::InvalidParameter {
                name: "theta0",
                value: theta0,
                reason: "no diffusion on the z axis",
            });
        }
        if is_equatorial(theta0) {
            c = 0.0;
        }
        let p = drift_polynomial(s, c, eta, gamma_deph);
        let poly = |r: f64| (p[0] * r + p[1]) * r + p[2];
        let dpoly = |r: f64| 2.0 * p[0] * r + p[1];
        Ok(Self {
            sin2: s * s,
            eta,
            coef_log_r: p[2],
            coef_log_1m: poly(1.0) / 2.0 - dpoly(1.0) / 4.0,
            coef_pole_1m: poly(1.0) / 4.0,
            coef_log_1p: -dpoly(-1.0) / 4.0 - poly(-1.0) / 2.0,
            coef_pole_1p: -poly(-1.0) / 4.0,
        })
    }

    fn scale(&self) -> f64 {
        self.eta * self.sin2
    }

    /// Antiderivative of `A(r) C(r)` (defined up to a constant) on `(0, 1)`.
    pub fn drift_integral(&self, r: f64) -> f64 {
        self.primitive(r, (-r).ln_1p(), 1.0 / (1.0 - r))
    }

    // Takes ln(1 - r) and 1 / (1 - r) separately so u-space callers keep
    // full precision near r = 1.
    fn primitive(&self, r: f64, ln_1m: f64, inv_1m: f64) -> f64 {
        let mut h = -self.coef_log_1m * ln_1m + self.coef_pole_1m * inv_1m + self.coef_log_1p * r.ln_1p()
            - self.coef_pole_1p / (1.0 + r);
        if self.coef_log_r != 0.0 {
            h += self.coef_log_r * r.ln();
        }
        h / self.scale()
    }

    /// Unnormalized log density `ln C(r) + 2 ∫ A C`.
    pub fn log_density(&self, r: f64) -> f64 {
        -self.scale().ln() - 2.0 * (-r * r).ln_1p() + 2.0 * self.drift_integral(r)
    }

    /// Log of the integrand after `r = 1 - exp(-u)`, `dr = exp(-u) du`.
    fn log_integrand_u(&self, u: f64) -> f64 {
        let r = -(-u).exp_m1();
        let ln_1m = -u;
        let inv_1m = u.exp();
        // ln C = -ln(eta s²) - 2 ln(1 - r) - 2 ln(1 + r)
        let ln_c = -self.scale().ln() + 2.0 * u - 2.0 * r.ln_1p();
        ln_c + 2.0 * self.primitive(r, ln_1m, inv_1m) - u
    }
}

fn r_of_u(u: f64) -> f64 {
    -(-u).exp_m1()
}

// Peak of a smooth unimodal function on [lo, hi] by grid search plus golden
// section refinement.
fn locate_peak<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64) -> f64 {
    let n = 1024;
    let h = (hi - lo) / n as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let u = lo + h * i as f64;
        let v = g(u);
        if v > best.1 {
            best = (u, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn peak_breakpoints<F: Fn(f64) -> f64>(g: &F, peak: f64, lo: f64, hi: f64) -> Vec<f64> {
    let h = 1e-4 * (1.0 + peak);
    let curvature = -(g(peak + h) - 2.0 * g(peak) + g(peak - h)) / (h * h);
    let width = if curvature.is_finite() && curvature > 0.0 { curvature.sqrt().recip() } else { (hi - lo) / 16.0 };
    let mut points = vec![lo, hi, peak];
    for k in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        points.push(peak - k * width);
        points.push(peak + k * width);
    }
    for i in 1..16 {
        points.push(lo + (hi - lo) * i as f64 / 16.0);
    }
    points.retain(|p| p.is_finite() && *p >= lo && *p <= hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

struct Moments {
    zeroth: QuadResult,
    first: QuadResult,
}

fn moments<F: Fn(f64) -> f64>(g: &F, shift: f64, points: &[f64], spec: &QuadratureSpec) -> Result<Moments> {
    let weight = |u: f64| (g(u) - shift).exp();
    let run = |f: &dyn Fn(f64) -> f64| {
        integrate(f, points, 0.0, spec.rel_tol, spec.max_subdivisions).map_err(|partial| {
            Error::QuadratureNonConvergence { value: partial.value, err_estimate: partial.err_estimate }
        })
    };
    let zeroth = run(&weight)?;
    let first = run(&|u| r_of_u(u) * weight(u))?;
    Ok(Moments { zeroth, first })
}

/// Stationary mean of the conditioned purity under ideal state-estimate
/// feedback.
pub fn stationary_mean_rss(theta0: f64, eta: f64, gamma_deph: f64, spec: &QuadratureSpec) -> Result<FpeResult> {
    check_eta(eta)?;
    check_dephasing(gamma_deph)?;
    spec.validate()?;
    let (s, c) = theta0.sin_cos();

    if s.abs() < AXIS_TOLERANCE {
        // Deterministic relaxation to the positive root of A(r) r.
        let [p2, p1, p0] = drift_polynomial(0.0, c.signum(), eta, gamma_deph);
        let disc = (p1 * p1 - 4.0 * p2 * p0).max(0.0).sqrt();
        let r_ss = if p2 == 0.0 { -p0 / p1 } else { 2.0 * p0 / (disc - p1) };
        return Ok(FpeResult {
            r_ss: r_ss.clamp(0.0, 1.0),
            normalization: 1.0,
            log_scale: 0.0,
            err_estimate: 0.0,
            special_case: SpecialCase::DeterministicAxis,
        });
    }
    if eta > 1.0 - PERFECT_TOLERANCE && gamma_deph < PERFECT_TOLERANCE {
        return Ok(FpeResult {
            r_ss: 1.0,
            normalization: 1.0,
            log_scale: 0.0,
            err_estimate: 0.0,
            special_case: SpecialCase::PerfectConditions,
        });
    }

    let special_case = if is_equatorial(theta0) { SpecialCase::EquatorialReflected } else { SpecialCase::Generic };
    let density = StationaryDensity::new(theta0, eta, gamma_deph)?;
    let g = |u: f64| density.log_integrand_u(u);
    let upper = -spec.endpoint_margin.ln();

    let peak = locate_peak(&g, 0.0, upper);
    let shift = g(peak);
    let points = peak_breakpoints(&g, peak, 0.0, upper);
    let m = moments(&g, shift, &points, spec)?;
    let norm = m.zeroth.value;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::QuadratureNonConvergence { value: norm, err_estimate: f64::INFINITY });
    }
    let r_ss = m.first.value / norm;

    // Endpoint sensitivity: halve the margin and compare.
    let tail_points = [upper, upper + std::f64::consts::LN_2];
    let tail = moments(&g, shift, &tail_points, spec)?;
    let r_halved = (m.first.value + tail.first.value) / (norm + tail.zeroth.value);
    let endpoint_shift = (r_halved - r_ss).abs();
    let err_estimate =
        r_ss.abs() * (m.first.err_estimate / m.first.value.abs() + m.zeroth.err_estimate / norm) + endpoint_shift;
    if endpoint_shift > spec.rel_tol * r_ss.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::QuadratureNonConvergence { value: r_ss, err_estimate });
    }

    Ok(FpeResult { r_ss: r_ss.clamp(0.0, 1.0), normalization: norm, log_scale: shift, err_estimate, special_case })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquatorialApprox {
    pub r_ss: f64,
    /// False when the predicted purity is too large for the small-`r`
    /// approximation (`r > 0.5`) to be trusted.
    pub within_validity: bool,
}

/// Small-purity approximation for an equatorial target, valid for strong
/// dephasing or poor detection.
pub fn equatorial_approx_rss(eta: f64, gamma_deph: f64) -> EquatorialApprox {
    let damping = gamma_deph + (1.0 - eta) / 2.0;
    let r_ss = if eta == 0.0 { 0.0 } else { (eta / (damping * PI)).sqrt() };
    EquatorialApprox { r_ss, within_validity: r_ss <= 0.5 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    /// `dA/dr` near `r = 1` in the near-perfect limit, `-cos²(theta0)`.
    pub slope: f64,
    /// First-order expansion of the fixed point in `1 - eta` and `Gamma`.
    pub r0_approx: f64,
    /// Exact fixed point of `A`, which is the Markovian optimum.
    pub r0_exact: f64,
}

pub fn linearized_drift(theta0: f64, eta: f64, gamma_deph: f64) -> Result<Linearization> {
    check_eta(eta)?;
    if is_equatorial(theta0) {
        return Err(Error::EquatorialTarget);
    }
    let c = theta0.cos();
    let eps = 1.0 - eta;
    let tan2 = theta0.tan().powi(2);
    let r0_approx = 1.0 - eps * (1.0 + 1.0 / c) - (gamma_deph + eps / 2.0) * tan2;
    let r0_exact = optimal_gain(theta0, eta, gamma_deph)?.r0;
    Ok(Linearization { slope: -c * c, r0_approx, r0_exact })
}

/// Stationary mean under an affine drift: exactly its fixed point, whatever
/// the diffusion. Linearized state-estimate feedback can therefore do no
/// better than the Markovian optimum.
pub fn linearized_stationary_mean(theta0: f64, eta: f64, gamma_deph: f64) -> Result<f64> {
    linearized_drift(theta0, eta, gamma_deph).map(|l| l.r0_exact)
}
