//! Stochastic master equation trajectories under homodyne detection, with
//! optional feedback, and deterministic ensemble statistics.

mod controller;

pub use controller::{apply_controller, control_angle, delay_steps, rotate, Controller, ControllerState};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{wrap_angle, AtomParams, PolarState};
use crate::error::{Error, Result};

/// Radius floor inside the `1/r` terms of the polar SDE.
pub const R_FLOOR: f64 = 1e-6;

/// Trajectories per parallel work unit. Fixing the unit (rather than letting
/// the scheduler choose) keeps the reduction order independent of threads.
const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub initial: PolarState,
    /// Initial state of the second filter; defaults to `initial`.
    pub estimator_initial: Option<PolarState>,
    /// Store the ensemble mean every this many steps.
    pub sample_stride: usize,
}

impl SimConfig {
    pub fn new(t_final: f64, n_traj: usize, master_seed: u64) -> Self {
        Self {
            dt: 1e-3,
            t_final,
            n_traj,
            master_seed,
            initial: PolarState::ground(),
            estimator_initial: None,
            sample_stride: 100,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// First step index inside the stationary window `[t_final/2, t_final]`.
    pub fn window_start(&self) -> usize {
        self.n_steps().div_ceil(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", value: self.dt, reason: "must be positive" });
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter { name: "t_final", value: self.t_final, reason: "must be positive" });
        }
        if self.n_steps() == 0 {
            return Err(Error::InvalidConfig("t_final is shorter than one step"));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidConfig("n_traj must be at least 1"));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be at least 1"));
        }
        for s in std::iter::once(&self.initial).chain(self.estimator_initial.iter()) {
            if !(s.r >= 0.0 && s.r <= 1.0 && s.theta.is_finite()) {
                return Err(Error::InvalidConfig("initial state must have 0 <= r <= 1"));
            }
        }
        Ok(())
    }
}

/// Homodyne current increment `I dt = sqrt(eta) x dt + dW`.
pub fn homodyne_increment(state: &PolarState, eta: f64, dw: f64, dt: f64) -> f64 {
    measurement_mean(state.r, state.theta.sin(), eta, dt) + dw
}

#[inline]
fn measurement_mean(r: f64, sin_theta: f64, eta: f64, dt: f64) -> f64 {
    eta.sqrt() * r * sin_theta * dt
}

/// One Euler-Maruyama step of the conditioned state, driven by the
/// innovation `I dt - sqrt(eta) x dt`.
pub fn step_conditioned(state: PolarState, p: &AtomParams, innovation: f64, dt: f64) -> PolarState {
    let (s, c) = state.theta.sin_cos();
    step_polar(state, s, c, p, innovation, dt)
}

#[inline]
fn step_polar(state: PolarState, s: f64, c: f64, p: &AtomParams, dw: f64, dt: f64) -> PolarState {
    let r = state.r;
    let rf = r.max(R_FLOOR);
    let eta = p.eta;
    let g = p.gamma_deph;
    let se = eta.sqrt();

    // The kappa / r part of the radial drift is taken implicitly: explicit
    // steps overshoot near the origin and bias the stationary mean by O(dt).
    let kappa = 0.5 * eta * c * c;
    let drift_r = -0.5 * r * (1.0 + c * c) - g * r * s * s - c + 0.5 * eta * (2.0 * c + r);
    let noise_r = se * s * (1.0 - r * r);
    let drift_t = (0.5 - g) * s * c + 2.0 * p.alpha + s / rf + eta * s * (r + c) * (1.0 - 1.0 / (rf * rf));
    let noise_t = se * (1.0 + c / rf);

    let y = r + drift_r * dt + noise_r * dw;
    let mut theta = state.theta + drift_t * dt + noise_t * dw;
    if y < 0.0 {
        // Passing through the origin: (-r, theta) is (r, theta + pi).
        theta += PI;
    }
    PolarState { r: implicit_radius(y.abs(), kappa * dt).min(1.0), theta: wrap_angle(theta) }
}

// Positive root of r^2 - y r - k = 0 for y, k >= 0, i.e. r = y + k / r.
#[inline]
fn implicit_radius(y: f64, k: f64) -> f64 {
    if k == 0.0 {
        y
    } else {
        0.5 * (y + (y * y + 4.0 * k).sqrt())
    }
}

/// Sampled path of a single trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub times: Vec<f64>,
    pub states: Vec<PolarState>,
    /// Second filter states; empty without a dual filter.
    pub estimates: Vec<PolarState>,
    /// Integrated current `sum I dt` over the interval ending at each sample.
    pub current_integrals: Vec<f64>,
    /// Feedback rotation of the step that ended at each sample.
    pub actions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count();
        let mean = values.clone().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Self { mean, se: (var / n as f64).sqrt() }
    }
}

/// Ensemble statistics. Standard errors are taken across trajectories;
/// stationary values are per-trajectory time averages over the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_z: Vec<f64>,
    pub mean_r: Vec<f64>,
    pub se_x: Vec<f64>,
    pub se_z: Vec<f64>,
    pub se_r: Vec<f64>,
    pub window: (f64, f64),
    pub x: MeanSe,
    pub z: MeanSe,
    pub r: MeanSe,
    /// Covariance of the window means of x and z.
    pub xz_cov: f64,
    /// Purity of the ensemble-averaged state, `x^2 + z^2` of the window
    /// means, with a first-order error estimate.
    pub purity: MeanSe,
}

struct Outcome {
    samples: Vec<[f64; 3]>,
    /// Window averages of x, z, r and the filter divergence.
    window: [f64; 4],
    record: Option<TrajectoryRecord>,
}

fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn check_run(cfg: &SimConfig, params: &AtomParams, controller: &Controller) -> Result<()> {
    cfg.validate()?;
    params.validate()?;
    controller.validate()?;
    let (law, estimator) = controller.split();
    let believed_eta = estimator.map_or(params.eta, |e| e.eta);
    if let Controller::Delayed { tau, .. } = law {
        if *tau > 0.0 && *tau < 5.0 * cfg.dt {
            return Err(Error::UnresolvedDelay { tau: *tau, dt: cfg.dt });
        }
    }
    if matches!(law, Controller::Markovian { .. } | Controller::Delayed { .. }) && believed_eta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eta",
            value: believed_eta,
            reason: "current feedback needs a measured signal",
        });
    }
    Ok(())
}

fn run(index: u64, cfg: &SimConfig, params: &AtomParams, controller: &Controller, keep: bool) -> Outcome {
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let n = cfg.n_steps();
    let k0 = cfg.window_start();
    let mut rng = trajectory_rng(cfg.master_seed, index);
    let (_, estimator) = controller.split();
    let est_init = cfg.estimator_initial.unwrap_or(cfg.initial);
    let mut memory = ControllerState::new(controller, dt, estimator.map(|_| est_init));

    let mut state = cfg.initial;
    let mut samples = Vec::with_capacity(n / cfg.sample_stride + 2);
    let mut window = [0.0; 4];
    let mut record = keep.then(|| TrajectoryRecord {
        index,
        times: Vec::new(),
        states: Vec::new(),
        estimates: Vec::new(),
        current_integrals: Vec::new(),
        actions: Vec::new(),
    });
    let mut last_action = 0.0;
    let mut current = 0.0;

    for k in 0..=n {
        let (s, c) = state.theta.sin_cos();
        let (x, z) = (state.r * s, state.r * c);
        if k % cfg.sample_stride == 0 || k == n {
            samples.push([x, z, state.r]);
            if let Some(rec) = record.as_mut() {
                rec.times.push(k as f64 * dt);
                rec.states.push(state);
                rec.estimates.extend(memory.estimate);
                rec.actions.push(last_action);
                rec.current_integrals.push(current);
                current = 0.0;
            }
        }
        if k >= k0 {
            window[0] += x;
            window[1] += z;
            window[2] += state.r;
            if let Some(e) = memory.estimate {
                let (dr, dth) = (state.r - e.r, wrap_angle(state.theta - e.theta));
                window[3] += dth * dth + dr * dr;
            }
        }
        if k == n {
            break;
        }

        let dw: f64 = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let mean = measurement_mean(state.r, s, params.eta, dt);
        let idt = mean + dw;
        current += idt;
        // The observer reconstructs the innovation from the record; computing
        // it the same way for both filters keeps matched filters bit-identical.
        state = step_polar(state, s, c, params, idt - mean, dt);
        if let (Some(ep), Some(est)) = (estimator, memory.estimate) {
            let (se, ce) = est.theta.sin_cos();
            let m = measurement_mean(est.r, se, ep.eta, dt);
            memory.estimate = Some(step_polar(est, se, ce, ep, idt - m, dt));
        }
        let (next, _, angle) = apply_controller(state, controller, params, idt, &mut memory, dt);
        state = next;
        last_action = angle;
    }

    let count = (n + 1 - k0) as f64;
    for w in &mut window {
        *w /= count;
    }
    Outcome { samples, window, record }
}

/// Runs trajectory `index` of the ensemble and returns its sampled path.
pub fn simulate_trajectory(
    cfg: &SimConfig,
    params: &AtomParams,
    controller: &Controller,
    index: u64,
) -> Result<TrajectoryRecord> {
    check_run(cfg, params, controller)?;
    Ok(run(index, cfg, params, controller, true).record.expect("record requested"))
}

struct BatchSums {
    /// Per sample: sums of x, x^2, z, z^2, r, r^2.
    moments: Vec<[f64; 6]>,
    windows: Vec<[f64; 4]>,
}

fn run_ensemble(cfg: &SimConfig, params: &AtomParams, controller: &Controller) -> (EnsembleStats, MeanSe) {
    let n_batches = cfg.n_traj.div_ceil(BATCH);
    let batches: Vec<BatchSums> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH;
            let hi = (lo + BATCH).min(cfg.n_traj);
            let mut sums = BatchSums { moments: Vec::new(), windows: Vec::with_capacity(hi - lo) };
            for i in lo..hi {
                let out = run(i as u64, cfg, params, controller, false);
                if sums.moments.is_empty() {
                    sums.moments = vec![[0.0; 6]; out.samples.len()];
                }
                for (m, s) in sums.moments.iter_mut().zip(&out.samples) {
                    for (j, v) in s.iter().enumerate() {
                        m[2 * j] += v;
                        m[2 * j + 1] += v * v;
                    }
                }
                sums.windows.push(out.window);
            }
            sums
        })
        .collect();

    let n_samples = batches[0].moments.len();
    let mut moments = vec![[0.0; 6]; n_samples];
    let mut windows = Vec::with_capacity(cfg.n_traj);
    for b in batches {
        for (acc, m) in moments.iter_mut().zip(&b.moments) {
            for j in 0..6 {
                acc[j] += m[j];
            }
        }
        windows.extend(b.windows);
    }

    let nt = cfg.n_traj as f64;
    let stat = |sum: f64, sum2: f64| {
        let mean = sum / nt;
        let se = if cfg.n_traj < 2 { 0.0 } else { ((sum2 / nt - mean * mean).max(0.0) * nt / (nt - 1.0) / nt).sqrt() };
        (mean, se)
    };
    let n = cfg.n_steps();
    let mut times = Vec::with_capacity(n_samples);
    let mut k = 0;
    while k < n {
        times.push(k as f64 * cfg.dt);
        k += cfg.sample_stride;
    }
    times.push(n as f64 * cfg.dt);

    let col = |j: usize| -> (Vec<f64>, Vec<f64>) { moments.iter().map(|m| stat(m[2 * j], m[2 * j + 1])).unzip() };
    let (mean_x, se_x) = col(0);
    let (mean_z, se_z) = col(1);
    let (mean_r, se_r) = col(2);

    let x = MeanSe::of(windows.iter().map(|w| w[0]));
    let z = MeanSe::of(windows.iter().map(|w| w[1]));
    let r = MeanSe::of(windows.iter().map(|w| w[2]));
    let divergence = MeanSe::of(windows.iter().map(|w| w[3]));
    // Linearised purity per trajectory, 2 (xbar x_i + zbar z_i), carries the
    // x-z covariance into the error estimate.
    let lin = MeanSe::of(windows.iter().map(|w| 2.0 * (x.mean * w[0] + z.mean * w[1])));
    let purity = MeanSe { mean: x.mean * x.mean + z.mean * z.mean, se: lin.se };
    let xz_cov = if cfg.n_traj < 2 {
        0.0
    } else {
        windows.iter().map(|w| (w[0] - x.mean) * (w[1] - z.mean)).sum::<f64>() / ((nt - 1.0) * nt)
    };

    let stats = EnsembleStats {
        n_traj: cfg.n_traj,
        times,
        mean_x,
        mean_z,
        mean_r,
        se_x,
        se_z,
        se_r,
        window: (cfg.window_start() as f64 * cfg.dt, n as f64 * cfg.dt),
        x,
        z,
        r,
        xz_cov,
        purity,
    };
    (stats, divergence)
}

/// Simulates `cfg.n_traj` trajectories in parallel. Results depend only on
/// the configuration, not on the number of worker threads.
pub fn simulate_ensemble(cfg: &SimConfig, params: &AtomParams, controller: &Controller) -> Result<EnsembleStats> {
    check_run(cfg, params, controller)?;
    Ok(run_ensemble(cfg, params, controller).0)
}

impl EnsembleStats {
    /// Component of the stationary ensemble-averaged state along the ray
    /// `theta0`. Equals the mean radius when every trajectory sits on the
    /// ray.
    pub fn along(&self, theta0: f64) -> MeanSe {
        let (s, c) = theta0.sin_cos();
        let var = s * s * self.x.se * self.x.se + c * c * self.z.se * self.z.se + 2.0 * s * c * self.xz_cov;
        MeanSe { mean: s * self.x.mean + c * self.z.mean, se: var.max(0.0).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFilterResult {
    pub stats: EnsembleStats,
    /// Window average of `(theta - theta_est)^2 + (r - r_est)^2`, angle
    /// difference wrapped.
    pub divergence: MeanSe,
}

/// Feedback computed from a filter with parameters `estimator` while the
/// atom evolves with `truth`.
pub fn dual_filter_run(
    cfg: &SimConfig,
    truth: &AtomParams,
    estimator: &AtomParams,
    law: Controller,
) -> Result<DualFilterResult> {
    let controller = Controller::DualFilter { estimator: *estimator, inner: Box::new(law) };
    check_run(cfg, truth, &controller)?;
    let (stats, divergence) = run_ensemble(cfg, truth, &controller);
    Ok(DualFilterResult { stats, divergence })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayPurity {
    pub tau: f64,
    pub purity: f64,
    pub se: f64,
    /// Small-delay law `1 - 4 tau`.
    pub linear: f64,
}

/// Purity of the ensemble-averaged stationary state when the noise
/// cancelling feedback for the excited state (`lambda = -1`, no driving,
/// `eta = 1`) acts on the current measured `tau` earlier.
pub fn delayed_feedback_purity(tau: f64, cfg: &SimConfig) -> Result<DelayPurity> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParameter { name: "tau", value: tau, reason: "delay must be non-negative" });
    }
    let params = AtomParams { alpha: 0.0, gamma_deph: 0.0, eta: 1.0 };
    let mut cfg = *cfg;
    cfg.initial = PolarState::pure(0.0);
    let stats = simulate_ensemble(&cfg, &params, &Controller::Delayed { lambda: -1.0, tau })?;
    Ok(DelayPurity { tau, purity: stats.purity.mean, se: stats.purity.se, linear: 1.0 - 4.0 * tau })
}

/// Wrapped angular distance, used by tests and diagnostics.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn cfg(t: f64, n: usize) -> SimConfig {
        SimConfig::new(t, n, 7)
    }

    #[test]
    fn homodyne_mean_and_noise() {
        let s = PolarState::new(0.5, FRAC_PI_4);
        let i = homodyne_increment(&s, 0.64, 0.01, 1e-3);
        assert!((i - (0.8 * 0.5 * FRAC_PI_4.sin() * 1e-3 + 0.01)).abs() < 1e-16);
    }

    #[test]
    fn mean_step_matches_bloch_drift() {
        // Three-point Gauss-Hermite average over dW ~ N(0, dt); the Itô terms
        // of the polar drift must reproduce the Cartesian Bloch drift.
        let p = AtomParams { alpha: 0.3, gamma_deph: 0.2, eta: 0.7 };
        let s = PolarState::new(0.6, 1.1);
        let dt = 1e-6;
        let h = (3.0f64 * dt).sqrt();
        let nodes = [(-h, 1.0 / 6.0), (0.0, 2.0 / 3.0), (h, 1.0 / 6.0)];
        let (mut dx, mut dz) = (0.0, 0.0);
        for (dw, w) in nodes {
            let next = step_conditioned(s, &p, dw, dt);
            dx += w * (next.x() - s.x()) / dt;
            dz += w * (next.z() - s.z()) / dt;
        }
        let d = crate::bloch::drift_no_feedback(&crate::bloch::from_polar(&s), &p);
        assert!((dx - d.x).abs() < 1e-4, "{dx} vs {}", d.x);
        assert!((dz - d.z).abs() < 1e-4, "{dz} vs {}", d.z);
    }

    #[test]
    fn noise_terms_match_cartesian_form() {
        // dx = sqrt(eta)(1 + z - x^2) dW, dz = -sqrt(eta) x (1 + z) dW.
        let p = AtomParams { alpha: 0.0, gamma_deph: 0.0, eta: 0.5 };
        let s = PolarState::new(0.7, 2.0);
        let dw = 1e-7;
        let a = step_conditioned(s, &p, dw, 0.0);
        let (x, z) = (s.x(), s.z());
        let ex = p.eta.sqrt() * (1.0 + z - x * x);
        let ez = -p.eta.sqrt() * x * (1.0 + z);
        assert!(((a.x() - x) / dw - ex).abs() < 1e-5);
        assert!(((a.z() - z) / dw - ez).abs() < 1e-5);
    }

    #[test]
    fn ground_state_is_fixed_without_drive() {
        let p = AtomParams { alpha: 0.0, gamma_deph: 0.3, eta: 1.0 };
        let next = step_conditioned(PolarState::ground(), &p, 0.37, 1e-3);
        assert!((next.r - 1.0).abs() < 1e-12);
        assert!(angle_distance(next.theta, PI) < 1e-12);
    }

    #[test]
    fn record_layout_and_invariants() {
        let p = AtomParams { alpha: 0.8, gamma_deph: 0.1, eta: 0.9 };
        let c = cfg(2.0, 1);
        let rec = simulate_trajectory(&c, &p, &Controller::Markovian { lambda: -0.4 }, 3).unwrap();
        assert_eq!(rec.times.len(), 21);
        assert!(rec.estimates.is_empty());
        for s in &rec.states {
            assert!(s.r >= 0.0 && s.r <= 1.0);
            assert!(s.theta > -PI && s.theta <= PI);
        }
    }

    #[test]
    fn same_seed_same_path() {
        let p = AtomParams { alpha: 1.0, gamma_deph: 0.0, eta: 1.0 };
        let c = cfg(1.0, 1);
        let a = simulate_trajectory(&c, &p, &Controller::None, 5).unwrap();
        let b = simulate_trajectory(&c, &p, &Controller::None, 5).unwrap();
        let other = simulate_trajectory(&c, &p, &Controller::None, 6).unwrap();
        assert_eq!(a.states, b.states);
        assert_ne!(a.states, other.states);
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let p = AtomParams { alpha: 0.5, gamma_deph: 0.0, eta: 0.8 };
        let c = cfg(1.0, 150);
        let law = Controller::Markovian { lambda: -0.3 };
        let run_with = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_ensemble(&c, &p, &law).unwrap())
        };
        let a = run_with(1);
        let b = run_with(4);
        assert_eq!(a, b);
    }

    #[test]
    fn matched_dual_filter_is_bit_identical() {
        let p = AtomParams { alpha: 0.0, gamma_deph: 0.1, eta: 0.8 };
        let mut c = cfg(2.0, 70);
        c.initial = PolarState::pure(1.0);
        for law in [
            Controller::BayesianProjection { theta0: 1.0 },
            Controller::BayesianGain { beta: 50.0, theta0: 1.0 },
            Controller::Markovian { lambda: -0.5 },
        ] {
            let single = simulate_ensemble(&c, &p, &law).unwrap();
            let dual = dual_filter_run(&c, &p, &p, law).unwrap();
            assert_eq!(single, dual.stats);
            assert_eq!(dual.divergence.mean, 0.0);
        }
    }

    #[test]
    fn config_validation() {
        let p = AtomParams { alpha: 0.0, gamma_deph: 0.0, eta: 1.0 };
        let mut c = cfg(1.0, 1);
        c.dt = 0.0;
        assert!(simulate_ensemble(&c, &p, &Controller::None).is_err());
        let c = cfg(1.0, 0);
        assert!(simulate_ensemble(&c, &p, &Controller::None).is_err());
        let c = cfg(1.0, 1);
        let short = Controller::Delayed { lambda: -1.0, tau: 2e-3 };
        assert_eq!(simulate_ensemble(&c, &p, &short).unwrap_err(), Error::UnresolvedDelay { tau: 2e-3, dt: 1e-3 });
        let blind = AtomParams { eta: 0.0, ..p };
        assert!(simulate_ensemble(&c, &blind, &Controller::Markovian { lambda: 1.0 }).is_err());
        assert!(simulate_ensemble(&c, &blind, &Controller::None).is_ok());
    }

    #[test]
    fn window_and_sample_times() {
        let c = cfg(3.0, 2);
        let p = AtomParams { alpha: 0.2, gamma_deph: 0.0, eta: 0.5 };
        let st = simulate_ensemble(&c, &p, &Controller::None).unwrap();
        assert_eq!(st.times.len(), 31);
        assert_eq!(st.times[0], 0.0);
        assert!((st.times[30] - 3.0).abs() < 1e-12);
        assert_eq!(st.window, (1.5, 3.0));
        assert!(st.se_x.iter().all(|&v| v >= 0.0));
    }
}
