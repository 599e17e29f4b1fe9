use std::f64::consts::PI;

use qfeedback::bayes::{stationary_mean_rss, QuadratureSpec};
use qfeedback::bloch::{is_equatorial, locus_no_feedback};
use qfeedback::markov::optimal_gain;
use qfeedback::trajectory::{delayed_feedback_purity, SimConfig};

use crate::error::{CliError, Result};
use crate::output::{Cell, Meta, Table};

/// Target angles `-pi + 2 pi (k + 1) / n`, ending at `pi`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + 2.0 * PI * (k + 1) as f64 / n as f64).collect()
}

// Driving amplitudes spread so the no-feedback locus is sampled from the
// origin (|alpha| large) through the ground state (alpha = 0).
fn alpha_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| (-6.0 + 12.0 * k as f64 / (n - 1) as f64).sinh()).collect()
}

pub fn locus(eta: f64, gamma: f64, n_points: usize) -> Result<Table> {
    if n_points < 8 {
        return Err(CliError::Usage(format!("--points must be at least 8 (got {n_points})")));
    }
    let mut meta = Meta::new("locus");
    meta.push("eta", eta).push("gamma", gamma).push("points", n_points);
    let mut table = Table::new(meta, &["strategy", "theta", "r", "x", "z"]);
    let mut push = |strategy: &str, theta: f64, r: f64| {
        let (s, c) = theta.sin_cos();
        table.push(vec![strategy.into(), theta.into(), r.into(), (r * s).into(), (r * c).into()]);
    };

    for (theta, r) in locus_no_feedback(gamma, &alpha_grid(n_points)) {
        push("no_feedback", theta, r);
    }
    let grid = theta_grid(n_points);
    for &theta0 in &grid {
        // Equatorial targets are out of reach of Markovian feedback; the gap
        // is part of the data.
        if is_equatorial(theta0) {
            continue;
        }
        push("markovian", theta0, optimal_gain(theta0, eta, gamma)?.r0);
    }
    for &theta0 in &grid {
        push("bayesian", theta0, stationary_mean_rss(theta0, eta, gamma, &QuadratureSpec::default())?.r_ss);
    }
    for &theta0 in &grid {
        push("unit_circle", theta0, 1.0);
    }
    Ok(table)
}

pub fn eta_sweep(theta0: f64, gamma: f64, eta_min: f64, eta_max: f64, steps: usize) -> Result<Table> {
    if !(eta_min > 0.0 && eta_max <= 1.0 && eta_min <= eta_max) {
        return Err(CliError::Usage(format!("need 0 < eta-min <= eta-max <= 1 (got {eta_min}, {eta_max})")));
    }
    if steps == 0 || (steps == 1 && eta_min != eta_max) {
        return Err(CliError::Usage("--steps must be at least 2 for a range".into()));
    }
    let mut meta = Meta::new("eta-sweep");
    meta.push("theta0", theta0)
        .push("gamma", gamma)
        .push("eta_min", eta_min)
        .push("eta_max", eta_max)
        .push("steps", steps);
    let mut table = Table::new(meta, &["eta", "r_markov", "r_bayes"]);
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..steps {
        let eta = if steps == 1 { eta_min } else { eta_min + (eta_max - eta_min) * k as f64 / (steps - 1) as f64 };
        let m = optimal_gain(theta0, eta, gamma)?.r0;
        let b = stationary_mean_rss(theta0, eta, gamma, &QuadratureSpec::default())?.r_ss;
        if b < m - 1e-6 {
            return Err(CliError::Check(format!("eta {eta}: state-estimate purity {b} below Markovian {m}")));
        }
        if let Some((pm, pb)) = prev {
            if m < pm - 1e-9 || b < pb - 1e-9 {
                return Err(CliError::Check(format!("eta {eta}: purity decreased with efficiency")));
            }
        }
        prev = Some((m, b));
        table.push(vec![eta.into(), m.into(), b.into()]);
    }
    Ok(table)
}

pub fn delay(taus: &[f64], cfg: &SimConfig) -> Result<(Table, Option<f64>)> {
    if taus.is_empty() {
        return Err(CliError::Usage("--tau needs at least one value".into()));
    }
    let mut meta = Meta::new("delay");
    let tau_list: Vec<String> = taus.iter().map(|t| t.to_string()).collect();
    meta.push("tau", tau_list.join(","));
    sim_meta(&mut meta, cfg);
    let mut table = Table::new(meta, &["tau", "p_simulated", "p_linear", "abs_error", "se"]);
    let mut pts = Vec::with_capacity(taus.len());
    for &tau in taus {
        let d = delayed_feedback_purity(tau, cfg)?;
        table.push(vec![tau.into(), d.purity.into(), d.linear.into(), (d.purity - d.linear).abs().into(), d.se.into()]);
        pts.push((tau, d.purity));
    }
    Ok((table, least_squares_slope(&pts)))
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn sim_meta(meta: &mut Meta, cfg: &SimConfig) {
    meta.push("dt", cfg.dt).push("tfinal", cfg.t_final).push("ntraj", cfg.n_traj).push("seed", cfg.master_seed);
}

pub fn bayes_rss(theta0: f64, eta: f64, gamma: f64) -> Result<Table> {
    let mut meta = Meta::new("bayes-rss");
    meta.push("theta0", theta0).push("eta", eta).push("gamma", gamma);
    let r = stationary_mean_rss(theta0, eta, gamma, &QuadratureSpec::default())?;
    let mut table = Table::new(meta, &["theta0", "eta", "gamma", "r_ss", "err_estimate", "special_case"]);
    let case = serde_json::to_value(r.special_case).expect("enum serializes");
    table.push(vec![
        theta0.into(),
        eta.into(),
        gamma.into(),
        r.r_ss.into(),
        r.err_estimate.into(),
        case.as_str().unwrap_or_default().into(),
    ]);
    Ok(table)
}

pub fn markov_optimal(theta0: f64, eta: f64, gamma: f64) -> Result<Table> {
    let mut meta = Meta::new("markov-optimal");
    meta.push("theta0", theta0).push("eta", eta).push("gamma", gamma);
    let opt = optimal_gain(theta0, eta, gamma)?;
    let alpha = opt.design(theta0, eta, gamma).map(|d| d.alpha);
    let mut table = Table::new(meta, &["theta0", "eta", "gamma", "lambda", "alpha", "r0", "equatorial"]);
    table.push(vec![
        theta0.into(),
        eta.into(),
        gamma.into(),
        opt.lambda.into(),
        Cell::from(alpha),
        opt.r0.into(),
        opt.equatorial.into(),
    ]);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_equator_and_pi() {
        let g = theta_grid(16);
        assert_eq!(g.len(), 16);
        assert_eq!(*g.last().unwrap(), PI);
        assert!(g.iter().filter(|t| is_equatorial(**t)).count() == 2);
    }

    #[test]
    fn locus_rows() {
        let t = locus(1.0, 0.0, 16).unwrap();
        let count = |s: &str| t.rows.iter().filter(|r| matches!(&r[0], Cell::Text(x) if x == s)).count();
        assert_eq!(count("no_feedback"), 16);
        assert_eq!(count("markovian"), 14);
        assert_eq!(count("bayesian"), 16);
        assert_eq!(count("unit_circle"), 16);
        assert!(locus(1.0, 0.0, 7).is_err());
    }

    #[test]
    fn slope_of_a_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 1.0 - 4.0 * k as f64)).collect();
        assert!((least_squares_slope(&pts).unwrap() + 4.0).abs() < 1e-12);
        assert!(least_squares_slope(&pts[..1]).is_none());
    }

    #[test]
    fn sweep_rejects_bad_range() {
        assert!(eta_sweep(0.3, 0.0, 0.0, 1.0, 5).is_err());
        assert!(eta_sweep(0.3, 0.0, 0.5, 0.4, 5).is_err());
        assert!(eta_sweep(0.3, 0.0, 0.5, 0.5, 1).is_ok());
    }
}
