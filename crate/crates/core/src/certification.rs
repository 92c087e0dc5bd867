//! Finite-size statistics: covariance of the correlator estimator, the
//! Chebyshev deviation bound and the sample-size planner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::InversionMaps;
use crate::protocol::{binomial3, CorrelatorAccumulator, CorrelatorVector, NUM_CLASSES};

/// Variance budget per unit of `N_tot` at three shots per setting:
/// `Tr Cov(ŷ) ≤ (10/4)(1/C(3,3) + 1)/N_U = 15/N_tot`.
pub const CHEBYSHEV_CONSTANT: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub n_tot: u64,
    pub n_u: u64,
    pub n_s: usize,
}

/// Smallest integer not below `v`, ignoring floating-point dust just above an
/// integer.
fn ceil_snapped(v: f64) -> u64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r as u64
    } else {
        v.ceil() as u64
    }
}

/// `N_tot = ⌈15 / (δ ε²)⌉` at three shots per setting.
pub fn plan(epsilon: f64, delta: f64) -> Result<CertificationPlan> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::Parameter(format!("epsilon={epsilon} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta={delta} must lie in (0, 1)")));
    }
    let n_tot = ceil_snapped(CHEBYSHEV_CONSTANT / (delta * epsilon * epsilon));
    Ok(CertificationPlan { epsilon, delta, n_tot, n_u: n_tot.div_ceil(3), n_s: 3 })
}

/// Bound `(10/(4 N_U)) (1/C(N_S,3) + 1)` on `Tr Cov` of the global estimator.
pub fn trace_cov_bound(n_u: u64, n_s: usize) -> f64 {
    let pairs = binomial3(n_s).max(1) as f64;
    (NUM_CLASSES as f64 / 4.0) * (1.0 / pairs + 1.0) / n_u as f64
}

/// Failure probability guaranteed by Chebyshev at the given budget.
pub fn achieved_delta(n_u: u64, n_s: usize, epsilon: f64) -> f64 {
    trace_cov_bound(n_u, n_s) / (epsilon * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub n_u: u64,
    pub n_s: usize,
    /// `Tr Cov` of the global estimator, `Tr(sample covariance) / N_U`.
    pub trace_cov: f64,
    /// Standard error of `trace_cov`, when per-setting data were available.
    pub std_error: Option<f64>,
    pub bound: f64,
    /// `trace_cov / bound`.
    pub ratio: f64,
}

/// Empirical covariance of the global estimator from per-setting estimates.
pub fn covariance_report(per_setting: &[[f64; NUM_CLASSES]], n_s: usize) -> Result<CovarianceReport> {
    let n = per_setting.len();
    if n < 2 {
        return Err(Error::Config(format!("covariance needs at least 2 settings, got {n}")));
    }
    let nf = n as f64;
    let mut mean = [0.0; NUM_CLASSES];
    for v in per_setting {
        for k in 0..NUM_CLASSES {
            mean[k] += v[k] / nf;
        }
    }
    let sq: Vec<f64> = per_setting
        .iter()
        .map(|v| v.iter().zip(mean).map(|(a, m)| (a - m) * (a - m)).sum())
        .collect();
    let per_setting_trace = sq.iter().sum::<f64>() / (nf - 1.0);
    let sq_mean = sq.iter().sum::<f64>() / nf;
    let sq_var = sq.iter().map(|s| (s - sq_mean) * (s - sq_mean)).sum::<f64>() / (nf - 1.0);
    let n_u = n as u64;
    let trace_cov = per_setting_trace / nf;
    let bound = trace_cov_bound(n_u, n_s);
    Ok(CovarianceReport {
        n_u,
        n_s,
        trace_cov,
        std_error: Some((sq_var / nf).sqrt() / nf),
        bound,
        ratio: trace_cov / bound,
    })
}

/// Same as [`covariance_report`] from streamed moments (no standard error).
pub fn covariance_report_from_moments(moments: &CorrelatorAccumulator, n_s: usize) -> Result<CovarianceReport> {
    if moments.count < 2 {
        return Err(Error::Config(format!("covariance needs at least 2 settings, got {}", moments.count)));
    }
    let cov = moments.covariance();
    let n_u = moments.count;
    let trace_cov = (0..NUM_CLASSES).map(|k| cov[k][k]).sum::<f64>() / n_u as f64;
    let bound = trace_cov_bound(n_u, n_s);
    Ok(CovarianceReport { n_u, n_s, trace_cov, std_error: None, bound, ratio: trace_cov / bound })
}

/// Outcome of a finite-size certification; serializes to the report JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    pub e4_tilde_hat: f64,
    pub epsilon: f64,
    pub delta_requested: f64,
    /// Chebyshev guarantee at the budget actually spent.
    pub delta_achieved: f64,
    pub n_tot: u64,
    pub certified: bool,
    /// `-e4_tilde_hat - epsilon`; positive iff certified.
    pub margin: f64,
}

/// Certifies entanglement iff `Ẽ4_hat + ε < 0`. Refuses when the data were
/// collected with less than the planned budget.
pub fn certify(y_hat: &CorrelatorVector, maps: &InversionMaps, plan: &CertificationPlan) -> Result<CertificationResult> {
    if y_hat.n_s < 3 || y_hat.n_u == 0 {
        return Err(Error::Config("certification needs a protocol estimate with n_s >= 3".into()));
    }
    let delta_achieved = achieved_delta(y_hat.n_u, y_hat.n_s, plan.epsilon);
    let n_tot = y_hat.n_tot();
    if n_tot < plan.n_tot || delta_achieved > plan.delta * (1.0 + 1e-12) {
        return Err(Error::Budget { have: n_tot, need: plan.n_tot });
    }
    let w = maps.estimate_witness(y_hat)?;
    let e4_tilde_hat = w.e4_tilde.expect("maps given");
    Ok(CertificationResult {
        e4_tilde_hat,
        epsilon: plan.epsilon,
        delta_requested: plan.delta,
        delta_achieved,
        n_tot,
        certified: e4_tilde_hat + plan.epsilon < 0.0,
        margin: -e4_tilde_hat - plan.epsilon,
    })
}
