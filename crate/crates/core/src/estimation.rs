//! Estimates and integrity bounds.
//!
//! `β` is the fraction of estimation rounds with even parity, `δ` the
//! fraction of failed verification rounds, `α` the fraction of estimation
//! outcomes an adversary flips and `η` the resulting shift of `θ̂`.

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::exec::Execution;
use crate::rng::{Domain, SeedTree};
use crate::{Error, Result};

/// `cos θ` below this is treated as zero.
pub const SINGULAR_TOL: f64 = 1e-9;

/// Clamp into `[0, 1]`, returning the clamped value and how far it moved.
pub fn clamp_unit(x: f64) -> (f64, f64) {
    let c = x.clamp(0.0, 1.0);
    (c, (x - c).abs())
}

/// `arccos(2β − 1)` in `[0, π]`, after clamping `β` into `[0, 1]`.
pub fn theta_from_beta(beta: f64) -> f64 {
    (2.0 * clamp_unit(beta).0 - 1.0).acos()
}

/// `(1 + cos θ)/2`.
pub fn beta_from_theta(theta: f64) -> f64 {
    0.5 * (1.0 + theta.cos())
}

/// Even-parity fraction after a fraction `alpha` of outcomes is flipped.
pub fn perturbed_beta(beta: f64, alpha: f64) -> f64 {
    beta + alpha - 2.0 * alpha * beta
}

/// Flip fraction needed to displace the estimate at `theta` by `eta`.
pub fn alpha_from_eta(theta: f64, eta: f64) -> Result<f64> {
    let c = theta.cos();
    if c.abs() < SINGULAR_TOL {
        return Err(Error::Singular(format!("cos({theta}) vanishes")));
    }
    Ok(((theta + eta / 2.0).sin() * (eta / 2.0).sin() / c).abs())
}

/// Polynomial lower bound on the flip fraction behind a shift `eta`.
pub fn f_poly(eta: f64, theta: f64) -> f64 {
    let t = theta;
    0.5 * (t + t.powi(3) / 3.0 + 2.0 * t.powi(5) / 15.0).abs() * (eta / 2.0).abs()
}

fn check_split(l: usize, k: usize) -> Result<()> {
    if k == 0 || k >= l {
        return Err(Error::invalid(format!("tail bound needs 0 < k < L, got k={k}, L={l}")));
    }
    Ok(())
}

/// `exp(−2ω²(L−k)k²/(L(k+1)))`.
pub fn lemma_tail_bound(omega: f64, l: usize, k: usize) -> Result<f64> {
    check_split(l, k)?;
    if omega < 0.0 {
        return Err(Error::invalid("omega must be nonnegative"));
    }
    let (l, k) = (l as f64, k as f64);
    let exponent = -2.0 * omega * omega * (l - k) * k * k / (l * (k + 1.0));
    Ok(exponent.exp().clamp(0.0, 1.0))
}

/// Probability bound on a shift `eta` surviving verification with failure
/// rate `delta`; 1 when `f_poly(eta, theta) < delta`.
pub fn bias_bound(eta: f64, theta: f64, delta: f64, l: usize, k: usize) -> Result<f64> {
    check_split(l, k)?;
    let omega = f_poly(eta, theta) - delta;
    if omega <= 0.0 {
        return Ok(1.0);
    }
    lemma_tail_bound(omega, l, k)
}

/// Undo a known flip rate: `(β′ − δ)/(1 − 2δ)`, clamped. The flag reports
/// whether clamping happened.
pub fn correct_beta(beta_prime: f64, delta: f64) -> Result<(f64, bool)> {
    if delta >= 0.5 - 1e-9 {
        return Err(Error::Uncorrectable { delta });
    }
    let raw = (beta_prime - delta) / (1.0 - 2.0 * delta);
    let (c, moved) = clamp_unit(raw);
    Ok((c, moved > 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceCheck {
    pub empirical: f64,
    pub predicted: f64,
}

impl VarianceCheck {
    pub fn ratio(&self) -> f64 {
        self.empirical / self.predicted
    }
}

/// Sample variance of repeated estimates against `1/ν`.
pub fn variance_check(theta_samples: &[f64], nu: usize) -> Result<VarianceCheck> {
    if nu == 0 {
        return Err(Error::invalid("nu must be positive"));
    }
    let empirical = crate::stats::sample_variance(theta_samples)
        .ok_or_else(|| Error::invalid("variance needs at least two samples"))?;
    Ok(VarianceCheck { empirical, predicted: 1.0 / nu as f64 })
}

/// Frequency of the joint event "verification passes at rate `delta`, yet
/// at least a `delta + omega` fraction of estimation rounds are 1" for
/// i.i.d. Bernoulli(`q`) rounds and a uniformly random verification subset.
pub fn lemma_event_frequency(
    l: usize,
    k: usize,
    q: f64,
    delta: f64,
    omega: f64,
    trials: usize,
    seeds: &SeedTree,
    exec: Execution,
) -> Result<f64> {
    check_split(l, k)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid("q must lie in [0, 1]"));
    }
    let hits: usize = exec
        .map(trials, |t| {
            let mut rng = seeds.stream(Domain::Sampling, 0, t as u64);
            let z: Vec<bool> = (0..l).map(|_| rng.random_bool(q)).collect();
            let mut in_v = vec![false; l];
            for i in index::sample(&mut rng, l, k) {
                in_v[i] = true;
            }
            let (mut sv, mut sn) = (0usize, 0usize);
            for i in 0..l {
                if z[i] {
                    if in_v[i] {
                        sv += 1;
                    } else {
                        sn += 1;
                    }
                }
            }
            let pass = sv as f64 <= k as f64 * delta;
            let biased = sn as f64 >= (l - k) as f64 * (delta + omega);
            usize::from(pass && biased)
        })
        .into_iter()
        .sum();
    Ok(hits as f64 / trials as f64)
}

/// One point of the bias-bound curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub eta: f64,
    pub f: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedEstimate {
    pub beta: f64,
    pub theta: f64,
    pub clamped: bool,
}

/// Outcome of the estimation step of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    /// Even-parity fraction of the estimation rounds (`β̂′`).
    pub beta_hat: f64,
    /// Failure fraction of the verification rounds, 0 without any.
    pub delta_hat: f64,
    /// `arccos(2β − 1)` of [`beta_used`](Self::beta_used).
    pub theta_hat: f64,
    pub beta_used: f64,
    pub beta_clamped: bool,
    /// Estimation and verification rounds actually executed.
    pub nu: usize,
    pub k: usize,
    pub variance_pred: f64,
    /// Four standard deviations of `θ̂`.
    pub ci_halfwidth: f64,
    pub bias_bound_curve: Vec<BoundPoint>,
    pub corrected: Option<CorrectedEstimate>,
}

/// Build the report from executed round counts.
///
/// `even_pe` counts estimation rounds with result 0, `odd_pv` verification
/// rounds with result 1.
pub fn estimate(
    even_pe: usize,
    nu: usize,
    odd_pv: usize,
    k: usize,
    correct: bool,
    eta_grid: &[f64],
) -> Result<EstimationReport> {
    if nu == 0 {
        return Err(Error::invalid("no estimation rounds were executed"));
    }
    let beta_hat = even_pe as f64 / nu as f64;
    let delta_hat = if k == 0 { 0.0 } else { odd_pv as f64 / k as f64 };
    let corrected = if correct {
        let (beta, clamped) = correct_beta(beta_hat, delta_hat)?;
        Some(CorrectedEstimate { beta, theta: theta_from_beta(beta), clamped })
    } else {
        None
    };
    let (beta_used, beta_clamped) = match &corrected {
        Some(c) => (c.beta, c.clamped),
        None => (beta_hat, false),
    };
    let theta_hat = theta_from_beta(beta_used);
    let l = nu + k;
    let bias_bound_curve = if k > 0 {
        eta_grid
            .iter()
            .map(|&eta| {
                Ok(BoundPoint {
                    eta,
                    f: f_poly(eta, theta_hat),
                    bound: bias_bound(eta, theta_hat, delta_hat, l, k)?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let variance_pred = 1.0 / nu as f64;
    Ok(EstimationReport {
        beta_hat,
        delta_hat,
        theta_hat,
        beta_used,
        beta_clamped,
        nu,
        k,
        variance_pred,
        ci_halfwidth: 4.0 * variance_pred.sqrt(),
        bias_bound_curve,
        corrected,
    })
}
