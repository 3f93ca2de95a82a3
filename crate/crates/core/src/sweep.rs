//! Parameter sweeps over a base run config.

use std::str::FromStr;

use serde::Serialize;

use crate::adversary::{AttackSpec, Strategy};
use crate::estimation::{bias_bound, lemma_tail_bound};
use crate::exec::Execution;
use crate::protocol::{run_appe, ProtocolConfig};
use crate::{Error, Result, SCHEMA_VERSION};

/// Verification slack used for the `tail_bound` column.
pub const TAIL_OMEGA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Flip probability of one dishonest non-participant.
    Alpha,
    /// Total rounds; the verification count keeps its share of `L`.
    L,
    /// Verification rounds.
    K,
    /// Mean participant parameter.
    ThetaBar,
    Seed,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::L => "L",
            SweepAxis::K => "k",
            SweepAxis::ThetaBar => "theta_bar",
            SweepAxis::Seed => "seed",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepAxis::L | SweepAxis::K | SweepAxis::Seed)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "alpha" => SweepAxis::Alpha,
            "L" | "l" => SweepAxis::L,
            "k" | "K" => SweepAxis::K,
            "theta_bar" | "theta" => SweepAxis::ThetaBar,
            "seed" => SweepAxis::Seed,
            other => return Err(Error::invalid(format!("unknown sweep axis {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisRange {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl AxisRange {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(format!("axis {} has no values", axis.name())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("axis values must be finite"));
        }
        if axis.integral() && values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
            return Err(Error::invalid(format!("axis {} takes nonnegative integers", axis.name())));
        }
        Ok(Self { axis, values })
    }
}

/// Parses `axis=start:stop:step` (inclusive) or `axis=value`.
impl FromStr for AxisRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, range) = s
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("sweep {s:?} is not axis=start:stop:step")))?;
        let axis: SweepAxis = name.trim().parse()?;
        let nums: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| Error::invalid(format!("sweep {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        let values = match nums.as_slice() {
            [v] => vec![*v],
            [start, stop, step] => {
                if !(*step > 0.0) {
                    return Err(Error::invalid(format!("sweep {s:?}: step must be positive")));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return AxisRange::new(axis, Vec::new());
                }
                (0..=count as usize).map(|i| start + i as f64 * step).collect()
            }
            _ => return Err(Error::invalid(format!("sweep {s:?} is not axis=start:stop:step"))),
        };
        AxisRange::new(axis, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub k: usize,
    pub theta_bar: f64,
    pub seed: u64,
    pub theta_hat: Option<f64>,
    pub delta_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    /// `bias_bound` at the first `eta_grid` point, using `θ̄` and `δ̂`.
    pub bias_bound: Option<f64>,
    /// `lemma_tail_bound(TAIL_OMEGA, L, k)`.
    pub tail_bound: Option<f64>,
    /// `θ̂ − θ̄`.
    pub empirical_bias: Option<f64>,
    pub abort: String,
}

fn mean_theta(cfg: &ProtocolConfig) -> f64 {
    cfg.participants.iter().map(|&p| cfg.theta[p]).sum::<f64>() / cfg.participants.len().max(1) as f64
}

/// Agent carrying the `alpha` axis: the last agent that neither participates
/// nor is Alice.
fn flip_agent(cfg: &ProtocolConfig) -> Result<usize> {
    (0..cfg.n)
        .rev()
        .find(|a| *a != cfg.alice && !cfg.participants.contains(a))
        .ok_or_else(|| Error::invalid("alpha axis needs an agent outside the participant set"))
}

fn apply(base: &ProtocolConfig, point: &[(SweepAxis, f64)]) -> Result<(ProtocolConfig, f64)> {
    let mut cfg = base.clone();
    let mut alpha = 0.0;
    let ratio = base.verification_rounds as f64 / base.total_rounds.max(1) as f64;
    for &(axis, v) in point {
        match axis {
            SweepAxis::Alpha => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid("alpha must lie in [0, 1]"));
                }
                alpha = v;
                cfg.adversary = AttackSpec::new(vec![flip_agent(base)?], vec![Strategy::AnnounceFlip { alpha: v }]);
            }
            SweepAxis::L => {
                cfg.total_rounds = v as usize;
                if !point.iter().any(|(a, _)| *a == SweepAxis::K) {
                    cfg.verification_rounds = (ratio * v).round() as usize;
                }
            }
            SweepAxis::K => cfg.verification_rounds = v as usize,
            SweepAxis::ThetaBar => {
                let shift = v - mean_theta(base);
                for &p in &base.participants {
                    cfg.theta[p] += shift;
                }
            }
            SweepAxis::Seed => cfg.seed = v as u64,
        }
    }
    Ok((cfg, alpha))
}

/// Every grid point of the Cartesian product, first axis slowest.
pub fn grid(axes: &[AxisRange]) -> Result<Vec<Vec<(SweepAxis, f64)>>> {
    if axes.is_empty() {
        return Err(Error::invalid("empty sweep grid"));
    }
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.axis == a.axis) {
            return Err(Error::invalid(format!("axis {} given twice", a.axis.name())));
        }
    }
    let mut points: Vec<Vec<(SweepAxis, f64)>> = vec![Vec::new()];
    for a in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                a.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((a.axis, v));
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Runs the protocol at every grid point. Rows come back in grid order
/// regardless of `exec`.
pub fn run_sweep(base: &ProtocolConfig, axes: &[AxisRange], exec: Execution) -> Result<Vec<SweepRow>> {
    let points = grid(axes)?;
    let configs: Vec<(ProtocolConfig, f64)> = points.iter().map(|p| apply(base, p)).collect::<Result<_>>()?;
    for (cfg, _) in &configs {
        cfg.validate()?;
    }
    let eta = base.eta_grid.first().copied();
    exec.map_slice(&configs, |(cfg, alpha)| {
        let out = run_appe(cfg)?;
        let theta_bar = mean_theta(cfg);
        let (l, k) = (cfg.total_rounds, cfg.verification_rounds);
        let est = out.report.estimate.as_ref();
        Ok(SweepRow {
            schema_version: SCHEMA_VERSION,
            alpha: *alpha,
            l,
            k,
            theta_bar,
            seed: cfg.seed,
            theta_hat: est.map(|e| e.theta_hat),
            delta_hat: est.map(|e| e.delta_hat),
            beta_hat: est.map(|e| e.beta_hat),
            bias_bound: match (eta, est) {
                (Some(eta), Some(e)) => bias_bound(eta, theta_bar, e.delta_hat, l, k).ok(),
                _ => None,
            },
            tail_bound: lemma_tail_bound(TAIL_OMEGA, l, k).ok(),
            empirical_bias: est.map(|e| e.theta_hat - theta_bar),
            abort: out.report.abort.as_ref().map(|a| a.name().to_string()).unwrap_or_default(),
        })
    })
    .into_iter()
    .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Internal(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Internal(format!("csv: {e}")))?;
    Ok(())
}
