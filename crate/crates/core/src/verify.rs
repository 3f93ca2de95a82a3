//! Self-check suites behind `appe verify`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use serde::Serialize;

use crate::adversary::{DelayPolicy, Strategy};
use crate::anonymity::{
    dishonest_conditional_state_for, transcript_indistinguishability, uniform_marginal_check, AnonymitySettings,
    AnonymityTestConfig, Assignment,
};
use crate::adversary::AttackSpec;
use crate::estimation::{correct_beta, lemma_event_frequency, lemma_tail_bound, perturbed_beta};
use crate::exec::Execution;
use crate::privacy::{check_privacy_conditions, qfi_matrix, QfiMethod};
use crate::protocol::{run_appe, Mutation, ProtocolConfig};
use crate::quantum::{sample_ghz_phase_fastpath, trace_distance, DensityMatrix, OutcomeVector, PureState};
use crate::rng::{Domain, SeedTree};
use crate::stats::bernoulli_sigma;
use crate::subprotocols::{notification, parity_protocol, vote, ParityOptions, RoleAssignment, VoteOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Core,
    Subprotocols,
    Integrity,
    Privacy,
    Anonymity,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Core, Suite::Subprotocols, Suite::Integrity, Suite::Privacy, Suite::Anonymity];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Core => "core",
            Suite::Subprotocols => "subprotocols",
            Suite::Integrity => "integrity",
            Suite::Privacy => "privacy",
            Suite::Anonymity => "anonymity",
        }
    }
}

/// `all` or a single suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSelector(pub Option<Suite>);

impl SuiteSelector {
    pub fn suites(self) -> Vec<Suite> {
        match self.0 {
            Some(s) => vec![s],
            None => Suite::ALL.to_vec(),
        }
    }
}

impl FromStr for SuiteSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(SuiteSelector(None));
        }
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .map(|x| SuiteSelector(Some(x)))
            .ok_or_else(|| Error::invalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suites: SuiteSelector,
    pub mutation: Option<Mutation>,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { suites: SuiteSelector(None), mutation: None, seed: 2024, exec: Execution::Parallel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub seed: u64,
    pub mutation: Option<Mutation>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_junit(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let failures = self.failures().count();
        out.push_str(&format!("<testsuites name=\"appe-verify\" tests=\"{}\" failures=\"{failures}\">\n", self.checks.len()));
        for suite in Suite::ALL {
            let checks: Vec<&CheckResult> = self.checks.iter().filter(|c| c.suite == suite).collect();
            if checks.is_empty() {
                continue;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            out.push_str(&format!(
                "  <testsuite name=\"{}\" tests=\"{}\" failures=\"{failed}\">\n",
                suite.name(),
                checks.len()
            ));
            for c in checks {
                out.push_str(&format!("    <testcase classname=\"{}\" name=\"{}\"", suite.name(), xml_escape(&c.name)));
                if c.passed {
                    out.push_str("/>\n");
                } else {
                    out.push_str(&format!(">\n      <failure message=\"{}\"/>\n    </testcase>\n", xml_escape(&c.detail)));
                }
            }
            out.push_str("  </testsuite>\n");
        }
        out.push_str("</testsuites>\n");
        out
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

struct Check {
    passed: bool,
    detail: String,
    metrics: BTreeMap<String, f64>,
}

impl Check {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into(), metrics: BTreeMap::new() }
    }

    fn metric(mut self, key: &str, v: f64) -> Self {
        self.metrics.insert(key.to_string(), v);
        self
    }
}

type CheckFn = fn(&VerifyOptions) -> Result<Check>;

fn checks_for(suite: Suite) -> Vec<(&'static str, CheckFn)> {
    match suite {
        Suite::Core => vec![("parity-law", parity_law), ("reduced-state-anonymity", reduced_states)],
        Suite::Subprotocols => vec![
            ("notification-exhaustive", notification_exhaustive),
            ("parity-exhaustive", parity_exhaustive),
            ("vote-tally", vote_tally),
        ],
        Suite::Integrity => vec![
            ("verification-soundness", pv_soundness),
            ("flip-detection", flip_detection),
            ("lemma-bound", lemma_bound),
            ("correction-roundtrip", correction_roundtrip),
        ],
        Suite::Privacy => vec![("qfi-rank-one", qfi_rank_one)],
        Suite::Anonymity => vec![
            ("uniform-marginals", uniform_marginals),
            ("conditional-state", conditional_state),
            ("transcript-indistinguishability", indistinguishability),
        ],
    }
}

/// Runs the selected suites. Errors inside a check count as failures.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    for suite in opts.suites.suites() {
        for (name, f) in checks_for(suite) {
            let (passed, detail, metrics) = match f(opts) {
                Ok(c) => (c.passed, c.detail, c.metrics),
                Err(e) => (false, format!("error: {e}"), BTreeMap::new()),
            };
            checks.push(CheckResult { suite, name: name.to_string(), passed, detail, metrics });
        }
    }
    VerifyReport { schema_version: crate::SCHEMA_VERSION, seed: opts.seed, mutation: opts.mutation, checks }
}

fn seeds(opts: &VerifyOptions, salt: u64) -> SeedTree {
    SeedTree::new(opts.seed).child(salt)
}

fn parity_law(opts: &VerifyOptions) -> Result<Check> {
    let samples = 20_000;
    let mut worst = 0.0f64;
    for (i, phase) in [0.0, PI / 4.0, PI / 2.0, 2.0 * PI / 3.0, PI].into_iter().enumerate() {
        let mut rng = seeds(opts, 1).stream(Domain::Sampling, 0, i as u64);
        let mut even = 0usize;
        for _ in 0..samples {
            even += usize::from(sample_ghz_phase_fastpath(6, phase, &mut rng)?.parity() == 0);
        }
        let p = (1.0 + phase.cos()) / 2.0;
        let sigma = bernoulli_sigma(p, samples).max(1e-12);
        worst = worst.max((even as f64 / samples as f64 - p).abs() / sigma);
    }
    Ok(Check::new(worst <= 4.0, format!("largest deviation {worst:.2} sigma")).metric("max_z", worst))
}

fn reduced_states(_: &VerifyOptions) -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 2..=6usize {
        for mask in 1u32..(1 << n) - 1 {
            let subset: Vec<usize> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
            let mut diag = vec![0.0; 1 << subset.len()];
            diag[0] = 0.5;
            *diag.last_mut().expect("nonempty") = 0.5;
            let target = DensityMatrix::from_diagonal(&diag)?;
            for k in 0..10 {
                let rho = PureState::ghz_with_phase(n, k as f64 * 2.0 * PI / 10.0)?.reduced_density(&subset)?;
                worst = worst.max(trace_distance(&rho, &target)?);
            }
        }
    }
    Ok(Check::new(worst <= 1e-12, format!("largest trace distance {worst:e}")).metric("max_trace_distance", worst))
}

fn notification_exhaustive(opts: &VerifyOptions) -> Result<Check> {
    let tree = seeds(opts, 2);
    let mut cases = 0;
    for n in 1..=4usize {
        for alice in 0..n {
            for mask in 0u32..1 << n {
                let parts: Vec<bool> = (0..n).map(|a| mask >> a & 1 == 1).collect();
                let Ok(roles) = RoleAssignment::new(n, alice, parts.clone()) else {
                    continue;
                };
                let t = notification(&roles, &tree, cases);
                cases += 1;
                if t.outputs.iter().zip(&parts).any(|(&z, &p)| (z == 1) != p) {
                    return Ok(Check::new(false, format!("wrong output for n={n} alice={alice} mask={mask:b}")));
                }
            }
        }
    }
    Ok(Check::new(true, format!("{cases} assignments")).metric("cases", cases as f64))
}

fn parity_exhaustive(opts: &VerifyOptions) -> Result<Check> {
    let tree = seeds(opts, 3);
    let mut cases = 0u64;
    for n in 1..=4usize {
        for mask in 0u32..1 << n {
            let inputs: Vec<u8> = (0..n).map(|a| (mask >> a & 1) as u8).collect();
            let out = parity_protocol(&inputs, &tree, cases, ParityOptions::default())?;
            cases += 1;
            if out.y != (mask.count_ones() & 1) as u8 {
                return Ok(Check::new(false, format!("wrong parity for n={n} inputs={mask:b}")));
            }
        }
    }
    Ok(Check::new(true, format!("{cases} input vectors")).metric("cases", cases as f64))
}

fn vote_tally(opts: &VerifyOptions) -> Result<Check> {
    let tree = seeds(opts, 4);
    let runs = 20usize;
    let n = 4;
    let correct = opts
        .exec
        .map(runs, |r| {
            let choices: Vec<u8> = (0..n).map(|a| ((r >> a) & 1) as u8).collect();
            let ones = choices.iter().filter(|&&c| c == 1).count();
            match vote(&choices, VoteOptions::new(20_000), &tree, r as u64) {
                Ok(Ok(o)) => o.tally == [n - ones, ones],
                _ => false,
            }
        })
        .into_iter()
        .filter(|&ok| ok)
        .count();
    let rate = correct as f64 / runs as f64;
    Ok(Check::new(rate >= 0.9, format!("{correct}/{runs} tallies correct")).metric("success_rate", rate))
}

fn honest_config(seed: u64, l: usize, k: usize) -> ProtocolConfig {
    let mut cfg = ProtocolConfig::new(6, 2, vec![0, 1, 2, 3], vec![0.8, 1.0, 1.1, 1.3, 0.0, 0.0], l, k);
    cfg.seed = seed;
    cfg
}

fn pv_soundness(opts: &VerifyOptions) -> Result<Check> {
    let out = run_appe(&honest_config(seeds(opts, 5).root(), 20_000, 10_000))?;
    let delta = out.report.estimate.as_ref().map(|e| e.delta_hat);
    Ok(match delta {
        Some(d) => Check::new(d == 0.0, format!("delta_hat = {d}")).metric("delta_hat", d),
        None => Check::new(false, format!("run aborted: {:?}", out.report.abort)),
    })
}

fn flip_detection(opts: &VerifyOptions) -> Result<Check> {
    let alpha = 0.05;
    let mut cfg = honest_config(seeds(opts, 6).root(), 40_000, 20_000);
    cfg.adversary = AttackSpec::new(vec![5], vec![Strategy::AnnounceFlip { alpha }]);
    let out = run_appe(&cfg)?;
    let Some(est) = out.report.estimate.as_ref() else {
        return Ok(Check::new(false, format!("run aborted: {:?}", out.report.abort)));
    };
    let sigma = bernoulli_sigma(alpha, 20_000);
    let z = (est.delta_hat - alpha).abs() / sigma;
    Ok(Check::new(z <= 4.0, format!("delta_hat = {} ({z:.2} sigma from {alpha})", est.delta_hat))
        .metric("delta_hat", est.delta_hat)
        .metric("z", z))
}

fn lemma_bound(opts: &VerifyOptions) -> Result<Check> {
    let trials = 4000;
    let freq = lemma_event_frequency(200, 100, 0.1, 0.1, 0.1, trials, &seeds(opts, 7), opts.exec)?;
    let bound = lemma_tail_bound(0.1, 200, 100)?;
    let limit = bound + 4.0 * bernoulli_sigma(bound, trials);
    Ok(Check::new(freq <= limit, format!("frequency {freq} against bound {bound:.5}"))
        .metric("frequency", freq)
        .metric("bound", bound))
}

fn correction_roundtrip(_: &VerifyOptions) -> Result<Check> {
    let mut worst = 0.0f64;
    for i in 0..=20 {
        let beta = i as f64 / 20.0;
        for j in 0..10 {
            let alpha = j as f64 * 0.049;
            let (back, _) = correct_beta(perturbed_beta(beta, alpha), alpha)?;
            worst = worst.max((back - beta).abs());
        }
    }
    Ok(Check::new(worst <= 1e-12, format!("largest round-trip error {worst:e}")).metric("max_error", worst))
}

fn qfi_rank_one(opts: &VerifyOptions) -> Result<Check> {
    let mut rng = seeds(opts, 8).stream(Domain::Sampling, 0, 0);
    let mut worst = BTreeMap::from([
        ("analytic_gap", 0.0f64),
        ("fd_gap", 0.0),
        ("second_singular_value", 0.0),
        ("derivative_gap", 0.0),
    ]);
    for m in 2..=6usize {
        let theta: Vec<f64> = (0..m).map(|_| rand::Rng::random_range(&mut rng, 0.0..2.0 * PI)).collect();
        let ideal = 1.0 / (m * m) as f64;
        let a = qfi_matrix(&theta, m, QfiMethod::Analytic)?;
        let fd = qfi_matrix(&theta, m, QfiMethod::FiniteDifference)?;
        let c = check_privacy_conditions(&theta, m)?;
        let upd = |w: &mut BTreeMap<&str, f64>, k: &'static str, v: f64| {
            let e = w.get_mut(k).expect("key");
            *e = e.max(v);
        };
        upd(&mut worst, "analytic_gap", a.entries.iter().map(|q| (q - ideal).abs()).fold(0.0, f64::max));
        upd(&mut worst, "fd_gap", (&fd.entries - &a.entries).amax());
        upd(&mut worst, "second_singular_value", c.second_singular_value);
        upd(&mut worst, "derivative_gap", c.max_derivative_gap);
    }
    let passed = worst["analytic_gap"] <= 1e-9
        && worst["fd_gap"] <= 1e-6
        && worst["second_singular_value"] <= 1e-6
        && worst["derivative_gap"] <= 1e-6;
    let mut check = Check::new(passed, format!("{worst:?}"));
    for (k, v) in worst {
        check = check.metric(k, v);
    }
    Ok(check)
}

fn uniform_marginals(opts: &VerifyOptions) -> Result<Check> {
    let mut rng = seeds(opts, 9).stream(Domain::Sampling, 0, 0);
    let mut worst = 0.0f64;
    for n in 2..=6usize {
        for mask in 1u32..(1 << n) - 1 {
            let subset: Vec<usize> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
            for k in 0..4 {
                let r = uniform_marginal_check(n, &subset, k as f64 * 0.8, 1, &mut rng)?;
                worst = worst.max(r.exact_max_deviation.unwrap_or(f64::INFINITY));
            }
        }
    }
    Ok(Check::new(worst <= 1e-12, format!("largest exact deviation {worst:e}")).metric("max_deviation", worst))
}

fn conditional_state(_: &VerifyOptions) -> Result<Check> {
    let (n, d) = (5usize, [3usize, 4]);
    let theta_bar = PI / 3.0;
    let mut reference: Option<PureState> = None;
    let mut worst = 0.0f64;
    for mask in 1u32..1 << n {
        let parts: Vec<bool> = (0..n).map(|a| mask >> a & 1 == 1).collect();
        let m = mask.count_ones() as f64;
        let raw: Vec<f64> = (0..n).map(|a| 0.21 * (a + 1) as f64 * mask as f64).collect();
        let mean = (0..n).filter(|&a| parts[a]).map(|a| raw[a]).sum::<f64>() / m;
        let theta: Vec<f64> = raw.iter().map(|t| t - mean + theta_bar).collect();
        for h in 0u32..8 {
            if h.count_ones() % 2 == 1 {
                continue;
            }
            let honest = OutcomeVector::new((0..3).map(|b| (h >> b & 1) as u8).collect())?;
            let s = dishonest_conditional_state_for(&theta, &parts, &honest, &d)?;
            match &reference {
                None => reference = Some(s),
                Some(r) => {
                    let gap =
                        s.amplitudes().iter().zip(r.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                    worst = worst.max(gap);
                }
            }
        }
    }
    Ok(Check::new(worst <= 1e-10, format!("largest amplitude gap {worst:e}")).metric("max_gap", worst))
}

fn indistinguishability(opts: &VerifyOptions) -> Result<Check> {
    let cfg = AnonymityTestConfig {
        n: 6,
        first: Assignment::new(0, vec![0, 1, 2, 3]),
        second: Assignment::new(1, vec![0, 1, 2, 4]),
        probe: vec![2],
        dishonest: vec![5],
        samples: 3000,
        significance: 0.001,
    };
    let mut settings = AnonymitySettings::new(vec![0.3, 0.6, 0.9, 1.2, 2.4, 0.5]);
    settings.strategies = vec![Strategy::DelayedMeasurement(DelayPolicy::Truthful)];
    settings.mutation = opts.mutation;
    let r = transcript_indistinguishability(&cfg, &settings, &seeds(opts, 10), opts.exec)?;
    Ok(Check::new(
        !r.rejected,
        format!("chi2 = {:.2}, dof = {}, p = {:.4}, tv = {:.4}", r.statistic, r.dof, r.p_value, r.tv_estimate),
    )
    .metric("statistic", r.statistic)
    .metric("dof", r.dof as f64)
    .metric("p_value", r.p_value)
    .metric("tv_estimate", r.tv_estimate))
}
