use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::definition::{AnonymityTestConfig, Assignment};
use crate::adversary::{AttackSpec, Strategy};
use crate::exec::Execution;
use crate::protocol::{run_appe, Mutation, ProtocolConfig, RunOutput};
use crate::rng::SeedTree;
use crate::stats::{bernoulli_sigma, chi_square_homogeneity};
use crate::{Error, Result};

/// Protocol parameters shared by both assignments of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct AnonymitySettings {
    pub theta: Vec<f64>,
    pub total_rounds: usize,
    pub verification_rounds: usize,
    pub vote_rounds: usize,
    /// Strategies of the dishonest set; empty means the dishonest agents
    /// follow the protocol and only pool their views.
    pub strategies: Vec<Strategy>,
    pub mutation: Option<Mutation>,
}

impl AnonymitySettings {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta, total_rounds: 1, verification_rounds: 0, vote_rounds: 2000, strategies: Vec::new(), mutation: None }
    }

    fn config(&self, n: usize, assignment: &Assignment, dishonest: &[usize], seed: u64) -> ProtocolConfig {
        let mut cfg = ProtocolConfig::new(
            n,
            assignment.alice,
            assignment.participants.clone(),
            self.theta.clone(),
            self.total_rounds,
            self.verification_rounds,
        );
        cfg.vote_rounds = self.vote_rounds;
        cfg.seed = seed;
        cfg.mutation = self.mutation;
        cfg.delta_threshold = 1.0;
        if !dishonest.is_empty() {
            cfg.adversary = AttackSpec::new(dishonest.to_vec(), self.strategies.clone());
        }
        cfg
    }
}

/// Canonical string of everything `observers` can jointly see: the tally or
/// abort, the public announcements and SV verdicts, and their own registers.
/// Uniformly random notification shares and VOTE broadcast bits are left out.
pub fn restricted_record(output: &RunOutput, observers: &[usize]) -> String {
    let mut s = String::new();
    match (&output.report.abort, output.report.tally) {
        (Some(a), _) => write!(s, "abort={};", a.name()),
        (None, Some(t)) => write!(s, "tally={},{};", t[0], t[1]),
        (None, None) => write!(s, "tally=-;"),
    }
    .expect("string write");
    let t = &output.transcript;
    s.push_str("sv=");
    for r in &t.public.c_sv {
        s.push(if r.accepted { '1' } else { '0' });
    }
    s.push_str(";pp=");
    for r in &t.public.c_pp {
        s.push_str(&r.announcements.to_bitstring());
        s.push('/');
    }
    for &o in observers {
        if let Some(v) = t.agents.iter().find(|v| v.agent == o) {
            write!(
                s,
                ";a{}:{}|{:?}|{}|{}",
                o,
                u8::from(v.participant),
                v.theta,
                v.key.as_ref().map(|k| k.to_string()).unwrap_or_default(),
                v.outcomes
            )
            .expect("string write");
        }
    }
    s.push_str(";leak=");
    for l in &t.adversary.leaked {
        write!(s, "{}:{},", l.position, l.bit).expect("string write");
    }
    s.push_str(";attacked=");
    for r in &t.adversary.attacked_rounds {
        write!(s, "{r},").expect("string write");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndistinguishabilityReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub tv_estimate: f64,
    pub samples: usize,
    pub significance: f64,
    pub rejected: bool,
    pub distinct_records: usize,
    pub aborts: [usize; 2],
}

/// Runs the full protocol `cfg.samples` times under each assignment and
/// compares the binned records of the observers.
pub fn transcript_indistinguishability(
    cfg: &AnonymityTestConfig,
    settings: &AnonymitySettings,
    seeds: &SeedTree,
    exec: Execution,
) -> Result<IndistinguishabilityReport> {
    cfg.validate()?;
    if settings.theta.len() != cfg.n {
        return Err(Error::invalid("theta length differs from agent count"));
    }
    let observers = cfg.observers();
    let sample = |assignment: &Assignment, offset: u64| -> Result<(BTreeMap<String, u64>, usize)> {
        let runs = exec.map(cfg.samples, |s| {
            let seed = seeds.child(2 * s as u64 + offset).root();
            run_appe(&settings.config(cfg.n, assignment, &cfg.dishonest, seed))
                .map(|out| (restricted_record(&out, &observers), out.aborted()))
        });
        let mut bins = BTreeMap::new();
        let mut aborts = 0;
        for r in runs {
            let (rec, aborted) = r?;
            *bins.entry(rec).or_insert(0) += 1;
            aborts += usize::from(aborted);
        }
        Ok((bins, aborts))
    };
    let (a, aborts_a) = sample(&cfg.first, 0)?;
    let (b, aborts_b) = sample(&cfg.second, 1)?;
    let h = chi_square_homogeneity(&a, &b)?;
    let distinct = a.keys().chain(b.keys()).collect::<std::collections::BTreeSet<_>>().len();
    Ok(IndistinguishabilityReport {
        statistic: h.statistic,
        dof: h.dof,
        p_value: h.p_value,
        tv_estimate: h.tv_estimate,
        samples: cfg.samples,
        significance: cfg.significance,
        rejected: h.p_value < cfg.significance,
        distinct_records: distinct,
        aborts: [aborts_a, aborts_b],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealOutputReport {
    pub rounds: usize,
    /// Frequency of `1` in each announcement slot.
    pub frequencies: Vec<f64>,
    pub sigma: f64,
    /// Largest `|f − ½|` in units of `sigma`.
    pub max_frequency_z: f64,
    /// Largest `|E[(−1)^{a+b}]|` over slot pairs, in units of `1/√rounds`.
    pub max_correlation_z: f64,
    /// SV register unchanged when Alice is swapped for another participant.
    pub sv_role_invariant: bool,
}

/// Statistics of the public announcements of one long run.
pub fn ideal_output_check(cfg: &ProtocolConfig) -> Result<IdealOutputReport> {
    let out = run_appe(cfg)?;
    if let Some(a) = &out.report.abort {
        return Err(Error::invalid(format!("run aborted ({a}); no announcements to test")));
    }
    let rows: Vec<&[u8]> = out.transcript.public.c_pp.iter().map(|r| r.announcements.bits()).collect();
    let rounds = rows.len();
    if rounds == 0 {
        return Err(Error::invalid("no rounds were executed"));
    }
    let n = cfg.n;
    let frequencies: Vec<f64> = (0..n)
        .map(|a| rows.iter().filter(|r| r[a] == 1).count() as f64 / rounds as f64)
        .collect();
    let sigma = bernoulli_sigma(0.5, rounds);
    let max_frequency_z = frequencies.iter().map(|f| (f - 0.5).abs() / sigma).fold(0.0, f64::max);
    let mut max_corr = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            let agree = rows.iter().filter(|r| r[a] == r[b]).count() as f64;
            let corr = (2.0 * agree - rounds as f64) / rounds as f64;
            max_corr = max_corr.max(corr.abs() * (rounds as f64).sqrt());
        }
    }

    // SV draws only from the verification stream, so a role swap leaves it unchanged.
    let mut swapped = cfg.clone();
    let other = cfg.participants.iter().copied().find(|&p| p != cfg.alice);
    let sv_role_invariant = match other {
        Some(p) => {
            swapped.alice = p;
            run_appe(&swapped)?.transcript.public.c_sv == out.transcript.public.c_sv
        }
        None => true,
    };
    Ok(IdealOutputReport {
        rounds,
        frequencies,
        sigma,
        max_frequency_z,
        max_correlation_z: max_corr,
        sv_role_invariant,
    })
}
