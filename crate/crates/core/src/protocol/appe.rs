use serde::Serialize;

use super::config::ProtocolConfig;
use super::rounds::{run_pe_round, run_pv_round, RoundEnv};
use super::transcript::{
    AdversaryView, AgentView, AliceView, LeakedBit, PublicRegisters, PublicRound, RoundKind, SvRecord, Transcript,
    VoteRecord,
};
use crate::adversary::RoundContext;
use crate::bits::BitString;
use crate::estimation::{estimate, EstimationReport};
use crate::oracles::{acka_generate, sv_stabilizer_verify, StateFactory, StateSource};
use crate::privacy::{privacy_epsilon, privacy_epsilon_general, ENCODING_HAMILTONIAN_NORM};
use crate::rng::{Domain, SeedTree};
use crate::subprotocols::{notification, vote, VoteError, VoteOptions};
use crate::{Error, Result, SCHEMA_VERSION};

/// Why a run stopped before producing an accepted estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum AbortReason {
    Vote { detail: String },
    MTooSmall {
        m: usize,
        required: usize,
        #[serde(with = "crate::adversary::one_based")]
        agent: usize,
    },
    Broadcast { detail: String },
    DeltaExceeded { delta_hat: f64, threshold: f64 },
    SourceExhausted { consumed: usize },
    Uncorrectable { delta_hat: f64 },
    NoEstimationRounds,
}

impl AbortReason {
    pub fn name(&self) -> &'static str {
        match self {
            AbortReason::Vote { .. } => "vote-abort",
            AbortReason::MTooSmall { .. } => "m-too-small",
            AbortReason::Broadcast { .. } => "broadcast-failure",
            AbortReason::DeltaExceeded { .. } => "delta-exceeded",
            AbortReason::SourceExhausted { .. } => "source-exhausted",
            AbortReason::Uncorrectable { .. } => "uncorrectable",
            AbortReason::NoEstimationRounds => "no-estimation-rounds",
        }
    }
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub epsilon_sv: f64,
    pub privacy_epsilon: f64,
    pub privacy_epsilon_general: f64,
    pub anonymity_epsilon: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub seed: u64,
    pub n: usize,
    /// Mean parameter of the participants, for comparison with `theta_hat`.
    pub target_theta: f64,
    pub tally: Option<[usize; 2]>,
    pub sv: SvSummary,
    pub estimate: Option<EstimationReport>,
    pub abort: Option<AbortReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub report: RunReport,
    pub transcript: Transcript,
}

impl RunOutput {
    pub fn aborted(&self) -> bool {
        self.report.abort.is_some()
    }
}

/// Execute the whole protocol. Errors are configuration problems; protocol
/// aborts are reported in [`RunReport::abort`].
pub fn run_appe(cfg: &ProtocolConfig) -> Result<RunOutput> {
    let roles = cfg.validate()?;
    let n = cfg.n;
    let seeds = SeedTree::new(cfg.seed);
    let alice = roles.alice();

    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        n,
        target_theta: roles.participant_indices().iter().map(|&a| cfg.theta[a]).sum::<f64>() / roles.m() as f64,
        tally: None,
        sv: SvSummary {
            accepted: 0,
            rejected: 0,
            epsilon_sv: 0.0,
            privacy_epsilon: 0.0,
            privacy_epsilon_general: 0.0,
            anonymity_epsilon: 0.0,
        },
        estimate: None,
        abort: None,
    };
    let mut public = PublicRegisters::default();
    let mut adversary = AdversaryView { dishonest: cfg.adversary.dishonest.clone(), ..Default::default() };

    // NOTIFICATION, then every non-participant zeroes its parameter.
    let notified = notification(&roles, &seeds, 0);
    let is_participant: Vec<bool> = notified.outputs.iter().map(|&z| z == 1).collect();
    let theta: Vec<f64> = (0..n).map(|a| if is_participant[a] { cfg.theta[a] } else { 0.0 }).collect();
    let mut agents: Vec<AgentView> = (0..n)
        .map(|a| AgentView {
            agent: a,
            notification: notified.view(a),
            participant: is_participant[a],
            theta: theta[a],
            key: None,
            outcomes: BitString::new(),
            alice: (a == alice).then(|| AliceView {
                participants: roles.participant_indices(),
                true_outcomes: BitString::new(),
                results: BitString::new(),
            }),
        })
        .collect();

    let finish = |report: RunReport, public, agents, adversary, rounds| RunOutput {
        report,
        transcript: Transcript { schema_version: SCHEMA_VERSION, public, agents, adversary, rounds },
    };

    // VOTE
    let choices: Vec<u8> = notified.outputs.clone();
    let tally = match vote(&choices, VoteOptions::new(cfg.vote_rounds), &seeds, 0)? {
        Ok(out) => {
            public.c_nv = Some(VoteRecord { tally: out.tally, sigma: out.sigma, broadcasts: out.broadcasts });
            out.tally
        }
        Err(e) => {
            report.abort = Some(match e {
                VoteError::Broadcast(b) => AbortReason::Broadcast { detail: b.to_string() },
                other => AbortReason::Vote { detail: other.to_string() },
            });
            return Ok(finish(report, public, agents, adversary, Vec::new()));
        }
    };
    report.tally = Some(tally);
    let m = tally[1];
    for a in (0..n).filter(|&a| is_participant[a]) {
        let required = cfg.min_participants.for_agent(a);
        if m < required {
            report.abort = Some(AbortReason::MTooSmall { m, required, agent: a });
            return Ok(finish(report, public, agents, adversary, Vec::new()));
        }
    }

    // Key agreement
    let holders: Vec<usize> = (0..n).filter(|&a| is_participant[a]).collect();
    let grant = acka_generate(
        &holders,
        cfg.total_rounds,
        cfg.verification_rounds,
        cfg.adversary.leak_fraction(),
        &mut seeds.stream(Domain::KeyAgreement, 0, 0),
    )?;
    for &a in &holders {
        agents[a].key = Some(grant.key.kappa.clone());
    }
    let mut leaked_kind = vec![None; cfg.total_rounds];
    for &p in &grant.leaked {
        let bit = grant.key.kappa.get(p);
        leaked_kind[p] = Some(bit == 1);
        adversary.leaked.push(LeakedBit { position: p, bit });
    }

    // Rounds
    let angles: Vec<f64> = theta.iter().map(|t| t / m as f64).collect();
    let env = RoundEnv::new(n, alice, angles, cfg.adversary.clone(), cfg.mutation);
    let factory = cfg.adversary.source_override().cloned().unwrap_or(StateFactory::Ghz);
    let mut source = StateSource::new(factory, n)?;
    if let Some(b) = cfg.oracles.source_budget {
        source = source.with_budget(b);
    }
    let mut rounds = Vec::with_capacity(cfg.total_rounds);
    let (mut even_pe, mut nu, mut odd_pv, mut k) = (0usize, 0usize, 0usize, 0usize);
    for j in 0..cfg.total_rounds {
        let claim = match sv_stabilizer_verify(
            &mut source,
            cfg.oracles.sv_copies,
            cfg.oracles.sv_epsilon,
            &mut seeds.stream(Domain::Verification, 0, j as u64),
        ) {
            Ok(c) => c,
            Err(Error::SourceExhausted(consumed)) => {
                report.abort = Some(AbortReason::SourceExhausted { consumed });
                return Ok(finish(report, public, agents, adversary, rounds));
            }
            Err(e) => return Err(e),
        };
        public.c_sv.push(SvRecord {
            round: j,
            accepted: claim.accepted,
            epsilon_sv: claim.epsilon_sv,
            tests: claim.tests,
        });
        let accepted = claim.accepted;
        if accepted {
            report.sv.epsilon_sv = report.sv.epsilon_sv.max(claim.epsilon_sv);
        }
        let target = claim.target;
        if !accepted {
            report.sv.rejected += 1;
            continue;
        }
        report.sv.accepted += 1;

        let ctx = RoundContext { leaked_kind: leaked_kind[j] };
        let kind = RoundKind::from_key_bit(grant.key.kappa.get(j));
        let rec = match kind {
            RoundKind::Pe => run_pe_round(target, &env, j, ctx, &seeds)?,
            RoundKind::Pv => run_pv_round(target, &env, j, ctx, &seeds)?,
        };
        match kind {
            RoundKind::Pe => {
                nu += 1;
                even_pe += usize::from(rec.result_bit == 0);
            }
            RoundKind::Pv => {
                k += 1;
                odd_pv += usize::from(rec.result_bit == 1);
            }
        }
        if rec.attack_triggered {
            adversary.attacked_rounds.push(j);
        }
        public.c_pp.push(PublicRound { round: j, announcements: rec.announcements.clone() });
        rounds.push(rec);
    }

    // True outcomes are only needed for the private views.
    let n_rounds = rounds.len();
    let mut outcome_bits: Vec<BitString> = (0..n).map(|_| BitString::with_capacity(n_rounds)).collect();
    for rec in &rounds {
        for (bits, &b) in outcome_bits.iter_mut().zip(rec.true_outcomes.bits()) {
            bits.push(b);
        }
    }
    for (view, bits) in agents.iter_mut().zip(outcome_bits) {
        view.outcomes = bits;
    }
    if let Some(av) = agents[alice].alice.as_mut() {
        av.true_outcomes = BitString::from_bits(rounds.iter().map(|r| r.alice_true_outcome));
        av.results = BitString::from_bits(rounds.iter().map(|r| r.result_bit));
    }

    report.sv.privacy_epsilon = privacy_epsilon(report.sv.epsilon_sv)?;
    report.sv.privacy_epsilon_general = privacy_epsilon_general(report.sv.epsilon_sv, ENCODING_HAMILTONIAN_NORM)?;
    report.sv.anonymity_epsilon = report.sv.epsilon_sv;

    if nu == 0 {
        report.abort = Some(AbortReason::NoEstimationRounds);
        return Ok(finish(report, public, agents, adversary, rounds));
    }
    let est = match estimate(even_pe, nu, odd_pv, k, cfg.correct_bias, &cfg.eta_grid) {
        Ok(e) => e,
        Err(Error::Uncorrectable { delta }) => {
            report.abort = Some(AbortReason::Uncorrectable { delta_hat: delta });
            report.estimate = Some(estimate(even_pe, nu, odd_pv, k, false, &cfg.eta_grid)?);
            return Ok(finish(report, public, agents, adversary, rounds));
        }
        Err(e) => return Err(e),
    };
    if est.delta_hat > cfg.delta_threshold {
        report.abort = Some(AbortReason::DeltaExceeded { delta_hat: est.delta_hat, threshold: cfg.delta_threshold });
    }
    report.estimate = Some(est);
    Ok(finish(report, public, agents, adversary, rounds))
}
