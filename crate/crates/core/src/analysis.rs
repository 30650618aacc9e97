//! Monte Carlo checks of correctness, privacy and security.
//!
//! Each attacker is a concrete strategy run against a completed execution;
//! on honestly randomized inputs every one of them should be no better than
//! a coin flip. Batches are streamed: a run is generated, scored and
//! dropped, so memory stays flat however many trials are requested.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::channel::TritVector;
use crate::error::{AnalysisError, ProtocolError};
use crate::protocol::{
    check_typicality, run_protocol, IndexSet, LabelMessage, LabelStage, OtInputs, ProtocolConfig,
    ProtocolRun, Typicality,
};
use crate::rng::{attacker_stream, substream, trial_seed, Stream};
use crate::channel::transmit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum AttackerId {
    /// Alice compares the density of ones of X on L0 and L1 to decide
    /// which is G, then unmasks with her S.
    #[value(name = "alice-c")]
    #[serde(rename = "alice-c")]
    AliceGuessesC,
    /// Eve takes the label set with more of her own erasures as B, and
    /// recovers S only if the shared-bit hash avoids her erasures.
    #[value(name = "eve-c")]
    #[serde(rename = "eve-c")]
    EveGuessesC,
    /// Bob decrypts the first bit of the other string, filling his erased
    /// key bits uniformly.
    #[value(name = "bob-unselected")]
    #[serde(rename = "bob-unselected")]
    BobGuessesUnselectedBit,
    /// Eve decrypts the first bit of K0 from her own view.
    #[value(name = "eve-key")]
    #[serde(rename = "eve-key")]
    EveGuessesKeyBit,
}

impl AttackerId {
    pub const ALL: [AttackerId; 4] = [
        AttackerId::AliceGuessesC,
        AttackerId::EveGuessesC,
        AttackerId::BobGuessesUnselectedBit,
        AttackerId::EveGuessesKeyBit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackerId::AliceGuessesC => "alice-c",
            AttackerId::EveGuessesC => "eve-c",
            AttackerId::BobGuessesUnselectedBit => "bob-unselected",
            AttackerId::EveGuessesKeyBit => "eve-key",
        }
    }

    fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for AttackerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackerId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackerId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown attacker {s:?}"))
    }
}

/// X restricted to `indices`, with every coordinate the observer lost
/// replaced by a fresh uniform bit.
fn fill_erasures<R: Rng + ?Sized>(view: &TritVector, indices: &IndexSet, rng: &mut R) -> BitVec {
    BitVec::from_bools(
        indices
            .as_slice()
            .iter()
            .map(|&i| view.get(i as usize).bit().unwrap_or_else(|| rng.gen())),
    )
}

/// Whether L1 carries strictly more of Eve's erasures than L0; Eve's guess
/// that L1 is B.
pub fn eve_label_feature(z: &TritVector, labels: &LabelMessage) -> bool {
    z.erasures_in(labels.l1.as_slice()) > z.erasures_in(labels.l0.as_slice())
}

/// Eve's estimate of the order bit: exact when row 0 of F_α only touches
/// coordinates she received, 0 otherwise.
fn eve_order_bit(run: &ProtocolRun) -> bool {
    if !run.config.order_mask {
        return false;
    }
    let msg = &run.transcript.shared_bit;
    let mut k_alpha = false;
    for (col, &i) in msg.l_alpha.as_slice().iter().enumerate() {
        if msg.f_alpha.get(0, col) {
            match run.z.get(i as usize).bit() {
                Some(b) => k_alpha ^= b,
                None => return false,
            }
        }
    }
    msg.masked_s ^ k_alpha
}

/// First bit of the string at `position`, decrypted with a key computed
/// from `view` (erasures filled by `rng`).
fn decrypt_first_bit<R: Rng + ?Sized>(run: &ProtocolRun, view: &TritVector, position: bool, rng: &mut R) -> bool {
    let strings = &run.transcript.strings;
    let set = run.transcript.labels.set(position);
    let x_guess = fill_erasures(view, set, rng);
    let hash = strings.hash(position);
    let mut pad = false;
    for (col, bit) in x_guess.iter().enumerate() {
        pad ^= bit && hash.get(0, col);
    }
    strings.ciphertext(position).get(0) ^ pad
}

/// Runs one attacker on one execution; `Ok(true)` when its guess is right.
pub fn attack<R: Rng + ?Sized>(run: &ProtocolRun, attacker: AttackerId, rng: &mut R) -> Result<bool, AnalysisError> {
    let labels = &run.transcript.labels;
    if run.dims.k == 0 || labels.l0.is_empty() {
        return Err(AnalysisError::ShapeMismatch {
            attacker: attacker.name(),
            reason: "empty strings or label sets".into(),
        });
    }
    let c = run.inputs.c;
    Ok(match attacker {
        AttackerId::AliceGuessesC => {
            let density = |s: &IndexSet| {
                let ones = s.as_slice().iter().filter(|&&i| run.x.get(i as usize)).count();
                ones as f64 / s.len() as f64
            };
            // L0 = G exactly when C = S.
            let l0_is_g = density(&labels.l0) >= density(&labels.l1);
            let s = run.config.order_mask && run.s_alice;
            (s ^ !l0_is_g) == c
        }
        AttackerId::EveGuessesC => {
            let l0_is_b = run.z.erasures_in(labels.l0.as_slice()) > run.z.erasures_in(labels.l1.as_slice());
            (eve_order_bit(run) ^ l0_is_b) == c
        }
        AttackerId::BobGuessesUnselectedBit => {
            let position = run.unselected_position();
            decrypt_first_bit(run, &run.y, position, rng) == run.inputs.unchosen().get(0)
        }
        AttackerId::EveGuessesKeyBit => {
            // K0 sits at position S.
            let position = eve_order_bit(run);
            decrypt_first_bit(run, &run.z, position, rng) == run.inputs.k0.get(0)
        }
    })
}

/// Fraction of correct guesses with a 4σ normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub accuracy: f64,
    pub trials: u64,
    pub ci_halfwidth: f64,
}

impl AdvantageEstimate {
    pub fn from_counts(correct: u64, trials: u64) -> Result<Self, AnalysisError> {
        if trials == 0 {
            return Err(AnalysisError::Empty);
        }
        let accuracy = correct as f64 / trials as f64;
        Ok(Self {
            accuracy,
            trials,
            ci_halfwidth: 4.0 * (accuracy * (1.0 - accuracy) / trials as f64).sqrt(),
        })
    }

    /// Whether a coin flip is consistent with the estimate.
    pub fn consistent_with_guessing(&self) -> bool {
        (self.accuracy - 0.5).abs() <= self.ci_halfwidth
    }
}

/// Scores `attacker` over a stored batch.
pub fn estimate_advantage(runs: &[ProtocolRun], attacker: AttackerId, seed: u64) -> Result<AdvantageEstimate, AnalysisError> {
    let mut correct = 0;
    for (i, run) in runs.iter().enumerate() {
        let mut rng = attacker_stream(trial_seed(seed, i as u64), attacker.tag());
        correct += u64::from(attack(run, attacker, &mut rng)?);
    }
    AdvantageEstimate::from_counts(correct, runs.len() as u64)
}

/// Per-attempt abort counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortTally {
    pub attempts: u64,
    pub aborts: u64,
}

impl AbortTally {
    pub fn record_run(&mut self, resend_count: usize) {
        self.attempts += resend_count as u64 + 1;
        self.aborts += resend_count as u64;
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            attempts: self.attempts + other.attempts,
            aborts: self.aborts + other.aborts,
        }
    }

    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.aborts as f64 / self.attempts as f64
        }
    }
}

/// e^{−nε1δ²/2} + e^{−n(1−ε1)δ²/2}: chance a single attempt is atypical.
pub fn chernoff_abort_bound(n: usize, eps1: f64, delta: f64) -> f64 {
    let n = n as f64;
    (-n * eps1 * delta * delta / 2.0).exp() + (-n * (1.0 - eps1) * delta * delta / 2.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbortStatistics {
    pub abort_rate: f64,
    pub chernoff_bound: f64,
    pub attempts: u64,
}

pub const MIN_ABORT_RUNS: usize = 100;

pub fn abort_statistics(runs: &[ProtocolRun]) -> Result<AbortStatistics, AnalysisError> {
    if runs.len() < MIN_ABORT_RUNS {
        return Err(AnalysisError::TooFewRuns {
            needed: MIN_ABORT_RUNS,
            found: runs.len(),
        });
    }
    let config = runs[0].config;
    let mut tally = AbortTally::default();
    for run in runs {
        if (run.config.n, run.config.channel, run.config.delta) != (config.n, config.channel, config.delta) {
            return Err(AnalysisError::MixedConfigs);
        }
        tally.record_run(run.resend_count);
    }
    Ok(AbortStatistics {
        abort_rate: tally.rate(),
        chernoff_bound: chernoff_abort_bound(config.n, config.channel.eps1, config.delta),
        attempts: tally.attempts,
    })
}

/// Typicality checks alone, without the rest of the protocol: `attempts`
/// fresh channel outputs at `config.n`.
pub fn typicality_trials(config: &ProtocolConfig, attempts: u64, seed: u64) -> AbortTally {
    let mut alice = substream(seed, Stream::Alice);
    let mut channel = substream(seed, Stream::Channel);
    let mut tally = AbortTally::default();
    for _ in 0..attempts {
        let x = BitVec::random(config.n, &mut alice);
        let (y, _) = transmit(&x, &config.channel, &mut channel);
        tally.attempts += 1;
        tally.aborts += u64::from(check_typicality(&y, config) == Typicality::Abort);
    }
    tally
}

/// Erasure counts behind the secrecy of the unselected string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureAudit {
    /// Bob's erasures in the set labelled with 1 ⊕ C.
    pub bob_erased: usize,
    /// Eve's erasures in that set, outside L0 ∩ L1.
    pub eve_erased_outside_overlap: usize,
    /// nr.
    pub threshold: f64,
}

impl ErasureAudit {
    pub fn bob_holds(&self) -> bool {
        self.bob_erased as f64 >= self.threshold
    }

    pub fn eve_holds(&self) -> bool {
        self.eve_erased_outside_overlap as f64 >= self.threshold
    }
}

fn audit(y: &TritVector, z: &TritVector, labels: &LabelMessage, unselected: bool, threshold: f64) -> ErasureAudit {
    let set = labels.set(unselected);
    let outside = set.difference(&labels.shared());
    ErasureAudit {
        bob_erased: y.erasures_in(set.as_slice()),
        eve_erased_outside_overlap: z.erasures_in(outside.as_slice()),
        threshold,
    }
}

pub fn renyi_erasure_audit(run: &ProtocolRun) -> ErasureAudit {
    let threshold = run.config.n as f64 * run.config.rate;
    audit(&run.y, &run.z, &run.transcript.labels, run.unselected_position(), threshold)
}

/// The same audit on a run stopped after the labels were sent.
pub fn audit_label_stage(stage: &LabelStage, config: &ProtocolConfig, c: bool) -> ErasureAudit {
    let unselected = !(c ^ stage.effective_s(config.order_mask));
    audit(&stage.y, &stage.z, &stage.labels, unselected, config.n as f64 * config.rate)
}

/// Plug-in mutual information with its first-order bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub bits: f64,
    /// (|A| − 1)(|B| − 1) / (2N ln 2): the expected upward bias under independence.
    pub bias: f64,
    pub samples: u64,
}

pub fn plugin_mi(samples: &[(usize, usize)], size_a: usize, size_b: usize) -> Result<MiEstimate, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut joint = vec![0u64; size_a * size_b];
    for &(a, b) in samples {
        for (symbol, size) in [(a, size_a), (b, size_b)] {
            if symbol >= size {
                return Err(AnalysisError::SymbolOutOfRange { symbol, size });
            }
        }
        joint[a * size_b + b] += 1;
    }
    let n = samples.len() as f64;
    let mut pa = vec![0u64; size_a];
    let mut pb = vec![0u64; size_b];
    for a in 0..size_a {
        for b in 0..size_b {
            pa[a] += joint[a * size_b + b];
            pb[b] += joint[a * size_b + b];
        }
    }
    let mut bits = 0.0;
    for a in 0..size_a {
        for b in 0..size_b {
            let count = joint[a * size_b + b];
            if count > 0 {
                let ratio = count as f64 * n / (pa[a] as f64 * pb[b] as f64);
                bits += count as f64 / n * ratio.log2();
            }
        }
    }
    Ok(MiEstimate {
        bits: bits.max(0.0),
        bias: (size_a.saturating_sub(1) * size_b.saturating_sub(1)) as f64 / (2.0 * n * std::f64::consts::LN_2),
        samples: samples.len() as u64,
    })
}

/// Totals from a streamed batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ProtocolConfig,
    pub trials: u64,
    /// Runs that completed (the rest hit the resend limit).
    pub completed: u64,
    pub decoding_errors: u64,
    /// Runs where Alice's recovered S differs from Bob's.
    pub order_bit_mismatches: u64,
    pub aborts: AbortTally,
    pub chernoff_bound: f64,
    /// Completed runs where Bob's erasures in the unselected set fell below nr.
    pub bob_audit_failures: u64,
    /// Completed runs where Eve's erasures outside L0 ∩ L1 fell below nr.
    pub eve_audit_failures: u64,
    /// Smallest Bob erasure count seen in an unselected set.
    pub min_bob_erased: Option<usize>,
    /// Mean public-channel load of completed runs, in bits.
    pub mean_transcript_bits: f64,
    pub attacks: Vec<(AttackerId, AdvantageEstimate)>,
    /// I(C; Eve's label feature).
    pub eve_feature_mi: Option<MiEstimate>,
}

#[derive(Debug, Clone, Default)]
struct Partial {
    trials: u64,
    completed: u64,
    decoding_errors: u64,
    order_bit_mismatches: u64,
    aborts: AbortTally,
    bob_audit_failures: u64,
    eve_audit_failures: u64,
    min_bob_erased: Option<usize>,
    transcript_bits: u64,
    correct: Vec<u64>,
    feature_pairs: Vec<(usize, usize)>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.trials += other.trials;
        self.completed += other.completed;
        self.decoding_errors += other.decoding_errors;
        self.order_bit_mismatches += other.order_bit_mismatches;
        self.aborts = self.aborts.merge(other.aborts);
        self.bob_audit_failures += other.bob_audit_failures;
        self.eve_audit_failures += other.eve_audit_failures;
        self.min_bob_erased = match (self.min_bob_erased, other.min_bob_erased) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if self.correct.len() < other.correct.len() {
            self.correct.resize(other.correct.len(), 0);
        }
        for (a, b) in self.correct.iter_mut().zip(other.correct) {
            *a += b;
        }
        self.transcript_bits += other.transcript_bits;
        self.feature_pairs.extend(other.feature_pairs);
        self
    }
}

fn one_trial(config: &ProtocolConfig, index: u64, base_seed: u64, attackers: &[AttackerId]) -> Result<Partial, AnalysisError> {
    let seed = trial_seed(base_seed, index);
    let cfg = config.with_seed(seed);
    let inputs = OtInputs::for_config(&cfg)?;
    let mut p = Partial {
        trials: 1,
        correct: vec![0; attackers.len()],
        ..Partial::default()
    };
    let run = match run_protocol(&cfg, &inputs) {
        Ok(run) => run,
        Err(ProtocolError::ResendLimitExceeded { attempts, .. }) => {
            p.aborts.attempts += attempts as u64;
            p.aborts.aborts += attempts as u64;
            return Ok(p);
        }
        Err(e) => return Err(e.into()),
    };
    p.completed = 1;
    p.aborts.record_run(run.resend_count);
    p.decoding_errors = u64::from(!run.succeeded());
    p.order_bit_mismatches = u64::from(run.s_alice != run.s_bob);
    let audit = renyi_erasure_audit(&run);
    p.bob_audit_failures = u64::from(!audit.bob_holds());
    p.eve_audit_failures = u64::from(!audit.eve_holds());
    p.min_bob_erased = Some(audit.bob_erased);
    p.transcript_bits = run.transcript.size_bits();
    for (slot, &attacker) in p.correct.iter_mut().zip(attackers) {
        let mut rng = attacker_stream(seed, attacker.tag());
        *slot = u64::from(attack(&run, attacker, &mut rng)?);
    }
    p.feature_pairs
        .push((usize::from(run.inputs.c), usize::from(eve_label_feature(&run.z, &run.transcript.labels))));
    Ok(p)
}

/// Runs `trials` independent executions of `config` (each with its own
/// seed derived from `base_seed` and uniform inputs), scoring every
/// attacker on each.
pub fn simulate_attacks(
    config: &ProtocolConfig,
    trials: u64,
    attackers: &[AttackerId],
    base_seed: u64,
) -> Result<SimulationReport, AnalysisError> {
    crate::protocol::derive_dimensions(config)?;
    let total = (0..trials)
        .into_par_iter()
        .map(|i| one_trial(config, i, base_seed, attackers))
        .try_reduce(Partial::default, |a, b| Ok(a.merge(b)))?;
    let attacks = if total.completed == 0 {
        Vec::new()
    } else {
        attackers
            .iter()
            .zip(&total.correct)
            .map(|(&a, &correct)| AdvantageEstimate::from_counts(correct, total.completed).map(|e| (a, e)))
            .collect::<Result<_, _>>()?
    };
    let mut pairs = total.feature_pairs;
    pairs.sort_unstable();
    Ok(SimulationReport {
        config: *config,
        trials: total.trials,
        completed: total.completed,
        decoding_errors: total.decoding_errors,
        order_bit_mismatches: total.order_bit_mismatches,
        aborts: total.aborts,
        chernoff_bound: chernoff_abort_bound(config.n, config.channel.eps1, config.delta),
        bob_audit_failures: total.bob_audit_failures,
        eve_audit_failures: total.eve_audit_failures,
        min_bob_erased: total.min_bob_erased,
        mean_transcript_bits: if total.completed == 0 {
            0.0
        } else {
            total.transcript_bits as f64 / total.completed as f64
        },
        attacks,
        eve_feature_mi: plugin_mi(&pairs, 2, 2).ok(),
    })
}
