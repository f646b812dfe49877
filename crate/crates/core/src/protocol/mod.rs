//! Session drivers for the two protocols, plus the shared configuration,
//! transcript, and result types.
//!
//! [`run_protocol1`] executes the ideal-channel protocol: the pair halves
//! travel in two separate transmissions with an eavesdropping check after
//! each. [`run_stage1`]/[`run_stage2`] (composed by [`run_protocol2`])
//! execute the noise-hardened variant, which adds Hadamard twirling, sampled
//! computational-basis checks, and code-based purification of the remaining
//! pairs.
//!
//! Every classical exchange between the parties is appended to the session
//! [`Transcript`]; the quantum side never moves information covertly. Two
//! modeling collapses keep the transcript minimal without losing content:
//! check comparisons are logged as agree/disagree verdicts rather than the
//! two raw outcome strings (the raw outcomes are marginally uniform, the
//! verdict carries all the shared information), and announced syndromes are
//! logged as the relative error syndrome (announcing one party's local
//! syndrome and differencing is equivalent up to private uniform padding).
//!
//! A session is driven by a single seeded stream with a fixed draw order, so
//! identical configurations reproduce identical results and transcripts,
//! byte for byte.

mod ideal;
mod purify;
mod staged;

pub use ideal::run_protocol1;
pub use purify::{css_purify, PurifyOutcome};
pub use staged::{run_protocol2, run_stage1, run_stage2, Stage1Outcome, Stage1State};

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::bell::RandomStream;
use crate::code::CssCode;

/// Where the raw key comes from: fresh uniform symbols, or a caller-supplied
/// quaternary string covering every pair (check positions are only known
/// after transmission, so the string cannot be shorter than the session).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KeySource {
    Random,
    Fixed(Vec<u8>),
}

/// Errors detected while validating a [`SessionConfig`].
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("check fraction must lie strictly between 0 and 1, got {0}")]
    CheckFraction(f64),
    #[error("stage-2 check fraction must lie strictly between 0 and 1, got {0}")]
    Stage2CheckFraction(f64),
    #[error("abort threshold must lie in (0, 0.5), got {0}")]
    AbortThreshold(f64),
    #[error("fixed key has length {got}, expected one symbol per pair ({expected})")]
    KeyLength { expected: usize, got: usize },
    #[error("fixed key symbol at index {index} is {value}, not a quaternary digit")]
    KeyDigit { index: usize, value: u8 },
    #[error("session needs at least {needed} pairs, got {got}")]
    TooFewPairs { needed: usize, got: usize },
    #[error("check split leaves {survivors} pairs after {checks} checks; need at least {needed}")]
    CheckSplit {
        checks: usize,
        survivors: usize,
        needed: usize,
    },
    #[error("{code_positions} code positions do not form whole blocks of {block}")]
    BlockMisaligned { code_positions: usize, block: usize },
    #[error("stage 2 keeps {kept} of {k} purified pairs; at least one block of {block} is required")]
    Stage2TooSmall { kept: usize, k: usize, block: usize },
}

/// Full description of one session: sizes, fractions, the purification code,
/// the abort threshold, the key source, and the seed.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// Number of EPR pairs prepared (N).
    pub n_pairs: usize,
    /// Fraction of pairs sacrificed to the first check.
    pub check_fraction: f64,
    /// The purification code (ignored by the ideal protocol).
    pub css_code: CssCode,
    /// Abort when a check's disagreement rate exceeds this.
    pub abort_threshold: f64,
    /// Source of the prepared Bell labels.
    pub key: KeySource,
    /// Session seed; fixes every random draw.
    pub seed: u64,
    /// Target fraction of purified pairs sacrificed to the stage-2 check.
    /// The actual count is rounded up so the remainder forms whole blocks.
    pub stage2_check_fraction: f64,
}

impl SessionConfig {
    /// A config with the conventional defaults: 25% checks in both stages,
    /// abort threshold 0.11, random key.
    pub fn new(n_pairs: usize, css_code: CssCode, seed: u64) -> Self {
        Self {
            n_pairs,
            check_fraction: 0.25,
            css_code,
            abort_threshold: 0.11,
            key: KeySource::Random,
            seed,
            stage2_check_fraction: 0.25,
        }
    }

    fn validate_common(&self) -> Result<(), ConfigError> {
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return Err(ConfigError::CheckFraction(self.check_fraction));
        }
        if !(self.stage2_check_fraction > 0.0 && self.stage2_check_fraction < 1.0) {
            return Err(ConfigError::Stage2CheckFraction(self.stage2_check_fraction));
        }
        if !(self.abort_threshold > 0.0 && self.abort_threshold < 0.5) {
            return Err(ConfigError::AbortThreshold(self.abort_threshold));
        }
        if let KeySource::Fixed(symbols) = &self.key {
            if symbols.len() != self.n_pairs {
                return Err(ConfigError::KeyLength {
                    expected: self.n_pairs,
                    got: symbols.len(),
                });
            }
            if let Some((index, &value)) = symbols.iter().enumerate().find(|(_, &s)| s >= 4) {
                return Err(ConfigError::KeyDigit { index, value });
            }
        }
        Ok(())
    }

    /// Validation for the ideal protocol: both checks must be non-empty and
    /// leave at least one key pair.
    pub fn validate_ideal(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        if self.n_pairs < 4 {
            return Err(ConfigError::TooFewPairs {
                needed: 4,
                got: self.n_pairs,
            });
        }
        let n1 = self.first_check_count();
        if n1 == 0 || n1 >= self.n_pairs {
            return Err(ConfigError::CheckSplit {
                checks: n1,
                survivors: self.n_pairs - n1.min(self.n_pairs),
                needed: 2,
            });
        }
        let survivors = self.n_pairs - n1;
        let n2 = self.second_check_count(survivors);
        if n2 == 0 || n2 >= survivors {
            return Err(ConfigError::CheckSplit {
                checks: n2,
                survivors: survivors - n2.min(survivors),
                needed: 1,
            });
        }
        Ok(())
    }

    /// Validation for running stage 1 on its own: the code positions must
    /// form whole purification blocks.
    pub fn validate_stage1(&self) -> Result<(), ConfigError> {
        self.validate_common()?;
        let block = self.css_code.block_length();
        let n1 = self.first_check_count();
        if n1 == 0 || n1 >= self.n_pairs {
            return Err(ConfigError::CheckSplit {
                checks: n1,
                survivors: self.n_pairs.saturating_sub(n1),
                needed: block,
            });
        }
        let code_positions = self.n_pairs - n1;
        if code_positions == 0 || code_positions % block != 0 {
            return Err(ConfigError::BlockMisaligned {
                code_positions,
                block,
            });
        }
        Ok(())
    }

    /// Validation for the full two-stage protocol: stage 1 must be runnable
    /// and stage 2 must keep at least one block plus a non-empty check set.
    pub fn validate_two_stage(&self) -> Result<(), ConfigError> {
        self.validate_stage1()?;
        let block = self.css_code.block_length();
        let code_positions = self.n_pairs - self.first_check_count();
        let k = (code_positions / block) * self.css_code.logical_dimension();
        let (kept, n2) = self.stage2_split(k);
        if kept < block {
            return Err(ConfigError::Stage2TooSmall { kept, k, block });
        }
        debug_assert!(n2 >= 1, "kept < k is guaranteed by a positive fraction");
        Ok(())
    }

    /// Number of check positions in the first check of either protocol.
    pub fn first_check_count(&self) -> usize {
        (self.check_fraction * self.n_pairs as f64).round() as usize
    }

    /// Number of positions in the ideal protocol's second check.
    pub fn second_check_count(&self, survivors: usize) -> usize {
        (self.check_fraction * survivors as f64).round() as usize
    }

    /// Splits `k` purified pairs into (kept-for-purification, checked).
    /// The kept count is the largest whole number of blocks not exceeding
    /// the target fraction of pairs retained.
    pub fn stage2_split(&self, k: usize) -> (usize, usize) {
        let block = self.css_code.block_length();
        let target_kept = (k as f64 * (1.0 - self.stage2_check_fraction)).floor() as usize;
        let kept = (target_kept / block) * block;
        (kept, k - kept)
    }

    /// Draws or copies the quaternary preparation string.
    pub(crate) fn draw_symbols(&self, rng: &mut RandomStream) -> Vec<u8> {
        match &self.key {
            KeySource::Random => (0..self.n_pairs).map(|_| rng.random_range(0..4u8)).collect(),
            KeySource::Fixed(symbols) => symbols.clone(),
        }
    }
}

/// Party tags for transcript lines. The implemented attacks never speak on
/// the classical channel, but the eavesdropper tag is part of the log
/// format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sender {
    Alice,
    Bob,
    Eve,
}

impl fmt::Display for Sender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sender::Alice => "A",
            Sender::Bob => "B",
            Sender::Eve => "E",
        })
    }
}

/// Classification of classical messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    /// Receiver confirms a quantum transmission arrived.
    Reception,
    /// The Hadamard mask used on a transmission.
    BasisString,
    /// Membership mask of the positions sacrificed to a check.
    CheckPositions,
    /// Per-check measurement bases (computational = 1).
    CheckBases,
    /// Per-check agree(0)/disagree(1) verdicts.
    CheckVerdicts,
    /// Expected computational-basis correlation per stage-2 check pair.
    CheckExpectations,
    /// Bell outcomes revealed for the ideal protocol's second check.
    BellOutcomes,
    /// Prepared labels revealed for the ideal protocol's second check.
    PreparedLabels,
    /// Relative error syndrome of one purification block.
    Syndrome,
    /// The announcing party aborts the session.
    Abort,
    /// The announcing party continues the session.
    Continue,
}

impl MessageKind {
    fn as_str(self) -> &'static str {
        match self {
            MessageKind::Reception => "reception",
            MessageKind::BasisString => "basis-string",
            MessageKind::CheckPositions => "check-positions",
            MessageKind::CheckBases => "check-bases",
            MessageKind::CheckVerdicts => "check-verdicts",
            MessageKind::CheckExpectations => "check-expectations",
            MessageKind::BellOutcomes => "bell-outcomes",
            MessageKind::PreparedLabels => "prepared-labels",
            MessageKind::Syndrome => "syndrome",
            MessageKind::Abort => "abort",
            MessageKind::Continue => "continue",
        }
    }
}

/// One classical message: the protocol step it belongs to, who sent it, its
/// kind, and a bit payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub step: u8,
    pub sender: Sender,
    pub kind: MessageKind,
    pub bits: Vec<bool>,
}

impl Message {
    pub fn new(step: u8, sender: Sender, kind: MessageKind, bits: Vec<bool>) -> Self {
        Self {
            step,
            sender,
            kind,
            bits,
        }
    }

    /// Renders `step=<n> sender=<A|B|E> kind=<kind> payload=<hex>`; the
    /// payload packs bits most-significant-first, zero-padded to a byte.
    pub fn render(&self) -> String {
        let mut payload = String::new();
        for chunk in self.bits.chunks(8) {
            let mut byte = 0u8;
            for (i, &bit) in chunk.iter().enumerate() {
                if bit {
                    byte |= 1 << (7 - i);
                }
            }
            payload.push_str(&format!("{byte:02x}"));
        }
        format!(
            "step={} sender={} kind={} payload={}",
            self.step,
            self.sender,
            self.kind.as_str(),
            payload
        )
    }
}

/// The ordered log of every classical message in a session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    messages: Vec<Message>,
}

impl Transcript {
    pub fn push(&mut self, message: Message) {
        self.messages.push(message);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// The line-oriented export format, one rendered message per line.
    pub fn render_log(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&m.render());
            out.push('\n');
        }
        out
    }
}

/// Which protocol a result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Ideal,
    TwoStage,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Ideal => "ideal",
            ProtocolKind::TwoStage => "two-stage",
        })
    }
}

/// The check at which a session aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortStage {
    /// Ideal protocol, single-basis check after the first transmission.
    FirstCheck,
    /// Ideal protocol, Bell-outcome check after the second transmission.
    SecondCheck,
    /// Two-stage protocol, computational-basis check in stage 1.
    Stage1Check,
    /// Two-stage protocol, correlation check in stage 2.
    Stage2Check,
}

impl fmt::Display for AbortStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbortStage::FirstCheck => "first-check",
            AbortStage::SecondCheck => "second-check",
            AbortStage::Stage1Check => "stage1-check",
            AbortStage::Stage2Check => "stage2-check",
        })
    }
}

/// Ground-truth statistics the simulator can see but the parties cannot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionDiagnostics {
    /// Fraction of stage-1 code positions carrying a bit-flip component,
    /// read from the fault flags before correction.
    pub code_bit_flip_rate: Option<f64>,
    /// Same for the phase-flip component.
    pub code_phase_flip_rate: Option<f64>,
    /// Fraction carrying both components.
    pub code_both_rate: Option<f64>,
    pub stage1_blocks_clean: Option<usize>,
    pub stage1_blocks_total: Option<usize>,
    pub stage2_blocks_clean: Option<usize>,
    pub stage2_blocks_total: Option<usize>,
}

/// Summary of one session.
///
/// `raw_key` is the receiving party's read of the key (empty exactly when
/// the session aborted); `alice_key` is the sender's view, the prepared
/// symbols at the same positions. `key_generation` counts how many
/// purification rounds the surviving pairs went through (0 for the ideal
/// protocol, 2 for the two-stage one).
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub protocol: ProtocolKind,
    pub aborted: Option<AbortStage>,
    pub qber_stage1: Option<f64>,
    pub qber_stage2: Option<f64>,
    /// Purified pairs after stage 1 (k).
    pub purified_stage1: Option<usize>,
    /// Purified pairs after stage 2 (m).
    pub purified_stage2: Option<usize>,
    pub raw_key: Vec<u8>,
    pub alice_key: Vec<u8>,
    /// Original pair positions the key symbols came from.
    pub surviving_positions: Vec<usize>,
    pub key_generation: u8,
    pub transcript: Transcript,
    pub diagnostics: SessionDiagnostics,
}

impl SessionResult {
    pub(crate) fn aborted_at(
        protocol: ProtocolKind,
        stage: AbortStage,
        qber_stage1: Option<f64>,
        qber_stage2: Option<f64>,
        purified_stage1: Option<usize>,
        transcript: Transcript,
        diagnostics: SessionDiagnostics,
    ) -> Self {
        Self {
            protocol,
            aborted: Some(stage),
            qber_stage1,
            qber_stage2,
            purified_stage1,
            purified_stage2: None,
            raw_key: Vec::new(),
            alice_key: Vec::new(),
            surviving_positions: Vec::new(),
            key_generation: 0,
            transcript,
            diagnostics,
        }
    }

    /// The survivor list in the form the adversary evaluator consumes:
    /// (original position, generation) per key symbol.
    pub fn key_positions(&self) -> Vec<(usize, u8)> {
        self.surviving_positions
            .iter()
            .map(|&p| (p, self.key_generation))
            .collect()
    }
}

/// Draws `amount` distinct indices from `0..len`, ascending.
pub(crate) fn sorted_sample(rng: &mut RandomStream, len: usize, amount: usize) -> Vec<usize> {
    let mut picked = rand::seq::index::sample(rng, len, amount).into_vec();
    picked.sort_unstable();
    picked
}

/// Membership mask of `positions` over `0..len`.
pub(crate) fn membership_mask(len: usize, positions: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; len];
    for &p in positions {
        mask[p] = true;
    }
    mask
}

/// Two transcript bits per Bell label: psi then sign.
pub(crate) fn label_bits(labels: impl IntoIterator<Item = crate::bell::BellLabel>) -> Vec<bool> {
    let mut bits = Vec::new();
    for label in labels {
        bits.push(label.psi);
        bits.push(label.sign);
    }
    bits
}

pub(crate) fn disagree_fraction(verdicts: &[bool]) -> f64 {
    if verdicts.is_empty() {
        return 0.0;
    }
    verdicts.iter().filter(|&&v| v).count() as f64 / verdicts.len() as f64
}
