//! The two-stage noise-hardened protocol.
//!
//! Stage 1 sends the second halves under a random Hadamard mask, checks a
//! sampled subset in the computational basis, and purifies the rest into
//! nearly perfect pairs. Stage 2 repeats the pattern on Alice's retained
//! halves of the purified pairs: a fresh mask, a transmission, a sampled
//! correlation check, one more purification round, and a final Bell
//! measurement that reads the key.

use rand::Rng;

use crate::adversary::{EveStrategy, TransitLeg};
use crate::bell::{random_stream, BellLabel, ChannelModel, EprPair, RandomStream};

use super::{
    css_purify, disagree_fraction, membership_mask, sorted_sample, AbortStage, ConfigError,
    Message, MessageKind, ProtocolKind, Sender, SessionConfig, SessionDiagnostics, SessionResult,
    Transcript,
};

/// Everything carried from a non-aborted stage 1 into stage 2: the purified
/// pairs (tagged with their original positions), the session stream, the
/// transcript so far, and stage-1 statistics.
#[derive(Debug, Clone)]
pub struct Stage1State {
    rng: RandomStream,
    transcript: Transcript,
    survivors: Vec<(usize, EprPair)>,
    qber: f64,
    blocks_clean: usize,
    blocks_total: usize,
    code_bit_flip_rate: f64,
    code_phase_flip_rate: f64,
    code_both_rate: f64,
}

impl Stage1State {
    /// Number of purified pairs handed to stage 2 (k).
    pub fn purified_count(&self) -> usize {
        self.survivors.len()
    }

    /// Stage-1 check-bit disagreement rate.
    pub fn qber(&self) -> f64 {
        self.qber
    }

    /// True when every purification block decoded with zero residual, the
    /// success criterion behind fidelity estimation.
    pub fn all_blocks_clean(&self) -> bool {
        self.blocks_clean == self.blocks_total
    }

    pub fn blocks_clean(&self) -> usize {
        self.blocks_clean
    }

    pub fn blocks_total(&self) -> usize {
        self.blocks_total
    }

    /// Ground-truth bit-flip rate over the code positions before correction.
    pub fn code_bit_flip_rate(&self) -> f64 {
        self.code_bit_flip_rate
    }

    /// Ground-truth phase-flip rate over the code positions before
    /// correction.
    pub fn code_phase_flip_rate(&self) -> f64 {
        self.code_phase_flip_rate
    }

    pub fn code_both_rate(&self) -> f64 {
        self.code_both_rate
    }
}

/// Outcome of stage 1: either the session already aborted at the stage-1
/// check, or it continues with retained state.
#[derive(Debug, Clone)]
pub enum Stage1Outcome {
    Aborted(Box<SessionResult>),
    Continued(Stage1State),
}

/// Runs stage 1: preparation per the quaternary key string, Hadamard mask,
/// transmission of the second halves, the sampled computational-basis check,
/// and block-by-block purification of the code positions.
pub fn run_stage1(
    cfg: &SessionConfig,
    channel: &ChannelModel,
    eve: &mut EveStrategy,
) -> Result<Stage1Outcome, ConfigError> {
    cfg.validate_stage1()?;
    let mut rng = random_stream(cfg.seed);
    let n = cfg.n_pairs;
    let mut transcript = Transcript::default();

    // Step 1: prepare pairs according to the quaternary string.
    let symbols = cfg.draw_symbols(&mut rng);
    let mut pairs: Vec<EprPair> = symbols
        .iter()
        .map(|&s| EprPair::new(BellLabel::from_symbol(s)))
        .collect();

    // Steps 2-3: Alice keeps the first halves and applies a Hadamard to
    // each traveling half selected by a random binary mask.
    let mask: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    for (pair, &rotate) in pairs.iter_mut().zip(&mask) {
        if rotate {
            pair.toggle_hadamard_frame();
        }
    }

    // Step 4: the second halves travel.
    for (pos, pair) in pairs.iter_mut().enumerate() {
        pair.apply_channel(channel, &mut rng);
        eve.intercept(pair, TransitLeg::SecondSequence, pos, 0);
    }

    // Step 5: Bob announces reception.
    transcript.push(Message::new(5, Sender::Bob, MessageKind::Reception, vec![]));

    // Step 6: Alice picks the check positions.
    let n1 = cfg.first_check_count();
    let checks = sorted_sample(&mut rng, n, n1);

    // Step 7: Alice reveals the basis mask and the check set.
    transcript.push(Message::new(
        7,
        Sender::Alice,
        MessageKind::BasisString,
        mask.clone(),
    ));
    transcript.push(Message::new(
        7,
        Sender::Alice,
        MessageKind::CheckPositions,
        membership_mask(n, &checks),
    ));

    // Step 8: Bob undoes the rotations, both parties measure the check
    // pairs in the computational basis and compare.
    for (pair, &rotate) in pairs.iter_mut().zip(&mask) {
        if rotate {
            pair.toggle_hadamard_frame();
        }
    }
    let verdicts: Vec<bool> = checks
        .iter()
        .map(|&pos| pairs[pos].z_basis_compare().disagrees())
        .collect();
    transcript.push(Message::new(
        8,
        Sender::Bob,
        MessageKind::CheckVerdicts,
        verdicts.clone(),
    ));
    let qber = disagree_fraction(&verdicts);
    if qber > cfg.abort_threshold {
        transcript.push(Message::new(8, Sender::Bob, MessageKind::Abort, vec![]));
        return Ok(Stage1Outcome::Aborted(Box::new(SessionResult::aborted_at(
            ProtocolKind::TwoStage,
            AbortStage::Stage1Check,
            Some(qber),
            None,
            None,
            transcript,
            SessionDiagnostics::default(),
        ))));
    }
    transcript.push(Message::new(8, Sender::Bob, MessageKind::Continue, vec![]));

    // Step 9: purify the code positions block by block. Alice announces the
    // syndromes; corrections land in the error frame. The first pair of
    // each block (per logical dimension) carries on as the purified pair.
    let checked = membership_mask(n, &checks);
    let code_positions: Vec<usize> = (0..n).filter(|&i| !checked[i]).collect();
    let block_len = cfg.css_code.block_length();
    let k_logical = cfg.css_code.logical_dimension();

    let total = code_positions.len() as f64;
    let bit_flips = code_positions.iter().filter(|&&i| pairs[i].fault.x).count();
    let phase_flips = code_positions.iter().filter(|&&i| pairs[i].fault.z).count();
    let both = code_positions
        .iter()
        .filter(|&&i| pairs[i].fault.x && pairs[i].fault.z)
        .count();

    let mut survivors = Vec::with_capacity((code_positions.len() / block_len) * k_logical);
    let mut blocks_clean = 0usize;
    let blocks_total = code_positions.len() / block_len;
    for chunk in code_positions.chunks(block_len) {
        let faults: Vec<_> = chunk.iter().map(|&i| pairs[i].fault).collect();
        let outcome = css_purify(&faults, &cfg.css_code);
        let mut syndrome_bits: Vec<bool> =
            outcome.bit_syndrome.bits().iter().map(|&b| b == 1).collect();
        syndrome_bits.extend(outcome.phase_syndrome.bits().iter().map(|&b| b == 1));
        transcript.push(Message::new(
            9,
            Sender::Alice,
            MessageKind::Syndrome,
            syndrome_bits,
        ));
        if outcome.success {
            blocks_clean += 1;
        }
        for (offset, &pos) in chunk.iter().enumerate() {
            pairs[pos].fault = outcome.residual[offset];
        }
        for &pos in chunk.iter().take(k_logical) {
            survivors.push((pos, pairs[pos]));
        }
    }

    Ok(Stage1Outcome::Continued(Stage1State {
        rng,
        transcript,
        survivors,
        qber,
        blocks_clean,
        blocks_total,
        code_bit_flip_rate: bit_flips as f64 / total,
        code_phase_flip_rate: phase_flips as f64 / total,
        code_both_rate: both as f64 / total,
    }))
}

/// Runs stage 2 on the state a non-aborted stage 1 returned. `cfg` must be
/// the configuration that produced the state; `channel` models the second
/// transmission and may differ from the stage-1 channel.
pub fn run_stage2(
    state: Stage1State,
    cfg: &SessionConfig,
    channel: &ChannelModel,
    eve: &mut EveStrategy,
) -> SessionResult {
    let Stage1State {
        mut rng,
        mut transcript,
        mut survivors,
        qber: qber_stage1,
        blocks_clean,
        blocks_total,
        code_bit_flip_rate,
        code_phase_flip_rate,
        code_both_rate,
    } = state;
    let k = survivors.len();
    let mut diagnostics = SessionDiagnostics {
        code_bit_flip_rate: Some(code_bit_flip_rate),
        code_phase_flip_rate: Some(code_phase_flip_rate),
        code_both_rate: Some(code_both_rate),
        stage1_blocks_clean: Some(blocks_clean),
        stage1_blocks_total: Some(blocks_total),
        stage2_blocks_clean: None,
        stage2_blocks_total: None,
    };

    // Step 11: a fresh Hadamard mask over Alice's retained halves.
    let mask: Vec<bool> = (0..k).map(|_| rng.random()).collect();
    for ((_, pair), &rotate) in survivors.iter_mut().zip(&mask) {
        if rotate {
            pair.toggle_hadamard_frame();
        }
    }

    // Step 12: Alice's halves travel.
    for (pos, pair) in survivors.iter_mut() {
        pair.apply_channel(channel, &mut rng);
        eve.intercept(pair, TransitLeg::FirstSequence, *pos, 1);
    }

    // Step 13: Bob announces reception.
    transcript.push(Message::new(13, Sender::Bob, MessageKind::Reception, vec![]));

    // Step 14: Alice reveals the mask; Bob undoes the rotations.
    transcript.push(Message::new(
        14,
        Sender::Alice,
        MessageKind::BasisString,
        mask.clone(),
    ));
    for ((_, pair), &rotate) in survivors.iter_mut().zip(&mask) {
        if rotate {
            pair.toggle_hadamard_frame();
        }
    }

    // Step 15: Bob measures both halves of a sampled subset in the
    // computational basis; Alice announces the correlation each pair should
    // show (those key symbols are burned). Disagreement flags a bit flip.
    let (kept, n2) = cfg.stage2_split(k);
    assert!(
        kept >= cfg.css_code.block_length(),
        "config must satisfy validate_two_stage before stage 2 runs"
    );
    let checks = sorted_sample(&mut rng, k, n2);
    transcript.push(Message::new(
        15,
        Sender::Bob,
        MessageKind::CheckPositions,
        membership_mask(k, &checks),
    ));
    let expectations: Vec<bool> = checks.iter().map(|&i| survivors[i].1.prepared.psi).collect();
    transcript.push(Message::new(
        15,
        Sender::Alice,
        MessageKind::CheckExpectations,
        expectations,
    ));
    let verdicts: Vec<bool> = checks
        .iter()
        .map(|&i| survivors[i].1.z_basis_compare().disagrees())
        .collect();
    transcript.push(Message::new(
        15,
        Sender::Bob,
        MessageKind::CheckVerdicts,
        verdicts.clone(),
    ));
    let qber_stage2 = disagree_fraction(&verdicts);
    if qber_stage2 > cfg.abort_threshold {
        transcript.push(Message::new(15, Sender::Bob, MessageKind::Abort, vec![]));
        return SessionResult::aborted_at(
            ProtocolKind::TwoStage,
            AbortStage::Stage2Check,
            Some(qber_stage1),
            Some(qber_stage2),
            Some(k),
            transcript,
            diagnostics,
        );
    }
    transcript.push(Message::new(15, Sender::Bob, MessageKind::Continue, vec![]));

    // Step 16: Bob purifies the remaining pairs on his own; he holds both
    // halves now, so no syndromes cross the channel.
    let checked = membership_mask(k, &checks);
    let remaining: Vec<(usize, EprPair)> = survivors
        .iter()
        .enumerate()
        .filter(|&(i, _)| !checked[i])
        .map(|(_, entry)| *entry)
        .collect();
    let block_len = cfg.css_code.block_length();
    let k_logical = cfg.css_code.logical_dimension();
    let mut final_pairs: Vec<(usize, EprPair)> = Vec::new();
    let mut blocks2_clean = 0usize;
    let blocks2_total = remaining.len() / block_len;
    for chunk in remaining.chunks(block_len) {
        let faults: Vec<_> = chunk.iter().map(|(_, p)| p.fault).collect();
        let outcome = css_purify(&faults, &cfg.css_code);
        if outcome.success {
            blocks2_clean += 1;
        }
        for (offset, &(pos, mut pair)) in chunk.iter().enumerate() {
            pair.fault = outcome.residual[offset];
            if offset < k_logical {
                final_pairs.push((pos, pair));
            }
        }
    }
    diagnostics.stage2_blocks_clean = Some(blocks2_clean);
    diagnostics.stage2_blocks_total = Some(blocks2_total);

    // Step 17: Bob Bell-measures the purified pairs; the outcomes are the
    // raw key.
    let raw_key: Vec<u8> = final_pairs
        .iter()
        .map(|(_, p)| p.bell_measure().symbol())
        .collect();
    let alice_key: Vec<u8> = final_pairs
        .iter()
        .map(|(_, p)| p.prepared.symbol())
        .collect();
    let surviving_positions: Vec<usize> = final_pairs.iter().map(|&(pos, _)| pos).collect();

    SessionResult {
        protocol: ProtocolKind::TwoStage,
        aborted: None,
        qber_stage1: Some(qber_stage1),
        qber_stage2: Some(qber_stage2),
        purified_stage1: Some(k),
        purified_stage2: Some(final_pairs.len()),
        raw_key,
        alice_key,
        surviving_positions,
        key_generation: 2,
        transcript,
        diagnostics,
    }
}

/// Runs the full two-stage protocol with the same channel model on both
/// transmissions.
pub fn run_protocol2(
    cfg: &SessionConfig,
    channel: &ChannelModel,
    eve: &mut EveStrategy,
) -> Result<SessionResult, ConfigError> {
    cfg.validate_two_stage()?;
    match run_stage1(cfg, channel, eve)? {
        Stage1Outcome::Aborted(result) => Ok(*result),
        Stage1Outcome::Continued(state) => Ok(run_stage2(state, cfg, channel, eve)),
    }
}
