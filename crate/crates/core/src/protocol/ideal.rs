//! The ideal-channel protocol: two-step transmission with an eavesdropping
//! check after each step and no purification.

use rand::Rng;

use crate::adversary::{EveStrategy, TransitLeg};
use crate::bell::{random_stream, BellLabel, ChannelModel, EprPair};

use super::{
    disagree_fraction, label_bits, membership_mask, sorted_sample, AbortStage, ConfigError,
    Message, MessageKind, ProtocolKind, Sender, SessionConfig, SessionDiagnostics, SessionResult,
    Transcript,
};

/// Runs one session of the ideal-channel protocol.
///
/// Steps: Alice prepares an ordered pair sequence and sends the second
/// halves; Bob measures a random subset in random computational/Hadamard
/// bases and the parties compare (first check); Alice then sends the first
/// halves of the surviving pairs; Bob Bell-measures everything and a random
/// subset of outcomes is compared against the prepared labels (second
/// check). The remaining Bell outcomes are the raw key, two bits per pair.
///
/// An abort is a normal outcome, reported in the result rather than as an
/// error. The purification code in the config is ignored.
pub fn run_protocol1(
    cfg: &SessionConfig,
    channel: &ChannelModel,
    eve: &mut EveStrategy,
) -> Result<SessionResult, ConfigError> {
    cfg.validate_ideal()?;
    let mut rng = random_stream(cfg.seed);
    let n = cfg.n_pairs;
    let mut transcript = Transcript::default();

    // Step 1: prepare the ordered pair sequence.
    let symbols = cfg.draw_symbols(&mut rng);
    let mut pairs: Vec<EprPair> = symbols
        .iter()
        .map(|&s| EprPair::new(BellLabel::from_symbol(s)))
        .collect();

    // Step 2: the second halves travel.
    for (pos, pair) in pairs.iter_mut().enumerate() {
        pair.apply_channel(channel, &mut rng);
        eve.intercept(pair, TransitLeg::SecondSequence, pos, 0);
    }

    // Steps 3-4: Bob confirms reception, picks a subset and a random basis
    // per picked qubit, and announces both.
    transcript.push(Message::new(4, Sender::Bob, MessageKind::Reception, vec![]));
    let n1 = cfg.first_check_count();
    let first_check = sorted_sample(&mut rng, n, n1);
    let bases: Vec<bool> = (0..n1).map(|_| rng.random()).collect();
    transcript.push(Message::new(
        4,
        Sender::Bob,
        MessageKind::CheckPositions,
        membership_mask(n, &first_check),
    ));
    transcript.push(Message::new(
        4,
        Sender::Bob,
        MessageKind::CheckBases,
        bases.clone(),
    ));

    // Step 5: Alice measures the partner qubits in the announced bases and
    // the outcomes are compared (first eavesdropping check).
    let verdicts: Vec<bool> = first_check
        .iter()
        .zip(&bases)
        .map(|(&pos, &computational)| {
            let cmp = if computational {
                pairs[pos].z_basis_compare()
            } else {
                pairs[pos].x_basis_compare()
            };
            cmp.disagrees()
        })
        .collect();
    transcript.push(Message::new(
        5,
        Sender::Alice,
        MessageKind::CheckVerdicts,
        verdicts.clone(),
    ));
    let qber1 = disagree_fraction(&verdicts);
    if qber1 > cfg.abort_threshold {
        transcript.push(Message::new(5, Sender::Alice, MessageKind::Abort, vec![]));
        return Ok(SessionResult::aborted_at(
            ProtocolKind::Ideal,
            AbortStage::FirstCheck,
            Some(qber1),
            None,
            None,
            transcript,
            SessionDiagnostics::default(),
        ));
    }
    transcript.push(Message::new(6, Sender::Alice, MessageKind::Continue, vec![]));

    // Step 6: the first halves of the surviving pairs travel.
    let checked = membership_mask(n, &first_check);
    let survivors: Vec<usize> = (0..n).filter(|&i| !checked[i]).collect();
    for &pos in &survivors {
        pairs[pos].apply_channel(channel, &mut rng);
        eve.intercept(&mut pairs[pos], TransitLeg::FirstSequence, pos, 0);
    }
    transcript.push(Message::new(7, Sender::Bob, MessageKind::Reception, vec![]));

    // Step 7: Bob Bell-measures every surviving pair.
    let outcomes: Vec<BellLabel> = survivors.iter().map(|&i| pairs[i].bell_measure()).collect();

    // Step 8: second eavesdropping check over a random subset of outcomes,
    // scored bit by bit against the prepared labels.
    let n2 = cfg.second_check_count(survivors.len());
    let second_check = sorted_sample(&mut rng, survivors.len(), n2);
    transcript.push(Message::new(
        8,
        Sender::Bob,
        MessageKind::CheckPositions,
        membership_mask(survivors.len(), &second_check),
    ));
    transcript.push(Message::new(
        8,
        Sender::Bob,
        MessageKind::BellOutcomes,
        label_bits(second_check.iter().map(|&ci| outcomes[ci])),
    ));
    transcript.push(Message::new(
        8,
        Sender::Alice,
        MessageKind::PreparedLabels,
        label_bits(second_check.iter().map(|&ci| pairs[survivors[ci]].prepared)),
    ));
    let mut mismatched_bits = 0usize;
    for &ci in &second_check {
        let got = outcomes[ci];
        let expected = pairs[survivors[ci]].prepared;
        mismatched_bits += (got.psi != expected.psi) as usize;
        mismatched_bits += (got.sign != expected.sign) as usize;
    }
    let qber2 = mismatched_bits as f64 / (2 * n2) as f64;
    if qber2 > cfg.abort_threshold {
        transcript.push(Message::new(8, Sender::Bob, MessageKind::Abort, vec![]));
        return Ok(SessionResult::aborted_at(
            ProtocolKind::Ideal,
            AbortStage::SecondCheck,
            Some(qber1),
            Some(qber2),
            None,
            transcript,
            SessionDiagnostics::default(),
        ));
    }
    transcript.push(Message::new(8, Sender::Bob, MessageKind::Continue, vec![]));

    // The unchecked Bell outcomes are the raw key.
    let checked2 = membership_mask(survivors.len(), &second_check);
    let key_indices: Vec<usize> = (0..survivors.len()).filter(|&ci| !checked2[ci]).collect();
    let raw_key: Vec<u8> = key_indices.iter().map(|&ci| outcomes[ci].symbol()).collect();
    let alice_key: Vec<u8> = key_indices
        .iter()
        .map(|&ci| pairs[survivors[ci]].prepared.symbol())
        .collect();
    let surviving_positions: Vec<usize> = key_indices.iter().map(|&ci| survivors[ci]).collect();

    Ok(SessionResult {
        protocol: ProtocolKind::Ideal,
        aborted: None,
        qber_stage1: Some(qber1),
        qber_stage2: Some(qber2),
        purified_stage1: None,
        purified_stage2: None,
        raw_key,
        alice_key,
        surviving_positions,
        key_generation: 0,
        transcript,
        diagnostics: SessionDiagnostics::default(),
    })
}
