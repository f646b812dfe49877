//! Pluggable eavesdropping strategies applied to qubits in transit.
//!
//! Strategies act on the error-frame pair state and keep a log of what the
//! eavesdropper measured or captured. The log is what makes security claims
//! testable: after a batch of sessions, [`EveLog::guess_symbols`] turns the
//! log into concrete key guesses that can be compared against the real raw
//! key, so "Eve learned nothing" becomes a measurable agreement rate.
//!
//! Measurement outcomes are generated consistently with the collapse
//! physics: a lone measurement of one half of a pair is marginally uniform,
//! but if the same strategy later measures the *other* half of the same pair
//! in the same effective basis, the second outcome is pinned to the first
//! (shifted by whatever faults accrued in between). That is exactly the
//! correlation a real interceptor exploits against the single-transmission
//! weakness, and exactly what purification takes away: each purification
//! round produces a new pair *generation*, and log entries only pair up
//! within a generation. An interceptor of the two-step protocol only ever
//! sees generation-0 second halves and generation-1 first halves, so no two
//! of her records ever cover both halves of one surviving pair.
//!
//! Interception order on a transit is channel noise first, then the
//! strategy: the eavesdropper sits at the receiving end of the fiber and
//! whatever she resends or substitutes arrives intact.

use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::bell::{random_stream, BellLabel, EprPair, PauliFault, RandomStream};

/// Which half of the pair sequence a transit carries. The second sequence
/// (the halves sent away first) travels before the first sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitLeg {
    FirstSequence,
    SecondSequence,
}

/// Which transits a strategy attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LegSelection {
    #[default]
    Both,
    FirstSequenceOnly,
    SecondSequenceOnly,
}

impl LegSelection {
    fn covers(self, leg: TransitLeg) -> bool {
        match self {
            LegSelection::Both => true,
            LegSelection::FirstSequenceOnly => leg == TransitLeg::FirstSequence,
            LegSelection::SecondSequenceOnly => leg == TransitLeg::SecondSequence,
        }
    }
}

/// The attack applied per transiting qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackKind {
    /// No interference; sessions are bit-identical to an adversary-free run.
    None,
    /// Measure every covered qubit in the lab computational basis and
    /// resend the outcome eigenstate.
    InterceptResendZ,
    /// Per qubit, pick the lab Z or X basis uniformly, measure, resend.
    InterceptResendRandom,
    /// Keep each covered qubit with the given probability and forward a
    /// fresh unentangled qubit in its place.
    PairCapture(f64),
}

/// Error from parsing a strategy flag string.
#[derive(Debug, Error, PartialEq)]
#[error("unknown eavesdropper strategy `{0}` (expected none, intercept-resend-z, intercept-resend-random, or pair-capture:<fraction>)")]
pub struct AttackParseError(String);

impl FromStr for AttackKind {
    type Err = AttackParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(AttackKind::None),
            "intercept-resend-z" => Ok(AttackKind::InterceptResendZ),
            "intercept-resend-random" => Ok(AttackKind::InterceptResendRandom),
            other => {
                if let Some(frac) = other.strip_prefix("pair-capture:") {
                    let f: f64 = frac
                        .parse()
                        .map_err(|_| AttackParseError(other.to_string()))?;
                    if !(0.0..=1.0).contains(&f) {
                        return Err(AttackParseError(other.to_string()));
                    }
                    Ok(AttackKind::PairCapture(f))
                } else {
                    Err(AttackParseError(other.to_string()))
                }
            }
        }
    }
}

impl FromStr for LegSelection {
    type Err = AttackParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(LegSelection::Both),
            "first-sequence" => Ok(LegSelection::FirstSequenceOnly),
            "second-sequence" => Ok(LegSelection::SecondSequenceOnly),
            other => Err(AttackParseError(other.to_string())),
        }
    }
}

/// Measurement basis expressed in the logical (unrotated) frame. A lab-Z
/// measurement of a Hadamard-rotated half is an effective X measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureBasis {
    Z,
    X,
}

/// One entry in the eavesdropper's log.
#[derive(Debug, Clone, PartialEq)]
pub enum EveRecord {
    Measured {
        position: usize,
        generation: u8,
        leg: TransitLeg,
        basis: MeasureBasis,
        outcome: bool,
    },
    Captured {
        position: usize,
        generation: u8,
        leg: TransitLeg,
        /// Pair fault at the moment of capture (simulator ground truth;
        /// stands in for the captured qubit itself).
        fault_at_capture: PauliFault,
        /// The random decorrelation injected by the substituted qubit.
        decoy_fault: PauliFault,
    },
}

/// Everything the eavesdropper measured or kept, in interception order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EveLog {
    records: Vec<EveRecord>,
}

impl EveLog {
    pub fn records(&self) -> &[EveRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    fn find_measured(
        &self,
        position: usize,
        generation: u8,
        leg: TransitLeg,
    ) -> Option<(MeasureBasis, bool)> {
        self.records.iter().find_map(|r| match r {
            EveRecord::Measured {
                position: p,
                generation: g,
                leg: l,
                basis,
                outcome,
            } if *p == position && *g == generation && *l == leg => Some((*basis, *outcome)),
            _ => None,
        })
    }

    fn find_captured(
        &self,
        position: usize,
        generation: u8,
        leg: TransitLeg,
    ) -> Option<(PauliFault, PauliFault)> {
        self.records.iter().find_map(|r| match r {
            EveRecord::Captured {
                position: p,
                generation: g,
                leg: l,
                fault_at_capture,
                decoy_fault,
            } if *p == position && *g == generation && *l == leg => {
                Some((*fault_at_capture, *decoy_fault))
            }
            _ => None,
        })
    }

    /// The eavesdropper's best guess of the raw key, one Bell label per
    /// surviving position.
    ///
    /// `survivors` lists each key position together with the pair generation
    /// the key was read from; `prepared` gives the prepared label per
    /// survivor (ground truth the simulator supplies when granting the
    /// eavesdropper a Bell measurement on a fully captured pair). Bits she
    /// has no handle on are guessed with fair coins from her stream.
    pub fn guess_symbols(
        &self,
        survivors: &[(usize, u8)],
        prepared: &[BellLabel],
        rng: &mut RandomStream,
    ) -> Vec<BellLabel> {
        assert_eq!(survivors.len(), prepared.len());
        survivors
            .iter()
            .zip(prepared)
            .map(|(&(position, generation), &label)| {
                // Both halves captured: she holds the real pair and can
                // Bell-measure it. The label she reads is the prepared one
                // shifted by every fault that hit the halves she holds --
                // the fault record at the later capture, minus her own
                // decoy coins from the earlier one.
                let early = self.find_captured(position, generation, TransitLeg::SecondSequence);
                let late = self.find_captured(position, generation, TransitLeg::FirstSequence);
                if let (Some((_, early_decoy)), Some((late_fault, _))) = (early, late) {
                    return label.with_fault(late_fault ^ early_decoy);
                }
                // Both halves measured in the same effective basis: the
                // outcome pair pins down one label bit exactly.
                let first = self.find_measured(position, generation, TransitLeg::SecondSequence);
                let second = self.find_measured(position, generation, TransitLeg::FirstSequence);
                match (first, second) {
                    (Some((MeasureBasis::Z, o1)), Some((MeasureBasis::Z, o2))) => BellLabel {
                        psi: o1 ^ o2,
                        sign: rng.random(),
                    },
                    (Some((MeasureBasis::X, o1)), Some((MeasureBasis::X, o2))) => BellLabel {
                        psi: rng.random(),
                        sign: o1 ^ o2,
                    },
                    _ => BellLabel {
                        psi: rng.random(),
                        sign: rng.random(),
                    },
                }
            })
            .collect()
    }
}

/// An eavesdropper bound to one session: the attack kind, which transits it
/// covers, a private random stream, and the accumulated log.
#[derive(Debug, Clone)]
pub struct EveStrategy {
    kind: AttackKind,
    legs: LegSelection,
    rng: RandomStream,
    log: EveLog,
}

impl EveStrategy {
    pub fn new(kind: AttackKind, legs: LegSelection, seed: u64) -> Self {
        Self {
            kind,
            legs,
            rng: random_stream(seed),
            log: EveLog::default(),
        }
    }

    /// The absent adversary: never touches a qubit, never draws randomness.
    pub fn none() -> Self {
        Self::new(AttackKind::None, LegSelection::Both, 0)
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    pub fn log(&self) -> &EveLog {
        &self.log
    }

    /// Applies the strategy to one qubit in transit. `position` is the
    /// pair's original index and `generation` counts purification rounds
    /// (0 = as prepared).
    pub fn intercept(
        &mut self,
        pair: &mut EprPair,
        leg: TransitLeg,
        position: usize,
        generation: u8,
    ) {
        if !self.legs.covers(leg) {
            return;
        }
        match self.kind {
            AttackKind::None => {}
            AttackKind::InterceptResendZ => {
                self.measure_and_resend(pair, leg, position, generation, true);
            }
            AttackKind::InterceptResendRandom => {
                let lab_z: bool = self.rng.random();
                self.measure_and_resend(pair, leg, position, generation, lab_z);
            }
            AttackKind::PairCapture(fraction) => {
                let u: f64 = self.rng.random();
                if u < fraction {
                    self.capture(pair, leg, position, generation);
                }
            }
        }
    }

    /// Measures the traveling half in the chosen lab basis and resends the
    /// outcome eigenstate.
    ///
    /// In the error frame the effect is one-sided: an effective-Z
    /// measurement preserves the bit correlation and destroys phase
    /// coherence (the phase flag is randomized), an effective-X measurement
    /// does the reverse. The recorded outcome is uniform unless the partner
    /// half of this same pair generation was already measured in the same
    /// effective basis, in which case the collapse fixes it.
    fn measure_and_resend(
        &mut self,
        pair: &mut EprPair,
        leg: TransitLeg,
        position: usize,
        generation: u8,
        lab_z: bool,
    ) {
        let effective_z = lab_z ^ pair.hadamard_applied;
        let basis = if effective_z {
            MeasureBasis::Z
        } else {
            MeasureBasis::X
        };
        let partner_leg = match leg {
            TransitLeg::FirstSequence => TransitLeg::SecondSequence,
            TransitLeg::SecondSequence => TransitLeg::FirstSequence,
        };
        let outcome = match self.log.find_measured(position, generation, partner_leg) {
            Some((prior_basis, prior_outcome)) if prior_basis == basis => {
                let shift = match basis {
                    MeasureBasis::Z => pair.prepared.psi ^ pair.fault.x,
                    MeasureBasis::X => pair.prepared.sign ^ pair.fault.z,
                };
                prior_outcome ^ shift
            }
            _ => self.rng.random(),
        };
        self.log.records.push(EveRecord::Measured {
            position,
            generation,
            leg,
            basis,
            outcome,
        });
        let dephase: bool = self.rng.random();
        match basis {
            MeasureBasis::Z => pair.fault.z ^= dephase,
            MeasureBasis::X => pair.fault.x ^= dephase,
        }
    }

    /// Keeps the traveling qubit and substitutes a fresh one. The pair the
    /// parties now share is uncorrelated, modeled as XOR with a uniform
    /// fault.
    fn capture(&mut self, pair: &mut EprPair, leg: TransitLeg, position: usize, generation: u8) {
        let decoy = PauliFault {
            x: self.rng.random(),
            z: self.rng.random(),
        };
        self.log.records.push(EveRecord::Captured {
            position,
            generation,
            leg,
            fault_at_capture: pair.fault,
            decoy_fault: decoy,
        });
        pair.fault ^= decoy;
    }
}
