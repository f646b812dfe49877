//! Desk-scale simulator for a two-step EPR-pair key distribution protocol.
//!
//! Each EPR pair carries two key bits (its Bell label), and the pair halves
//! travel from Alice to Bob in two separate transmissions, so an interceptor
//! holding only one half at a time learns nothing about the label. The crate
//! simulates both the ideal-channel protocol and its noise-hardened variant,
//! which wraps each transmission in a Hadamard twirl, a sampled error check,
//! and entanglement purification built from a nested pair of classical codes.
//!
//! The simulation works in the *error frame*: states stay diagonal in the
//! Bell basis throughout, so each pair is tracked as its prepared label plus
//! accumulated bit-flip/phase-flip flags ([`bell`]). Purification becomes
//! syndrome decoding over GF(2) ([`gf2`], [`code`]), eavesdropping strategies
//! become fault injections with a measurement log ([`adversary`]), and the
//! protocol drivers ([`protocol`]) choreograph the exchanges while recording
//! every classical message in a transcript. Post-processing — error-rate
//! estimates with exact binomial intervals, the binary-entropy key rate and
//! its 11% zero crossing, and Monte Carlo fidelity estimation — lives in
//! [`analysis`].
//!
//! Everything is deterministic given a session seed: rerunning a session
//! reproduces the transcript byte for byte.

pub mod adversary;
pub mod analysis;
pub mod bell;
pub mod code;
pub mod gf2;
pub mod protocol;

pub use adversary::{AttackKind, EveStrategy, LegSelection, TransitLeg};
pub use analysis::{
    binary_entropy, css_key_rate, estimate_fidelity, estimate_qber, threshold_solve,
    FidelityEstimate, QberEstimate,
};
pub use bell::{
    derive_seed, random_stream, BellLabel, ChannelModel, Comparison, EprPair, PauliFault,
    RandomStream,
};
pub use code::{hamming_7_4, repetition_code, CssCode, LinearCode, SyndromeDecoder};
pub use gf2::{BinaryMatrix, BinaryVector};
pub use protocol::{
    css_purify, run_protocol1, run_protocol2, run_stage1, run_stage2, AbortStage, KeySource,
    Message, MessageKind, PurifyOutcome, Sender, SessionConfig, SessionResult, Stage1Outcome,
    Stage1State, Transcript,
};
