//! Purification of one block of pairs in the error frame.

use crate::bell::PauliFault;
use crate::code::CssCode;
use crate::gf2::BinaryVector;

/// Result of purifying one block: the measured syndromes, the per-pair
/// residual faults after the decoded correction is applied, and whether the
/// block came out perfectly clean.
///
/// `success` is the simulator's ground-truth view (the parties only see the
/// syndromes); it is deliberately strict — any nonzero residual counts as a
/// failure, even one that a logical-operator accounting would forgive.
#[derive(Debug, Clone, PartialEq)]
pub struct PurifyOutcome {
    pub success: bool,
    pub residual: Vec<PauliFault>,
    pub bit_syndrome: BinaryVector,
    pub phase_syndrome: BinaryVector,
}

/// Runs one round of code-based purification over a block of pair faults.
///
/// Bit-flip flags are syndromed against the outer code's parity check and
/// decoded to a minimum-weight correction; phase-flip flags likewise against
/// the dual of the inner code. The residual is the actual fault XOR the
/// decoded correction, so a block whose error pattern lies within the
/// decoder's guarantee comes back all-identity.
///
/// Panics if the block length does not match the code.
pub fn css_purify(block: &[PauliFault], code: &CssCode) -> PurifyOutcome {
    assert_eq!(
        block.len(),
        code.block_length(),
        "block length must match the code"
    );
    let x_flags = BinaryVector::new(block.iter().map(|f| f.x as u8).collect());
    let z_flags = BinaryVector::new(block.iter().map(|f| f.z as u8).collect());

    let bit_syndrome = code
        .h1()
        .mul_vec(&x_flags)
        .expect("h1 width equals the block length");
    let bit_correction = code
        .decode_bit_syndrome(&bit_syndrome)
        .expect("syndrome came from h1")
        .clone();

    let phase_syndrome = code
        .h2()
        .mul_vec(&z_flags)
        .expect("h2 width equals the block length");
    let phase_correction = code
        .decode_phase_syndrome(&phase_syndrome)
        .expect("syndrome came from h2")
        .clone();

    let residual: Vec<PauliFault> = (0..block.len())
        .map(|i| PauliFault {
            x: (x_flags.get(i) ^ bit_correction.get(i)) == 1,
            z: (z_flags.get(i) ^ phase_correction.get(i)) == 1,
        })
        .collect();
    let success = residual.iter().all(|f| f.is_identity());

    PurifyOutcome {
        success,
        residual,
        bit_syndrome,
        phase_syndrome,
    }
}
