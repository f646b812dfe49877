//! Classical binary codes and the nested-pair construction used for
//! entanglement purification.
//!
//! A [`LinearCode`] couples a full-rank generator with a full-rank parity
//! check. [`CssCode`] nests two of them (the inner code inside the outer)
//! and owns precomputed coset-leader tables so syndrome decoding is a table
//! lookup: bit-flip syndromes decode against the outer code, phase-flip
//! syndromes against the dual of the inner code.
//!
//! Decoding is exact at these block lengths: the coset leader table is built
//! by exhaustive minimum-weight search with lexicographic tie-breaks, so the
//! decoder is deterministic and provably optimal for every syndrome.

use thiserror::Error;

use crate::gf2::{BinaryMatrix, BinaryVector, Gf2Error};

/// Largest block length for which exhaustive construction (codeword
/// enumeration, coset-leader tables) is permitted.
pub const MAX_BLOCK_LENGTH: usize = 20;

/// Errors from code construction and decoding.
#[derive(Debug, Error)]
pub enum CodeError {
    #[error("generator and parity check disagree on block length: {generator_cols} vs {parity_cols}")]
    BlockLengthMismatch {
        generator_cols: usize,
        parity_cols: usize,
    },
    #[error("generator row {row} is not orthogonal to the parity check")]
    NotOrthogonal { row: usize },
    #[error("{which} is rank deficient: rank {rank} of {rows} rows")]
    RankDeficient {
        which: &'static str,
        rank: usize,
        rows: usize,
    },
    #[error("generator and parity check dimensions do not add up to the block length: {k} + {r} != {n}")]
    DimensionSum { k: usize, r: usize, n: usize },
    #[error("block length {n} exceeds the exhaustive-search limit {max}")]
    BlockTooLarge { n: usize, max: usize },
    #[error("inner code row {row} ({witness}) is not a codeword of the outer code")]
    SubsetViolation { row: usize, witness: BinaryVector },
    #[error("outer and inner codes have different block lengths: {outer} vs {inner}")]
    NestedLengthMismatch { outer: usize, inner: usize },
    #[error("no logical qubits: outer dimension {outer_dim} must exceed inner dimension {inner_dim}")]
    ZeroLogicalDimension { outer_dim: usize, inner_dim: usize },
    #[error("syndrome length {got} does not match parity check row count {expected}")]
    SyndromeLength { expected: usize, got: usize },
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// A binary linear `[n, k]` code given by a full-rank `k x n` generator and
/// a full-rank `(n-k) x n` parity check with `G * H^T = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    generator: BinaryMatrix,
    parity_check: BinaryMatrix,
}

impl LinearCode {
    /// Validates and wraps a generator/parity-check pair.
    pub fn new(generator: BinaryMatrix, parity_check: BinaryMatrix) -> Result<Self, CodeError> {
        let n = generator.col_count();
        if parity_check.col_count() != n {
            return Err(CodeError::BlockLengthMismatch {
                generator_cols: n,
                parity_cols: parity_check.col_count(),
            });
        }
        let k = generator.row_count();
        let r = parity_check.row_count();
        if k + r != n {
            return Err(CodeError::DimensionSum { k, r, n });
        }
        for (i, row) in generator.rows_iter().enumerate() {
            if !parity_check.mul_vec(&row)?.is_zero() {
                return Err(CodeError::NotOrthogonal { row: i });
            }
        }
        let g_rank = generator.rank();
        if g_rank != k {
            return Err(CodeError::RankDeficient {
                which: "generator",
                rank: g_rank,
                rows: k,
            });
        }
        let h_rank = parity_check.rank();
        if h_rank != r {
            return Err(CodeError::RankDeficient {
                which: "parity check",
                rank: h_rank,
                rows: r,
            });
        }
        Ok(Self {
            generator,
            parity_check,
        })
    }

    /// Builds the code with the given parity check; the generator is the
    /// canonical null-space basis. The parity check must have full row rank.
    pub fn from_parity_check(parity_check: BinaryMatrix) -> Result<Self, CodeError> {
        let r = parity_check.row_count();
        let rank = parity_check.rank();
        if rank != r {
            return Err(CodeError::RankDeficient {
                which: "parity check",
                rank,
                rows: r,
            });
        }
        let generator = parity_check.null_space();
        Self::new(generator, parity_check)
    }

    /// Block length `n`.
    pub fn block_length(&self) -> usize {
        self.generator.col_count()
    }

    /// Dimension `k` (number of information bits).
    pub fn dimension(&self) -> usize {
        self.generator.row_count()
    }

    pub fn generator(&self) -> &BinaryMatrix {
        &self.generator
    }

    pub fn parity_check(&self) -> &BinaryMatrix {
        &self.parity_check
    }

    /// Membership test via the parity check.
    pub fn contains(&self, word: &BinaryVector) -> bool {
        word.len() == self.block_length()
            && self
                .parity_check
                .mul_vec(word)
                .map(|s| s.is_zero())
                .unwrap_or(false)
    }

    /// Enumerates all `2^k` codewords in message-mask order.
    pub fn codewords(&self) -> Vec<BinaryVector> {
        let k = self.dimension();
        assert!(k <= MAX_BLOCK_LENGTH, "codeword enumeration is desk-scale only");
        let n = self.block_length();
        (0..1u32 << k)
            .map(|msg| {
                let mut w = BinaryVector::zeros(n);
                for (i, row) in self.generator.rows_iter().enumerate() {
                    if (msg >> i) & 1 == 1 {
                        w = w.xor(&row);
                    }
                }
                w
            })
            .collect()
    }

    /// Minimum weight over all nonzero codewords, by enumeration.
    pub fn min_distance(&self) -> usize {
        self.codewords()
            .iter()
            .filter(|w| !w.is_zero())
            .map(BinaryVector::weight)
            .min()
            .expect("code has at least one nonzero codeword")
    }

    /// The dual code: generator and parity check swap roles.
    pub fn dual(&self) -> LinearCode {
        LinearCode {
            generator: self.parity_check.clone(),
            parity_check: self.generator.clone(),
        }
    }

    /// Syndrome of a word: `H * w^T`.
    pub fn syndrome(&self, word: &BinaryVector) -> Result<BinaryVector, CodeError> {
        Ok(self.parity_check.mul_vec(word)?)
    }

    /// Minimum-weight coset-leader decoding of a syndrome.
    ///
    /// Builds the full coset-leader table on each call; hot paths should go
    /// through a cached [`SyndromeDecoder`] instead.
    pub fn syndrome_decode(&self, syndrome: &BinaryVector) -> Result<BinaryVector, CodeError> {
        SyndromeDecoder::new(self)?.decode(syndrome).cloned()
    }
}

/// Precomputed coset-leader table for one code.
///
/// For every syndrome the stored leader is the error vector of least
/// Hamming weight, with ties broken by lexicographic order on the bit
/// sequence, found by exhaustive search over all `2^n` error patterns.
#[derive(Debug, Clone)]
pub struct SyndromeDecoder {
    syndrome_len: usize,
    leaders: Vec<BinaryVector>,
}

impl SyndromeDecoder {
    pub fn new(code: &LinearCode) -> Result<Self, CodeError> {
        let n = code.block_length();
        if n > MAX_BLOCK_LENGTH {
            return Err(CodeError::BlockTooLarge {
                n,
                max: MAX_BLOCK_LENGTH,
            });
        }
        let r = code.parity_check().row_count();
        let mut leaders: Vec<Option<BinaryVector>> = vec![None; 1 << r];
        for error_mask in 0..1u32 << n {
            let e = BinaryVector::from_mask(n, error_mask);
            let s = code.parity_check().mul_vec(&e)?.mask() as usize;
            let better = match &leaders[s] {
                None => true,
                Some(best) => (e.weight(), &e) < (best.weight(), best),
            };
            if better {
                leaders[s] = Some(e);
            }
        }
        let leaders = leaders
            .into_iter()
            .map(|l| l.expect("every syndrome has a coset leader"))
            .collect();
        Ok(Self {
            syndrome_len: r,
            leaders,
        })
    }

    /// Looks up the coset leader for a syndrome.
    pub fn decode(&self, syndrome: &BinaryVector) -> Result<&BinaryVector, CodeError> {
        if syndrome.len() != self.syndrome_len {
            return Err(CodeError::SyndromeLength {
                expected: self.syndrome_len,
                got: syndrome.len(),
            });
        }
        Ok(&self.leaders[syndrome.mask() as usize])
    }
}

/// The `[7, 4]` Hamming code. Parity-check column `j` (1-indexed) is the
/// binary representation of `j`, most significant bit in the top row, so a
/// nonzero syndrome read top-down names the erroneous position directly.
pub fn hamming_7_4() -> LinearCode {
    let mut h = BinaryMatrix::zeros(3, 7);
    for j in 1..=7usize {
        for row in 0..3 {
            let bit = ((j >> (2 - row)) & 1) as u8;
            h.set(row, j - 1, bit);
        }
    }
    LinearCode::from_parity_check(h).expect("Hamming [7,4] construction is valid")
}

/// The `[n, 1]` repetition code. Parity checks are the adjacent-pair
/// staircase: row `i` covers positions `i` and `i+1`.
pub fn repetition_code(n: usize) -> LinearCode {
    assert!(n >= 2, "repetition code needs block length >= 2");
    let generator = BinaryMatrix::from_rows(&[vec![1u8; n]]).expect("uniform rows");
    let mut parity = BinaryMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        parity.set(i, i, 1);
        parity.set(i, i + 1, 1);
    }
    LinearCode::new(generator, parity).expect("repetition construction is valid")
}

/// A quantum code built from nested classical codes `inner ⊂ outer`.
///
/// Bit-flip errors are decoded against the outer code (syndromes from
/// `h1`, its parity check); phase-flip errors against the dual of the inner
/// code (syndromes from `h2`, the inner generator). Both decoders are exact
/// coset-leader tables computed at construction.
#[derive(Debug, Clone)]
pub struct CssCode {
    outer: LinearCode,
    inner: LinearCode,
    k_logical: usize,
    t: usize,
    bit_decoder: SyndromeDecoder,
    phase_decoder: SyndromeDecoder,
}

impl CssCode {
    /// Validates the nesting (`inner ⊂ outer`), computes the logical
    /// dimension and guaranteed correctable weight `t`, and builds both
    /// decoders.
    pub fn new(outer: LinearCode, inner: LinearCode) -> Result<Self, CodeError> {
        if outer.block_length() != inner.block_length() {
            return Err(CodeError::NestedLengthMismatch {
                outer: outer.block_length(),
                inner: inner.block_length(),
            });
        }
        let n = outer.block_length();
        if n > MAX_BLOCK_LENGTH {
            return Err(CodeError::BlockTooLarge {
                n,
                max: MAX_BLOCK_LENGTH,
            });
        }
        for (i, row) in inner.generator().rows_iter().enumerate() {
            if !outer.contains(&row) {
                return Err(CodeError::SubsetViolation {
                    row: i,
                    witness: row,
                });
            }
        }
        if inner.dimension() >= outer.dimension() {
            return Err(CodeError::ZeroLogicalDimension {
                outer_dim: outer.dimension(),
                inner_dim: inner.dimension(),
            });
        }
        let k_logical = outer.dimension() - inner.dimension();
        let inner_dual = inner.dual();
        let d = outer.min_distance().min(inner_dual.min_distance());
        let t = (d - 1) / 2;
        let bit_decoder = SyndromeDecoder::new(&outer)?;
        let phase_decoder = SyndromeDecoder::new(&inner_dual)?;
        Ok(Self {
            outer,
            inner,
            k_logical,
            t,
            bit_decoder,
            phase_decoder,
        })
    }

    /// The default desk-scale instance: the `[7,4]` Hamming code over its
    /// own dual, giving one logical qubit protected against any single
    /// bit-flip plus any single phase-flip per block.
    pub fn steane() -> CssCode {
        let outer = hamming_7_4();
        let inner = outer.dual();
        CssCode::new(outer, inner).expect("the Hamming [7,4] code contains its dual")
    }

    pub fn block_length(&self) -> usize {
        self.outer.block_length()
    }

    /// Logical qubits per block.
    pub fn logical_dimension(&self) -> usize {
        self.k_logical
    }

    /// Guaranteed correctable weight per error type.
    pub fn correctable_weight(&self) -> usize {
        self.t
    }

    pub fn outer(&self) -> &LinearCode {
        &self.outer
    }

    pub fn inner(&self) -> &LinearCode {
        &self.inner
    }

    /// Parity check of the outer code; bit-flip syndromes are measured
    /// against its rows.
    pub fn h1(&self) -> &BinaryMatrix {
        self.outer.parity_check()
    }

    /// Parity check of the inner code's dual (the inner generator);
    /// phase-flip syndromes are measured against its rows.
    pub fn h2(&self) -> &BinaryMatrix {
        self.inner.generator()
    }

    pub fn decode_bit_syndrome(&self, syndrome: &BinaryVector) -> Result<&BinaryVector, CodeError> {
        self.bit_decoder.decode(syndrome)
    }

    pub fn decode_phase_syndrome(
        &self,
        syndrome: &BinaryVector,
    ) -> Result<&BinaryVector, CodeError> {
        self.phase_decoder.decode(syndrome)
    }
}
