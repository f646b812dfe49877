//! Randomized structural properties of the GF(2) layer and the codes.

use proptest::prelude::*;

use qkdsim::code::{LinearCode, SyndromeDecoder};
use qkdsim::gf2::{BinaryMatrix, BinaryVector};

/// Independent minimum-weight search, scanning weights upward and lex order
/// within each weight.
fn brute_force_leader(code: &LinearCode, syndrome: &BinaryVector) -> BinaryVector {
    let n = code.block_length();
    for weight in 0..=n {
        let mut candidates: Vec<BinaryVector> = (0..1u32 << n)
            .map(|m| BinaryVector::from_mask(n, m))
            .filter(|e| e.weight() == weight)
            .collect();
        candidates.sort();
        for e in candidates {
            if &code.parity_check().mul_vec(&e).unwrap() == syndrome {
                return e;
            }
        }
    }
    unreachable!("every syndrome has a coset leader");
}

fn arbitrary_matrix(rows: usize, cols: usize) -> impl Strategy<Value = BinaryMatrix> {
    proptest::collection::vec(proptest::collection::vec(0u8..=1, cols), rows)
        .prop_map(|rows| BinaryMatrix::from_rows(&rows).unwrap())
}

/// Parity checks drawn at random and filtered to full rank.
fn arbitrary_code() -> impl Strategy<Value = LinearCode> {
    (1usize..=3, 4usize..=8)
        .prop_flat_map(|(r, n)| arbitrary_matrix(r, n))
        .prop_filter_map("needs full row rank", |h| {
            LinearCode::from_parity_check(h).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The table decoder agrees with brute-force coset-leader search on
    /// every syndrome of arbitrary small codes, not just the shipped ones.
    #[test]
    fn decoder_matches_brute_force_on_arbitrary_codes(code in arbitrary_code()) {
        let decoder = SyndromeDecoder::new(&code).unwrap();
        let r = code.parity_check().row_count();
        for mask in 0..1u32 << r {
            let s = BinaryVector::from_mask(r, mask);
            prop_assert_eq!(decoder.decode(&s).unwrap(), &brute_force_leader(&code, &s));
        }
    }

    /// Leaders reproduce any error up to half the minimum distance exactly.
    #[test]
    fn sub_half_distance_errors_recover(code in arbitrary_code()) {
        let n = code.block_length();
        if code.dimension() == 0 {
            return Ok(());
        }
        let t = (code.min_distance() - 1) / 2;
        let decoder = SyndromeDecoder::new(&code).unwrap();
        for mask in 0..1u32 << n {
            let e = BinaryVector::from_mask(n, mask);
            if e.weight() <= t {
                let s = code.parity_check().mul_vec(&e).unwrap();
                prop_assert_eq!(decoder.decode(&s).unwrap(), &e);
            }
        }
    }

    /// The dual of the dual spans the same codeword set.
    #[test]
    fn dual_is_involutive(code in arbitrary_code()) {
        prop_assert_eq!(code.codewords(), code.dual().dual().codewords());
    }

    /// Dual codewords are orthogonal to the original code.
    #[test]
    fn dual_codewords_are_orthogonal(code in arbitrary_code()) {
        for w in code.codewords() {
            for v in code.dual().codewords() {
                prop_assert_eq!(w.dot(&v), 0);
            }
        }
    }

    /// Matrix-vector products are linear.
    #[test]
    fn mul_vec_is_linear(
        m in arbitrary_matrix(3, 6),
        a in proptest::collection::vec(0u8..=1, 6),
        b in proptest::collection::vec(0u8..=1, 6),
    ) {
        let a = BinaryVector::new(a);
        let b = BinaryVector::new(b);
        let lhs = m.mul_vec(&a.xor(&b)).unwrap();
        let rhs = m.mul_vec(&a).unwrap().xor(&m.mul_vec(&b).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    /// The text format round-trips arbitrary matrices.
    #[test]
    fn matrix_text_round_trip(m in (1usize..=5, 1usize..=9).prop_flat_map(|(r, c)| arbitrary_matrix(r, c))) {
        let parsed = BinaryMatrix::parse(&m.to_text()).unwrap();
        prop_assert_eq!(parsed, m);
    }
}
