//! Dense GF(2) linear algebra: bit vectors, bit matrices, rank, null spaces.
//!
//! Everything here is sized for desk-scale codes (block lengths of a few
//! dozen at most), so the representation is one byte per bit and the
//! algorithms are plain Gaussian elimination. Values are immutable in
//! practice: protocol code builds them once and shares them freely.

use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Errors from GF(2) vector/matrix operations and matrix-file parsing.
#[derive(Debug, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix rows must all have the same length")]
    RaggedRows,
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A fixed-length vector over GF(2). Elements are stored as `u8` values
/// restricted to `{0, 1}`; the length is fixed at construction.
///
/// The derived `Ord` is lexicographic on the bit sequence, which is the
/// tie-break order used by syndrome decoding.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryVector {
    bits: Vec<u8>,
}

impl BinaryVector {
    /// Wraps a bit sequence. Panics if any element is not 0 or 1.
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "entries must be 0 or 1");
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    /// The weight-1 vector with a single 1 at `pos`.
    pub fn unit(len: usize, pos: usize) -> Self {
        assert!(pos < len, "unit position out of range");
        let mut bits = vec![0; len];
        bits[pos] = 1;
        Self { bits }
    }

    /// Unpacks the low `len` bits of `mask`; bit `i` of the mask becomes
    /// element `i`.
    pub fn from_mask(len: usize, mask: u32) -> Self {
        assert!(len <= 32);
        let bits = (0..len).map(|i| ((mask >> i) & 1) as u8).collect();
        Self { bits }
    }

    /// Packs the vector into a `u32` mask (element `i` into bit `i`).
    pub fn mask(&self) -> u32 {
        assert!(self.len() <= 32, "vector too long for a u32 mask");
        self.bits
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| m | ((b as u32) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Elementwise XOR. Panics on length mismatch.
    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "xor length mismatch");
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a ^ b)
            .collect();
        Self { bits }
    }

    /// Inner product mod 2. Panics on length mismatch.
    pub fn dot(&self, other: &Self) -> u8 {
        assert_eq!(self.len(), other.len(), "dot length mismatch");
        self.bits
            .iter()
            .zip(&other.bits)
            .fold(0, |acc, (a, b)| acc ^ (a & b))
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({self})")
    }
}

/// A dense rectangular matrix over GF(2), stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have equal length and
    /// contain only 0/1 entries.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Gf2Error::RaggedRows);
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert!(row.iter().all(|&b| b <= 1), "entries must be 0 or 1");
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_bit_rows(rows: &[BinaryVector]) -> Result<Self, Gf2Error> {
        let raw: Vec<Vec<u8>> = rows.iter().map(|r| r.bits().to_vec()).collect();
        Self::from_rows(&raw)
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        assert!(r < self.rows && c < self.cols, "index out of range");
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        assert!(v <= 1, "entries must be 0 or 1");
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> BinaryVector {
        assert!(r < self.rows, "row out of range");
        BinaryVector::new(self.data[r * self.cols..(r + 1) * self.cols].to_vec())
    }

    pub fn col(&self, c: usize) -> BinaryVector {
        assert!(c < self.cols, "column out of range");
        BinaryVector::new((0..self.rows).map(|r| self.get(r, c)).collect())
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = BinaryVector> + '_ {
        (0..self.rows).map(|r| self.row(r))
    }

    /// Matrix-vector product over GF(2): `result[i] = <row i, v> mod 2`.
    pub fn mul_vec(&self, v: &BinaryVector) -> Result<BinaryVector, Gf2Error> {
        if v.len() != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                got: v.len(),
            });
        }
        let bits = (0..self.rows)
            .map(|r| {
                (0..self.cols).fold(0u8, |acc, c| acc ^ (self.get(r, c) & v.get(c)))
            })
            .collect();
        Ok(BinaryVector::new(bits))
    }

    pub fn transposed(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Row rank over GF(2) by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let (reduced, pivots) = self.row_reduced();
        let _ = reduced;
        pivots.len()
    }

    /// Reduced row echelon form together with the pivot column list.
    fn row_reduced(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row >= m.rows {
                break;
            }
            let Some(src) = (pivot_row..m.rows).find(|&r| m.get(r, col) == 1) else {
                continue;
            };
            m.swap_rows(pivot_row, src);
            for r in 0..m.rows {
                if r != pivot_row && m.get(r, col) == 1 {
                    m.xor_row_into(pivot_row, r);
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            let tmp = self.get(a, c);
            self.set(a, c, self.get(b, c));
            self.set(b, c, tmp);
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        for c in 0..self.cols {
            let v = self.get(dst, c) ^ self.get(src, c);
            self.set(dst, c, v);
        }
    }

    /// A canonical basis of the right null space, one basis vector per row.
    ///
    /// Basis vectors are derived from the RREF with one vector per free
    /// column, ordered by ascending free column, so the result is a pure
    /// function of the matrix.
    pub fn null_space(&self) -> BinaryMatrix {
        let (rref, pivots) = self.row_reduced();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis_rows = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![0u8; self.cols];
            v[f] = 1;
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = rref.get(row, f);
            }
            basis_rows.push(v);
        }
        BinaryMatrix::from_rows(&basis_rows).expect("null space rows are uniform length")
    }

    /// Parses the plain-text matrix format: a header line `r n` followed by
    /// `r` lines of `n` space-separated bits.
    pub fn parse(text: &str) -> Result<Self, Gf2Error> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (header_line, header) = lines.next().ok_or(Gf2Error::Parse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Gf2Error::Parse {
                line: header_line + 1,
                reason: format!("expected header `r n`, got `{header}`"),
            });
        }
        let parse_dim = |s: &str| -> Result<usize, Gf2Error> {
            s.parse().map_err(|_| Gf2Error::Parse {
                line: header_line + 1,
                reason: format!("invalid dimension `{s}`"),
            })
        };
        let rows = parse_dim(dims[0])?;
        let cols = parse_dim(dims[1])?;
        let mut m = Self::zeros(rows, cols);
        let mut filled = 0;
        for (lineno, line) in lines {
            if filled >= rows {
                return Err(Gf2Error::Parse {
                    line: lineno + 1,
                    reason: format!("expected {rows} rows, found more"),
                });
            }
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != cols {
                return Err(Gf2Error::Parse {
                    line: lineno + 1,
                    reason: format!("expected {cols} entries, got {}", entries.len()),
                });
            }
            for (c, e) in entries.iter().enumerate() {
                match *e {
                    "0" => m.set(filled, c, 0),
                    "1" => m.set(filled, c, 1),
                    other => {
                        return Err(Gf2Error::Parse {
                            line: lineno + 1,
                            reason: format!("invalid bit `{other}`"),
                        })
                    }
                }
            }
            filled += 1;
        }
        if filled != rows {
            return Err(Gf2Error::Parse {
                line: 0,
                reason: format!("expected {rows} rows, got {filled}"),
            });
        }
        Ok(m)
    }

    /// Reads a matrix from a file in the [`BinaryMatrix::parse`] format.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self, Gf2Error> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Renders the matrix in the same plain-text format `parse` accepts.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryMatrix({}x{})", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, " {}", self.row(r))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_vec_identity() {
        let m = BinaryMatrix::identity(3);
        let v = BinaryVector::new(vec![1, 0, 1]);
        assert_eq!(m.mul_vec(&v).unwrap(), v);
    }

    #[test]
    fn mul_vec_zero_matrix_annihilates() {
        let m = BinaryMatrix::zeros(2, 4);
        for mask in 0..16u32 {
            let v = BinaryVector::from_mask(4, mask);
            assert_eq!(m.mul_vec(&v).unwrap(), BinaryVector::zeros(2));
        }
    }

    #[test]
    fn mul_vec_rejects_dimension_mismatch() {
        let m = BinaryMatrix::zeros(2, 4);
        let v = BinaryVector::zeros(3);
        assert!(matches!(
            m.mul_vec(&v),
            Err(Gf2Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank_identity_and_zero() {
        assert_eq!(BinaryMatrix::identity(4).rank(), 4);
        assert_eq!(BinaryMatrix::zeros(3, 5).rank(), 0);
    }

    #[test]
    fn rank_dependent_rows() {
        let m = BinaryMatrix::from_rows(&[
            vec![1, 0, 1, 0],
            vec![0, 1, 1, 0],
            vec![1, 1, 0, 0], // sum of the first two
        ])
        .unwrap();
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn null_space_vectors_are_annihilated() {
        let m = BinaryMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let ns = m.null_space();
        assert_eq!(ns.row_count(), 1);
        for row in ns.rows_iter() {
            assert!(m.mul_vec(&row).unwrap().is_zero());
        }
        // rank-nullity
        assert_eq!(m.rank() + ns.row_count(), m.col_count());
    }

    #[test]
    fn parse_round_trip() {
        let text = "2 3\n1 0 1\n0 1 1\n";
        let m = BinaryMatrix::parse(text).unwrap();
        assert_eq!(m.row(0), BinaryVector::new(vec![1, 0, 1]));
        assert_eq!(m.to_text(), text);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(BinaryMatrix::parse("").is_err());
        assert!(BinaryMatrix::parse("2 3\n1 0\n0 1 1\n").is_err());
        assert!(BinaryMatrix::parse("1 3\n1 0 2\n").is_err());
        assert!(BinaryMatrix::parse("2 2\n1 0\n").is_err());
    }

    #[test]
    fn mask_round_trip() {
        for mask in 0..128u32 {
            let v = BinaryVector::from_mask(7, mask);
            assert_eq!(v.mask(), mask);
        }
    }
}
