//! Outer LDPC code: parity-check matrices, systematic encoding, sum-product
//! decoding and a seeded interleaver.
//!
//! Bits are carried as ±1 values and LLRs as `log P(+1)/P(−1)`, the same
//! convention as the detector: `+1` is GF(2) zero.

mod alist;
mod decode;
mod interleave;
mod qc;

use crate::{Error, Result};

pub use alist::{load_alist, to_alist};
pub use decode::{decode_bp, decode_bp_warm, Decoded};
pub use interleave::{deinterleave, interleave, Permutation};
pub use qc::{bundled_code, quasi_cyclic, BUNDLED_ALIST, IEEE80216E_R34A_BASE};

/// Dense GF(2) row packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(n: usize) -> Self {
        BitRow(vec![0; n.div_ceil(64)])
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + bit)
            })
        })
    }
}

/// Reduced-row-echelon form of `H` with pivots chosen from the rightmost
/// columns, so that for the usual parity-on-the-right layouts the message
/// occupies the first `k` positions.
#[derive(Debug, Clone)]
struct SystematicEncoder {
    /// Code positions carrying message bits, ascending.
    message_positions: Vec<usize>,
    /// `(pivot column, row)`: the pivot bit is the XOR of the row's other ones.
    parity_rows: Vec<(usize, BitRow)>,
}

impl SystematicEncoder {
    fn new(n: usize, rows: &[Vec<usize>]) -> Self {
        let mut work: Vec<BitRow> = rows
            .iter()
            .map(|r| {
                let mut b = BitRow::zeros(n);
                for &c in r {
                    b.set(c);
                }
                b
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in (0..n).rev() {
            let Some(p) = (rank..work.len()).find(|&r| work[r].get(col)) else {
                continue;
            };
            work.swap(rank, p);
            let pivot = work[rank].clone();
            for (r, row) in work.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == work.len() {
                break;
            }
        }
        work.truncate(rank);
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let message_positions = (0..n).filter(|&c| !is_pivot[c]).collect();
        let parity_rows = pivots.into_iter().zip(work).collect();
        SystematicEncoder {
            message_positions,
            parity_rows,
        }
    }
}

/// Sparse binary parity-check matrix with its Tanner-graph adjacency and a
/// precomputed systematic encoder.
#[derive(Debug, Clone)]
pub struct ParityCheck {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    encoder: SystematicEncoder,
}

impl PartialEq for ParityCheck {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.rows == other.rows
    }
}

impl ParityCheck {
    /// `rows[c]` lists the code positions in check `c`. Duplicate entries and
    /// out-of-range indices are rejected; dependent rows are allowed and
    /// simply lower the rank.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || rows.is_empty() {
            return Err(Error::CodeConstruction("empty parity-check matrix".into()));
        }
        let mut cols = vec![Vec::new(); n];
        let mut rows = rows;
        for (c, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::CodeConstruction(format!("check {c} lists a position twice")));
            }
            if let Some(&bad) = row.iter().find(|&&v| v >= n) {
                return Err(Error::CodeConstruction(format!("check {c} refers to position {bad} >= n = {n}")));
            }
            for &v in row.iter() {
                cols[v].push(c);
            }
        }
        let encoder = SystematicEncoder::new(n, &rows);
        if encoder.message_positions.is_empty() {
            return Err(Error::CodeConstruction("parity checks leave no message bits".into()));
        }
        Ok(ParityCheck {
            n,
            rows,
            cols,
            encoder,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.encoder.message_positions.len()
    }

    /// Number of check rows as given (including dependent ones).
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rank(&self) -> usize {
        self.n - self.k()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    /// Positions of the message bits inside a codeword.
    pub fn message_positions(&self) -> &[usize] {
        &self.encoder.message_positions
    }

    /// Whether the message sits in the first `k` positions.
    pub fn is_systematic_prefix(&self) -> bool {
        self.encoder.message_positions.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Unsatisfied checks for a ±1 word (a bit counts as one when negative).
    pub fn syndrome_weight(&self, word: &[f64]) -> usize {
        self.rows
            .iter()
            .filter(|row| row.iter().filter(|&&v| word[v] < 0.0).count() % 2 == 1)
            .count()
    }

    pub fn is_codeword(&self, word: &[f64]) -> bool {
        word.len() == self.n && self.syndrome_weight(word) == 0
    }

    /// Extracts the message bits from a codeword-shaped vector.
    pub fn message_of<T: Copy>(&self, word: &[T]) -> Vec<T> {
        self.encoder.message_positions.iter().map(|&p| word[p]).collect()
    }

    /// Counts length-4 cycles in the Tanner graph.
    pub fn four_cycles(&self) -> usize {
        let mut count = 0;
        for c in 0..self.rows.len() {
            let mut seen = std::collections::HashMap::new();
            for &v in &self.rows[c] {
                for &c2 in &self.cols[v] {
                    if c2 > c {
                        *seen.entry(c2).or_insert(0usize) += 1;
                    }
                }
            }
            count += seen.values().map(|&s| s * (s - 1) / 2).sum::<usize>();
        }
        count
    }
}

/// Systematic encoding of a ±1 message into a ±1 codeword.
pub fn encode(msg: &[f64], pc: &ParityCheck) -> Result<Vec<f64>> {
    if msg.len() != pc.k() {
        return Err(Error::DimensionMismatch(format!("message of length {} for k = {}", msg.len(), pc.k())));
    }
    let mut word = BitRow::zeros(pc.n);
    for (&pos, &b) in pc.encoder.message_positions.iter().zip(msg) {
        if b < 0.0 {
            word.set(pos);
        }
    }
    // Each pivot row touches only its own pivot among the pivot columns.
    for (pivot, row) in &pc.encoder.parity_rows {
        let parity = row.ones().filter(|&c| c != *pivot).fold(false, |acc, c| acc ^ word.get(c));
        if parity {
            word.set(*pivot);
        }
    }
    let out: Vec<f64> = (0..pc.n).map(|i| if word.get(i) { -1.0 } else { 1.0 }).collect();
    debug_assert!(pc.is_codeword(&out));
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::seed::stream;
    use rand::Rng;

    /// H = [[1,1,0,1],[0,1,1,1]].
    pub(crate) fn toy() -> ParityCheck {
        ParityCheck::from_rows(4, vec![vec![0, 1, 3], vec![1, 2, 3]]).unwrap()
    }

    pub(crate) fn toy_codewords() -> Vec<Vec<f64>> {
        (0..16u32)
            .map(|i| (0..4).map(|b| if i >> b & 1 == 1 { -1.0 } else { 1.0 }).collect::<Vec<f64>>())
            .filter(|w| toy().is_codeword(w))
            .collect()
    }

    #[test]
    fn toy_code_dimensions() {
        let pc = toy();
        assert_eq!((pc.n(), pc.k(), pc.rank()), (4, 2, 2));
        assert_eq!(toy_codewords().len(), 4);
        assert!(pc.is_systematic_prefix());
    }

    #[test]
    fn toy_encoding_matches_enumeration() {
        let pc = toy();
        let words = toy_codewords();
        for m in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let c = encode(&m, &pc).unwrap();
            let matches: Vec<_> = words.iter().filter(|w| w[..2] == m).collect();
            assert_eq!(matches.len(), 1);
            assert_eq!(&c, matches[0]);
        }
    }

    #[test]
    fn zero_message_gives_zero_codeword() {
        let pc = bundled_code().unwrap();
        let c = encode(&vec![1.0; pc.k()], &pc).unwrap();
        assert!(c.iter().all(|&b| b == 1.0));
    }

    #[test]
    fn dependent_rows_lower_the_rank() {
        let pc = ParityCheck::from_rows(4, vec![vec![0, 1, 3], vec![1, 2, 3], vec![0, 2]]).unwrap();
        assert_eq!(pc.k(), 2);
        let mut rng = stream(1);
        for _ in 0..10 {
            let m: Vec<f64> = (0..2).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            assert!(pc.is_codeword(&encode(&m, &pc).unwrap()));
        }
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(ParityCheck::from_rows(3, vec![vec![0, 0]]).is_err());
        assert!(ParityCheck::from_rows(3, vec![vec![0, 5]]).is_err());
        assert!(ParityCheck::from_rows(2, vec![vec![0], vec![1]]).is_err());
        assert!(encode(&[1.0], &toy()).is_err());
    }

    #[test]
    fn bundled_code_encodes_valid_codewords() {
        let pc = bundled_code().unwrap();
        let mut rng = stream(2);
        for _ in 0..50 {
            let m: Vec<f64> = (0..pc.k()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let c = encode(&m, &pc).unwrap();
            assert!(pc.is_codeword(&c));
            assert_eq!(pc.message_of(&c), m);
        }
    }

    #[test]
    fn four_cycle_counter() {
        // Two checks sharing two variables form exactly one 4-cycle.
        let pc = ParityCheck::from_rows(4, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        assert_eq!(pc.four_cycles(), 1);
        assert_eq!(toy().four_cycles(), 1);
    }
}
