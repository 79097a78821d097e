use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed::stream;
use crate::{Error, Result};

/// Bijection on `0..n`; `interleave` reads `y[i] = x[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    perm: Vec<usize>,
    seed: Option<u64>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            perm: (0..n).collect(),
            seed: None,
        }
    }

    /// Uniform random permutation: Fisher-Yates driven by the ChaCha8 stream
    /// for `seed`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut stream(seed));
        Permutation {
            perm,
            seed: Some(seed),
        }
    }

    pub fn from_vec(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter(format!("not a permutation: entry {p}")));
            }
        }
        Ok(Permutation { perm, seed: None })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Permutation { perm: inv, seed: None }
    }
}

fn check_len(len: usize, perm: &Permutation) -> Result<()> {
    if len != perm.len() {
        return Err(Error::DimensionMismatch(format!("{len} values for a length-{} permutation", perm.len())));
    }
    Ok(())
}

pub fn interleave<T: Copy>(x: &[T], perm: &Permutation) -> Result<Vec<T>> {
    check_len(x.len(), perm)?;
    Ok(perm.perm.iter().map(|&p| x[p]).collect())
}

pub fn deinterleave<T: Copy + Default>(y: &[T], perm: &Permutation) -> Result<Vec<T>> {
    check_len(y.len(), perm)?;
    let mut x = vec![T::default(); y.len()];
    for (&p, &v) in perm.perm.iter().zip(y) {
        x[p] = v;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_a_no_op() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(interleave(&x, &Permutation::identity(5)).unwrap(), x);
    }

    #[test]
    fn seeded_permutation_is_pinned() {
        let p = Permutation::random(8, 42);
        assert_eq!(p.as_slice(), &RECORDED_SEED_42);
        assert_eq!(p.seed(), Some(42));
    }

    const RECORDED_SEED_42: [usize; 8] = [7, 1, 5, 4, 6, 0, 3, 2];

    #[test]
    fn length_mismatch_is_an_error() {
        let p = Permutation::identity(4);
        assert!(interleave(&[1, 2, 3], &p).is_err());
        assert!(deinterleave(&[1, 2, 3], &p).is_err());
        assert!(Permutation::from_vec(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_vec(vec![0, 3, 1]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>(), n in 1usize..300) {
            let p = Permutation::random(n, seed);
            let x: Vec<u32> = (0..n as u32).map(|v| v * 7 + 1).collect();
            let y = interleave(&x, &p).unwrap();
            prop_assert_eq!(deinterleave(&y, &p).unwrap(), x.clone());
            prop_assert_eq!(interleave(&y, &p.inverse()).unwrap(), x);
            let mut sorted = p.as_slice().to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }
}
