//! Row-major N×L matrices of per-bit reals (bit means or LLRs).
//!
//! Row `n` holds the `L` bits carried by subcarrier `n`. The first `L/2`
//! columns drive the real axis of the symbol and the last `L/2` the
//! imaginary axis. LLRs use the convention `llr = 2·atanh(mean)`, positive
//! meaning bit `+1`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest |atanh(mean)| carried anywhere; LLRs saturate at twice this.
pub const T_LIMIT: f64 = 30.0;
pub const LLR_LIMIT: f64 = 2.0 * T_LIMIT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Posterior or prior bit means in `[-1, 1]`.
pub type BitMeanMatrix = BitMatrix;

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} bit matrix",
                data.len()
            )));
        }
        Ok(BitMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged bit matrix rows".into()));
        }
        Ok(BitMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        BitMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &BitMatrix, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        BitMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Bit means from LLRs: `tanh(llr / 2)`.
    pub fn means_from_llrs(llrs: &BitMatrix) -> Self {
        llrs.map(|l| (0.5 * l).tanh())
    }

    /// Hard ±1 decisions; ties go to `+1`.
    pub fn hard_decisions(&self) -> Self {
        self.map(|v| if v >= 0.0 { 1.0 } else { -1.0 })
    }

    pub fn max_abs_diff(&self, other: &BitMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `atanh` with the argument clamped to `[-1 + eps, 1 - eps]` and the result
/// to `±T_LIMIT`.
pub fn clamped_atanh(mean: f64, eps: f64) -> f64 {
    let m = mean.clamp(-1.0 + eps, 1.0 - eps);
    m.atanh().clamp(-T_LIMIT, T_LIMIT)
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn clamped_atanh_is_finite_at_saturation() {
        assert!((clamped_atanh(1.0, 1e-12) - 0.5 * 2e12f64.ln()).abs() < 1e-3);
        assert!(clamped_atanh(-1.0, 1e-12).is_finite());
        assert!((clamped_atanh(0.5, 1e-12) - 0.5f64.atanh()).abs() < 1e-15);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(BitMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
