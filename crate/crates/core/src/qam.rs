//! Gray-mapped square QAM written as a multilinear function of bits.
//!
//! With `K = L/2` bits per axis, one axis value is
//!
//! ```text
//! a(b₁..b_K) = Σ_{l=1..K} 2^{l-1} · Π_{p=l..K} b_p
//! ```
//!
//! which for hard ±1 bits lands on the odd integer grid `{±1, ±3, …}` with a
//! Gray labeling, and for bit *means* gives the posterior mean of the axis
//! under independent bits. The imaginary axis uses the same weights on the
//! last `K` columns. Levels are left unnormalized (mean energy `2(M−1)/3`).

use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, LLR_LIMIT};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Real,
    Imag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Constellation {
    bits: usize,
}

impl TryFrom<usize> for Constellation {
    type Error = Error;
    fn try_from(order: usize) -> Result<Self> {
        Constellation::new(order)
    }
}

impl From<Constellation> for usize {
    fn from(c: Constellation) -> usize {
        c.order()
    }
}

impl Constellation {
    /// Square M-QAM; `order` must be 4, 16, 64, 256, ….
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) || order > 1 << 16 {
            return Err(Error::UnsupportedConstellation(order));
        }
        Ok(Constellation {
            bits: order.trailing_zeros() as usize,
        })
    }

    pub fn order(&self) -> usize {
        1 << self.bits
    }

    /// `L = log₂ M`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    /// `K = L/2`.
    pub fn bits_per_axis(&self) -> usize {
        self.bits / 2
    }

    /// Largest amplitude level `√M − 1`.
    pub fn max_level(&self) -> f64 {
        ((1usize << self.bits_per_axis()) - 1) as f64
    }

    /// `E|d|²` over equiprobable points: `2(M − 1)/3`.
    pub fn mean_energy(&self) -> f64 {
        2.0 * (self.order() as f64 - 1.0) / 3.0
    }

    /// Column index of axis bit `k` (0-based within the axis).
    pub fn column(&self, axis: Axis, k: usize) -> usize {
        match axis {
            Axis::Real => k,
            Axis::Imag => self.bits_per_axis() + k,
        }
    }

    fn check(&self, b: &BitMatrix) -> Result<()> {
        if b.cols() != self.bits {
            return Err(Error::DimensionMismatch(format!(
                "bit matrix has {} columns, {}-QAM needs {}",
                b.cols(),
                self.order(),
                self.bits
            )));
        }
        Ok(())
    }

    /// Symbol for one row of bit means (or hard bits).
    pub fn map_row(&self, row: &[f64]) -> C64 {
        let k = self.bits_per_axis();
        C64::new(axis_value(&row[..k]), axis_value(&row[k..]))
    }

    /// `f(B)`: one symbol per row.
    pub fn map_bits(&self, b: &BitMatrix) -> Result<Vec<C64>> {
        self.check(b)?;
        Ok((0..b.rows()).map(|n| self.map_row(b.row(n))).collect())
    }

    /// Posterior second moments `(ν_r, ν_i)` of the real and imaginary parts.
    pub fn symbol_moments(&self, b: &BitMatrix) -> Result<SymbolMoments> {
        self.check(b)?;
        let k = self.bits_per_axis();
        let (nu_r, nu_i) = (0..b.rows())
            .map(|n| {
                let row = b.row(n);
                (axis_second_moment(&row[..k]), axis_second_moment(&row[k..]))
            })
            .unzip();
        Ok(SymbolMoments { nu_r, nu_i })
    }

    /// Per-row derivatives with respect to axis bit `k` (0-based): the
    /// symbol-value slope (`α_k` for the real axis, `β_k / j` for the
    /// imaginary axis) and the second-moment slope (`δ_k` or `Ω_k`).
    pub fn map_derivatives(&self, b: &BitMatrix, k: usize, axis: Axis) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(b)?;
        let half = self.bits_per_axis();
        if k >= half {
            return Err(Error::InvalidParameter(format!(
                "axis bit {k} out of range for {}-QAM",
                self.order()
            )));
        }
        let range = match axis {
            Axis::Real => 0..half,
            Axis::Imag => half..2 * half,
        };
        Ok((0..b.rows())
            .map(|n| {
                let bits = &b.row(n)[range.clone()];
                (axis_value_slope(bits, k), axis_moment_slope(bits, k))
            })
            .unzip())
    }

    /// Every constellation point with its ±1 bit label, in label order
    /// (label index bit `l` set ⇔ column `l` is `-1`).
    pub fn points(&self) -> Vec<(C64, Vec<f64>)> {
        (0..self.order())
            .map(|idx| {
                let bits: Vec<f64> = (0..self.bits)
                    .map(|l| if idx >> l & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                (self.map_row(&bits), bits)
            })
            .collect()
    }

    /// Nearest-level decision on one axis.
    pub fn slice_level(&self, x: f64) -> f64 {
        let max = self.max_level();
        (2.0 * (x / 2.0).floor() + 1.0).clamp(-max, max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMoments {
    pub nu_r: Vec<f64>,
    pub nu_i: Vec<f64>,
}

/// `Σ_{l} 2^{l-1} Π_{p≥l} b_p`, evaluated from the most significant end.
#[inline]
pub fn axis_value(bits: &[f64]) -> f64 {
    let mut suffix = 1.0;
    let mut acc = 0.0;
    for (l, &b) in bits.iter().enumerate().rev() {
        suffix *= b;
        acc += (1u64 << l) as f64 * suffix;
    }
    acc
}

/// `E[a²]` under independent bits with the given means:
/// `Σ_{1≤i≤j<K} 2^{i+j} Π_{p=i..j} b_p + Σ_{i=1..K} 4^{i-1}`.
#[inline]
pub fn axis_second_moment(bits: &[f64]) -> f64 {
    let k = bits.len();
    let mut acc: f64 = (0..k).map(|i| (1u64 << (2 * i)) as f64).sum();
    // 1-based i ≤ j < K  ↔  0-based i ≤ j ≤ K-2.
    for i in 0..k.saturating_sub(1) {
        let mut prod = 1.0;
        for (j, b) in bits.iter().enumerate().take(k - 1).skip(i) {
            prod *= b;
            acc += (1u64 << (i + j + 2)) as f64 * prod;
        }
    }
    acc
}

/// `∂a/∂b_k` (0-based `k`). An empty product contributes nothing to the sum;
/// the most significant bit gets its constant `2^{k}` through the indicator.
#[inline]
pub fn axis_value_slope(bits: &[f64], k: usize) -> f64 {
    let top = bits.len() - 1;
    let mut acc = if k == top { (1u64 << k) as f64 } else { 0.0 };
    for l in 0..=k {
        if l == top {
            continue;
        }
        let prod: f64 = (l..=top).filter(|&p| p != k).map(|p| bits[p]).product();
        acc += (1u64 << l) as f64 * prod;
    }
    acc
}

/// `∂E[a²]/∂b_k` (0-based `k`).
#[inline]
pub fn axis_moment_slope(bits: &[f64], k: usize) -> f64 {
    let len = bits.len();
    if len < 2 || k + 1 >= len {
        return 0.0;
    }
    // i = j = k term (indicator part), then every i ≤ k ≤ j < K-1 with i ≠ j.
    let mut acc = (1u64 << (2 * k + 2)) as f64;
    for i in 0..=k {
        for j in k..len - 1 {
            if i == j {
                continue;
            }
            let prod: f64 = (i..=j).filter(|&p| p != k).map(|p| bits[p]).product();
            acc += (1u64 << (i + j + 2)) as f64 * prod;
        }
    }
    acc
}

/// Exact per-subcarrier bit posteriors for `y = g·d + CN(0, 2σ²)`,
/// marginalizing over all points with the given prior LLRs. Returns
/// extrinsic LLRs (posterior − prior), saturated at `±LLR_LIMIT`.
/// Subcarriers with zero gain are erased (zero extrinsic).
pub fn demap_soft(
    constellation: &Constellation,
    y: &[C64],
    gain: &[C64],
    noise_var: f64,
    priors: &BitMatrix,
) -> Result<BitMatrix> {
    if noise_var.is_nan() || noise_var <= 0.0 {
        return Err(Error::InvalidParameter(format!("noise variance must be > 0, got {noise_var}")));
    }
    let n = y.len();
    let l = constellation.bits_per_symbol();
    if gain.len() != n || priors.rows() != n || priors.cols() != l {
        return Err(Error::DimensionMismatch(format!(
            "demap: {} observations, {} gains, {}x{} priors",
            n,
            gain.len(),
            priors.rows(),
            priors.cols()
        )));
    }
    let points = constellation.points();
    let mut out = BitMatrix::zeros(n, l);
    let mut metric = vec![0.0; points.len()];
    for sc in 0..n {
        if gain[sc] == C64::new(0.0, 0.0) {
            continue;
        }
        let prior = priors.row(sc);
        for (m, (pt, bits)) in metric.iter_mut().zip(&points) {
            let dist = (y[sc] - gain[sc] * pt).norm_sqr();
            let log_prior: f64 = bits.iter().zip(prior).map(|(b, p)| 0.5 * b * p).sum();
            *m = -dist / (2.0 * noise_var) + log_prior;
        }
        for bit in 0..l {
            let (mut pos_max, mut neg_max) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (m, (_, bits)) in metric.iter().zip(&points) {
                if bits[bit] > 0.0 {
                    pos_max = pos_max.max(*m);
                } else {
                    neg_max = neg_max.max(*m);
                }
            }
            let (mut pos_sum, mut neg_sum) = (0.0, 0.0);
            for (m, (_, bits)) in metric.iter().zip(&points) {
                if bits[bit] > 0.0 {
                    pos_sum += (m - pos_max).exp();
                } else {
                    neg_sum += (m - neg_max).exp();
                }
            }
            let ext = (pos_max + pos_sum.ln()) - (neg_max + neg_sum.ln()) - prior[bit];
            out.set(sc, bit, ext.clamp(-LLR_LIMIT, LLR_LIMIT));
        }
    }
    Ok(out)
}
