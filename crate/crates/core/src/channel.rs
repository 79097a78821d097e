//! OFDM forward model after cyclic-prefix removal:
//! `r = diag(e^{jθ}) · Fᴴ · diag(h) · d + n`, with `F` the unitary DFT and
//! `n ~ CN(0, 2σ²I)` (σ² per real dimension).
//!
//! The simulator applies the exact rotation `e^{jθ}`; only the detector uses
//! the small-angle form `1 + jθ`.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::phn::PhnSequence;
use crate::{Error, Result, C64};

fn transform(x: &[C64], inverse: bool) -> Vec<C64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut buf = x.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Unitary DFT, `X_l = N^{-1/2} Σ_m x_m e^{-2πj·l·m/N}`.
pub fn dft(x: &[C64]) -> Vec<C64> {
    transform(x, false)
}

/// Inverse of [`dft`].
pub fn idft(x: &[C64]) -> Vec<C64> {
    transform(x, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub num_taps: usize,
    /// Exponential power-delay decay constant in samples: `q_k ∝ e^{-k/decay}`.
    pub decay: f64,
    pub n_subcarriers: usize,
}

impl ChannelProfile {
    pub fn new(num_taps: usize, decay: f64, n_subcarriers: usize) -> Result<Self> {
        let p = ChannelProfile {
            num_taps,
            decay,
            n_subcarriers,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_taps == 0 || self.num_taps > self.n_subcarriers {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= taps <= subcarriers, got {} taps for {} subcarriers",
                self.num_taps, self.n_subcarriers
            )));
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay must be > 0, got {}", self.decay)));
        }
        Ok(())
    }

    /// Tap powers normalized to unit sum.
    pub fn tap_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.num_taps).map(|k| (-(k as f64) / self.decay).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|q| q / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: Vec<C64>,
    /// Frequency response `h_n = Σ_k taps_k e^{-2πj·n·k/N}`.
    pub h: Vec<C64>,
}

impl ChannelRealization {
    pub fn from_taps(taps: Vec<C64>, n: usize) -> Result<Self> {
        if taps.len() > n || taps.is_empty() {
            return Err(Error::DimensionMismatch(format!("{} taps for {n} subcarriers", taps.len())));
        }
        let mut padded = taps.clone();
        padded.resize(n, C64::new(0.0, 0.0));
        let scale = (n as f64).sqrt();
        let h = dft(&padded).into_iter().map(|v| v * scale).collect();
        Ok(ChannelRealization { taps, h })
    }

    /// Unit-gain flat channel.
    pub fn flat(n: usize) -> Self {
        ChannelRealization {
            taps: vec![C64::new(1.0, 0.0)],
            h: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }
}

/// Draws `taps_k ~ CN(0, q_k)` and the matching frequency response.
pub fn sample_channel<R: Rng + ?Sized>(profile: &ChannelProfile, rng: &mut R) -> Result<ChannelRealization> {
    profile.validate()?;
    let taps = profile
        .tap_powers()
        .into_iter()
        .map(|q| {
            let s = (q / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(s * re, s * im)
        })
        .collect();
    ChannelRealization::from_taps(taps, profile.n_subcarriers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxVector {
    /// Time-domain samples after CP removal.
    pub r: Vec<C64>,
    /// Noise variance per real dimension.
    pub noise_var: f64,
}

impl RxVector {
    /// Per-subcarrier observations `F·r`.
    pub fn to_frequency(&self) -> Vec<C64> {
        dft(&self.r)
    }
}

/// `n ~ CN(0, 2σ²I)`.
pub fn draw_noise<R: Rng + ?Sized>(n: usize, noise_var: f64, rng: &mut R) -> Vec<C64> {
    let s = noise_var.sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(s * re, s * im)
        })
        .collect()
}

/// Noise-free `diag(e^{jθ}) Fᴴ diag(h) d`.
pub fn rotated_signal(d: &[C64], h: &[C64], theta: &PhnSequence) -> Result<Vec<C64>> {
    let n = d.len();
    if h.len() != n || theta.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} symbols, {} channel bins, {} phase samples",
            n,
            h.len(),
            theta.len()
        )));
    }
    let hd: Vec<C64> = d.iter().zip(h).map(|(a, b)| a * b).collect();
    Ok(idft(&hd)
        .into_iter()
        .zip(theta.as_slice())
        .map(|(s, &t)| s * C64::from_polar(1.0, t))
        .collect())
}

/// Adds pre-drawn noise to the rotated signal.
pub fn apply_impairments_with_noise(
    d: &[C64],
    ch: &ChannelRealization,
    theta: &PhnSequence,
    noise: &[C64],
    noise_var: f64,
) -> Result<RxVector> {
    let mut r = rotated_signal(d, &ch.h, theta)?;
    if noise.len() != r.len() {
        return Err(Error::DimensionMismatch(format!("{} noise samples for {} symbols", noise.len(), r.len())));
    }
    r.iter_mut().zip(noise).for_each(|(a, b)| *a += b);
    Ok(RxVector { r, noise_var })
}

pub fn apply_impairments<R: Rng + ?Sized>(
    d: &[C64],
    ch: &ChannelRealization,
    theta: &PhnSequence,
    noise_var: f64,
    rng: &mut R,
) -> Result<RxVector> {
    let noise = draw_noise(d.len(), noise_var, rng);
    apply_impairments_with_noise(d, ch, theta, &noise, noise_var)
}

/// Frequency-domain phase-noise spectrum `c = N^{-1/2} F e^{jθ}`; `c₀` is the
/// common phase error term.
pub fn ici_spectrum(theta: &PhnSequence) -> Vec<C64> {
    let p: Vec<C64> = theta.as_slice().iter().map(|&t| C64::from_polar(1.0, t)).collect();
    let scale = 1.0 / (p.len() as f64).sqrt();
    dft(&p).into_iter().map(|v| v * scale).collect()
}

/// `R_k = Σ_l c_{(k−l) mod N} h_l d_l`: the noise-free received spectrum
/// assembled from the ICI coefficients. With the `e^{-2πj}` forward DFT the
/// leakage index runs `(k − l)`.
pub fn ici_received(c: &[C64], d: &[C64], h: &[C64]) -> Vec<C64> {
    let n = c.len();
    (0..n)
        .map(|k| (0..n).map(|l| c[(k + n - l) % n] * h[l] * d[l]).sum())
        .collect()
}

/// Noise variance per real dimension for a per-subcarrier `Es/N₀` in dB with
/// unit average channel gain: `σ² = Es / (2·10^{snr/10})`.
pub fn noise_var_for_snr(mean_energy: f64, snr_db: f64) -> f64 {
    mean_energy / (2.0 * 10f64.powf(snr_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    fn naive_dft(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|l| {
                x.iter()
                    .enumerate()
                    .map(|(m, v)| v * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (l * m) as f64 / n as f64))
                    .sum::<C64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    fn random_vec(n: usize, seed: u64) -> Vec<C64> {
        draw_noise(n, 0.5, &mut stream(seed))
    }

    fn norm(x: &[C64]) -> f64 {
        x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn impulse_transforms_to_constant() {
        let mut e0 = vec![C64::new(0.0, 0.0); 16];
        e0[0] = C64::new(1.0, 0.0);
        for v in dft(&e0) {
            assert!((v - C64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn dft_is_unitary_and_matches_direct_sum() {
        let x = random_vec(64, 1);
        let big = dft(&x);
        assert!((norm(&x) - norm(&big)).abs() < 1e-12 * norm(&x));
        let back = idft(&big);
        let err: f64 = x.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12 * norm(&x));
        let direct = naive_dft(&x);
        let err: f64 = big.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10 * norm(&x));
    }

    #[test]
    fn single_tap_is_flat() {
        let profile = ChannelProfile::new(1, 3.0, 32).unwrap();
        let ch = sample_channel(&profile, &mut stream(4)).unwrap();
        let mag = ch.h[0].norm();
        assert!(ch.h.iter().all(|v| (v.norm() - mag).abs() < 1e-12));
    }

    #[test]
    fn tap_powers_sum_to_one() {
        let p = ChannelProfile::new(10, 3.0, 64).unwrap();
        assert!((p.tap_powers().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(ChannelProfile::new(65, 3.0, 64).is_err());
        assert!(ChannelProfile::new(0, 3.0, 64).is_err());
    }

    #[test]
    fn no_impairment_round_trip() {
        let d = random_vec(32, 2);
        let ch = sample_channel(&ChannelProfile::new(5, 3.0, 32).unwrap(), &mut stream(3)).unwrap();
        let rx = apply_impairments(&d, &ch, &PhnSequence::zeros(32), 0.0, &mut stream(0)).unwrap();
        let y = rx.to_frequency();
        for n in 0..32 {
            assert!((y[n] - ch.h[n] * d[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_phase_is_pure_rotation() {
        let d = random_vec(16, 5);
        let ch = sample_channel(&ChannelProfile::new(4, 3.0, 16).unwrap(), &mut stream(6)).unwrap();
        let phi = 0.3;
        let rx = apply_impairments(&d, &ch, &PhnSequence::constant(16, phi), 0.0, &mut stream(0)).unwrap();
        let y = rx.to_frequency();
        for n in 0..16 {
            assert!((y[n] - C64::from_polar(1.0, phi) * ch.h[n] * d[n]).norm() < 1e-12);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn forward_model_matches_dense_products() {
        let n = 12;
        let d = random_vec(n, 7);
        let ch = sample_channel(&ChannelProfile::new(3, 2.0, n).unwrap(), &mut stream(8)).unwrap();
        let theta = PhnSequence(random_vec(n, 9).iter().map(|v| v.re).collect());
        let noise = random_vec(n, 10);
        let rx = apply_impairments_with_noise(&d, &ch, &theta, &noise, 0.5).unwrap();
        // Dense: P · Fᴴ · H · d + n, with F built entrywise.
        let f = |l: usize, m: usize| {
            C64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * std::f64::consts::PI * (l * m) as f64 / n as f64)
        };
        for t in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += f(k, t).conj() * ch.h[k] * d[k];
            }
            let expect = C64::from_polar(1.0, theta.0[t]) * acc + noise[t];
            assert!((rx.r[t] - expect).norm() < 1e-10 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn ici_spectrum_without_noise_is_unit_impulse() {
        let c = ici_spectrum(&PhnSequence::zeros(8));
        assert!((c[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(c[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn ici_form_reconstructs_received_spectrum() {
        let n = 64;
        let d = random_vec(n, 11);
        let ch = sample_channel(&ChannelProfile::new(10, 3.0, n).unwrap(), &mut stream(12)).unwrap();
        let theta = crate::phn::sample_phn(&crate::phn::PhnParams::default(), n, &mut stream(13)).unwrap();
        let y = RxVector {
            r: rotated_signal(&d, &ch.h, &theta).unwrap(),
            noise_var: 0.0,
        }
        .to_frequency();
        let c = ici_spectrum(&theta);
        let rk = ici_received(&c, &d, &ch.h);
        let scale = norm(&y);
        for k in 0..n {
            assert!((rk[k] - y[k]).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn cpe_term_small_angle() {
        let n = 64;
        let params = crate::phn::PhnParams::default();
        for seed in 0..20 {
            let theta = crate::phn::sample_phn(&params, n, &mut stream(100 + seed)).unwrap();
            let c = ici_spectrum(&theta);
            let approx = C64::new(1.0, theta.mean());
            let sq: f64 = theta.0.iter().map(|t| t * t).sum();
            // Second-order Taylor remainder: |c₀ − (1 + jθ̄)| ≤ ‖θ‖²/(2N).
            assert!((c[0] - approx).norm() <= sq / (2.0 * n as f64) + 1e-15);
        }
    }

    #[test]
    fn unitary_impairments_conserve_energy() {
        let n = 32;
        let d = random_vec(n, 14);
        let ch = sample_channel(&ChannelProfile::new(6, 3.0, n).unwrap(), &mut stream(15)).unwrap();
        let theta = crate::phn::sample_phn(&crate::phn::PhnParams::default(), n, &mut stream(16)).unwrap();
        let r = rotated_signal(&d, &ch.h, &theta).unwrap();
        let hd: Vec<C64> = d.iter().zip(&ch.h).map(|(a, b)| a * b).collect();
        assert!((norm(&r) - norm(&hd)).abs() < 1e-12 * norm(&hd));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let d = random_vec(8, 1);
        let ch = ChannelRealization::flat(8);
        assert!(apply_impairments(&d, &ch, &PhnSequence::zeros(7), 0.1, &mut stream(0)).is_err());
    }

    #[test]
    fn snr_conversion() {
        assert!((noise_var_for_snr(42.0, 0.0) - 21.0).abs() < 1e-12);
        assert!((noise_var_for_snr(2.0, 10.0) - 0.1).abs() < 1e-15);
    }
}
