//! Oscillator phase noise modelled as a stationary AR(1) Gaussian process.
//!
//! The autocorrelation is `R(k) = σ²·p^|k|` with `p = exp(-2π·Ω·T)`, where
//! `Ω` is the one-sided 3-dB bandwidth of the oscillator and `T` the sample
//! interval. All angles are radians.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhnParams {
    /// RMS phase noise, radians.
    pub sigma_theta: f64,
    /// One-sided 3-dB bandwidth, Hz.
    pub omega_3db: f64,
    /// Sample interval, seconds.
    pub t_sample: f64,
}

impl Default for PhnParams {
    /// 3° RMS, 100 kHz bandwidth, 20 MHz sampling.
    fn default() -> Self {
        PhnParams {
            sigma_theta: 3f64.to_radians(),
            omega_3db: 100e3,
            t_sample: 50e-9,
        }
    }
}

impl PhnParams {
    pub fn new(sigma_theta: f64, omega_3db: f64, t_sample: f64) -> Result<Self> {
        let p = PhnParams {
            sigma_theta,
            omega_3db,
            t_sample,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_degrees(sigma_deg: f64, omega_3db: f64, t_sample: f64) -> Result<Self> {
        Self::new(sigma_deg.to_radians(), omega_3db, t_sample)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_theta >= 0.0 && self.sigma_theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_theta must be finite and >= 0, got {}",
                self.sigma_theta
            )));
        }
        if !(self.omega_3db > 0.0 && self.omega_3db.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "oscillator bandwidth must be > 0, got {}",
                self.omega_3db
            )));
        }
        if !(self.t_sample > 0.0 && self.t_sample.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample interval must be > 0, got {}",
                self.t_sample
            )));
        }
        let p = self.correlation();
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lag-one correlation {p} is outside (0, 1)"
            )));
        }
        Ok(())
    }

    /// Lag-one correlation `p = exp(-2π·Ω·T)`.
    pub fn correlation(&self) -> f64 {
        (-2.0 * std::f64::consts::PI * self.omega_3db * self.t_sample).exp()
    }
}

/// Prior covariance of a length-N phase-noise vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhnCovariance {
    matrix: DMatrix<f64>,
}

impl PhnCovariance {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Toeplitz covariance with entries `σ²·p^|i-j|`.
pub fn phn_covariance(params: &PhnParams, n: usize) -> Result<PhnCovariance> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sequence length must be >= 1".into()));
    }
    let var = params.sigma_theta * params.sigma_theta;
    let p = params.correlation();
    let matrix = DMatrix::from_fn(n, n, |i, j| var * p.powi(i.abs_diff(j) as i32));
    Ok(PhnCovariance { matrix })
}

/// One phase-noise realization, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhnSequence(pub Vec<f64>);

impl PhnSequence {
    pub fn zeros(n: usize) -> Self {
        PhnSequence(vec![0.0; n])
    }

    pub fn constant(n: usize, angle: f64) -> Self {
        PhnSequence(vec![angle; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Common phase error: the sample mean.
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

/// Stationary AR(1) draw: `θ₁ ~ N(0, σ²)`, `θₖ = p·θₖ₋₁ + wₖ` with
/// `wₖ ~ N(0, σ²(1 − p²))`. Consumes exactly `n` standard normals from `rng`.
pub fn sample_phn<R: Rng + ?Sized>(params: &PhnParams, n: usize, rng: &mut R) -> Result<PhnSequence> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sequence length must be >= 1".into()));
    }
    let p = params.correlation();
    let innovation = params.sigma_theta * (1.0 - p * p).sqrt();
    let mut theta = Vec::with_capacity(n);
    let z: f64 = rng.sample(StandardNormal);
    theta.push(params.sigma_theta * z);
    for k in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        theta.push(p * theta[k - 1] + innovation * z);
    }
    Ok(PhnSequence(theta))
}

/// Variance of the sample mean, `1ᵀΦ1 / N²`, summed by lag:
/// `σ²·(N + 2·Σₖ (N − k)·pᵏ) / N²`.
pub fn cpe_variance(params: &PhnParams, n: usize) -> Result<f64> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sequence length must be >= 1".into()));
    }
    let p = params.correlation();
    let nf = n as f64;
    let mut pk = 1.0;
    let mut lag_sum = 0.0;
    for k in 1..n {
        pk *= p;
        lag_sum += (nf - k as f64) * pk;
    }
    Ok(params.sigma_theta * params.sigma_theta * (nf + 2.0 * lag_sum) / (nf * nf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `P(θ̄ > angle)`.
    #[default]
    OneSided,
    /// `P(|θ̄| > angle)`.
    TwoSided,
}

/// Gaussian tail probability of the common phase error exceeding `angle`.
pub fn cpe_tail_probability(params: &PhnParams, n: usize, angle: f64, tail: Tail) -> Result<f64> {
    if angle.is_nan() || angle < 0.0 {
        return Err(Error::InvalidParameter(format!("angle must be >= 0, got {angle}")));
    }
    let var = cpe_variance(params, n)?;
    let one_sided = if angle == 0.0 {
        0.5
    } else if var == 0.0 {
        0.0
    } else {
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        std.sf(angle / var.sqrt())
    };
    Ok(match tail {
        Tail::OneSided => one_sided,
        Tail::TwoSided => (2.0 * one_sided).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    fn reference() -> PhnParams {
        PhnParams::default()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(PhnParams::new(0.1, 0.0, 1e-6).is_err());
        assert!(PhnParams::new(0.1, 1e3, -1.0).is_err());
        assert!(PhnParams::new(-0.1, 1e3, 1e-6).is_err());
        assert!(phn_covariance(&reference(), 0).is_err());
    }

    #[test]
    fn single_sample_covariance() {
        let c = phn_covariance(&reference(), 1).unwrap();
        assert_eq!(c.matrix()[(0, 0)], reference().sigma_theta.powi(2));
    }

    #[test]
    fn covariance_entry_matches_closed_form() {
        let params = reference();
        let p = params.correlation();
        assert!((p - (-0.01 * std::f64::consts::PI).exp()).abs() < 1e-15);
        assert!((p - 0.969072).abs() < 1e-6);
        let c = phn_covariance(&params, 5).unwrap();
        let expect = params.sigma_theta.powi(2) * p * p;
        assert!((c.matrix()[(0, 2)] - expect).abs() < 1e-18);
        assert!((c.matrix()[(2, 0)] - expect).abs() < 1e-18);
    }

    #[test]
    fn zero_sigma_gives_zero_matrix_and_sequence() {
        let params = PhnParams::new(0.0, 1e5, 5e-8).unwrap();
        let c = phn_covariance(&params, 4).unwrap();
        assert!(c.matrix().iter().all(|&v| v == 0.0));
        let s = sample_phn(&params, 10, &mut stream(3)).unwrap();
        assert!(s.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_is_spd_up_to_256() {
        for n in [1, 2, 7, 64, 256] {
            let c = phn_covariance(&reference(), n).unwrap();
            assert_eq!(c.matrix(), &c.matrix().transpose());
            assert!(c.clone().into_matrix().cholesky().is_some(), "n = {n}");
        }
    }

    #[test]
    fn cpe_variance_matches_double_sum() {
        for n in [1, 2, 5, 64, 200] {
            let c = phn_covariance(&reference(), n).unwrap();
            let brute = c.matrix().iter().sum::<f64>() / (n * n) as f64;
            let v = cpe_variance(&reference(), n).unwrap();
            assert!((v - brute).abs() <= 1e-12 * brute, "n = {n}: {v} vs {brute}");
        }
    }

    #[test]
    fn cpe_variance_limits() {
        let params = reference();
        assert_eq!(cpe_variance(&params, 1).unwrap(), params.sigma_theta.powi(2));
        // p -> 0: a very wide oscillator decorrelates adjacent samples.
        let white = PhnParams::new(params.sigma_theta, 2e7, 1e-6).unwrap();
        let v = cpe_variance(&white, 16).unwrap();
        assert!((v - params.sigma_theta.powi(2) / 16.0).abs() < 1e-18);
    }

    #[test]
    fn cpe_variance_decreases_with_n() {
        let mut prev = f64::INFINITY;
        for n in 1..300 {
            let v = cpe_variance(&reference(), n).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn tail_probability_cases() {
        let params = reference();
        assert_eq!(cpe_tail_probability(&params, 64, 0.0, Tail::OneSided).unwrap(), 0.5);
        let zero = PhnParams::new(0.0, 1e5, 5e-8).unwrap();
        assert_eq!(cpe_tail_probability(&zero, 64, 0.01, Tail::OneSided).unwrap(), 0.0);
        // 10-sigma tail of a single sample: Q(10) = 7.6198530241605e-24.
        let q = cpe_tail_probability(&params, 1, 10.0 * params.sigma_theta, Tail::OneSided).unwrap();
        assert!((q / 7.619_853_024_160_5e-24 - 1.0).abs() < 1e-6, "{q}");
        let one = cpe_tail_probability(&params, 64, 9f64.to_radians(), Tail::OneSided).unwrap();
        let two = cpe_tail_probability(&params, 64, 9f64.to_radians(), Tail::TwoSided).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-20);
        let doubled = cpe_tail_probability(&params, 128, 9f64.to_radians(), Tail::OneSided).unwrap();
        assert!(doubled < one);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_phn(&reference(), 64, &mut stream(11)).unwrap();
        let b = sample_phn(&reference(), 64, &mut stream(11)).unwrap();
        let c = sample_phn(&reference(), 64, &mut stream(12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
