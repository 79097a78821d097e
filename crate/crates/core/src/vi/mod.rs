//! Bit-level variational inference for OFDM under phase noise.
//!
//! The joint posterior over bits `B` and the phase-noise vector `θ` is
//! approximated by `Q(B)·Q(θ)` with independent Bernoulli bits (means `b̂`)
//! and a Gaussian `N(m_θ, S_θ)`. The detector minimizes the variational free
//! energy by coordinate descent over `S_θ`, `m_θ` and each bit, using the
//! small-angle likelihood `r ~ CN(diag(1 + jθ)·Fᴴ·H·f(B), 2σ²I)`.

mod detect;
mod energy;
mod exact;
mod gradient;
mod instance;
mod update;
mod workspace;

use nalgebra::{DMatrix, DVector};

use crate::bits::{clamped_atanh, BitMatrix, T_LIMIT};
use crate::phn::{phn_covariance, PhnParams};
use crate::qam::Constellation;
use crate::{Error, Result, C64};

pub use detect::{Detection, Detector, DetectorConfig, Step, TraceRecord};
pub use energy::{default_f2_threshold, f2_term, free_energy, FreeEnergyTerms};
pub use exact::{exact_posterior_oracle, ExactPosterior, ENUMERATION_LIMIT};
pub use gradient::{
    grad_bits, grad_m_theta, grad_precision, gradient_check, BlockError, GradCheckReport, Pairing,
};
pub use instance::{PreparedInstance, SymbolInstance};
pub use update::{update_bit_column, update_m_theta, update_s_theta, BitUpdateStats};
pub use workspace::{assemble_workspace, BitKernel, Workspace};

/// Gaussian prior `N(μ_θ, φ_θ)` on the phase-noise vector with cached
/// precision and log-determinant.
#[derive(Debug, Clone)]
pub struct PhnPrior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    precision: DMatrix<f64>,
    precision_mean: DVector<f64>,
    log_det: f64,
}

impl PhnPrior {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "prior mean of length {n} with {}x{} covariance",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let chol = cov.clone().cholesky().ok_or(Error::NotPositiveDefinite("phase-noise prior covariance"))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let precision = chol.inverse();
        let precision = (&precision + precision.transpose()) * 0.5;
        let precision_mean = &precision * &mean;
        Ok(PhnPrior {
            mean,
            cov,
            precision,
            precision_mean,
            log_det,
        })
    }

    /// Zero-mean prior with the AR(1) covariance of `params`.
    pub fn from_params(params: &PhnParams, n: usize) -> Result<Self> {
        Self::new(DVector::zeros(n), phn_covariance(params, n)?.into_matrix())
    }

    /// Zero-mean `variance·I`; a tiny variance pins θ to zero.
    pub fn isotropic(n: usize, variance: f64) -> Result<Self> {
        Self::new(DVector::zeros(n), DMatrix::identity(n, n) * variance)
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub(crate) fn precision_mean(&self) -> &DVector<f64> {
        &self.precision_mean
    }
}

/// `Q(θ) = N(m_θ, S_θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhnPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl PhnPosterior {
    pub fn zeros(n: usize) -> Self {
        PhnPosterior {
            mean: DVector::zeros(n),
            cov: DMatrix::zeros(n, n),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.cov
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Variational parameters: the phase posterior plus bit means held both as
/// `b̂` and as `t = atanh(b̂)`. Writes go through [`PosteriorState::set_t`] so
/// the two never diverge.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    pub phn: PhnPosterior,
    t: BitMatrix,
    means: BitMatrix,
}

impl PosteriorState {
    pub fn from_t(phn: PhnPosterior, t: BitMatrix) -> Self {
        let t = t.map(|v| v.clamp(-T_LIMIT, T_LIMIT));
        let means = t.map(f64::tanh);
        PosteriorState { phn, t, means }
    }

    pub fn from_means(phn: PhnPosterior, means: &BitMatrix, eps: f64) -> Self {
        Self::from_t(phn, means.map(|b| clamped_atanh(b, eps)))
    }

    pub fn t(&self) -> &BitMatrix {
        &self.t
    }

    pub fn means(&self) -> &BitMatrix {
        &self.means
    }

    pub fn set_t(&mut self, row: usize, col: usize, t: f64) {
        let t = t.clamp(-T_LIMIT, T_LIMIT);
        self.t.set(row, col, t);
        self.means.set(row, col, t.tanh());
    }

    /// Posterior LLRs `2t`.
    pub fn llrs(&self) -> BitMatrix {
        self.t.map(|v| 2.0 * v)
    }
}

/// Everything the free energy depends on apart from the variational state.
#[derive(Debug, Clone, Copy)]
pub struct SymbolModel<'a> {
    pub constellation: Constellation,
    /// Time-domain received vector.
    pub r: &'a [C64],
    /// Channel frequency response.
    pub h: &'a [C64],
    /// σ² per real dimension.
    pub noise_var: f64,
    /// `t_μ = atanh(μ)`, i.e. half the prior LLRs, saturated at `±T_LIMIT`.
    pub prior_t: &'a BitMatrix,
    pub phn_prior: &'a PhnPrior,
}

impl SymbolModel<'_> {
    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.r.len();
        let l = self.constellation.bits_per_symbol();
        if self.h.len() != n || self.prior_t.rows() != n || self.prior_t.cols() != l || self.phn_prior.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "N = {n}: channel {}, priors {}x{}, phase prior {} (L = {l})",
                self.h.len(),
                self.prior_t.rows(),
                self.prior_t.cols(),
                self.phn_prior.n()
            )));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise variance must be > 0, got {}", self.noise_var)));
        }
        Ok(())
    }
}

/// Half-LLRs saturated at `±T_LIMIT`.
pub fn prior_t_from_llrs(llrs: &BitMatrix) -> BitMatrix {
    llrs.map(|l| (0.5 * l).clamp(-T_LIMIT, T_LIMIT))
}
