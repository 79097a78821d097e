//! Variational free energy `F = E_Q[log Q(B,θ) − log p(B, θ, r)]`, with all
//! normalizing constants kept so that `F ≥ −log p(r)`.

use nalgebra::DVector;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{PhnPosterior, PhnPrior, PosteriorState, SymbolModel};
use crate::bits::{softplus, BitMatrix};
use crate::qam::{axis_second_moment, Constellation};
use crate::{Error, Result, C64};

use super::workspace::forward_apply;

/// The five contributions to `F`, each with the sign it enters the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyTerms {
    /// `−E_Q[log p(B)]`.
    pub bit_prior: f64,
    /// `−E_Q[log p(θ)]`, the phase-consistency statistic `F₂`.
    pub phn_prior: f64,
    /// `E_Q[log Q(B)]` (negative bit entropy).
    pub bit_entropy: f64,
    /// `E_Q[log Q(θ)]` (negative Gaussian entropy).
    pub phn_entropy: f64,
    /// `−E_Q[log p(r | B, θ)]`.
    pub likelihood: f64,
}

impl FreeEnergyTerms {
    pub fn total(&self) -> f64 {
        self.bit_prior + self.phn_prior + self.bit_entropy + self.phn_entropy + self.likelihood
    }
}

/// Noise-free time-domain mean `x = A·f(B̂)` and per-sample second moment
/// `w_n = |x_n|² + (1/N)·Σ_m |h_m|²·var(d_m)`.
pub(crate) fn signal_statistics(constellation: &Constellation, h: &[C64], means: &BitMatrix) -> (Vec<C64>, Vec<f64>) {
    let k = constellation.bits_per_axis();
    let n = h.len();
    let mut d = Vec::with_capacity(n);
    let mut spread = 0.0;
    for (row, hm) in h.iter().enumerate() {
        let bits = means.row(row);
        let sym = constellation.map_row(bits);
        let var = (axis_second_moment(&bits[..k]) + axis_second_moment(&bits[k..]) - sym.norm_sqr()).max(0.0);
        spread += hm.norm_sqr() * var;
        d.push(sym);
    }
    let spread = spread / n as f64;
    let x = forward_apply(h, &d);
    let w = x.iter().map(|v| v.norm_sqr() + spread).collect();
    (x, w)
}

/// `F₂ = ½[tr(φ⁻¹S) + (m − μ)ᵀφ⁻¹(m − μ)] + ½·log((2π)ᴺ|φ|)`.
pub fn f2_term(prior: &PhnPrior, posterior: &PhnPosterior) -> f64 {
    let n = prior.n() as f64;
    let diff: DVector<f64> = &posterior.mean - prior.mean();
    let trace = prior.precision().component_mul(&posterior.cov).sum();
    let quad = diff.dot(&(prior.precision() * &diff));
    0.5 * (trace + quad) + 0.5 * (n * (2.0 * std::f64::consts::PI).ln() + prior.log_det())
}

/// Default guard: `½·log((2π)ᴺ|φ|) + ½·χ²_N(0.999) + ½·N`.
pub fn default_f2_threshold(prior: &PhnPrior) -> f64 {
    let n = prior.n() as f64;
    let q = ChiSquared::new(n).expect("positive degrees of freedom").inverse_cdf(0.999);
    0.5 * (n * (2.0 * std::f64::consts::PI).ln() + prior.log_det()) + 0.5 * q + 0.5 * n
}

pub fn free_energy(model: &SymbolModel<'_>, state: &PosteriorState) -> Result<FreeEnergyTerms> {
    model.validate()?;
    let n = model.n();
    let nf = n as f64;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut bit_prior = 0.0;
    let mut bit_entropy = 0.0;
    for (&tp, &t) in model.prior_t.as_slice().iter().zip(state.t().as_slice()) {
        let (lp, lq) = (2.0 * tp, 2.0 * t);
        let (q_pos, q_neg) = (0.5 * (1.0 + t.tanh()), 0.5 * (1.0 - t.tanh()));
        bit_prior += q_pos * softplus(-lp) + q_neg * softplus(lp);
        bit_entropy -= q_pos * softplus(-lq) + q_neg * softplus(lq);
    }

    let phn_prior = f2_term(model.phn_prior, &state.phn);

    let chol = state
        .phn
        .cov
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("phase posterior covariance"))?;
    let log_det_s = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let phn_entropy = -0.5 * log_det_s - 0.5 * nf * (1.0 + two_pi.ln());

    // E‖r − diag(1 + jθ)·A·d‖² = Σ_n |r_n|² − 2Re(r_n*(1 + j m_n) x_n) + (1 + m_n² + S_nn)·w_n.
    let (x, w) = signal_statistics(&model.constellation, model.h, state.means());
    let m = &state.phn.mean;
    let mut sq = 0.0;
    for i in 0..n {
        let u = C64::new(1.0, m[i]);
        sq += model.r[i].norm_sqr() - 2.0 * (model.r[i].conj() * u * x[i]).re
            + (1.0 + m[i] * m[i] + state.phn.cov[(i, i)]) * w[i];
    }
    let likelihood = nf * (two_pi * model.noise_var).ln() + sq / (2.0 * model.noise_var);

    Ok(FreeEnergyTerms {
        bit_prior,
        phn_prior,
        bit_entropy,
        phn_entropy,
        likelihood,
    })
}
