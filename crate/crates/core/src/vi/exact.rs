//! Ground truth for small instances by enumerating every bit matrix.
//!
//! Under the small-angle model `r = x + jθ∘x + n` with `θ ~ N(μ, φ)` real,
//! `θ` integrates out in closed form, but only in real coordinates: stacking
//! `(Re r, Im r)` gives a 2N-dimensional Gaussian with mean
//! `(Re x − Im x∘μ, Im x + Re x∘μ)` and covariance `σ²I + GφGᵀ`,
//! `G = [diag(−Im x); diag(Re x)]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::workspace::forward_apply;
use super::SymbolModel;
use crate::bits::{softplus, BitMatrix};
use crate::{Error, Result};

/// Largest `N·L` the oracle will enumerate.
pub const ENUMERATION_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPosterior {
    /// Posterior LLRs `log P(b=+1|r) − log P(b=−1|r)` (prior included).
    pub llrs: BitMatrix,
    /// `P(b=+1|r) − P(b=−1|r)`.
    pub means: BitMatrix,
    /// Bitwise MAP decisions.
    pub map_bits: BitMatrix,
    /// Jointly most probable bit matrix.
    pub joint_map: BitMatrix,
    /// `log p(r)` with the bit priors of the model.
    pub log_evidence: f64,
}

fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log p(r | B)` with θ marginalized.
pub(crate) fn log_likelihood(model: &SymbolModel<'_>, bits: &BitMatrix) -> Result<f64> {
    let n = model.n();
    let d = model.constellation.map_bits(bits)?;
    let x = forward_apply(model.h, &d);
    let mu = model.phn_prior.mean();
    let mut g = DMatrix::zeros(2 * n, n);
    let mut resid = DVector::zeros(2 * n);
    for i in 0..n {
        g[(i, i)] = -x[i].im;
        g[(n + i, i)] = x[i].re;
        resid[i] = model.r[i].re - (x[i].re - x[i].im * mu[i]);
        resid[n + i] = model.r[i].im - (x[i].im + x[i].re * mu[i]);
    }
    let mut cov = &g * model.phn_prior.cov() * g.transpose();
    for i in 0..2 * n {
        cov[(i, i)] += model.noise_var;
    }
    let chol = cov.cholesky().ok_or(Error::NotPositiveDefinite("marginal covariance"))?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let white = chol.l().solve_lower_triangular(&resid).expect("triangular factor is invertible");
    Ok(-0.5 * (2.0 * n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + white.norm_squared()))
}

/// Enumerates all `2^{NL}` bit matrices under the model's bit and phase
/// priors. Refuses instances with `N·L > ENUMERATION_LIMIT`.
pub fn exact_posterior_oracle(model: &SymbolModel<'_>) -> Result<ExactPosterior> {
    model.validate()?;
    let n = model.n();
    let l = model.constellation.bits_per_symbol();
    let total_bits = n * l;
    if total_bits > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            bits: total_bits,
            limit: ENUMERATION_LIMIT,
        });
    }
    let configs = 1usize << total_bits;
    let mut log_joint = Vec::with_capacity(configs);
    let mut bits = BitMatrix::zeros(n, l);
    for idx in 0..configs {
        let mut log_prior = 0.0;
        for pos in 0..total_bits {
            let b = if idx >> pos & 1 == 1 { -1.0 } else { 1.0 };
            bits.set(pos / l, pos % l, b);
            log_prior -= softplus(-2.0 * b * model.prior_t.get(pos / l, pos % l));
        }
        log_joint.push(log_prior + log_likelihood(model, &bits)?);
    }
    let log_evidence = logsumexp(&log_joint);

    let mut llrs = BitMatrix::zeros(n, l);
    let mut means = BitMatrix::zeros(n, l);
    let mut plus = Vec::with_capacity(configs / 2);
    let mut minus = Vec::with_capacity(configs / 2);
    for pos in 0..total_bits {
        plus.clear();
        minus.clear();
        for (idx, &v) in log_joint.iter().enumerate() {
            if idx >> pos & 1 == 1 {
                minus.push(v);
            } else {
                plus.push(v);
            }
        }
        let (lp, lm) = (logsumexp(&plus), logsumexp(&minus));
        llrs.set(pos / l, pos % l, lp - lm);
        means.set(pos / l, pos % l, ((lp - lm) / 2.0).tanh());
    }
    let best = log_joint
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least one configuration");
    let joint_map = BitMatrix::from_vec(
        n,
        l,
        (0..total_bits).map(|pos| if best >> pos & 1 == 1 { -1.0 } else { 1.0 }).collect(),
    )?;
    Ok(ExactPosterior {
        map_bits: llrs.hard_decisions(),
        llrs,
        means,
        joint_map,
        log_evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::Instance;
    use super::super::{free_energy, PhnPrior, PosteriorState};
    use super::*;
    use crate::channel::dft;
    use crate::qam::demap_soft;
    use crate::C64;

    /// Gauss–Hermite nodes and weights for `∫ e^{-x²} f(x) dx` (Golub–Welsch).
    fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                ((i.max(j)) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = jacobi.symmetric_eigen();
        let weights = (0..order)
            .map(|k| std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, k)].powi(2))
            .collect();
        (eig.eigenvalues.iter().copied().collect(), weights)
    }

    /// `log p(r | B, θ)` under the linearized model at a fixed θ.
    fn conditional(model: &SymbolModel<'_>, bits: &BitMatrix, theta: &[f64]) -> f64 {
        let d = model.constellation.map_bits(bits).unwrap();
        let x = forward_apply(model.h, &d);
        let n = model.n() as f64;
        let sq: f64 = (0..model.n())
            .map(|i| (model.r[i] - C64::new(1.0, theta[i]) * x[i]).norm_sqr())
            .sum();
        -n * (2.0 * std::f64::consts::PI * model.noise_var).ln() - sq / (2.0 * model.noise_var)
    }

    /// `log p(r | B)` by 2-D Gauss–Hermite over the whitened prior.
    fn quadrature_likelihood(model: &SymbolModel<'_>, bits: &BitMatrix, order: usize) -> f64 {
        assert_eq!(model.n(), 2);
        let (nodes, weights) = gauss_hermite(order);
        let l = model.phn_prior.cov().clone().cholesky().unwrap().l();
        let mu = model.phn_prior.mean();
        let mut terms = Vec::new();
        for (a, wa) in nodes.iter().zip(&weights) {
            for (b, wb) in nodes.iter().zip(&weights) {
                let z = DVector::from_vec(vec![a * 2f64.sqrt(), b * 2f64.sqrt()]);
                let theta = mu + &l * z;
                terms.push((wa * wb / std::f64::consts::PI).ln() + conditional(model, bits, theta.as_slice()));
            }
        }
        logsumexp(&terms)
    }

    #[test]
    fn gauss_hermite_integrates_moments() {
        let (x, w) = gauss_hermite(20);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for seed in 0..3 {
            let inst = Instance::new(seed, 2, 4, 10.0, true);
            // Inflate the phase prior so θ matters.
            let prior = PhnPrior::new(DVector::from_vec(vec![0.05, -0.02]), inst.prior.cov() * 25.0).unwrap();
            let model = SymbolModel { phn_prior: &prior, ..inst.model() };
            let mut bits = BitMatrix::zeros(2, 2);
            for idx in 0..16usize {
                for pos in 0..4 {
                    bits.set(pos / 2, pos % 2, if idx >> pos & 1 == 1 { -1.0 } else { 1.0 });
                }
                let exact = log_likelihood(&model, &bits).unwrap();
                let quad = quadrature_likelihood(&model, &bits, 40);
                assert!((exact - quad).abs() < 1e-4 * exact.abs().max(1.0), "{exact} vs {quad}");
            }
        }
    }

    #[test]
    fn marginals_are_normalized_probabilities() {
        let inst = Instance::new(4, 3, 16, 12.0, true);
        let post = exact_posterior_oracle(&inst.model()).unwrap();
        for &m in post.means.as_slice() {
            let (p, q) = ((1.0 + m) / 2.0, (1.0 - m) / 2.0);
            assert!((0.0..=1.0).contains(&p));
            assert!((p + q - 1.0).abs() < 1e-12);
        }
        assert_eq!(post.map_bits, post.llrs.hard_decisions());
    }

    #[test]
    fn vanishing_phase_prior_gives_the_demapper() {
        for seed in 0..3 {
            let inst = Instance::new(10 + seed, 3, 16, 8.0, true);
            let prior = PhnPrior::isotropic(3, 1e-24).unwrap();
            let model = SymbolModel { phn_prior: &prior, ..inst.model() };
            let post = exact_posterior_oracle(&model).unwrap();
            let priors = inst.prior_t.map(|t| 2.0 * t);
            let ext = demap_soft(&inst.constellation, &dft(&inst.r), &inst.channel.h, inst.noise_var, &priors).unwrap();
            for (i, (a, b)) in post.llrs.as_slice().iter().zip(ext.as_slice()).enumerate() {
                let full = b + priors.as_slice()[i];
                assert!((a - full).abs() < 1e-8, "{a} vs {full}");
            }
        }
    }

    #[test]
    fn free_energy_bounds_the_evidence() {
        for seed in 0..5 {
            let inst = Instance::new(20 + seed, 2, 16, 10.0, true);
            let model = inst.model();
            let exact = exact_posterior_oracle(&model).unwrap();
            for s in 0..5 {
                let state: PosteriorState = inst.random_state(100 * seed + s);
                let f = free_energy(&model, &state).unwrap().total();
                assert!(f >= -exact.log_evidence - 1e-9, "F = {f}, -log p(r) = {}", -exact.log_evidence);
            }
        }
    }

    #[test]
    fn free_energy_matches_enumeration_and_quadrature() {
        // F = Σ_B Q(B)[log Q(B) − log p(B)] + KL-free Gaussian parts − E_Q log p(r|B,θ),
        // with the last expectation by Gauss–Hermite over Q(θ) (exact: degree 2 in θ).
        let (nodes, weights) = gauss_hermite(6);
        for seed in 0..3 {
            let inst = Instance::new(30 + seed, 2, 16, 10.0, true);
            let model = inst.model();
            let state = inst.random_state(40 + seed);
            let l = state.phn.cov.clone().cholesky().unwrap().l();
            let mut bit_part = 0.0;
            let mut lik = 0.0;
            let mut bits = BitMatrix::zeros(2, 4);
            for idx in 0..256usize {
                let mut log_q = 0.0;
                let mut log_p = 0.0;
                for pos in 0..8 {
                    let b = if idx >> pos & 1 == 1 { -1.0 } else { 1.0 };
                    bits.set(pos / 4, pos % 4, b);
                    log_q -= softplus(-2.0 * b * state.t().get(pos / 4, pos % 4));
                    log_p -= softplus(-2.0 * b * model.prior_t.get(pos / 4, pos % 4));
                }
                let q = log_q.exp();
                bit_part += q * (log_q - log_p);
                let mut e = 0.0;
                for (a, wa) in nodes.iter().zip(&weights) {
                    for (b, wb) in nodes.iter().zip(&weights) {
                        let z = DVector::from_vec(vec![a * 2f64.sqrt(), b * 2f64.sqrt()]);
                        let theta = &state.phn.mean + &l * z;
                        e += wa * wb / std::f64::consts::PI * conditional(&model, &bits, theta.as_slice());
                    }
                }
                lik -= q * e;
            }
            let terms = free_energy(&model, &state).unwrap();
            let gaussian = terms.phn_prior + terms.phn_entropy;
            let independent = bit_part + gaussian + lik;
            assert!((terms.bit_prior + terms.bit_entropy - bit_part).abs() < 1e-10);
            assert!((terms.likelihood - lik).abs() < 1e-8 * lik.abs(), "{} vs {lik}", terms.likelihood);
            assert!((terms.total() - independent).abs() < 1e-8 * independent.abs());
        }
    }

    #[test]
    fn refuses_large_instances() {
        let inst = Instance::new(1, 4, 16, 10.0, false);
        assert!(matches!(exact_posterior_oracle(&inst.model()), Err(Error::TooLarge { bits: 16, .. })));
    }
}
