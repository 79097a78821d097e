//! Analytic gradients of the free energy and a central-difference checker.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::energy::{free_energy, signal_statistics};
use super::workspace::BitKernel;
use super::{PosteriorState, SymbolModel};
use crate::bits::BitMatrix;
use crate::qam::{axis_moment_slope, axis_value_slope, Axis};
use crate::{Error, Result, C64};

/// Which expectation pairing the bit gradient uses. `Swapped` puts the
/// diagonal of `M₀` on the mean quadratic form and the off-diagonal part on
/// the second moments; it is wrong and exists as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Correct,
    Swapped,
}

/// `∂F/∂m_θ = φ⁻¹(m − μ) + σ⁻²[Im(r* ∘ x) + w ∘ m]`.
pub fn grad_m_theta(model: &SymbolModel<'_>, state: &PosteriorState) -> DVector<f64> {
    let (x, w) = signal_statistics(&model.constellation, model.h, state.means());
    let m = &state.phn.mean;
    let prior = model.phn_prior.precision() * (m - model.phn_prior.mean());
    DVector::from_fn(model.n(), |i, _| {
        prior[i] + ((model.r[i].conj() * x[i]).im + w[i] * m[i]) / model.noise_var
    })
}

/// Gradient with respect to the posterior precision `P = S_θ⁻¹`:
/// `−S·(½φ⁻¹ − ½P + σ⁻²·diag(w)/2)·S`.
pub fn grad_precision(model: &SymbolModel<'_>, state: &PosteriorState) -> DMatrix<f64> {
    let s = &state.phn.cov;
    let n = model.n();
    let (_, w) = signal_statistics(&model.constellation, model.h, state.means());
    let p = s.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
    let mut gs = (model.phn_prior.precision() - &p) * 0.5;
    for i in 0..n {
        gs[(i, i)] += 0.5 * w[i] / model.noise_var;
    }
    -(s * gs * s)
}

/// `∂F/∂t` for every bit, `t = atanh(b̂)`.
pub fn grad_bits(model: &SymbolModel<'_>, state: &PosteriorState, pairing: Pairing) -> BitMatrix {
    let kernel = BitKernel::new(model, state);
    let n = model.n();
    let half = model.constellation.bits_per_axis();
    let symbols = model.constellation.map_bits(state.means()).expect("state matches constellation");
    let row_sums: Vec<C64> = (0..n)
        .map(|c| (0..n).filter(|&r| r != c).map(|r| kernel.m0[(r, c)]).sum())
        .collect();
    let mut out = BitMatrix::zeros(n, 2 * half);
    for axis in [Axis::Real, Axis::Imag] {
        for k in 0..half {
            let col = model.constellation.column(axis, k);
            let offset = col - k;
            for i in 0..n {
                let bits = &state.means().row(i)[offset..offset + half];
                let slope = axis_value_slope(bits, k);
                let moment_slope = axis_moment_slope(bits, k);
                let diag = kernel.m0[(i, i)];
                let (quad, second) = match pairing {
                    Pairing::Correct => (kernel.m0_d[i] - diag * symbols[i], diag.re),
                    Pairing::Swapped => (diag * symbols[i], row_sums[i].re),
                };
                let project = |z: C64| if axis == Axis::Real { z.re } else { z.im };
                let lik = (-2.0 * slope * project(kernel.zhr[i]) + 2.0 * slope * project(quad) + moment_slope * second)
                    / (2.0 * model.noise_var);
                let b = state.means().get(i, col);
                let g = state.t().get(i, col) - model.prior_t.get(i, col) + lik;
                out.set(i, col, (1.0 - b * b) * g);
            }
        }
    }
    out
}

/// `‖analytic − fd‖∞ / ‖analytic‖∞` together with the absolute gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockError {
    pub max_abs: f64,
    pub scale: f64,
    pub relative: f64,
}

impl BlockError {
    fn between(analytic: &[f64], numeric: &[f64]) -> Self {
        let max_abs = analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = analytic.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let relative = if scale > 0.0 {
            max_abs / scale
        } else if max_abs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        BlockError {
            max_abs,
            scale,
            relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub pairing: Pairing,
    pub m_theta: BlockError,
    pub precision: BlockError,
    /// One entry per bit column, in column order.
    pub bits: Vec<BlockError>,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.bits
            .iter()
            .chain([&self.m_theta, &self.precision])
            .map(|b| b.relative)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst() <= tolerance
    }
}

fn total(model: &SymbolModel<'_>, state: &PosteriorState) -> Result<f64> {
    Ok(free_energy(model, state)?.total())
}

/// Compares every analytic block with central differences of the free
/// energy at `state`, which must be an interior point with `S_θ` SPD.
pub fn gradient_check(model: &SymbolModel<'_>, state: &PosteriorState, pairing: Pairing) -> Result<GradCheckReport> {
    let n = model.n();
    total(model, state)?;

    let analytic = grad_m_theta(model, state);
    let step_m = 1e-3;
    let mut numeric = Vec::with_capacity(n);
    for i in 0..n {
        let mut plus = state.clone();
        plus.phn.mean[i] += step_m;
        let mut minus = state.clone();
        minus.phn.mean[i] -= step_m;
        numeric.push((total(model, &plus)? - total(model, &minus)?) / (2.0 * step_m));
    }
    let m_theta = BlockError::between(analytic.as_slice(), &numeric);

    let precision = state
        .phn
        .cov
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite("phase posterior covariance"))?;
    let g = grad_precision(model, state);
    let step_p = 1e-5 * precision.amax();
    let mut a = Vec::new();
    let mut numeric = Vec::new();
    let at = |p: &DMatrix<f64>| -> Result<f64> {
        let mut s = state.clone();
        let cov = p.clone().try_inverse().ok_or(Error::NotPositiveDefinite("perturbed precision"))?;
        s.phn.cov = (&cov + cov.transpose()) * 0.5;
        total(model, &s)
    };
    for i in 0..n {
        for j in i..n {
            let mut plus = precision.clone();
            let mut minus = precision.clone();
            plus[(i, j)] += step_p;
            minus[(i, j)] -= step_p;
            if i != j {
                plus[(j, i)] += step_p;
                minus[(j, i)] -= step_p;
            }
            numeric.push((at(&plus)? - at(&minus)?) / (2.0 * step_p));
            a.push(if i == j { g[(i, j)] } else { g[(i, j)] + g[(j, i)] });
        }
    }
    let precision = BlockError::between(&a, &numeric);

    let analytic = grad_bits(model, state, pairing);
    let step_t = 1e-5;
    let mut bits = Vec::with_capacity(analytic.cols());
    for col in 0..analytic.cols() {
        let mut numeric = Vec::with_capacity(n);
        for i in 0..n {
            let t = state.t().get(i, col);
            let mut plus = state.clone();
            plus.set_t(i, col, t + step_t);
            let mut minus = state.clone();
            minus.set_t(i, col, t - step_t);
            numeric.push((total(model, &plus)? - total(model, &minus)?) / (2.0 * step_t));
        }
        bits.push(BlockError::between(&analytic.column(col), &numeric));
    }

    Ok(GradCheckReport {
        pairing,
        m_theta,
        precision,
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::Instance;
    use super::*;

    #[test]
    fn analytic_matches_finite_differences() {
        for seed in 0..4 {
            let inst = Instance::new(seed, 8, 16, 15.0, true);
            let report = gradient_check(&inst.model(), &inst.random_state(50 + seed), Pairing::Correct).unwrap();
            assert!(report.passes(1e-6), "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn swapped_pairing_is_caught() {
        let inst = Instance::new(9, 8, 16, 15.0, true);
        let report = gradient_check(&inst.model(), &inst.random_state(10), Pairing::Swapped).unwrap();
        assert!(!report.passes(1e-6));
        assert!(report.bits.iter().any(|b| b.relative > 1e-2));
        assert!(report.m_theta.relative <= 1e-6);
    }

    #[test]
    fn quadratic_block_is_tight() {
        let inst = Instance::new(11, 8, 4, 15.0, false);
        let mut state = inst.random_state(12);
        let hard = inst.bits.clone();
        state = PosteriorState::from_means(state.phn.clone(), &hard.map(|b| 0.999 * b), 1e-12);
        let report = gradient_check(&inst.model(), &state, Pairing::Correct).unwrap();
        assert!(report.m_theta.relative <= 1e-10, "{:?}", report.m_theta);
    }

    #[test]
    fn larger_constellations_check_out() {
        for (order, seed) in [(4, 20), (64, 21), (256, 22)] {
            let inst = Instance::new(seed, 8, order, 18.0, true);
            let report = gradient_check(&inst.model(), &inst.random_state(seed + 1), Pairing::Correct).unwrap();
            assert!(report.passes(1e-6), "{order}-QAM: {report:?}");
        }
    }
}
