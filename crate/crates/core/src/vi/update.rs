//! Closed-form coordinate updates. Each one is the exact minimizer of the
//! free energy over its block with everything else held fixed, so a sweep
//! never increases `F` (apart from `|t|` saturation).

use nalgebra::{DMatrix, DVector};

use super::energy::signal_statistics;
use super::workspace::BitKernel;
use super::{PosteriorState, SymbolModel};
use crate::bits::T_LIMIT;
use crate::qam::{axis_moment_slope, axis_value_slope, Axis};
use crate::{Error, Result};

/// `S_θ = (φ⁻¹ + σ⁻²·diag(w))⁻¹`, symmetrized. If the sum is not numerically
/// positive definite a ridge of `10⁻¹⁰·tr/N` is added and retried.
pub fn update_s_theta(model: &SymbolModel<'_>, state: &PosteriorState) -> Result<DMatrix<f64>> {
    let n = model.n();
    let (_, w) = signal_statistics(&model.constellation, model.h, state.means());
    let mut precision = model.phn_prior.precision().clone();
    for i in 0..n {
        precision[(i, i)] += w[i] / model.noise_var;
    }
    let chol = match precision.clone().cholesky() {
        Some(c) => c,
        None => {
            let ridge = 1e-10 * precision.trace() / n as f64;
            log::warn!("phase precision not positive definite; adding ridge {ridge:e}");
            (precision + DMatrix::identity(n, n) * ridge)
                .cholesky()
                .ok_or(Error::NotPositiveDefinite("phase posterior precision"))?
        }
    };
    let s = chol.inverse();
    Ok((&s + s.transpose()) * 0.5)
}

/// `m_θ = S_θ·(φ⁻¹μ_θ − σ⁻²·Im(r* ∘ x))` with the current `S_θ`.
pub fn update_m_theta(model: &SymbolModel<'_>, state: &PosteriorState) -> DVector<f64> {
    let (x, _) = signal_statistics(&model.constellation, model.h, state.means());
    let rhs = DVector::from_fn(model.n(), |i, _| {
        model.phn_prior.precision_mean()[i] - (model.r[i].conj() * x[i]).im / model.noise_var
    });
    &state.phn.cov * rhs
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BitUpdateStats {
    /// Rows whose new `t` hit the `±T_LIMIT` clamp.
    pub clamped: usize,
    /// Largest `|Δt|` in the column.
    pub max_change: f64,
    /// Per-row likelihood message `t − t_μ` before clamping; twice this is
    /// the bit's extrinsic LLR.
    pub messages: Vec<f64>,
}

/// Updates axis bit `k` (0-based) on every subcarrier, one row at a time, with
/// `kernel.m0_d` kept current so later rows see earlier ones.
///
/// Real axis: `t = t_μ + σ⁻²[α(Re(Zᴴr)_n − Re(M₁d̂)_n) − ½·δ·M₀,nn]`;
/// imaginary axis: same with `β/j`, `Im` and `Ω`.
pub fn update_bit_column(
    model: &SymbolModel<'_>,
    state: &mut PosteriorState,
    kernel: &mut BitKernel,
    axis: Axis,
    k: usize,
) -> BitUpdateStats {
    let half = model.constellation.bits_per_axis();
    let col = model.constellation.column(axis, k);
    let offset = col - k;
    let mut stats = BitUpdateStats {
        messages: Vec::with_capacity(model.n()),
        ..BitUpdateStats::default()
    };
    for n in 0..model.n() {
        let row = state.means().row(n);
        let bits = &row[offset..offset + half];
        let slope = axis_value_slope(bits, k);
        let moment_slope = axis_moment_slope(bits, k);
        let old_symbol = model.constellation.map_row(row);
        let diag = kernel.m0[(n, n)];
        let cross = kernel.m0_d[n] - diag * old_symbol;
        let field = match axis {
            Axis::Real => slope * (kernel.zhr[n].re - cross.re),
            Axis::Imag => slope * (kernel.zhr[n].im - cross.im),
        };
        let message = (field - 0.5 * moment_slope * diag.re) / model.noise_var;
        stats.messages.push(message);
        let raw = model.prior_t.get(n, col) + message;
        if raw.abs() > T_LIMIT {
            stats.clamped += 1;
        }
        let old_t = state.t().get(n, col);
        state.set_t(n, col, raw);
        stats.max_change = stats.max_change.max((state.t().get(n, col) - old_t).abs());
        let new_symbol = model.constellation.map_row(state.means().row(n));
        kernel.shift_symbol(n, new_symbol - old_symbol);
    }
    stats
}
