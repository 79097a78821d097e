//! Matrices derived from the phase posterior.
//!
//! With `A = Fᴴ·diag(h)`, every matrix of the form `Aᴴ·diag(g)·A` is a
//! circulant `C_{(k−l) mod N}` scaled by `h_k*·h_l`, where `C = N^{-1}·DFT(g)`.
//! That gives `Ψ` (g = diag S_θ), `ZᴴZ` (g = 1 + m_θ²) and `M₀` in O(N²).

use nalgebra::{DMatrix, DVector};

use super::{PosteriorState, SymbolModel};
use crate::channel::{dft, idft};
use crate::C64;

/// `Aᴴ·diag(g)·A` via the circulant structure.
pub(crate) fn weighted_gram(h: &[C64], g: &[f64]) -> DMatrix<C64> {
    let n = h.len();
    let gc: Vec<C64> = g.iter().map(|&v| C64::new(v, 0.0)).collect();
    let scale = 1.0 / (n as f64).sqrt();
    let circ: Vec<C64> = dft(&gc).into_iter().map(|v| v * scale).collect();
    DMatrix::from_fn(n, n, |k, l| h[k].conj() * h[l] * circ[(k + n - l) % n])
}

/// `Aᴴ·y = conj(h) ∘ F·y`.
pub(crate) fn adjoint_apply(h: &[C64], y: &[C64]) -> Vec<C64> {
    dft(y).into_iter().zip(h).map(|(v, hk)| hk.conj() * v).collect()
}

/// `A·d = Fᴴ(h ∘ d)`.
pub(crate) fn forward_apply(h: &[C64], d: &[C64]) -> Vec<C64> {
    let hd: Vec<C64> = h.iter().zip(d).map(|(a, b)| a * b).collect();
    idft(&hd)
}

/// Full set of derived matrices for one state.
#[derive(Debug, Clone)]
pub struct Workspace {
    /// `Z = diag(1 + j·m_θ)·Fᴴ·H`.
    pub z: DMatrix<C64>,
    /// `Ψ = Hᴴ·F·diag(S_θ)·Fᴴ·H`, keeping only the diagonal of `S_θ`.
    pub psi: DMatrix<C64>,
    /// `M₀ = Ψ + ZᴴZ`.
    pub m0: DMatrix<C64>,
    /// Diagonal of `X_m = diag(Fᴴ·H·f(B̂))`.
    pub x_m: Vec<C64>,
}

impl Workspace {
    /// Off-diagonal part of `M₀`.
    pub fn m1(&self) -> DMatrix<C64> {
        let mut m = self.m0.clone();
        m.fill_diagonal(C64::new(0.0, 0.0));
        m
    }

    /// Diagonal part of `M₀`.
    pub fn m2(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&self.m0.diagonal())
    }
}

pub fn assemble_workspace(model: &SymbolModel<'_>, state: &PosteriorState) -> Workspace {
    let n = model.n();
    let m = &state.phn.mean;
    let a = DMatrix::from_fn(n, n, |row, col| {
        let arg = 2.0 * std::f64::consts::PI * (row * col) as f64 / n as f64;
        C64::from_polar(1.0 / (n as f64).sqrt(), arg) * model.h[col]
    });
    let z = DMatrix::from_fn(n, n, |row, col| C64::new(1.0, m[row]) * a[(row, col)]);
    let s_diag: Vec<f64> = state.phn.cov.diagonal().iter().copied().collect();
    let psi = weighted_gram(model.h, &s_diag);
    let m0 = &psi + z.adjoint() * &z;
    let d = model.constellation.map_bits(state.means()).expect("state matches constellation");
    Workspace {
        z,
        psi,
        m0,
        x_m: forward_apply(model.h, &d),
    }
}

/// What the bit updates need: `M₀`, `Zᴴr` and the running product `M₀·d̂`.
#[derive(Debug, Clone)]
pub struct BitKernel {
    pub m0: DMatrix<C64>,
    pub zhr: Vec<C64>,
    pub m0_d: DVector<C64>,
}

impl BitKernel {
    pub fn new(model: &SymbolModel<'_>, state: &PosteriorState) -> Self {
        let m = &state.phn.mean;
        let g: Vec<f64> = (0..model.n())
            .map(|i| 1.0 + m[i] * m[i] + state.phn.cov[(i, i)])
            .collect();
        let m0 = weighted_gram(model.h, &g);
        let rot: Vec<C64> = model
            .r
            .iter()
            .zip(m.iter())
            .map(|(r, &mi)| C64::new(1.0, -mi) * r)
            .collect();
        let zhr = adjoint_apply(model.h, &rot);
        let d = DVector::from_vec(model.constellation.map_bits(state.means()).expect("state matches constellation"));
        let m0_d = &m0 * d;
        BitKernel { m0, zhr, m0_d }
    }

    /// `M₀·d̂ += M₀[:, n]·Δ` after symbol `n` moved by `Δ`.
    pub(crate) fn shift_symbol(&mut self, n: usize, delta: C64) {
        if delta == C64::new(0.0, 0.0) {
            return;
        }
        let col = self.m0.column(n);
        self.m0_d.axpy(delta, &col, C64::new(1.0, 0.0));
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::Instance;
    use super::super::PhnPosterior;
    use super::*;

    #[test]
    fn zero_phase_posterior_gives_channel_gram() {
        let inst = Instance::new(1, 8, 16, 15.0, false);
        let model = inst.model();
        let mut state = inst.random_state(2);
        state.phn = PhnPosterior::zeros(8);
        let ws = assemble_workspace(&model, &state);
        assert!(ws.psi.iter().all(|v| v.norm() < 1e-15));
        let m1 = ws.m1();
        assert!(m1.iter().all(|v| v.norm() < 1e-12), "M1 should vanish without phase noise");
        for k in 0..8 {
            assert!((ws.m0[(k, k)].re - inst.channel.h[k].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn m0_splits_exactly() {
        let inst = Instance::new(3, 8, 16, 15.0, false);
        let ws = assemble_workspace(&inst.model(), &inst.random_state(4));
        assert_eq!(ws.m1() + ws.m2(), ws.m0);
        assert!(ws.m1().diagonal().iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn psi_matches_dense_triple_product() {
        let inst = Instance::new(5, 8, 16, 15.0, false);
        let model = inst.model();
        let state = inst.random_state(6);
        let ws = assemble_workspace(&model, &state);
        let n = 8;
        let f = DMatrix::from_fn(n, n, |l, m| {
            C64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * std::f64::consts::PI * (l * m) as f64 / n as f64)
        });
        let h = DMatrix::from_diagonal(&DVector::from_column_slice(model.h));
        let s = DMatrix::from_diagonal(&state.phn.cov.diagonal().map(|v| C64::new(v, 0.0)));
        let dense = h.adjoint() * &f * s * f.adjoint() * &h;
        let scale = dense.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((&ws.psi - &dense).iter().all(|v| v.norm() < 1e-10 * scale));
        // Ψ is Hermitian PSD.
        assert!((&ws.psi - ws.psi.adjoint()).iter().all(|v| v.norm() < 1e-12 * scale));
        let herm = (&ws.psi + ws.psi.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::linalg::SymmetricEigen::new(herm).eigenvalues;
        assert!(eig.iter().all(|&v| v > -1e-12 * scale));
        // The kernel's circulant M₀ agrees with the dense one.
        let kernel = BitKernel::new(&model, &state);
        assert!((&kernel.m0 - &ws.m0).iter().all(|v| v.norm() < 1e-10 * scale));
        let zhr = ws.z.adjoint() * DVector::from_column_slice(model.r);
        assert!(zhr.iter().zip(&kernel.zhr).all(|(a, b)| (a - b).norm() < 1e-10));
    }
}
