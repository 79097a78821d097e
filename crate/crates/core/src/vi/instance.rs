//! Self-contained single-symbol detection problems: generated from a seed,
//! or loaded from JSON for replay.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PhnPosterior, PhnPrior, PosteriorState, SymbolModel};
use crate::bits::BitMatrix;
use crate::channel::{apply_impairments, noise_var_for_snr, sample_channel, ChannelProfile, ChannelRealization};
use crate::phn::{sample_phn, PhnParams};
use crate::qam::Constellation;
use crate::seed::stream;
use crate::{Error, Result, C64};

/// One OFDM symbol as seen by the detector, plus the transmitted bits when
/// known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolInstance {
    pub order: usize,
    pub phn: PhnParams,
    /// Time-domain received samples.
    pub r: Vec<C64>,
    pub channel: ChannelRealization,
    pub noise_var: f64,
    /// Row-major `N×L` prior LLRs; empty means uniform.
    #[serde(default)]
    pub prior_llrs: Vec<f64>,
    /// Row-major `N×L` transmitted ±1 bits.
    #[serde(default)]
    pub bits: Option<Vec<f64>>,
}

impl SymbolInstance {
    /// Draws bits, a short Rayleigh channel (`min(N, 4)` taps), an AR(1)
    /// phase sequence and noise, in that order, from `stream(seed)`. With
    /// `with_priors`, half-LLRs are drawn uniformly from (−1, 1) afterwards.
    pub fn generate(seed: u64, n: usize, order: usize, snr_db: f64, phn: PhnParams, with_priors: bool) -> Result<Self> {
        let mut rng = stream(seed);
        let constellation = Constellation::new(order)?;
        let l = constellation.bits_per_symbol();
        let bits: Vec<f64> = (0..n * l).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let d = constellation.map_bits(&BitMatrix::from_vec(n, l, bits.clone())?)?;
        let channel = sample_channel(&ChannelProfile::new(n.min(4), 3.0, n)?, &mut rng)?;
        let theta = sample_phn(&phn, n, &mut rng)?;
        let noise_var = noise_var_for_snr(constellation.mean_energy(), snr_db);
        let rx = apply_impairments(&d, &channel, &theta, noise_var, &mut rng)?;
        let prior_llrs = if with_priors {
            (0..n * l).map(|_| 2.0 * rng.random_range(-1.0..1.0)).collect()
        } else {
            Vec::new()
        };
        Ok(SymbolInstance {
            order,
            phn,
            r: rx.r,
            channel,
            noise_var,
            prior_llrs,
            bits: Some(bits),
        })
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn constellation(&self) -> Result<Constellation> {
        Constellation::new(self.order)
    }

    pub fn prior_llrs(&self) -> Result<BitMatrix> {
        let l = self.constellation()?.bits_per_symbol();
        if self.prior_llrs.is_empty() {
            return Ok(BitMatrix::zeros(self.n(), l));
        }
        BitMatrix::from_vec(self.n(), l, self.prior_llrs.clone())
    }

    pub fn bits(&self) -> Result<Option<BitMatrix>> {
        let l = self.constellation()?.bits_per_symbol();
        self.bits.as_ref().map(|b| BitMatrix::from_vec(self.n(), l, b.clone())).transpose()
    }

    pub fn phn_prior(&self) -> Result<PhnPrior> {
        PhnPrior::from_params(&self.phn, self.n())
    }

    /// Owned pieces from which a [`SymbolModel`] can be borrowed.
    pub fn prepare(&self) -> Result<PreparedInstance<'_>> {
        if self.channel.h.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples but {} channel bins",
                self.n(),
                self.channel.h.len()
            )));
        }
        Ok(PreparedInstance {
            instance: self,
            constellation: self.constellation()?,
            prior_t: super::prior_t_from_llrs(&self.prior_llrs()?),
            prior: self.phn_prior()?,
        })
    }
}

pub struct PreparedInstance<'a> {
    pub instance: &'a SymbolInstance,
    pub constellation: Constellation,
    pub prior_t: BitMatrix,
    pub prior: PhnPrior,
}

impl PreparedInstance<'_> {
    pub fn model(&self) -> SymbolModel<'_> {
        SymbolModel {
            constellation: self.constellation,
            r: &self.instance.r,
            h: &self.instance.channel.h,
            noise_var: self.instance.noise_var,
            prior_t: &self.prior_t,
            phn_prior: &self.prior,
        }
    }

    /// Interior variational state: |b̂| < 0.9, small `m_θ`, and a random SPD
    /// `S_θ` on the 3° scale.
    pub fn random_state(&self, seed: u64) -> PosteriorState {
        let mut rng = stream(seed);
        let n = self.instance.n();
        let l = self.constellation.bits_per_symbol();
        let means = BitMatrix::from_vec(n, l, (0..n * l).map(|_| rng.random_range(-0.9..0.9)).collect())
            .expect("shape matches");
        let scale = 3f64.to_radians();
        let mean = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0) * scale);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0) * scale);
        let cov = (&g * g.transpose()) / n as f64 + DMatrix::identity(n, n) * (0.2 * scale * scale);
        PosteriorState::from_means(PhnPosterior { mean, cov }, &means, 1e-12)
    }
}
