//! The detector loop: initialize from the bit priors, run a fixed number of
//! sweeps (`S_θ`, `m_θ`, then bit columns from the most significant down,
//! real before imaginary), and fall back to a phase-blind demapper when the
//! phase posterior has drifted implausibly far from its prior.

use serde::{Deserialize, Serialize};

use super::energy::{default_f2_threshold, f2_term, free_energy, FreeEnergyTerms};
use super::update::{update_bit_column, update_m_theta, update_s_theta};
use super::workspace::BitKernel;
use super::{prior_t_from_llrs, PhnPosterior, PhnPrior, PosteriorState, SymbolModel};
use crate::bits::{BitMatrix, LLR_LIMIT};
use crate::channel::dft;
use crate::qam::{demap_soft, Axis, Constellation};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub num_iter: usize,
    /// Fallback threshold on `F₂`; `None` uses [`default_f2_threshold`].
    pub f2_threshold: Option<f64>,
    pub clamp_eps: f64,
    /// Record `F` after every step.
    pub trace: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            num_iter: 5,
            f2_threshold: None,
            clamp_eps: 1e-12,
            trace: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_iter == 0 {
            return Err(Error::InvalidParameter("detector needs at least one sweep".into()));
        }
        if let Some(t) = self.f2_threshold {
            if !t.is_finite() {
                return Err(Error::InvalidParameter(format!("F2 threshold must be finite, got {t}")));
            }
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::InvalidParameter(format!("clamp_eps out of range: {}", self.clamp_eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Init,
    STheta,
    MTheta,
    Bits { axis: Axis, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sweep: usize,
    pub step: Step,
    /// `None` while `S_θ` is still singular (before the first `S_θ` update).
    pub free_energy: Option<f64>,
    pub terms: Option<[f64; 5]>,
    pub m_norm: f64,
    pub min_eig: f64,
    /// Rows that hit the `|t|` clamp in this step.
    pub clamped: usize,
}

impl TraceRecord {
    pub const CSV_HEADER: &'static str = "sweep,step,free_energy,bit_prior,phn_prior,bit_entropy,phn_entropy,likelihood,m_norm,min_eig,clamped";

    pub fn csv_line(&self) -> String {
        let step = match self.step {
            Step::Init => "init".to_string(),
            Step::STheta => "s_theta".to_string(),
            Step::MTheta => "m_theta".to_string(),
            Step::Bits { axis, k } => format!("{}{}", if axis == Axis::Real { "re" } else { "im" }, k),
        };
        let f = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.16e}"));
        let terms = self.terms.map_or([None; 5], |t| t.map(Some));
        format!(
            "{},{},{},{},{},{},{},{},{:.16e},{:.16e},{}",
            self.sweep,
            step,
            f(self.free_energy),
            f(terms[0]),
            f(terms[1]),
            f(terms[2]),
            f(terms[3]),
            f(terms[4]),
            self.m_norm,
            self.min_eig,
            self.clamped
        )
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    /// Extrinsic LLRs: twice each bit's last likelihood message (`t − t_μ`
    /// before the `±T_LIMIT` clamp), or the demapper's extrinsics on fallback.
    pub extrinsic: BitMatrix,
    pub phn: PhnPosterior,
    pub fell_back: bool,
    pub f2: f64,
    pub clamp_events: usize,
    pub trace: Vec<TraceRecord>,
}

/// A configured detector for one constellation, block length and phase prior.
#[derive(Debug, Clone)]
pub struct Detector {
    constellation: Constellation,
    prior: PhnPrior,
    config: DetectorConfig,
    threshold: f64,
}

impl Detector {
    pub fn new(constellation: Constellation, prior: PhnPrior, config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let threshold = config.f2_threshold.unwrap_or_else(|| default_f2_threshold(&prior));
        Ok(Detector {
            constellation,
            prior,
            config,
            threshold,
        })
    }

    pub fn constellation(&self) -> Constellation {
        self.constellation
    }

    pub fn prior(&self) -> &PhnPrior {
        &self.prior
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// One OFDM symbol: `r` in the time domain, `h` the channel response,
    /// `prior_llrs` the N×L bit priors.
    ///
    /// The phase posterior always starts at `m = 0, S = 0`. Both of its
    /// updates depend only on the bit means, so a warm start from an earlier
    /// call would be overwritten by the first sweep anyway.
    pub fn detect(
        &self,
        r: &[C64],
        h: &[C64],
        noise_var: f64,
        prior_llrs: &BitMatrix,
    ) -> Result<Detection> {
        if prior_llrs.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("prior LLRs must be finite".into()));
        }
        let prior_t = prior_t_from_llrs(prior_llrs);
        let model = SymbolModel {
            constellation: self.constellation,
            r,
            h,
            noise_var,
            prior_t: &prior_t,
            phn_prior: &self.prior,
        };
        model.validate()?;
        let mut state = PosteriorState::from_t(PhnPosterior::zeros(model.n()), prior_t.clone());
        let mut trace = Vec::new();
        let mut clamp_events = 0;
        // Unclamped messages, so a saturated prior does not mask the evidence.
        let mut messages = BitMatrix::zeros(model.n(), self.constellation.bits_per_symbol());
        let record = |trace: &mut Vec<TraceRecord>, state: &PosteriorState, sweep, step, clamped| {
            if self.config.trace {
                trace.push(trace_record(&model, state, sweep, step, clamped));
            }
        };
        record(&mut trace, &state, 0, Step::Init, 0);

        let half = self.constellation.bits_per_axis();
        for sweep in 1..=self.config.num_iter {
            state.phn.cov = update_s_theta(&model, &state)?;
            record(&mut trace, &state, sweep, Step::STheta, 0);
            state.phn.mean = update_m_theta(&model, &state);
            record(&mut trace, &state, sweep, Step::MTheta, 0);
            let mut kernel = BitKernel::new(&model, &state);
            for k in (0..half).rev() {
                for axis in [Axis::Real, Axis::Imag] {
                    let stats = update_bit_column(&model, &mut state, &mut kernel, axis, k);
                    if stats.clamped > 0 {
                        log::debug!("sweep {sweep}: {} rows clamped at |t| limit", stats.clamped);
                    }
                    clamp_events += stats.clamped;
                    let col = self.constellation.column(axis, k);
                    for (row, m) in stats.messages.iter().enumerate() {
                        messages.set(row, col, *m);
                    }
                    record(&mut trace, &state, sweep, Step::Bits { axis, k }, stats.clamped);
                }
            }
        }

        let f2 = f2_term(&self.prior, &state.phn);
        if f2 > self.threshold {
            log::debug!("F2 = {f2:.3} above threshold {:.3}; falling back", self.threshold);
            let extrinsic = demap_soft(&self.constellation, &dft(r), h, noise_var, prior_llrs)?;
            return Ok(Detection {
                extrinsic,
                phn: state.phn,
                fell_back: true,
                f2,
                clamp_events,
                trace,
            });
        }
        let extrinsic = messages.map(|m| (2.0 * m).clamp(-LLR_LIMIT, LLR_LIMIT));
        Ok(Detection {
            extrinsic,
            phn: state.phn,
            fell_back: false,
            f2,
            clamp_events,
            trace,
        })
    }
}

fn trace_record(model: &SymbolModel<'_>, state: &PosteriorState, sweep: usize, step: Step, clamped: usize) -> TraceRecord {
    let terms: Option<FreeEnergyTerms> = free_energy(model, state).ok();
    TraceRecord {
        sweep,
        step,
        free_energy: terms.map(|t| t.total()),
        terms: terms.map(|t| [t.bit_prior, t.phn_prior, t.bit_entropy, t.phn_entropy, t.likelihood]),
        m_norm: state.phn.mean.norm(),
        min_eig: state.phn.min_eigenvalue(),
        clamped,
    }
}
