//! Seeded batches of detector self-checks: finite-difference gradients and
//! agreement with the exact enumeration posterior.

use serde::Serialize;
use statrs::statistics::Statistics;

use crate::parallel::{map_range, Execution};
use crate::phn::PhnParams;
use crate::seed::split_seed;
use crate::vi::{exact_posterior_oracle, gradient_check, Detector, DetectorConfig, GradCheckReport, Pairing, SymbolInstance};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckRun {
    pub index: usize,
    pub seed: u64,
    pub correct: GradCheckReport,
    /// Negative control: must fail.
    pub swapped: GradCheckReport,
}

impl GradCheckRun {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.correct.passes(tolerance) && !self.swapped.passes(tolerance)
    }
}

/// Instance `i` uses seed `split_seed(seed, i)` with random priors and a
/// random interior state.
pub fn gradcheck_suite(seed: u64, n: usize, order: usize, snr_db: f64, count: usize) -> Result<Vec<GradCheckRun>> {
    (0..count)
        .map(|index| {
            let s = split_seed(seed, index as u64);
            let inst = SymbolInstance::generate(s, n, order, snr_db, PhnParams::default(), true)?;
            let prepared = inst.prepare()?;
            let state = prepared.random_state(split_seed(s, 0));
            let model = prepared.model();
            Ok(GradCheckRun {
                index,
                seed: s,
                correct: gradient_check(&model, &state, Pairing::Correct)?,
                swapped: gradient_check(&model, &state, Pairing::Swapped)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub trials: usize,
    pub bits: usize,
    /// Detector hard decisions equal to the bitwise MAP decisions.
    pub agreements: usize,
    pub agreement: f64,
    /// Pearson correlation of posterior bit means, detector vs exact.
    pub correlation: f64,
    pub fallbacks: usize,
}

/// Runs the detector (uniform bit priors) and the exact oracle on `trials`
/// generated instances.
pub fn oracle_comparison(
    seed: u64,
    n: usize,
    order: usize,
    snr_db: f64,
    phn: PhnParams,
    trials: usize,
    exec: Execution,
) -> Result<OracleSummary> {
    let per_trial = map_range(exec, 0..trials, |t| -> Result<(Vec<f64>, Vec<f64>, bool)> {
        let inst = SymbolInstance::generate(split_seed(seed, t as u64), n, order, snr_db, phn, false)?;
        let prepared = inst.prepare()?;
        let exact = exact_posterior_oracle(&prepared.model())?;
        let detector = Detector::new(prepared.constellation, prepared.prior.clone(), DetectorConfig::default())?;
        let out = detector.detect(&inst.r, &inst.channel.h, inst.noise_var, &inst.prior_llrs()?)?;
        let det_means = out.extrinsic.as_slice().iter().map(|l| (0.5 * l).tanh()).collect();
        Ok((det_means, exact.means.into_vec(), out.fell_back))
    });
    let (mut det, mut ex, mut fallbacks) = (Vec::new(), Vec::new(), 0);
    for r in per_trial {
        let (d, e, fell_back) = r?;
        det.extend(d);
        ex.extend(e);
        fallbacks += usize::from(fell_back);
    }
    let agreements = det.iter().zip(&ex).filter(|(d, e)| (**d >= 0.0) == (**e >= 0.0)).count();
    let correlation = (&det).covariance(&ex) / ((&det).std_dev() * (&ex).std_dev());
    Ok(OracleSummary {
        trials,
        bits: det.len(),
        agreements,
        agreement: agreements as f64 / det.len() as f64,
        correlation,
        fallbacks,
    })
}
