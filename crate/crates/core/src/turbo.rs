//! Frame-level receivers: the detector/decoder turbo loop, a one-pass
//! receiver and the two phase-blind baselines.
//!
//! A frame is one LDPC codeword spread over several OFDM symbols. Code bits
//! are interleaved, then laid out symbol by symbol in row-major `N×L` order
//! (subcarrier-major, bit columns as in [`crate::qam`]). All LLRs follow the
//! detector convention `log P(+1)/P(−1)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, LLR_LIMIT};
use crate::channel::{
    apply_impairments_with_noise, draw_noise, noise_var_for_snr, sample_channel, ChannelProfile, ChannelRealization,
    RxVector,
};
use crate::fec::{decode_bp_warm, deinterleave, encode, interleave, ParityCheck, Permutation};
use crate::parallel::{map_range, Execution};
use crate::phn::{sample_phn, PhnParams, PhnSequence};
use crate::qam::{demap_soft, Constellation};
use crate::vi::{Detector, DetectorConfig, PhnPrior};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub n_subcarriers: usize,
    pub order: usize,
    pub symbols_per_frame: usize,
    pub outer_iters: usize,
    pub decoder_iters: usize,
    pub detector_iters: usize,
    pub standalone_decoder_iters: usize,
    /// Resume the decoder from its previous check messages in each outer
    /// iteration instead of restarting it.
    pub warm_decoder: bool,
}

impl Default for FrameConfig {
    /// 64-QAM on 64 subcarriers, six symbols per 2304-bit codeword,
    /// 3 outer / 6 decoder / 5 detector iterations, 18 standalone, warm
    /// decoder restarts.
    fn default() -> Self {
        FrameConfig {
            n_subcarriers: 64,
            order: 64,
            symbols_per_frame: 6,
            outer_iters: 3,
            decoder_iters: 6,
            detector_iters: 5,
            standalone_decoder_iters: 18,
            warm_decoder: true,
        }
    }
}

impl FrameConfig {
    pub fn constellation(&self) -> Result<Constellation> {
        Constellation::new(self.order)
    }

    pub fn bits_per_symbol(&self) -> Result<usize> {
        Ok(self.n_subcarriers * self.constellation()?.bits_per_symbol())
    }

    /// Coded bits carried by one frame.
    pub fn frame_bits(&self) -> Result<usize> {
        Ok(self.symbols_per_frame * self.bits_per_symbol()?)
    }

    /// Checks the iteration counts and that the frame exactly fills a codeword.
    pub fn validate(&self, code_len: usize) -> Result<()> {
        let counts = [
            ("symbols_per_frame", self.symbols_per_frame),
            ("n_subcarriers", self.n_subcarriers),
            ("outer_iters", self.outer_iters),
            ("decoder_iters", self.decoder_iters),
            ("detector_iters", self.detector_iters),
            ("standalone_decoder_iters", self.standalone_decoder_iters),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
        let bits = self.frame_bits()?;
        if bits != code_len {
            return Err(Error::DimensionMismatch(format!(
                "{} symbols x {} subcarriers x {} bits = {bits}, but the code length is {code_len}",
                self.symbols_per_frame,
                self.n_subcarriers,
                self.constellation()?.bits_per_symbol()
            )));
        }
        Ok(())
    }
}

/// Statistics after one outer iteration (or the single pass of the
/// non-iterative receivers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    /// Message-bit errors.
    pub bit_errors: usize,
    pub frame_error: bool,
    /// Detector calls that fell back to the phase-blind demapper.
    pub fallbacks: usize,
    pub decoder_converged: bool,
    pub decoder_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurboResult {
    /// Final ±1 message decisions.
    pub decoded_bits: Vec<f64>,
    pub per_iteration: Vec<IterationStats>,
}

impl TurboResult {
    pub fn last(&self) -> &IterationStats {
        self.per_iteration.last().expect("at least one iteration")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Turbo,
    OnePass,
    NoPhn,
    PhnIgnored,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Turbo, Scheme::OnePass, Scheme::NoPhn, Scheme::PhnIgnored];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Turbo => "turbo",
            Scheme::OnePass => "one_pass",
            Scheme::NoPhn => "no_phn",
            Scheme::PhnIgnored => "phn_ignored",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?} (expected turbo, one_pass, no_phn or phn_ignored)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    NoPhn,
    PhnIgnored,
}

/// What travels over the air for one OFDM symbol. The phase-noise and
/// phase-free observations share the channel and the noise draw, so schemes
/// can be compared on identical frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSample {
    pub channel: ChannelRealization,
    pub theta: PhnSequence,
    pub rx: RxVector,
    pub rx_no_phn: RxVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    /// ±1 message bits (the first `k` code positions for a systematic-prefix code).
    pub message: Vec<f64>,
    pub codeword: Vec<f64>,
    pub symbols: Vec<SymbolSample>,
    pub noise_var: f64,
}

/// Static link description used to draw frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub frame: FrameConfig,
    pub channel: ChannelProfile,
    pub phn: PhnParams,
}

impl FrameSample {
    /// Draws the message, then channel, phase noise and noise symbol by
    /// symbol, all from `rng`.
    pub fn draw<R: Rng + ?Sized>(
        link: &Link,
        pc: &ParityCheck,
        perm: &Permutation,
        snr_db: f64,
        rng: &mut R,
    ) -> Result<FrameSample> {
        let cfg = &link.frame;
        cfg.validate(pc.n())?;
        let constellation = cfg.constellation()?;
        let noise_var = noise_var_for_snr(constellation.mean_energy(), snr_db);
        let message: Vec<f64> = (0..pc.k()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let codeword = encode(&message, pc)?;
        let tx = interleave(&codeword, perm)?;
        let per_symbol = cfg.bits_per_symbol()?;
        let n = cfg.n_subcarriers;
        let mut symbols = Vec::with_capacity(cfg.symbols_per_frame);
        for chunk in tx.chunks(per_symbol) {
            let bits = BitMatrix::from_vec(n, constellation.bits_per_symbol(), chunk.to_vec())?;
            let d = constellation.map_bits(&bits)?;
            let channel = sample_channel(&link.channel, rng)?;
            let theta = sample_phn(&link.phn, n, rng)?;
            let noise = draw_noise(n, noise_var, rng);
            let rx = apply_impairments_with_noise(&d, &channel, &theta, &noise, noise_var)?;
            let rx_no_phn = apply_impairments_with_noise(&d, &channel, &PhnSequence::zeros(n), &noise, noise_var)?;
            symbols.push(SymbolSample {
                channel,
                theta,
                rx,
                rx_no_phn,
            });
        }
        Ok(FrameSample {
            message,
            codeword,
            symbols,
            noise_var,
        })
    }

    /// Adds a constant phase offset to one symbol's phase noise and rebuilds
    /// its observation (used to provoke large common phase errors).
    pub fn inject_cpe(&mut self, symbol: usize, angle: f64) -> Result<()> {
        let s = self
            .symbols
            .get_mut(symbol)
            .ok_or_else(|| Error::InvalidParameter(format!("frame has no symbol {symbol}")))?;
        let shift = C64::from_polar(1.0, angle);
        s.theta.0.iter_mut().for_each(|t| *t += angle);
        s.rx.r.iter_mut().for_each(|v| *v *= shift);
        Ok(())
    }

    pub fn observations(&self, with_phn: bool) -> Vec<RxVector> {
        self.symbols
            .iter()
            .map(|s| if with_phn { s.rx.clone() } else { s.rx_no_phn.clone() })
            .collect()
    }

    pub fn channels(&self) -> Vec<ChannelRealization> {
        self.symbols.iter().map(|s| s.channel.clone()).collect()
    }
}

/// Floor on the detector's prior phase deviation (radians). A phase-free
/// link still gets a tiny, invertible prior; at this width the detector
/// coincides with the phase-blind demapper.
pub const MIN_PRIOR_SIGMA: f64 = 1e-4;

/// Everything a receiver needs besides the observations.
#[derive(Debug, Clone)]
pub struct Receiver<'a> {
    pub cfg: FrameConfig,
    pub detector: Detector,
    pub pc: &'a ParityCheck,
    pub perm: &'a Permutation,
    /// How the per-symbol detector calls of one outer iteration are run.
    pub exec: Execution,
}

impl<'a> Receiver<'a> {
    pub fn new(
        cfg: FrameConfig,
        phn: &PhnParams,
        f2_threshold: Option<f64>,
        pc: &'a ParityCheck,
        perm: &'a Permutation,
    ) -> Result<Self> {
        cfg.validate(pc.n())?;
        if perm.len() != pc.n() {
            return Err(Error::DimensionMismatch(format!(
                "interleaver of length {} for a length-{} code",
                perm.len(),
                pc.n()
            )));
        }
        let prior_params = PhnParams {
            sigma_theta: phn.sigma_theta.max(MIN_PRIOR_SIGMA),
            ..*phn
        };
        let prior = PhnPrior::from_params(&prior_params, cfg.n_subcarriers)?;
        let detector = Detector::new(
            cfg.constellation()?,
            prior,
            DetectorConfig {
                num_iter: cfg.detector_iters,
                f2_threshold,
                ..DetectorConfig::default()
            },
        )?;
        Ok(Receiver {
            cfg,
            detector,
            pc,
            perm,
            exec: Execution::Sequential,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn check_frame(&self, rx: &[RxVector], channels: &[ChannelRealization], message: &[f64]) -> Result<()> {
        let s = self.cfg.symbols_per_frame;
        if rx.len() != s || channels.len() != s {
            return Err(Error::DimensionMismatch(format!(
                "{} observations and {} channels for a {s}-symbol frame",
                rx.len(),
                channels.len()
            )));
        }
        if message.len() != self.pc.k() {
            return Err(Error::DimensionMismatch(format!("{} reference bits for k = {}", message.len(), self.pc.k())));
        }
        Ok(())
    }

    /// Runs the detector on every symbol with the given (interleaved-domain)
    /// priors and returns the concatenated extrinsics and the fallback count.
    fn detect_frame(&self, rx: &[RxVector], channels: &[ChannelRealization], priors: &[f64]) -> Result<(Vec<f64>, usize)> {
        let per_symbol = self.cfg.bits_per_symbol()?;
        let l = self.detector.constellation().bits_per_symbol();
        let n = self.cfg.n_subcarriers;
        let outputs = map_range(self.exec, 0..rx.len(), |s| {
            let prior = BitMatrix::from_vec(n, l, priors[s * per_symbol..(s + 1) * per_symbol].to_vec())?;
            self.detector.detect(&rx[s].r, &channels[s].h, rx[s].noise_var, &prior)
        });
        let mut extrinsic = Vec::with_capacity(priors.len());
        let mut fallbacks = 0;
        for out in outputs {
            let out = out?;
            fallbacks += usize::from(out.fell_back);
            extrinsic.extend_from_slice(out.extrinsic.as_slice());
        }
        Ok((extrinsic, fallbacks))
    }

    /// Phase-blind per-subcarrier demapping with uniform priors.
    fn demap_frame(&self, rx: &[RxVector], channels: &[ChannelRealization]) -> Result<Vec<f64>> {
        let constellation = self.detector.constellation();
        let zero = BitMatrix::zeros(self.cfg.n_subcarriers, constellation.bits_per_symbol());
        let mut out = Vec::with_capacity(self.pc.n());
        for (r, ch) in rx.iter().zip(channels) {
            let llr = demap_soft(&constellation, &r.to_frequency(), &ch.h, r.noise_var, &zero)?;
            out.extend_from_slice(llr.as_slice());
        }
        Ok(out)
    }

    /// Deinterleaves channel-domain LLRs, decodes, and scores the result.
    fn decode_and_score(
        &self,
        channel_llr: &[f64],
        max_iter: usize,
        message: &[f64],
        fallbacks: usize,
        messages: &mut Vec<f64>,
    ) -> Result<(crate::fec::Decoded, Vec<f64>, Vec<f64>, IterationStats)> {
        let code_llr = deinterleave(channel_llr, self.perm)?;
        let decoded = decode_bp_warm(&code_llr, self.pc, max_iter, messages)?;
        let bits = self.pc.message_of(&decoded.hard_bits);
        let bit_errors = bits.iter().zip(message).filter(|(a, b)| a != b).count();
        let stats = IterationStats {
            bit_errors,
            frame_error: bit_errors > 0,
            fallbacks,
            decoder_converged: decoded.converged,
            decoder_iterations: decoded.iterations,
        };
        Ok((decoded, code_llr, bits, stats))
    }

    /// The turbo loop. Outer iteration 1 starts from uniform priors; each
    /// later iteration feeds the decoder's extrinsic (posterior minus its own
    /// input), interleaved back, to the detector as priors. With
    /// `warm_decoder` the decoder picks up its check messages where the
    /// previous outer iteration left them.
    pub fn run_turbo(&self, rx: &[RxVector], channels: &[ChannelRealization], message: &[f64]) -> Result<TurboResult> {
        self.check_frame(rx, channels, message)?;
        let mut priors = vec![0.0; self.pc.n()];
        let mut per_iteration = Vec::with_capacity(self.cfg.outer_iters);
        let mut decoded_bits = Vec::new();
        let mut messages = Vec::new();
        for _ in 0..self.cfg.outer_iters {
            let (det_ext, fallbacks) = self.detect_frame(rx, channels, &priors)?;
            if !self.cfg.warm_decoder {
                messages.clear();
            }
            let (decoded, code_llr, bits, stats) =
                self.decode_and_score(&det_ext, self.cfg.decoder_iters, message, fallbacks, &mut messages)?;
            let dec_ext: Vec<f64> = decoded
                .extrinsic(&code_llr)
                .into_iter()
                .map(|v| v.clamp(-LLR_LIMIT, LLR_LIMIT))
                .collect();
            priors = interleave(&dec_ext, self.perm)?;
            per_iteration.push(stats);
            decoded_bits = bits;
        }
        Ok(TurboResult {
            decoded_bits,
            per_iteration,
        })
    }

    /// Detector once with uniform priors, then a standalone decoder run.
    pub fn run_one_pass(&self, rx: &[RxVector], channels: &[ChannelRealization], message: &[f64]) -> Result<TurboResult> {
        self.check_frame(rx, channels, message)?;
        let (det_ext, fallbacks) = self.detect_frame(rx, channels, &vec![0.0; self.pc.n()])?;
        let (_, _, decoded_bits, stats) =
            self.decode_and_score(&det_ext, self.cfg.standalone_decoder_iters, message, fallbacks, &mut Vec::new())?;
        Ok(TurboResult {
            decoded_bits,
            per_iteration: vec![stats],
        })
    }

    /// Phase-blind demapper plus a standalone decoder run. The two kinds
    /// differ only in which observations the caller passes: phase-free ones
    /// for [`BaselineKind::NoPhn`], impaired ones for
    /// [`BaselineKind::PhnIgnored`].
    pub fn run_baseline(
        &self,
        kind: BaselineKind,
        rx: &[RxVector],
        channels: &[ChannelRealization],
        message: &[f64],
    ) -> Result<TurboResult> {
        self.check_frame(rx, channels, message)?;
        let llr = self.demap_frame(rx, channels)?;
        let (_, _, decoded_bits, stats) = self.decode_and_score(&llr, self.cfg.standalone_decoder_iters, message, 0, &mut Vec::new())?;
        log::trace!("{kind:?} baseline: {} bit errors", stats.bit_errors);
        Ok(TurboResult {
            decoded_bits,
            per_iteration: vec![stats],
        })
    }

    /// Runs `scheme` on a drawn frame, choosing the matching observations.
    pub fn run_scheme(&self, scheme: Scheme, frame: &FrameSample) -> Result<TurboResult> {
        let channels = frame.channels();
        match scheme {
            Scheme::Turbo => self.run_turbo(&frame.observations(true), &channels, &frame.message),
            Scheme::OnePass => self.run_one_pass(&frame.observations(true), &channels, &frame.message),
            Scheme::NoPhn => self.run_baseline(BaselineKind::NoPhn, &frame.observations(false), &channels, &frame.message),
            Scheme::PhnIgnored => {
                self.run_baseline(BaselineKind::PhnIgnored, &frame.observations(true), &channels, &frame.message)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::bundled_code;
    use crate::seed::{stream, substream};

    fn link(sigma_deg: f64) -> Link {
        Link {
            frame: FrameConfig::default(),
            channel: ChannelProfile::new(10, 3.0, 64).unwrap(),
            phn: PhnParams::from_degrees(sigma_deg, 100e3, 50e-9).unwrap(),
        }
    }

    #[test]
    fn default_frame_fills_the_bundled_code() {
        let pc = bundled_code().unwrap();
        assert_eq!(FrameConfig::default().frame_bits().unwrap(), 2304);
        FrameConfig::default().validate(pc.n()).unwrap();
        let bad = FrameConfig {
            symbols_per_frame: 5,
            ..FrameConfig::default()
        };
        assert!(bad.validate(pc.n()).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("fast".parse::<Scheme>().is_err());
    }

    #[test]
    fn frame_layout_round_trips_through_the_interleaver() {
        let pc = bundled_code().unwrap();
        let perm = Permutation::random(pc.n(), 9);
        let l = link(3.0);
        let frame = FrameSample::draw(&l, &pc, &perm, 60.0, &mut stream(1)).unwrap();
        let constellation = l.frame.constellation().unwrap();
        // Equalizing and slicing the phase-free observations recovers the
        // interleaved codeword up to a few noise errors.
        let points = constellation.points();
        let mut sliced = Vec::new();
        for s in &frame.symbols {
            for (r, h) in s.rx_no_phn.to_frequency().iter().zip(&s.channel.h) {
                let v = r / h;
                let nearest = points
                    .iter()
                    .min_by(|a, b| (v - a.0).norm().total_cmp(&(v - b.0).norm()))
                    .unwrap();
                sliced.extend_from_slice(&nearest.1);
            }
        }
        let code = deinterleave(&sliced, &perm).unwrap();
        let errors = code.iter().zip(&frame.codeword).filter(|(a, b)| a != b).count();
        assert!(errors < 5, "{errors} raw errors at 60 dB");
        assert_eq!(pc.message_of(&frame.codeword), frame.message);
    }

    #[test]
    fn clean_channel_decodes_after_one_iteration() {
        let pc = bundled_code().unwrap();
        let perm = Permutation::random(pc.n(), 5);
        let l = link(0.0);
        let frame = FrameSample::draw(&l, &pc, &perm, 30.0, &mut stream(2)).unwrap();
        let rx = Receiver::new(l.frame, &l.phn, None, &pc, &perm).unwrap();
        let out = rx.run_turbo(&frame.observations(true), &frame.channels(), &frame.message).unwrap();
        assert_eq!(out.per_iteration.len(), 3);
        assert_eq!(out.per_iteration[0].bit_errors, 0);
        assert_eq!(out.decoded_bits, frame.message);
    }

    #[test]
    fn first_turbo_iteration_equals_a_single_iteration_run() {
        // Iteration 1 depends on nothing but the observations and zero priors.
        let pc = bundled_code().unwrap();
        let perm = Permutation::random(pc.n(), 5);
        let l = link(3.0);
        let frame = FrameSample::draw(&l, &pc, &perm, 22.0, &mut substream(3, 0, 0)).unwrap();
        let full = Receiver::new(l.frame, &l.phn, None, &pc, &perm).unwrap();
        let single = Receiver::new(
            FrameConfig {
                outer_iters: 1,
                ..l.frame
            },
            &l.phn,
            None,
            &pc,
            &perm,
        )
        .unwrap();
        let cold = Receiver::new(
            FrameConfig {
                warm_decoder: false,
                ..l.frame
            },
            &l.phn,
            None,
            &pc,
            &perm,
        )
        .unwrap();
        let a = full.run_scheme(Scheme::Turbo, &frame).unwrap();
        let b = single.run_scheme(Scheme::Turbo, &frame).unwrap();
        let c = cold.run_scheme(Scheme::Turbo, &frame).unwrap();
        assert_eq!(a.per_iteration[0], b.per_iteration[0]);
        assert_eq!(a.per_iteration[0], c.per_iteration[0]);
        assert_eq!(c.per_iteration.len(), 3);
    }

    #[test]
    fn baselines_coincide_without_phase_noise() {
        let pc = bundled_code().unwrap();
        let perm = Permutation::random(pc.n(), 5);
        let l = link(0.0);
        let frame = FrameSample::draw(&l, &pc, &perm, 16.0, &mut stream(4)).unwrap();
        let rx = Receiver::new(l.frame, &l.phn, None, &pc, &perm).unwrap();
        assert_eq!(
            rx.run_scheme(Scheme::NoPhn, &frame).unwrap(),
            rx.run_scheme(Scheme::PhnIgnored, &frame).unwrap()
        );
    }

    #[test]
    fn forced_fallback_one_pass_equals_phase_blind_baseline() {
        // A threshold below any attainable F2 forces every detector call to
        // fall back, which makes one-pass identical to the phase-blind path.
        let pc = bundled_code().unwrap();
        let perm = Permutation::random(pc.n(), 5);
        let l = link(3.0);
        let frame = FrameSample::draw(&l, &pc, &perm, 20.0, &mut stream(5)).unwrap();
        let rx = Receiver::new(l.frame, &l.phn, Some(f64::MIN), &pc, &perm).unwrap();
        let one = rx.run_scheme(Scheme::OnePass, &frame).unwrap();
        let blind = rx.run_scheme(Scheme::PhnIgnored, &frame).unwrap();
        assert_eq!(one.per_iteration[0].fallbacks, 6);
        assert_eq!(one.decoded_bits, blind.decoded_bits);
        assert_eq!(one.per_iteration[0].bit_errors, blind.per_iteration[0].bit_errors);
        // The turbo loop keeps running on fallback extrinsics.
        let turbo = rx.run_scheme(Scheme::Turbo, &frame).unwrap();
        assert!(turbo.per_iteration.iter().all(|s| s.fallbacks == 6));
        assert_eq!(turbo.decoded_bits.len(), pc.k());
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let pc = bundled_code().unwrap();
        let perm = Permutation::random(pc.n(), 5);
        let l = link(3.0);
        let frame = FrameSample::draw(&l, &pc, &perm, 20.0, &mut stream(6)).unwrap();
        let rx = Receiver::new(l.frame, &l.phn, None, &pc, &perm).unwrap();
        let seq = rx.clone().with_execution(Execution::Sequential).run_scheme(Scheme::Turbo, &frame).unwrap();
        let par = rx.with_execution(Execution::Parallel).run_scheme(Scheme::Turbo, &frame).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn paired_observations_differ_only_by_phase() {
        let pc = bundled_code().unwrap();
        let perm = Permutation::identity(pc.n());
        let l = link(3.0);
        let frame = FrameSample::draw(&l, &pc, &perm, 20.0, &mut stream(7)).unwrap();
        for s in &frame.symbols {
            let gap: f64 = s
                .rx
                .r
                .iter()
                .zip(&s.rx_no_phn.r)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(gap > 0.0);
            assert_eq!(s.rx.noise_var, s.rx_no_phn.noise_var);
        }
    }

    #[test]
    fn rejects_inconsistent_frames() {
        let pc = bundled_code().unwrap();
        let perm = Permutation::random(pc.n(), 5);
        let l = link(3.0);
        let rx = Receiver::new(l.frame, &l.phn, None, &pc, &perm).unwrap();
        assert!(rx.run_turbo(&[], &[], &[]).is_err());
        let short = Permutation::identity(10);
        assert!(Receiver::new(l.frame, &l.phn, None, &pc, &short).is_err());
    }
}
