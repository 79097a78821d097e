//! Monte Carlo sweeps over SNR and receiver schemes, with CSV and plot
//! output and the common-phase-error analysis.
//!
//! Every frame is addressed by `(SNR index, frame index)` and draws from
//! [`crate::seed::substream`], so the same frame is seen by every scheme and
//! the thread count never changes a result.

mod checks;
mod cpe;
mod plot;
mod records;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelProfile;
use crate::fec::{bundled_code, load_alist, ParityCheck, Permutation};
use crate::parallel::{map_range, Execution};
use crate::phn::PhnParams;
use crate::seed::substream;
use crate::turbo::{FrameConfig, FrameSample, Link, Receiver, Scheme, TurboResult};
use crate::{Error, Result};

pub use checks::{gradcheck_suite, oracle_comparison, GradCheckRun, OracleSummary};
pub use cpe::{cpe_report, rotation_ser, CpeReport};
pub use plot::{emit_plot_data, plot_data, PlotData, PlotPoint, Series, DEFAULT_BER_FLOOR};
pub use records::{read_csv, records_csv, write_csv, SweepRecord, CSV_HEADER};

/// Version of both the config schema and the CSV layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PHNTURBO_OUT_DIR";

/// Frames simulated per parallel batch. Results do not depend on it: the
/// stop rule is applied frame by frame in index order.
const BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub n_subcarriers: usize,
    pub order: usize,
    pub taps: usize,
    /// Exponential power-delay decay constant, in taps.
    pub decay: f64,
    pub sigma_theta_deg: f64,
    pub omega_3db: f64,
    pub t_sample: f64,
    pub symbols_per_frame: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            n_subcarriers: 64,
            order: 64,
            taps: 10,
            decay: 3.0,
            sigma_theta_deg: 3.0,
            omega_3db: 100e3,
            t_sample: 50e-9,
            symbols_per_frame: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    pub outer: usize,
    pub decoder: usize,
    pub detector: usize,
    pub standalone_decoder: usize,
    /// Keep decoder check messages between outer iterations.
    pub warm_decoder: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            outer: 3,
            decoder: 6,
            detector: 5,
            standalone_decoder: 18,
            warm_decoder: true,
        }
    }
}

/// Simulate until `min_frame_errors` frame errors or `max_frames` frames,
/// whichever comes first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub min_frame_errors: usize,
    pub max_frames: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_frame_errors: 100,
            max_frames: 200,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorOverrides {
    pub f2_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeConfig {
    /// Parity-check matrix in alist form; the bundled code when absent.
    pub alist: Option<PathBuf>,
    pub interleaver_seed: u64,
}

impl Default for CodeConfig {
    fn default() -> Self {
        CodeConfig {
            alist: None,
            interleaver_seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub master_seed: u64,
    pub snr_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub iterations: IterationConfig,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub detector: DetectorOverrides,
    #[serde(default)]
    pub code: CodeConfig,
    /// CSV destination; see [`SimConfig::output_path`].
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl SimConfig {
    /// The desk-scale defaults for the given SNR points.
    pub fn new(master_seed: u64, snr_db: Vec<f64>, schemes: Vec<Scheme>) -> Self {
        SimConfig {
            schema_version: SCHEMA_VERSION,
            master_seed,
            snr_db,
            schemes,
            link: LinkConfig::default(),
            iterations: IterationConfig::default(),
            stop: StopRule::default(),
            detector: DetectorOverrides::default(),
            code: CodeConfig::default(),
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON when the extension is `.json`. A relative alist
    /// path is resolved against the config file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
        .map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let (Some(alist), Some(dir)) = (&cfg.code.alist, path.parent()) {
            if alist.is_relative() {
                cfg.code.alist = Some(dir.join(alist));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.snr_db.is_empty() {
            return bad("snr_db must list at least one point".into());
        }
        if let Some(v) = self.snr_db.iter().find(|v| !v.is_finite()) {
            return bad(format!("snr_db contains {v}"));
        }
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return bad("schemes lists a scheme twice".into());
        }
        if self.stop.min_frame_errors == 0 || self.stop.max_frames == 0 {
            return bad("stop rule counts must be positive".into());
        }
        self.phn_params()?;
        self.channel_profile()?;
        self.frame_config().constellation()?;
        if let Some(t) = self.detector.f2_threshold {
            if !t.is_finite() {
                return bad(format!("f2_threshold must be finite, got {t}"));
            }
        }
        Ok(())
    }

    pub fn phn_params(&self) -> Result<PhnParams> {
        PhnParams::from_degrees(self.link.sigma_theta_deg, self.link.omega_3db, self.link.t_sample)
    }

    pub fn channel_profile(&self) -> Result<ChannelProfile> {
        ChannelProfile::new(self.link.taps, self.link.decay, self.link.n_subcarriers)
    }

    pub fn frame_config(&self) -> FrameConfig {
        FrameConfig {
            n_subcarriers: self.link.n_subcarriers,
            order: self.link.order,
            symbols_per_frame: self.link.symbols_per_frame,
            outer_iters: self.iterations.outer,
            decoder_iters: self.iterations.decoder,
            detector_iters: self.iterations.detector,
            standalone_decoder_iters: self.iterations.standalone_decoder,
            warm_decoder: self.iterations.warm_decoder,
        }
    }

    pub fn link(&self) -> Result<Link> {
        Ok(Link {
            frame: self.frame_config(),
            channel: self.channel_profile()?,
            phn: self.phn_params()?,
        })
    }

    pub fn parity_check(&self) -> Result<ParityCheck> {
        match &self.code.alist {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                load_alist(&text)
            }
            None => bundled_code(),
        }
    }

    /// First 16 hex digits of SHA-256 over the compact JSON form, with the
    /// output path left out (it does not affect results).
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `output` if set, otherwise `<stem>.csv` in `$PHNTURBO_OUT_DIR` (or the
    /// working directory).
    pub fn output_path(&self, stem: &str) -> PathBuf {
        if let Some(p) = &self.output {
            return p.clone();
        }
        let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        dir.join(format!("{stem}.csv"))
    }
}

/// Running totals for one `(snr, scheme, outer_iter)` cell.
#[derive(Debug, Clone, Default)]
struct Tally {
    bit_errors: usize,
    frame_errors: usize,
    fallbacks: usize,
}

/// Runs every `(snr, scheme)` point of `cfg`. Frames are simulated in
/// parallel batches when `exec` allows, but consumed in index order, so the
/// records are identical for any thread count.
pub fn run_sweep(cfg: &SimConfig, exec: Execution) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let pc = cfg.parity_check()?;
    let perm = Permutation::random(pc.n(), cfg.code.interleaver_seed);
    let link = cfg.link()?;
    let receiver = Receiver::new(link.frame, &link.phn, cfg.detector.f2_threshold, &pc, &perm)?;
    let hash = cfg.config_hash();
    let mut records = Vec::new();

    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        for &scheme in &cfg.schemes {
            let run_frame = |frame: usize| -> Result<TurboResult> {
                let mut rng = substream(cfg.master_seed, snr_idx as u64, frame as u64);
                let sample = FrameSample::draw(&link, &pc, &perm, snr_db, &mut rng)?;
                receiver.run_scheme(scheme, &sample)
            };
            let iters = if scheme == Scheme::Turbo { link.frame.outer_iters } else { 1 };
            let mut tallies = vec![Tally::default(); iters];
            let mut frames = 0;
            'batches: while frames < cfg.stop.max_frames {
                let end = (frames + BATCH).min(cfg.stop.max_frames);
                for result in map_range(exec, frames..end, run_frame) {
                    let result = result?;
                    for (t, s) in tallies.iter_mut().zip(&result.per_iteration) {
                        t.bit_errors += s.bit_errors;
                        t.frame_errors += usize::from(s.frame_error);
                        t.fallbacks += s.fallbacks;
                    }
                    frames += 1;
                    if tallies[iters - 1].frame_errors >= cfg.stop.min_frame_errors {
                        break 'batches;
                    }
                }
            }
            let reached_max = tallies[iters - 1].frame_errors < cfg.stop.min_frame_errors;
            let bits = frames * pc.k();
            log::info!(
                "snr {snr_db} dB, {scheme}: {frames} frames, final BER {:.3e}",
                tallies[iters - 1].bit_errors as f64 / bits as f64
            );
            for (i, t) in tallies.into_iter().enumerate() {
                records.push(SweepRecord {
                    schema_version: SCHEMA_VERSION,
                    snr_db,
                    scheme,
                    outer_iter: i + 1,
                    frames,
                    bits,
                    bit_errors: t.bit_errors,
                    ber: t.bit_errors as f64 / bits as f64,
                    frame_errors: t.frame_errors,
                    fer: t.frame_errors as f64 / frames as f64,
                    fallback_rate: t.fallbacks as f64 / (frames * link.frame.symbols_per_frame) as f64,
                    max_frames_reached: reached_max,
                    seed: cfg.master_seed,
                    config_hash: hash.clone(),
                });
            }
        }
    }
    Ok(records)
}
