//! Sweep records and their CSV form.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), so a rerun of
//! the same configuration reproduces the file byte for byte apart from the
//! `#`-prefixed header comments.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::turbo::Scheme;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 14] = [
    "schema_version",
    "snr_db",
    "scheme",
    "outer_iter",
    "frames",
    "bits",
    "bit_errors",
    "ber",
    "frame_errors",
    "fer",
    "fallback_rate",
    "max_frames_reached",
    "seed",
    "config_hash",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub schema_version: u32,
    pub snr_db: f64,
    pub scheme: Scheme,
    pub outer_iter: usize,
    pub frames: usize,
    /// Message bits simulated.
    pub bits: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub frame_errors: usize,
    pub fer: f64,
    /// Fraction of detector calls that fell back to the phase-blind demapper.
    pub fallback_rate: f64,
    /// The point stopped at `max_frames` before collecting enough frame errors.
    pub max_frames_reached: bool,
    pub seed: u64,
    pub config_hash: String,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

impl SweepRecord {
    fn fields(&self) -> [String; 14] {
        [
            self.schema_version.to_string(),
            float(self.snr_db),
            self.scheme.to_string(),
            self.outer_iter.to_string(),
            self.frames.to_string(),
            self.bits.to_string(),
            self.bit_errors.to_string(),
            float(self.ber),
            self.frame_errors.to_string(),
            float(self.fer),
            float(self.fallback_rate),
            self.max_frames_reached.to_string(),
            self.seed.to_string(),
            self.config_hash.clone(),
        ]
    }
}

fn write_records<W: Write>(out: W, records: &[SweepRecord]) -> csv::Result<W> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Header row plus one row per record, without comments.
pub fn records_csv(records: &[SweepRecord]) -> String {
    let bytes = write_records(Vec::new(), records).expect("writing to memory");
    String::from_utf8(bytes).expect("CSV is UTF-8")
}

/// Writes `comments` as `# ` lines followed by the records. Parent
/// directories are created as needed.
pub fn write_csv(path: &Path, records: &[SweepRecord], comments: &[String]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = String::new();
    for c in comments {
        text.push_str("# ");
        text.push_str(c);
        text.push('\n');
    }
    text.push_str(&records_csv(records));
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_csv`], skipping comment lines.
pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("{}: unexpected CSV header", path.display())));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Config(format!("{}: {e}", path.display()))))
        .collect()
}
