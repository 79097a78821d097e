use std::path::Path;

use phn_turbo::sim::SimConfig;
use phn_turbo::turbo::{FrameConfig, Scheme};

fn shipped(name: &str) -> SimConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    SimConfig::from_path(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn reference_config_is_the_default_link() {
    let cfg = shipped("reference.toml");
    cfg.validate().unwrap();
    assert_eq!(cfg.frame_config(), FrameConfig::default());
    assert_eq!(cfg.schemes, Scheme::ALL.to_vec());
    assert_eq!(cfg.link, SimConfig::new(0, vec![0.0], vec![]).link);
    assert_eq!(cfg.parity_check().unwrap().n(), 2304);
}

#[test]
fn quick_config_is_valid() {
    let cfg = shipped("quick.toml");
    cfg.validate().unwrap();
    assert_eq!(cfg.stop.max_frames, 4);
}

#[test]
fn parse_errors_name_the_file_once() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "bogus = 1\n").unwrap();
    let msg = SimConfig::from_path(&path).unwrap_err().to_string();
    assert!(msg.starts_with("config: ") && msg.contains("bad.toml"), "{msg}");
    assert_eq!(msg.matches("config:").count(), 1, "{msg}");
}
