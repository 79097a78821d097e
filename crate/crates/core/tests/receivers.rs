//! Frame-level receiver behaviour over seeded Monte Carlo runs.

use phn_turbo::fec::{Permutation, ParityCheck};
use phn_turbo::seed::substream;
use phn_turbo::sim::SimConfig;
use phn_turbo::turbo::{FrameSample, Link, Receiver, Scheme};

const FRAMES: u64 = 200;

fn setup() -> (Link, ParityCheck, Permutation) {
    let cfg = SimConfig::new(7, vec![20.0], vec![Scheme::Turbo]);
    let pc = cfg.parity_check().unwrap();
    let perm = Permutation::random(pc.n(), cfg.code.interleaver_seed);
    (cfg.link().unwrap(), pc, perm)
}

#[test]
fn later_iterations_repair_a_large_common_phase_error() {
    let (link, pc, perm) = setup();
    let rx = Receiver::new(link.frame, &link.phn, None, &pc, &perm).unwrap();
    let target = 10f64.to_radians();
    let (mut not_worse, mut it1_errors, mut it3_errors) = (0, 0, 0);
    for f in 0..FRAMES {
        let mut frame = FrameSample::draw(&link, &pc, &perm, 22.0, &mut substream(11, 0, f)).unwrap();
        let symbol = (f % 6) as usize;
        let shift = target - frame.symbols[symbol].theta.mean();
        frame.inject_cpe(symbol, shift).unwrap();
        assert!(frame.symbols[symbol].theta.mean() > 9f64.to_radians());
        let out = rx.run_scheme(Scheme::Turbo, &frame).unwrap();
        let (first, third) = (out.per_iteration[0].bit_errors, out.per_iteration[2].bit_errors);
        not_worse += usize::from(third <= first);
        it1_errors += first;
        it3_errors += third;
    }
    assert!(not_worse as f64 >= 0.9 * FRAMES as f64, "{not_worse}/{FRAMES} frames not worse");
    assert!(it3_errors <= it1_errors, "{it3_errors} > {it1_errors}");
}

#[test]
fn one_pass_is_no_better_than_three_turbo_iterations_on_average() {
    let (link, pc, perm) = setup();
    let rx = Receiver::new(link.frame, &link.phn, None, &pc, &perm).unwrap();
    let (mut one_pass, mut turbo) = (0, 0);
    for f in 0..FRAMES {
        let frame = FrameSample::draw(&link, &pc, &perm, 20.0, &mut substream(12, 0, f)).unwrap();
        one_pass += rx.run_scheme(Scheme::OnePass, &frame).unwrap().last().bit_errors;
        turbo += rx.run_scheme(Scheme::Turbo, &frame).unwrap().last().bit_errors;
    }
    assert!(one_pass >= turbo, "one-pass {one_pass} < turbo {turbo}");
}

#[test]
fn without_phase_noise_one_pass_matches_turbo_iteration_one_up_to_decoder_budget() {
    let (mut link, pc, perm) = setup();
    link.phn.sigma_theta = 0.0;
    let rx = Receiver::new(link.frame, &link.phn, None, &pc, &perm).unwrap();
    let (mut one_pass, mut turbo1) = (0, 0);
    for f in 0..40 {
        let frame = FrameSample::draw(&link, &pc, &perm, 21.0, &mut substream(13, 0, f)).unwrap();
        one_pass += rx.run_scheme(Scheme::OnePass, &frame).unwrap().last().bit_errors;
        turbo1 += rx.run_scheme(Scheme::Turbo, &frame).unwrap().per_iteration[0].bit_errors;
    }
    // 18 decoder iterations can only help relative to 6 on the same input.
    assert!(one_pass <= turbo1, "{one_pass} > {turbo1}");
}

#[test]
fn fallback_frames_still_decode() {
    let (link, pc, perm) = setup();
    let rx = Receiver::new(link.frame, &link.phn, Some(f64::MIN), &pc, &perm).unwrap();
    for f in 0..5 {
        let frame = FrameSample::draw(&link, &pc, &perm, 30.0, &mut substream(14, 0, f)).unwrap();
        let out = rx.run_scheme(Scheme::Turbo, &frame).unwrap();
        assert!(out.per_iteration.iter().all(|s| s.fallbacks == 6));
        assert_eq!(out.last().bit_errors, 0);
        assert_eq!(out.decoded_bits, frame.message);
    }
}

#[test]
fn receivers_are_deterministic() {
    let (link, pc, perm) = setup();
    let rx = Receiver::new(link.frame, &link.phn, None, &pc, &perm).unwrap();
    let a = FrameSample::draw(&link, &pc, &perm, 20.0, &mut substream(15, 0, 0)).unwrap();
    let b = FrameSample::draw(&link, &pc, &perm, 20.0, &mut substream(15, 0, 0)).unwrap();
    for scheme in Scheme::ALL {
        assert_eq!(rx.run_scheme(scheme, &a).unwrap(), rx.run_scheme(scheme, &b).unwrap());
    }
}
