//! Log-domain sum-product decoding (tanh rule).

use super::ParityCheck;
use crate::{Error, Result};

/// Check-node `tanh(x/2)` values are kept strictly inside (−1, 1) so every
/// message stays finite (|message| ≤ about 36).
const TANH_LIMIT: f64 = 1.0 - 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Channel LLR plus all incoming check messages.
    pub posterior: Vec<f64>,
    /// ±1 decisions, ties to +1.
    pub hard_bits: Vec<f64>,
    /// All checks satisfied and no posterior exactly zero.
    pub converged: bool,
    pub iterations: usize,
}

impl Decoded {
    /// `posterior − input`, the part of the posterior contributed by the code.
    pub fn extrinsic(&self, input: &[f64]) -> Vec<f64> {
        self.posterior.iter().zip(input).map(|(p, l)| p - l).collect()
    }
}

/// Evaluates an odd function on `|x|` so that negated inputs give exactly
/// negated outputs (`f64::atanh` is not bit-symmetric on its own).
fn odd(x: f64, f: fn(f64) -> f64) -> f64 {
    f(x.abs()).copysign(x)
}

/// Flooding sum-product with a syndrome check after every iteration.
pub fn decode_bp(llr: &[f64], pc: &ParityCheck, max_iter: usize) -> Result<Decoded> {
    decode_bp_warm(llr, pc, max_iter, &mut Vec::new())
}

/// [`decode_bp`] starting from the check-to-variable messages left in
/// `messages` by an earlier call on the same code (empty means a cold
/// start). The final messages are written back.
pub fn decode_bp_warm(llr: &[f64], pc: &ParityCheck, max_iter: usize, messages: &mut Vec<f64>) -> Result<Decoded> {
    let n = pc.n();
    if llr.len() != n {
        return Err(Error::DimensionMismatch(format!("{} LLRs for a length-{n} code", llr.len())));
    }
    if let Some(bad) = llr.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite channel LLR {bad}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("decoder needs at least one iteration".into()));
    }

    // Edges in check order; `var_edges[v]` lists the edges touching v.
    let mut check_start = Vec::with_capacity(pc.m() + 1);
    let mut edge_var = Vec::new();
    let mut var_edges = vec![Vec::new(); n];
    for row in pc.rows() {
        check_start.push(edge_var.len());
        for &v in row {
            var_edges[v].push(edge_var.len());
            edge_var.push(v);
        }
    }
    check_start.push(edge_var.len());

    let mut c2v = std::mem::take(messages);
    if c2v.is_empty() {
        c2v = vec![0.0; edge_var.len()];
    } else if c2v.len() != edge_var.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} stored messages for a code with {} edges",
            c2v.len(),
            edge_var.len()
        )));
    }
    let mut v2c = vec![0.0; edge_var.len()];
    for (v, edges) in var_edges.iter().enumerate() {
        let total = llr[v] + edges.iter().map(|&e| c2v[e]).sum::<f64>();
        for &e in edges {
            v2c[e] = total - c2v[e];
        }
    }
    let mut tanh = vec![0.0; edge_var.len()];
    let mut suffix = Vec::new();
    let mut posterior = llr.to_vec();
    let mut hard_bits = vec![1.0; n];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        for c in 0..pc.m() {
            let (lo, hi) = (check_start[c], check_start[c + 1]);
            for e in lo..hi {
                tanh[e] = odd(0.5 * v2c[e], f64::tanh).clamp(-TANH_LIMIT, TANH_LIMIT);
            }
            suffix.clear();
            suffix.resize(hi - lo + 1, 1.0);
            for e in (lo..hi).rev() {
                suffix[e - lo] = suffix[e - lo + 1] * tanh[e];
            }
            let mut prefix = 1.0;
            for e in lo..hi {
                let others = (prefix * suffix[e - lo + 1]).clamp(-TANH_LIMIT, TANH_LIMIT);
                c2v[e] = 2.0 * odd(others, f64::atanh);
                prefix *= tanh[e];
            }
        }
        for v in 0..n {
            posterior[v] = llr[v] + var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
            hard_bits[v] = if posterior[v] < 0.0 { -1.0 } else { 1.0 };
            for &e in &var_edges[v] {
                v2c[e] = posterior[v] - c2v[e];
            }
        }
        if pc.syndrome_weight(&hard_bits) == 0 && posterior.iter().all(|&p| p != 0.0) {
            converged = true;
            break;
        }
    }
    *messages = c2v;
    Ok(Decoded {
        posterior,
        hard_bits,
        converged,
        iterations,
    })
}
