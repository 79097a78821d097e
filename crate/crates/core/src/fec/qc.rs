//! Quasi-cyclic expansion and the bundled rate-3/4, length-2304 code.

use super::{load_alist, ParityCheck};
use crate::{Error, Result};

/// 6×24 base matrix of an 802.16e-style rate-3/4 code for `z = 96`
/// (`-1`: zero block, `s ≥ 0`: identity cyclically shifted by `s`).
pub const IEEE80216E_R34A_BASE: [[i32; 24]; 6] = [
    [6, 39, 3, 93, -1, -1, -1, 30, 70, -1, 86, -1, 37, 38, 4, 11, -1, 46, 48, 0, -1, -1, -1, -1],
    [62, 94, 19, 84, -1, 92, 78, -1, 15, -1, -1, 92, -1, 45, 24, 32, 30, -1, -1, 0, 0, -1, -1, -1],
    [71, -1, 55, -1, 12, 66, 45, 79, -1, 78, -1, -1, 10, -1, 22, 55, 70, 82, -1, -1, 0, 0, -1, -1],
    [38, 61, -1, 66, 9, 73, 48, 64, -1, 39, 61, 43, -1, -1, -1, -1, 95, 32, 0, -1, -1, 0, 0, -1],
    [-1, -1, -1, -1, 32, 52, 55, 80, 95, 22, 6, 51, 24, 90, 44, 20, -1, -1, -1, -1, -1, -1, 0, 0],
    [-1, 63, 31, 88, 20, -1, -1, -1, 6, 40, 56, 16, 71, 53, -1, -1, 27, 26, 48, -1, -1, -1, -1, 0],
];

/// The bundled code in alist form, as shipped in `data/`.
pub const BUNDLED_ALIST: &str = include_str!("../../data/ieee80216e_2304_r34a.alist");

/// Row `r` of block `(i, j)` with shift `s` connects to column `j·z + (r + s) mod z`.
pub fn quasi_cyclic<const C: usize>(base: &[[i32; C]], z: usize) -> Result<ParityCheck> {
    if z == 0 {
        return Err(Error::CodeConstruction("lifting size must be positive".into()));
    }
    let mut rows = Vec::with_capacity(base.len() * z);
    for block_row in base {
        for r in 0..z {
            let row = block_row
                .iter()
                .enumerate()
                .filter(|(_, &s)| s >= 0)
                .map(|(j, &s)| j * z + (r + s as usize) % z)
                .collect();
            rows.push(row);
        }
    }
    ParityCheck::from_rows(C * z, rows)
}

pub fn bundled_code() -> Result<ParityCheck> {
    load_alist(BUNDLED_ALIST)
}
