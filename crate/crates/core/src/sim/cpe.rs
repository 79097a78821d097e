//! How often does the common phase error alone break a symbol decision?

use std::fmt::Write as _;

use serde::Serialize;

use crate::phn::{cpe_tail_probability, cpe_variance, PhnParams, Tail};
use crate::qam::Constellation;
use crate::{Error, Result, C64};

/// Fraction of the `order` constellation points that leave their own
/// decision region when rotated by `angle` without noise.
pub fn rotation_ser(order: usize, angle: f64) -> Result<f64> {
    if !angle.is_finite() {
        return Err(Error::InvalidParameter(format!("angle must be finite, got {angle}")));
    }
    let c = Constellation::new(order)?;
    let turn = C64::from_polar(1.0, angle);
    let points = c.points();
    let wrong = points
        .iter()
        .filter(|(p, _)| {
            let q = p * turn;
            c.slice_level(q.re) != p.re || c.slice_level(q.im) != p.im
        })
        .count();
    Ok(wrong as f64 / points.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpeReport {
    pub n_subcarriers: usize,
    pub order: usize,
    pub sigma_theta_deg: f64,
    pub omega_3db: f64,
    pub t_sample: f64,
    pub correlation: f64,
    pub angle_deg: f64,
    pub cpe_variance: f64,
    pub cpe_std_deg: f64,
    /// `P(θ̄ > angle)`.
    pub tail_one_sided: f64,
    /// `P(|θ̄| > angle)`.
    pub tail_two_sided: f64,
    pub rotation_ser: f64,
}

pub fn cpe_report(params: &PhnParams, n: usize, order: usize, angle: f64) -> Result<CpeReport> {
    let var = cpe_variance(params, n)?;
    Ok(CpeReport {
        n_subcarriers: n,
        order,
        sigma_theta_deg: params.sigma_theta.to_degrees(),
        omega_3db: params.omega_3db,
        t_sample: params.t_sample,
        correlation: params.correlation(),
        angle_deg: angle.to_degrees(),
        cpe_variance: var,
        cpe_std_deg: var.sqrt().to_degrees(),
        tail_one_sided: cpe_tail_probability(params, n, angle, Tail::OneSided)?,
        tail_two_sided: cpe_tail_probability(params, n, angle, Tail::TwoSided)?,
        rotation_ser: rotation_ser(order, angle)?,
    })
}

impl CpeReport {
    /// Two-column `quantity  value` table.
    pub fn to_table(&self) -> String {
        let rows: [(&str, String); 12] = [
            ("subcarriers", self.n_subcarriers.to_string()),
            ("constellation", format!("{}-QAM", self.order)),
            ("sigma_theta_deg", format!("{:.4}", self.sigma_theta_deg)),
            ("omega_3db_hz", format!("{}", self.omega_3db)),
            ("t_sample_s", format!("{:e}", self.t_sample)),
            ("lag1_correlation", format!("{:.6}", self.correlation)),
            ("angle_deg", format!("{}", self.angle_deg)),
            ("cpe_variance_rad2", format!("{:.6e}", self.cpe_variance)),
            ("cpe_std_deg", format!("{:.4}", self.cpe_std_deg)),
            ("tail_probability_one_sided", format!("{:.3e}", self.tail_one_sided)),
            ("tail_probability_two_sided", format!("{:.3e}", self.tail_two_sided)),
            ("rotation_ser", format!("{:.4}", self.rotation_ser)),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            writeln!(out, "{k:<28} {v}").unwrap();
        }
        out
    }
}
