//! Two devices, one RB, no outage: compare serving by current AoI with
//! serving by future AoI.
//!
//! One device ages linearly and the other exponentially. Whichever policy is
//! used, the winner delivers now and the loser delivers `beta` slots later.
//! Equal keys go to the exponential device under both policies.

use crate::error::Result;
use crate::model::{aoi_value, AgingKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairwiseOutcome {
    /// Current AoI of the linear device.
    pub linear_aoi: f64,
    /// Current AoI of the exponential device.
    pub exponential_aoi: f64,
    pub beta: u64,
    pub current_policy_avg: f64,
    pub future_policy_avg: f64,
    /// The two policies serve different devices first.
    pub disagree: bool,
}

/// Which device gets the RB at `tau` when ranking by age at `tau + lookahead`.
fn serves_exponential(tau: u64, delta_lin: u64, delta_exp: u64, lookahead: u64) -> Result<bool> {
    let a = aoi_value(AgingKind::Linear, tau + lookahead, delta_lin)?;
    let b = aoi_value(AgingKind::Exponential, tau + lookahead, delta_exp)?;
    Ok(b >= a)
}

fn average_delivery(tau: u64, delta_lin: u64, delta_exp: u64, beta: u64, exp_first: bool) -> Result<f64> {
    let (t_lin, t_exp) = if exp_first { (tau + beta, tau) } else { (tau, tau + beta) };
    let a = aoi_value(AgingKind::Linear, t_lin, delta_lin)?;
    let b = aoi_value(AgingKind::Exponential, t_exp, delta_exp)?;
    Ok((a + b) / 2.0)
}

pub fn compare_policies(tau: u64, delta_lin: u64, delta_exp: u64, beta: u64) -> Result<PairwiseOutcome> {
    let by_current = serves_exponential(tau, delta_lin, delta_exp, 0)?;
    let by_future = serves_exponential(tau, delta_lin, delta_exp, beta)?;
    Ok(PairwiseOutcome {
        linear_aoi: aoi_value(AgingKind::Linear, tau, delta_lin)?,
        exponential_aoi: aoi_value(AgingKind::Exponential, tau, delta_exp)?,
        beta,
        current_policy_avg: average_delivery(tau, delta_lin, delta_exp, beta, by_current)?,
        future_policy_avg: average_delivery(tau, delta_lin, delta_exp, beta, by_future)?,
        disagree: by_current != by_future,
    })
}

/// Every start with both current ages in `1..=max_aoi`.
pub fn enumerate(max_aoi: u64, beta: u64) -> Result<Vec<PairwiseOutcome>> {
    // exponential ages 2^(k-1) <= max_aoi
    let max_exp_elapsed = (u64::BITS - max_aoi.leading_zeros()) as u64;
    let tau = max_aoi.max(max_exp_elapsed);
    let mut out = Vec::new();
    for a in 1..=max_aoi {
        for k in 1..=max_exp_elapsed {
            out.push(compare_policies(tau, tau - a, tau - k, beta)?);
        }
    }
    Ok(out)
}
