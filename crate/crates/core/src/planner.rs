//! Splitting a multi-RB message between simultaneous and consecutive
//! transmissions.
//!
//! Sending `k` resource blocks at once splits the transmit power `k` ways, so
//! each segment of a plan succeeds with probability `1 - p(k)` and takes
//! `1 / (1 - p(k))` slots in expectation. A plan is a composition of `n_i`
//! into segments of at most `R` blocks; the best plan minimizes the aging
//! function evaluated at `tau + sum of expected segment durations`. Slots with
//! zero blocks only postpone completion, so they are left out of the search.

use std::cmp::Ordering;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::model::{aoi_value_at, AgingKind};

#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionPlan {
    /// Blocks sent in each successive segment. Sums to `n_i`.
    pub splits: Vec<usize>,
    pub expected_slots: f64,
    pub expected_aoi: f64,
}

impl TransmissionPlan {
    /// Blocks to request for the current slot.
    pub fn first(&self) -> usize {
        self.splits[0]
    }
}

/// All compositions of `n` with parts in `1..=max_part`, in lexicographically
/// decreasing order.
pub fn compositions(n: usize, max_part: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=left.min(max_part)).rev() {
            prefix.push(part);
            rec(left - part, max_part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 && max_part > 0 {
        rec(n, max_part, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

pub fn expected_slots(splits: &[usize], model: &ChannelModel, device: usize) -> Result<f64> {
    splits.iter().try_fold(0.0, |acc, &k| {
        let p = model.outage_probability(device, k)?;
        Ok(acc + 1.0 / (1.0 - p))
    })
}

fn nearly_equal(a: f64, b: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-12 * a.abs().max(b.abs()))
}

/// Exhaustive search over compositions. Ties in the objective go to the plan
/// with fewer segments, then to the lexicographically largest split vector.
pub fn plan_message(
    n_i: usize,
    aging: AgingKind,
    model: &ChannelModel,
    device: usize,
    n_rbs: usize,
    tau: u64,
    delta: u64,
) -> Result<TransmissionPlan> {
    if n_i < 1 || n_i > n_rbs {
        return Err(Error::InvalidRbCount {
            requested: n_i,
            max: n_rbs,
        });
    }
    let mut best: Option<TransmissionPlan> = None;
    for splits in compositions(n_i, n_rbs) {
        let slots = expected_slots(&splits, model, device)?;
        let aoi = aoi_value_at(aging, tau as f64 + slots, delta as f64)?;
        let candidate = TransmissionPlan {
            splits,
            expected_slots: slots,
            expected_aoi: aoi,
        };
        best = Some(match best {
            None => candidate,
            Some(current) => {
                if better(&candidate, &current) {
                    candidate
                } else {
                    current
                }
            }
        });
    }
    Ok(best.expect("n_i >= 1 has at least one composition"))
}

fn better(a: &TransmissionPlan, b: &TransmissionPlan) -> bool {
    if !nearly_equal(a.expected_aoi, b.expected_aoi) {
        return a.expected_aoi < b.expected_aoi;
    }
    match a.splits.len().cmp(&b.splits.len()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.splits > b.splits,
    }
}
