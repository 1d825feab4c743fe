//! Base-station scheduling: RACH request phase, aging-function
//! identification, device-type learning and future-AoI priority scheduling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::RbAssignment;
use crate::model::{AgingKind, DeviceClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RachMode {
    /// Each contender independently survives with probability `1 - c_t`.
    Thinning,
    /// Each contender draws a preamble; only unique preambles survive.
    Preambles,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RachConfig {
    pub preambles: usize,
    pub mode: RachMode,
}

impl Default for RachConfig {
    fn default() -> Self {
        RachConfig {
            preambles: 64,
            mode: RachMode::Thinning,
        }
    }
}

/// Probability that a given contender's preamble is also picked by one of
/// the other `n_active - 1` contenders.
pub fn collision_probability(n_active: usize, preambles: usize) -> f64 {
    if n_active <= 1 {
        return 0.0;
    }
    let keep = (preambles as f64 - 1.0) / preambles as f64;
    1.0 - keep.powi(n_active as i32 - 1)
}

/// Returns the contenders whose request gets through, in input order.
pub fn rach_phase<T: Copy, R: Rng + ?Sized>(
    contenders: &[T],
    config: &RachConfig,
    rng: &mut R,
) -> Vec<T> {
    match config.mode {
        RachMode::Thinning => {
            let c = collision_probability(contenders.len(), config.preambles);
            contenders
                .iter()
                .copied()
                .filter(|_| rng.random::<f64>() >= c)
                .collect()
        }
        RachMode::Preambles => {
            let picks: Vec<usize> = contenders
                .iter()
                .map(|_| rng.random_range(0..config.preambles))
                .collect();
            let mut hits = vec![0u32; config.preambles];
            for &p in &picks {
                hits[p] += 1;
            }
            contenders
                .iter()
                .zip(&picks)
                .filter(|(_, &p)| hits[p] == 1)
                .map(|(c, _)| *c)
                .collect()
        }
    }
}

/// What a device reports after a successful RACH attempt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UplinkRequest {
    pub device: usize,
    /// Age of the pending message at the end of the current slot.
    pub current_aoi: f64,
    pub rbs_needed: usize,
}

fn is_power_of_two_value(c: f64) -> bool {
    c >= 1.0 && c.fract() == 0.0 && (c as u64).is_power_of_two()
}

/// Determines the aging function of a pending message from its reported age,
/// or returns `None` when both functions could have produced the report.
///
/// `history` is the (slot, age) of the previous request for the same message.
pub fn identify_aging(current_aoi: f64, slot: u64, history: Option<(u64, f64)>) -> Option<AgingKind> {
    // Ages 3, 5, 6, 7, 9, ... are unreachable by the exponential function.
    if current_aoi.fract() == 0.0 && current_aoi >= 1.0 && !is_power_of_two_value(current_aoi) {
        return Some(AgingKind::Linear);
    }
    let (prev_slot, prev_aoi) = history?;
    if slot <= prev_slot {
        return None;
    }
    let gap = slot - prev_slot;
    let linear = AgingKind::Linear.project(prev_aoi, gap) == current_aoi;
    let exponential = AgingKind::Exponential.project(prev_aoi, gap) == current_aoi;
    match (linear, exponential) {
        (true, false) => Some(AgingKind::Linear),
        (false, true) => Some(AgingKind::Exponential),
        _ => None,
    }
}

/// Maximum-likelihood type estimate from identified aging-kind counts.
/// Equal likelihoods go to Type 2, the faster-aging class.
pub fn learn_type(k_linear: u32, k_exponential: u32, m1: f64, m2: f64) -> DeviceClass {
    let ll = |p_lin: f64| {
        k_linear as f64 * p_lin.ln() + k_exponential as f64 * (1.0 - p_lin).ln()
    };
    let type1 = ll(m1);
    let type2 = ll(1.0 - m2);
    if type1 > type2 + 1e-12 * type2.abs().max(1.0) {
        DeviceClass::Type1
    } else {
        DeviceClass::Type2
    }
}

/// Expected age one slot ahead for a message of unknown aging kind whose
/// device is believed to be of class `class`.
pub fn expected_future_aoi(current_aoi: f64, class: DeviceClass, m1: f64, m2: f64) -> f64 {
    let p_linear = match class {
        DeviceClass::Type1 => m1,
        DeviceClass::Type2 => 1.0 - m2,
    };
    expected_future_aoi_with(current_aoi, p_linear, 1)
}

/// Expected age `beta` slots ahead when the message ages linearly with
/// probability `p_linear`.
pub fn expected_future_aoi_with(current_aoi: f64, p_linear: f64, beta: u64) -> f64 {
    p_linear * AgingKind::Linear.project(current_aoi, beta)
        + (1.0 - p_linear) * AgingKind::Exponential.project(current_aoi, beta)
}

/// Per-device counts of identified aging kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeLearner {
    counts: Vec<(u32, u32)>,
    pub m1: f64,
    pub m2: f64,
    /// Prior probability that a device is of Type 1.
    pub type1_fraction: f64,
}

impl TypeLearner {
    pub fn new(n_devices: usize, m1: f64, m2: f64, type1_fraction: f64) -> Self {
        TypeLearner {
            counts: vec![(0, 0); n_devices],
            m1,
            m2,
            type1_fraction,
        }
    }

    pub fn observe(&mut self, device: usize, kind: AgingKind) {
        let c = &mut self.counts[device];
        match kind {
            AgingKind::Linear => c.0 += 1,
            AgingKind::Exponential => c.1 += 1,
        }
    }

    /// `(k_linear, k_exponential)`
    pub fn counts(&self, device: usize) -> (u32, u32) {
        self.counts[device]
    }

    pub fn observations(&self, device: usize) -> u32 {
        let (a, b) = self.counts[device];
        a + b
    }

    /// `None` until at least one aging kind has been identified.
    pub fn estimate(&self, device: usize) -> Option<DeviceClass> {
        let (lin, exp) = self.counts[device];
        (lin + exp > 0).then(|| learn_type(lin, exp, self.m1, self.m2))
    }

    pub fn p_linear(&self, class: DeviceClass) -> f64 {
        match class {
            DeviceClass::Type1 => self.m1,
            DeviceClass::Type2 => 1.0 - self.m2,
        }
    }

    /// Probability of a linear message under the type prior alone.
    pub fn marginal_p_linear(&self) -> f64 {
        self.type1_fraction * self.m1 + (1.0 - self.type1_fraction) * (1.0 - self.m2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerVariant {
    /// Priority from the type prior only.
    NoLearning,
    /// Identification plus maximum-likelihood type learning.
    Learning,
    /// Exact aging functions and types.
    FullInfo,
}

/// Scheduling key for one request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Priority {
    pub device: usize,
    pub key: f64,
    /// Lower goes first among equal keys: 0 for (estimated) Type 2,
    /// 1 for unknown, 2 for Type 1.
    pub class_rank: u8,
    pub rbs_needed: usize,
}

pub fn class_rank(class: Option<DeviceClass>) -> u8 {
    match class {
        Some(DeviceClass::Type2) => 0,
        None => 1,
        Some(DeviceClass::Type1) => 2,
    }
}

/// Serves requests in decreasing key order, giving each `min(left, needed)`
/// consecutive blocks until the blocks run out.
pub fn schedule(mut priorities: Vec<Priority>, n_rbs: usize, slot: u64) -> RbAssignment {
    priorities.sort_by(|a, b| {
        b.key
            .total_cmp(&a.key)
            .then(a.class_rank.cmp(&b.class_rank))
            .then(a.device.cmp(&b.device))
    });
    let mut assignment = RbAssignment::new(slot);
    let mut next = 0;
    for p in priorities {
        if next >= n_rbs {
            break;
        }
        let take = p.rbs_needed.min(n_rbs - next);
        if take == 0 {
            continue;
        }
        assignment.push(p.device, (next..next + take).collect());
        next += take;
    }
    assignment
}

/// Ground truth handed to the full-information variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceTruth {
    pub aging: AgingKind,
    pub class: DeviceClass,
}

/// Base-station state carried across slots.
#[derive(Clone, Debug)]
pub struct CentralScheduler {
    pub variant: SchedulerVariant,
    pub beta: u64,
    learner: TypeLearner,
    /// Last (slot, age) request seen for each device's pending message.
    history: Vec<Option<(u64, f64)>>,
    /// Aging kind of each pending message once identified.
    known: Vec<Option<AgingKind>>,
}

impl CentralScheduler {
    pub fn new(variant: SchedulerVariant, beta: u64, learner: TypeLearner) -> Self {
        let n = learner.counts.len();
        CentralScheduler {
            variant,
            beta,
            learner,
            history: vec![None; n],
            known: vec![None; n],
        }
    }

    pub fn learner(&self) -> &TypeLearner {
        &self.learner
    }

    /// Computes priority keys. `truth` is consulted only by
    /// [`SchedulerVariant::FullInfo`], indexed by device id.
    pub fn prioritize(
        &mut self,
        slot: u64,
        requests: &[UplinkRequest],
        truth: Option<&[DeviceTruth]>,
    ) -> Vec<Priority> {
        requests
            .iter()
            .map(|req| {
                let (key, class_rank) = self.key_for(slot, req, truth);
                Priority {
                    device: req.device,
                    key,
                    class_rank,
                    rbs_needed: req.rbs_needed,
                }
            })
            .collect()
    }

    fn key_for(&mut self, slot: u64, req: &UplinkRequest, truth: Option<&[DeviceTruth]>) -> (f64, u8) {
        let c = req.current_aoi;
        match self.variant {
            SchedulerVariant::NoLearning => {
                let p = self.learner.marginal_p_linear();
                (expected_future_aoi_with(c, p, self.beta), class_rank(None))
            }
            SchedulerVariant::FullInfo => {
                let t = truth.expect("full-information scheduling needs ground truth")[req.device];
                (t.aging.project(c, self.beta), class_rank(Some(t.class)))
            }
            SchedulerVariant::Learning => {
                let d = req.device;
                let identified = identify_aging(c, slot, self.history[d]);
                self.history[d] = Some((slot, c));
                if let Some(kind) = identified {
                    // one observation per message
                    if self.known[d].is_none() {
                        self.learner.observe(d, kind);
                        self.known[d] = Some(kind);
                    }
                }
                let estimate = self.learner.estimate(d);
                let key = match self.known[d] {
                    Some(kind) => kind.project(c, self.beta),
                    None => {
                        let p = estimate
                            .map(|class| self.learner.p_linear(class))
                            .unwrap_or_else(|| self.learner.marginal_p_linear());
                        expected_future_aoi_with(c, p, self.beta)
                    }
                };
                (key, class_rank(estimate))
            }
        }
    }

    pub fn allocate(
        &mut self,
        slot: u64,
        requests: &[UplinkRequest],
        truth: Option<&[DeviceTruth]>,
        n_rbs: usize,
    ) -> RbAssignment {
        let priorities = self.prioritize(slot, requests, truth);
        schedule(priorities, n_rbs, slot)
    }

    /// The base station received the full message: the next request from this
    /// device is about a new message.
    pub fn on_delivery(&mut self, device: usize) {
        self.history[device] = None;
        self.known[device] = None;
    }
}
