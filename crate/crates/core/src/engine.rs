//! The slotted simulation loop.
//!
//! Every slot runs the same sequence: idle devices may generate a message,
//! the allocation stack picks who transmits on which RBs, the channel
//! resolves duplicates and outages, and successful devices deliver.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centralized::{
    rach_phase, CentralScheduler, DeviceTruth, RachConfig, RachMode, SchedulerVariant, TypeLearner,
    UplinkRequest,
};
use crate::channel::{resolve_slot, ChannelModel, Outcome, RbAssignment};
use crate::distributed::{
    choose_delegate, kappa, rank_by_future_aoi, sca_step, transmit_decision, Action,
    GameInstance, GameParams, LastRound, NeighborhoodView, ScaDecision, ScaInput,
};
use crate::error::{Error, Result};
use crate::model::{
    activation_step, current_aoi, deliver_success, future_aoi, AoiClock, Device, DeviceClass,
    DeviceType, RbDemand,
};
use crate::planner::plan_message;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    CentralizedNoLearning,
    CentralizedLearning,
    CentralizedFullInfo,
    DistributedSca,
    DistributedRandom,
    DistributedPredetermined,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::CentralizedNoLearning,
        Mode::CentralizedLearning,
        Mode::CentralizedFullInfo,
        Mode::DistributedSca,
        Mode::DistributedRandom,
        Mode::DistributedPredetermined,
    ];

    pub fn scheduler_variant(self) -> Option<SchedulerVariant> {
        match self {
            Mode::CentralizedNoLearning => Some(SchedulerVariant::NoLearning),
            Mode::CentralizedLearning => Some(SchedulerVariant::Learning),
            Mode::CentralizedFullInfo => Some(SchedulerVariant::FullInfo),
            _ => None,
        }
    }

    pub fn is_centralized(self) -> bool {
        self.scheduler_variant().is_some()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::CentralizedNoLearning => "centralized_no_learning",
            Mode::CentralizedLearning => "centralized_learning",
            Mode::CentralizedFullInfo => "centralized_full_info",
            Mode::DistributedSca => "distributed_sca",
            Mode::DistributedRandom => "distributed_random",
            Mode::DistributedPredetermined => "distributed_predetermined",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

/// Everything a run depends on. Two runs with equal configs produce identical
/// records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub n_devices: usize,
    pub n_rbs: usize,
    pub preambles: usize,
    pub rach_mode: RachMode,
    pub slots: u64,
    pub v_a: f64,
    pub m1: f64,
    pub m2: f64,
    pub type1_fraction: f64,
    pub mean_snr_db: f64,
    /// Per-device mean SNR is drawn uniformly in `mean ± spread` dB.
    pub snr_spread_db: f64,
    pub epsilon: f64,
    pub beta: u64,
    pub rho: f64,
    pub gamma: f64,
    pub eta: f64,
    pub zeta: f64,
    pub r_c: f64,
    pub width: f64,
    pub length: f64,
    pub rb_min: usize,
    pub rb_max: usize,
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            mode: Mode::CentralizedLearning,
            n_devices: 200,
            n_rbs: 50,
            preambles: 64,
            rach_mode: RachMode::Thinning,
            slots: 5000,
            v_a: 0.3,
            m1: 0.75,
            m2: 0.75,
            type1_fraction: 0.6,
            mean_snr_db: 20.0,
            snr_spread_db: 0.0,
            epsilon: 1.0,
            beta: 1,
            rho: 2.0,
            gamma: 1.0,
            eta: 0.5,
            zeta: 1.2,
            r_c: 15.0,
            width: 10.0,
            length: 10.0,
            rb_min: 1,
            rb_max: 1,
            warmup_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Threshold that gives single-RB outage probability `p` at `mean_snr_db`.
pub fn epsilon_for_outage(p: f64, mean_snr_db: f64) -> f64 {
    -(-p).ln_1p() * crate::channel::db_to_linear(mean_snr_db)
}

fn as_count(name: &str, value: f64) -> Result<u64> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u64::MAX as f64 {
        Ok(value as u64)
    } else {
        Err(Error::Config(format!("{name} must be a nonnegative integer, got {value}")))
    }
}

impl ScenarioConfig {
    pub fn game_params(&self) -> GameParams {
        GameParams {
            rho: self.rho,
            gamma: self.gamma,
            eta: self.eta,
            zeta: self.zeta,
            r_c: self.r_c,
        }
    }

    pub fn rb_demand(&self) -> RbDemand {
        RbDemand {
            min: self.rb_min,
            max: self.rb_max,
        }
    }

    /// Every device hears every other one.
    pub fn full_information(&self) -> bool {
        self.r_c >= self.width.hypot(self.length)
    }

    /// Sets `epsilon` so that a single RB fails with probability `p`.
    pub fn set_outage(&mut self, p: f64) -> Result<()> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidProbability { name: "p", value: p });
        }
        self.epsilon = epsilon_for_outage(p, self.mean_snr_db);
        Ok(())
    }

    pub fn warmup_slots(&self) -> u64 {
        (self.slots as f64 * self.warmup_fraction).floor() as u64
    }

    /// Names accepted by [`ScenarioConfig::set_param`].
    pub const PARAMS: &'static [&'static str] = &[
        "n_devices", "n_rbs", "preambles", "slots", "v_a", "m1", "m2", "type1_fraction",
        "mean_snr_db", "snr_spread_db", "epsilon", "p", "beta", "rho", "gamma", "eta", "zeta",
        "r_c", "width", "length", "rb_min", "rb_max", "warmup_fraction", "seed",
    ];

    /// Sets a numeric field by name. `p` sets the single-RB outage
    /// probability through `epsilon`.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "n_devices" => self.n_devices = as_count(name, value)? as usize,
            "n_rbs" => self.n_rbs = as_count(name, value)? as usize,
            "preambles" => self.preambles = as_count(name, value)? as usize,
            "slots" => self.slots = as_count(name, value)?,
            "v_a" => self.v_a = value,
            "m1" => self.m1 = value,
            "m2" => self.m2 = value,
            "type1_fraction" => self.type1_fraction = value,
            "mean_snr_db" => self.mean_snr_db = value,
            "snr_spread_db" => self.snr_spread_db = value,
            "epsilon" => self.epsilon = value,
            "p" => self.set_outage(value)?,
            "beta" => self.beta = as_count(name, value)?,
            "rho" => self.rho = value,
            "gamma" => self.gamma = value,
            "eta" => self.eta = value,
            "zeta" => self.zeta = value,
            "r_c" => self.r_c = value,
            "width" => self.width = value,
            "length" => self.length = value,
            "rb_min" => self.rb_min = as_count(name, value)? as usize,
            "rb_max" => self.rb_max = as_count(name, value)? as usize,
            "warmup_fraction" => self.warmup_fraction = value,
            "seed" => self.seed = as_count(name, value)?,
            _ => return Err(Error::UnknownParameter(name.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_devices == 0 || self.n_rbs == 0 || self.slots == 0 || self.preambles == 0 {
            return bad("n_devices, n_rbs, slots and preambles must be at least 1".into());
        }
        for (name, value) in [("v_a", self.v_a), ("type1_fraction", self.type1_fraction)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { name, value });
            }
        }
        for (name, value) in [("m1", self.m1), ("m2", self.m2)] {
            if !(value > 0.5 && value < 1.0) {
                return bad(format!("{name} must lie in (0.5, 1), got {value}"));
            }
        }
        if !(self.width > 0.0 && self.length > 0.0) {
            return bad("width and length must be positive".into());
        }
        if !(self.epsilon >= 0.0) || !self.mean_snr_db.is_finite() || !(self.snr_spread_db >= 0.0) {
            return bad("epsilon and snr_spread_db must be nonnegative, mean_snr_db finite".into());
        }
        if self.beta == 0 {
            return bad("beta must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction must lie in [0, 1), got {}", self.warmup_fraction));
        }
        if self.rb_min == 0 || self.rb_min > self.rb_max || self.rb_max > self.n_rbs {
            return bad(format!(
                "need 1 <= rb_min <= rb_max <= n_rbs, got {}..={} with n_rbs = {}",
                self.rb_min, self.rb_max, self.n_rbs
            ));
        }
        if !self.mode.is_centralized() && self.rb_max > 1 {
            return bad("multi-RB messages are only supported by centralized modes".into());
        }
        self.game_params().validate()
    }
}

/// One row of output per slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    /// Mean delivery AoI over this slot's deliveries.
    pub avg_inst_aoi_slot: Option<f64>,
    /// Mean delivery AoI over all deliveries so far.
    pub avg_inst_aoi_cum: Option<f64>,
    /// Fraction of RBs used by exactly one transmitter.
    pub service_rate: f64,
    pub n_active: usize,
    pub n_transmitting: usize,
    pub rach_failures: usize,
    pub duplicate_failures: usize,
    pub outage_failures: usize,
}

impl SlotRecord {
    pub const FIELDS: [&'static str; 9] = [
        "slot",
        "avg_inst_aoi_slot",
        "avg_inst_aoi_cum",
        "service_rate",
        "n_active",
        "n_transmitting",
        "rach_failures",
        "duplicate_failures",
        "outage_failures",
    ];
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub slots: u64,
    pub warmup_slots: u64,
    pub deliveries: u64,
    /// Mean delivery AoI over the whole run.
    pub mean_aoi: Option<f64>,
    pub deliveries_after_warmup: u64,
    pub mean_aoi_after_warmup: Option<f64>,
    pub mean_service_rate: f64,
    pub mean_service_rate_after_warmup: f64,
    pub rach_failures: u64,
    pub duplicate_failures: u64,
    pub outage_failures: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<SlotRecord>,
    pub summary: Summary,
}

/// Last slot of a distributed run, in game terms.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSnapshot {
    pub actions: Vec<Action>,
    pub game: GameInstance,
}

#[derive(Clone, Copy, Debug, Default)]
struct Accumulator {
    sum: f64,
    count: u64,
    service: f64,
    slots: u64,
}

impl Accumulator {
    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

// Independent random streams, so that e.g. a change in RACH draws does not
// shift the activation sequence.
const STREAM_LAYOUT: u64 = 0;
const STREAM_ACTIVATION: u64 = 1;
const STREAM_RACH: u64 = 2;
const STREAM_CHANNEL: u64 = 3;
const STREAM_DECISIONS: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

enum Stack {
    Centralized {
        scheduler: CentralScheduler,
        rach: RachConfig,
    },
    Distributed {
        last_round: Vec<LastRound>,
        /// Devices within range of each device, self excluded. Empty under
        /// full information, where everyone hears everyone.
        neighbors: Vec<Vec<usize>>,
        full_info: bool,
        snapshot: Option<GameSnapshot>,
    },
}

pub struct Simulation {
    config: ScenarioConfig,
    devices: Vec<Device>,
    channel: ChannelModel,
    stack: Stack,
    slot: u64,
    last_usage: Vec<u32>,
    rng_activation: ChaCha8Rng,
    rng_rach: ChaCha8Rng,
    rng_channel: ChaCha8Rng,
    rng_decisions: ChaCha8Rng,
    all: Accumulator,
    after_warmup: Accumulator,
    totals: [u64; 3],
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mut layout = stream(config.seed, STREAM_LAYOUT);
        let devices: Vec<Device> = (0..config.n_devices)
            .map(|id| {
                let position = (
                    layout.random::<f64>() * config.width,
                    layout.random::<f64>() * config.length,
                );
                let dtype = if layout.random::<f64>() < config.type1_fraction {
                    DeviceType::new(DeviceClass::Type1, config.m1)
                } else {
                    DeviceType::new(DeviceClass::Type2, config.m2)
                }?;
                Ok(Device::new(id, position, dtype))
            })
            .collect::<Result<_>>()?;
        let channel = if config.snr_spread_db > 0.0 {
            ChannelModel::heterogeneous(
                config.n_devices,
                config.mean_snr_db - config.snr_spread_db,
                config.mean_snr_db + config.snr_spread_db,
                config.epsilon,
                &mut layout,
            )?
        } else {
            ChannelModel::from_snr_db(config.mean_snr_db, config.epsilon)?
        };
        let stack = match config.mode.scheduler_variant() {
            Some(variant) => Stack::Centralized {
                scheduler: CentralScheduler::new(
                    variant,
                    config.beta,
                    TypeLearner::new(config.n_devices, config.m1, config.m2, config.type1_fraction),
                ),
                rach: RachConfig {
                    preambles: config.preambles,
                    mode: config.rach_mode,
                },
            },
            None => {
                let full_info = config.full_information();
                let neighbors = if full_info {
                    vec![Vec::new(); devices.len()]
                } else {
                    devices
                        .iter()
                        .map(|d| {
                            devices
                                .iter()
                                .filter(|o| o.id != d.id && d.distance_to(o) <= config.r_c)
                                .map(|o| o.id)
                                .collect()
                        })
                        .collect()
                };
                Stack::Distributed {
                    last_round: vec![LastRound::Silent; devices.len()],
                    neighbors,
                    full_info,
                    snapshot: None,
                }
            }
        };
        Ok(Simulation {
            last_usage: vec![0; config.n_rbs],
            rng_activation: stream(config.seed, STREAM_ACTIVATION),
            rng_rach: stream(config.seed, STREAM_RACH),
            rng_channel: stream(config.seed, STREAM_CHANNEL),
            rng_decisions: stream(config.seed, STREAM_DECISIONS),
            config,
            devices,
            channel,
            stack,
            slot: 0,
            all: Accumulator::default(),
            after_warmup: Accumulator::default(),
            totals: [0; 3],
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    /// Slots simulated so far.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Claimants per RB in the most recent slot.
    pub fn last_usage(&self) -> &[u32] {
        &self.last_usage
    }

    pub fn learner(&self) -> Option<&TypeLearner> {
        match &self.stack {
            Stack::Centralized { scheduler, .. } => Some(scheduler.learner()),
            Stack::Distributed { .. } => None,
        }
    }

    pub fn game_snapshot(&self) -> Option<&GameSnapshot> {
        match &self.stack {
            Stack::Distributed { snapshot, .. } => snapshot.as_ref(),
            Stack::Centralized { .. } => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.slot >= self.config.slots
    }

    /// Advances one slot. Slots are numbered from 1.
    pub fn step(&mut self) -> Result<SlotRecord> {
        self.slot += 1;
        let slot = self.slot;
        let demand = self.config.rb_demand();
        for d in self.devices.iter_mut() {
            *d = activation_step(*d, self.config.v_a, slot, demand, &mut self.rng_activation)?;
        }
        let n_active = self.devices.iter().filter(|d| d.is_active()).count();
        let clock = AoiClock::for_slot(slot, self.config.beta)?;

        let (assignment, rach_failures) = match self.stack {
            Stack::Centralized { .. } => self.allocate_centralized(slot, &clock)?,
            Stack::Distributed { .. } => (self.allocate_distributed(slot, &clock)?, 0),
        };

        let resolution = resolve_slot(&assignment, self.config.n_rbs, &self.channel, &mut self.rng_channel)?;
        let mut delivered = Vec::new();
        for (&(device, outcome), (_, rbs)) in resolution.outcomes.iter().zip(&assignment.entries) {
            if outcome != Outcome::Success {
                continue;
            }
            let d = &mut self.devices[device];
            let msg = d.message.as_mut().ok_or(Error::InactiveDevice(device))?;
            msg.remaining_rbs = msg.remaining_rbs.saturating_sub(rbs.len());
            if msg.remaining_rbs == 0 {
                let (updated, aoi) = deliver_success(*d, clock.now)?;
                *d = updated;
                delivered.push((device, aoi));
            }
        }

        match &mut self.stack {
            Stack::Centralized { scheduler, .. } => {
                for &(device, _) in &delivered {
                    scheduler.on_delivery(device);
                }
            }
            Stack::Distributed { last_round, .. } => {
                last_round.fill(LastRound::Silent);
                for (&(device, outcome), (_, rbs)) in resolution.outcomes.iter().zip(&assignment.entries) {
                    last_round[device] = if outcome == Outcome::Success {
                        LastRound::Success(rbs[0])
                    } else {
                        LastRound::Failure(rbs[0])
                    };
                }
            }
        }

        let service_rate = resolution.service_rate();
        let slot_sum: f64 = delivered.iter().map(|d| d.1).sum();
        let mut accs = vec![&mut self.all];
        if slot > self.config.warmup_slots() {
            accs.push(&mut self.after_warmup);
        }
        for acc in accs {
            acc.sum += slot_sum;
            acc.count += delivered.len() as u64;
            acc.service += service_rate;
            acc.slots += 1;
        }
        let duplicate_failures = resolution.count(Outcome::DuplicateFailure);
        let outage_failures = resolution.count(Outcome::OutageFailure);
        self.totals[0] += rach_failures as u64;
        self.totals[1] += duplicate_failures as u64;
        self.totals[2] += outage_failures as u64;
        self.last_usage = resolution.usage;

        Ok(SlotRecord {
            slot,
            avg_inst_aoi_slot: (!delivered.is_empty()).then(|| slot_sum / delivered.len() as f64),
            avg_inst_aoi_cum: self.all.mean(),
            service_rate,
            n_active,
            n_transmitting: assignment.len(),
            rach_failures,
            duplicate_failures,
            outage_failures,
        })
    }

    fn allocate_centralized(&mut self, slot: u64, clock: &AoiClock) -> Result<(RbAssignment, usize)> {
        let Stack::Centralized { scheduler, rach } = &mut self.stack else {
            unreachable!("centralized allocation on a distributed stack");
        };
        let contenders: Vec<usize> = self.devices.iter().filter(|d| d.is_active()).map(|d| d.id).collect();
        let survivors = rach_phase(&contenders, rach, &mut self.rng_rach);
        let rach_failures = contenders.len() - survivors.len();
        let mut requests = Vec::with_capacity(survivors.len());
        for &id in &survivors {
            let d = &self.devices[id];
            let msg = d.message.ok_or(Error::InactiveDevice(id))?;
            let rbs_needed = if msg.remaining_rbs == 1 {
                1
            } else {
                plan_message(
                    msg.remaining_rbs,
                    msg.aging,
                    &self.channel,
                    id,
                    self.config.n_rbs,
                    slot,
                    msg.gen_slot,
                )?
                .first()
            };
            requests.push(UplinkRequest {
                device: id,
                current_aoi: current_aoi(d, clock)?,
                rbs_needed,
            });
        }
        let truth: Option<Vec<DeviceTruth>> = (scheduler.variant == SchedulerVariant::FullInfo).then(|| {
            self.devices
                .iter()
                .map(|d| DeviceTruth {
                    aging: d.message.map_or(crate::model::AgingKind::Linear, |m| m.aging),
                    class: d.dtype.class(),
                })
                .collect()
        });
        let assignment = scheduler.allocate(slot, &requests, truth.as_deref(), self.config.n_rbs);
        Ok((assignment, rach_failures))
    }

    fn allocate_distributed(&mut self, slot: u64, clock: &AoiClock) -> Result<RbAssignment> {
        let Stack::Distributed {
            last_round,
            neighbors,
            full_info,
            snapshot,
        } = &mut self.stack
        else {
            unreachable!("distributed allocation on a centralized stack");
        };
        let n = self.devices.len();
        let r = self.config.n_rbs;
        let params = self.config.game_params();
        let future: Vec<Option<f64>> = self
            .devices
            .iter()
            .map(|d| d.is_active().then(|| future_aoi(d, clock)).transpose())
            .collect::<Result<_>>()?;
        let unused: Vec<usize> = if slot == 1 {
            (0..r).collect()
        } else {
            (0..r).filter(|&rb| self.last_usage[rb] == 0).collect()
        };
        let everyone: Vec<(usize, f64)> =
            future.iter().enumerate().filter_map(|(i, f)| f.map(|f| (i, f))).collect();
        let in_range = |i: usize, j: usize| *full_info || i == j || neighbors[i].binary_search(&j).is_ok();

        let mut actions = vec![Action::Silent; n];
        match self.config.mode {
            Mode::DistributedPredetermined => {
                for (i, rank) in rank_by_future_aoi(&future).into_iter().enumerate() {
                    if let Some(rank) = rank.filter(|&k| k <= r) {
                        actions[i] = Action::Rb(rank - 1);
                    }
                }
            }
            Mode::DistributedRandom | Mode::DistributedSca => {
                let mut transmit = vec![false; n];
                for i in 0..n {
                    let Some(f) = future[i] else { continue };
                    let view = NeighborhoodView {
                        active: everyone.iter().copied().filter(|&(j, _)| in_range(i, j)).collect(),
                        ..Default::default()
                    };
                    let k = kappa(&view, r, n, self.config.v_a, &params, *full_info);
                    transmit[i] = transmit_decision(f, &view, k);
                }
                if self.config.mode == Mode::DistributedRandom {
                    for i in (0..n).filter(|&i| transmit[i]) {
                        actions[i] = Action::Rb(self.rng_decisions.random_range(0..r));
                    }
                } else {
                    let mut decisions = vec![ScaDecision::Idle; n];
                    for i in 0..n {
                        let claimants = match last_round[i] {
                            LastRound::Failure(rb) => (0..n)
                                .filter(|&j| in_range(i, j) && last_round[j].rb() == Some(rb))
                                .count() as u32,
                            _ => 1,
                        };
                        let input = ScaInput {
                            last: last_round[i],
                            active: future[i].is_some(),
                            transmit: transmit[i],
                            claimants,
                            unused: &unused,
                            n_rbs: r,
                        };
                        decisions[i] = sca_step(&input, &mut self.rng_decisions);
                    }
                    let mut delegated = vec![false; n];
                    for i in 0..n {
                        let ScaDecision::Delegate(rb) = decisions[i] else { continue };
                        let candidates: Vec<(usize, f64)> = everyone
                            .iter()
                            .copied()
                            .filter(|&(j, _)| {
                                j != i
                                    && in_range(i, j)
                                    && !delegated[j]
                                    && matches!(decisions[j], ScaDecision::Draw(_) | ScaDecision::Retry(_))
                            })
                            .collect();
                        if let Some(j) = choose_delegate(&candidates, &mut self.rng_decisions) {
                            decisions[j] = ScaDecision::Keep(rb);
                            delegated[j] = true;
                        }
                    }
                    for i in 0..n {
                        if let Some(rb) = decisions[i].rb() {
                            actions[i] = Action::Rb(rb);
                        }
                    }
                }
            }
            _ => unreachable!("centralized mode on a distributed stack"),
        }

        let mut assignment = RbAssignment::new(slot);
        for (i, a) in actions.iter().enumerate() {
            if let Action::Rb(rb) = a {
                assignment.push(i, vec![*rb]);
            }
        }
        *snapshot = Some(GameSnapshot {
            actions,
            game: GameInstance {
                future_aoi: future,
                n_rbs: r,
                full_information: *full_info,
            },
        });
        Ok(assignment)
    }

    pub fn summary(&self) -> Summary {
        let service = |a: &Accumulator| if a.slots == 0 { 0.0 } else { a.service / a.slots as f64 };
        Summary {
            slots: self.slot,
            warmup_slots: self.config.warmup_slots().min(self.slot),
            deliveries: self.all.count,
            mean_aoi: self.all.mean(),
            deliveries_after_warmup: self.after_warmup.count,
            mean_aoi_after_warmup: self.after_warmup.mean(),
            mean_service_rate: service(&self.all),
            mean_service_rate_after_warmup: service(&self.after_warmup),
            rach_failures: self.totals[0],
            duplicate_failures: self.totals[1],
            outage_failures: self.totals[2],
        }
    }
}

pub fn run(config: ScenarioConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(config)?;
    let mut records = Vec::with_capacity(sim.config.slots as usize);
    while !sim.is_finished() {
        records.push(sim.step()?);
    }
    Ok(RunOutput {
        records,
        summary: sim.summary(),
    })
}

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replicate `replicate` at value index `value_index`. The first
/// replicate of the first value keeps the base seed.
pub fn derive_seed(base: u64, value_index: usize, replicate: usize, replicates: usize) -> u64 {
    let k = (value_index * replicates + replicate) as u64;
    base.wrapping_add(k.wrapping_mul(SEED_STRIDE))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub replicate: usize,
    pub config: ScenarioConfig,
    pub output: RunOutput,
}

/// Runs `replicates` seeded runs per value of `param`, concurrently. Results
/// are ordered by (value, replicate).
pub fn sweep(base: &ScenarioConfig, param: &str, values: &[f64], replicates: usize) -> Result<Vec<SweepPoint>> {
    let mut configs = Vec::with_capacity(values.len() * replicates);
    for (vi, &value) in values.iter().enumerate() {
        for ri in 0..replicates {
            let mut c = base.clone();
            c.set_param(param, value)?;
            c.seed = derive_seed(base.seed, vi, ri, replicates);
            c.validate()?;
            configs.push((value, ri, c));
        }
    }
    configs
        .into_par_iter()
        .map(|(value, replicate, config)| {
            let output = run(config.clone())?;
            Ok(SweepPoint {
                value,
                replicate,
                config,
                output,
            })
        })
        .collect()
}

/// Mean and standard error of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Option<Estimate> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Some(Estimate { mean, std_err, n })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub value: f64,
    /// Replicate means of the post-warm-up delivery AoI.
    pub aoi: Option<Estimate>,
    pub service_rate: Option<Estimate>,
}

/// Collapses replicates per value, keeping the order of first appearance.
pub fn aggregate(points: &[SweepPoint]) -> Vec<Aggregate> {
    let mut values: Vec<f64> = Vec::new();
    for p in points {
        if !values.contains(&p.value) {
            values.push(p.value);
        }
    }
    values
        .into_iter()
        .map(|value| {
            let here: Vec<&SweepPoint> = points.iter().filter(|p| p.value == value).collect();
            let aoi: Vec<f64> = here.iter().filter_map(|p| p.output.summary.mean_aoi_after_warmup).collect();
            let sr: Vec<f64> = here.iter().map(|p| p.output.summary.mean_service_rate_after_warmup).collect();
            Aggregate {
                value,
                aoi: Estimate::from_samples(&aoi),
                service_rate: Estimate::from_samples(&sr),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: Mode) -> ScenarioConfig {
        ScenarioConfig {
            mode,
            n_devices: 1,
            n_rbs: 1,
            v_a: 1.0,
            epsilon: 0.0,
            slots: 100,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn lone_device_delivers_every_slot() {
        for mode in Mode::ALL {
            let out = run(tiny(mode)).unwrap();
            assert_eq!(out.summary.deliveries, 100, "{mode}");
            assert_eq!(out.summary.mean_aoi, Some(1.0), "{mode}");
            assert!(out.records.iter().all(|r| r.avg_inst_aoi_cum == Some(1.0)));
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("fancy".parse::<Mode>().is_err());
    }

    #[test]
    fn validation() {
        let ok = ScenarioConfig::default();
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.v_a = 1.5;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.n_rbs = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.mode = Mode::DistributedSca;
        c.rb_max = 3;
        assert!(c.validate().is_err());
        c.mode = Mode::CentralizedLearning;
        assert!(c.validate().is_ok());
        assert!(Simulation::new(ScenarioConfig { m1: 0.4, ..ok }).is_err());
    }

    #[test]
    fn set_param_names() {
        let mut c = ScenarioConfig::default();
        for name in ScenarioConfig::PARAMS {
            let v = match *name {
                "v_a" | "type1_fraction" | "p" | "warmup_fraction" => 0.2,
                "m1" | "m2" | "eta" => 0.7,
                _ => 3.0,
            };
            c.set_param(name, v).unwrap();
        }
        assert_eq!(
            c.set_param("bogus", 1.0),
            Err(Error::UnknownParameter("bogus".into()))
        );
        assert!(c.set_param("n_rbs", 2.5).is_err());
    }

    #[test]
    fn outage_parameter_sets_epsilon() {
        let mut c = ScenarioConfig::default();
        c.set_outage(0.01).unwrap();
        let m = ChannelModel::from_snr_db(c.mean_snr_db, c.epsilon).unwrap();
        assert!((m.outage_probability(0, 1).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn seeds() {
        assert_eq!(derive_seed(42, 0, 0, 5), 42);
        assert_ne!(derive_seed(42, 0, 1, 5), derive_seed(42, 1, 0, 5));
    }

    #[test]
    fn degenerate_sweep_equals_run() {
        let c = ScenarioConfig {
            slots: 200,
            ..ScenarioConfig::default()
        };
        let s = sweep(&c, "v_a", &[c.v_a], 1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].output, run(c).unwrap());
    }

    #[test]
    fn estimate_stats() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.mean, 2.0);
        assert!((e.std_err - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(Estimate::from_samples(&[]).is_none());
    }
}
