//! Devices, messages and aging functions.
//!
//! Slot bookkeeping follows one convention throughout the crate: a message
//! generated at slot `g` and received during slot `t` is delivered at the
//! *instant* `t + 1` (the end of that slot), so a message that goes through on
//! its first attempt is delivered with age one under either aging function.
//! [`AoiClock::for_slot`] encodes that offset.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the age of a message grows with elapsed slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgingKind {
    /// `t - delta`
    Linear,
    /// `2^(t - delta - 1)`
    Exponential,
}

impl AgingKind {
    /// Age after `elapsed` slots. Continuous in `elapsed` so the planner can
    /// evaluate at fractional expected completion times.
    pub fn age_after(self, elapsed: f64) -> f64 {
        match self {
            AgingKind::Linear => elapsed,
            AgingKind::Exponential => (elapsed - 1.0).exp2(),
        }
    }

    /// Age `extra` slots after a message that currently has age `current`.
    pub fn project(self, current: f64, extra: u64) -> f64 {
        match self {
            AgingKind::Linear => current + extra as f64,
            AgingKind::Exponential => current * (extra as f64).exp2(),
        }
    }
}

/// Age of information at slot `t` for a message generated at `delta`.
///
/// At `t == delta` the exponential form gives `0.5`; the formula is evaluated
/// as written and callers only rely on `t > delta`.
pub fn aoi_value(kind: AgingKind, t: u64, delta: u64) -> Result<f64> {
    if t < delta {
        return Err(Error::SlotBeforeReference {
            t: t as f64,
            reference: delta as f64,
        });
    }
    Ok(kind.age_after((t - delta) as f64))
}

/// [`aoi_value`] at a real-valued instant.
pub fn aoi_value_at(kind: AgingKind, t: f64, delta: f64) -> Result<f64> {
    if t < delta {
        return Err(Error::SlotBeforeReference { t, reference: delta });
    }
    Ok(kind.age_after(t - delta))
}

/// Latent device class. Type 1 devices mostly send linearly aging messages,
/// Type 2 devices mostly exponentially aging ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeviceClass {
    Type1,
    Type2,
}

/// A device class together with its message mix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceType {
    class: DeviceClass,
    p_linear: f64,
}

impl DeviceType {
    /// `majority` is `m_1` for Type 1 and `m_2` for Type 2: the probability of
    /// the class's dominant aging kind. Must lie strictly in `(0.5, 1)`.
    pub fn new(class: DeviceClass, majority: f64) -> Result<Self> {
        if !(majority > 0.5 && majority < 1.0) {
            return Err(Error::Config(format!(
                "dominant aging probability {majority} for {class:?} must lie in (0.5, 1)"
            )));
        }
        let p_linear = match class {
            DeviceClass::Type1 => majority,
            DeviceClass::Type2 => 1.0 - majority,
        };
        Ok(DeviceType { class, p_linear })
    }

    pub fn class(&self) -> DeviceClass {
        self.class
    }

    pub fn p_linear(&self) -> f64 {
        self.p_linear
    }

    pub fn p_exponential(&self) -> f64 {
        1.0 - self.p_linear
    }

    pub fn draw_aging<R: Rng + ?Sized>(&self, rng: &mut R) -> AgingKind {
        if rng.random::<f64>() < self.p_linear {
            AgingKind::Linear
        } else {
            AgingKind::Exponential
        }
    }
}

/// The single pending message of an active device.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Message {
    pub aging: AgingKind,
    /// Resource blocks the message needs in total.
    pub n_rbs: usize,
    /// Resource blocks still to be received.
    pub remaining_rbs: usize,
    pub gen_slot: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Device {
    pub id: usize,
    /// Position in meters inside the deployment rectangle.
    pub position: (f64, f64),
    pub dtype: DeviceType,
    /// Generation slot of the most recently delivered message.
    pub delta: u64,
    pub message: Option<Message>,
}

impl Device {
    pub fn new(id: usize, position: (f64, f64), dtype: DeviceType) -> Self {
        Device {
            id,
            position,
            dtype,
            delta: 0,
            message: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.message.is_some()
    }

    pub fn distance_to(&self, other: &Device) -> f64 {
        let dx = self.position.0 - other.position.0;
        let dy = self.position.1 - other.position.1;
        dx.hypot(dy)
    }
}

/// Evaluation instant plus the future-AoI lookahead.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AoiClock {
    /// Instant at which ages are measured.
    pub now: u64,
    pub beta: u64,
}

impl AoiClock {
    pub fn new(now: u64, beta: u64) -> Result<Self> {
        if beta == 0 {
            return Err(Error::Config("beta must be at least 1".into()));
        }
        Ok(AoiClock { now, beta })
    }

    /// Clock for decisions taken during `slot`: ages are measured at the end
    /// of the slot, which is when a transmission in that slot is received.
    pub fn for_slot(slot: u64, beta: u64) -> Result<Self> {
        Self::new(slot + 1, beta)
    }
}

/// Age of the pending message at the clock's instant.
pub fn current_aoi(device: &Device, clock: &AoiClock) -> Result<f64> {
    let msg = device.message.ok_or(Error::InactiveDevice(device.id))?;
    aoi_value(msg.aging, clock.now, msg.gen_slot)
}

/// Age of the pending message `beta` slots after the clock's instant. This is
/// the priority key of both allocation schemes.
pub fn future_aoi(device: &Device, clock: &AoiClock) -> Result<f64> {
    let msg = device.message.ok_or(Error::InactiveDevice(device.id))?;
    aoi_value(msg.aging, clock.now + clock.beta, msg.gen_slot)
}

/// Range of resource blocks a new message needs, drawn uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbDemand {
    pub min: usize,
    pub max: usize,
}

impl RbDemand {
    pub const SINGLE: RbDemand = RbDemand { min: 1, max: 1 };

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }
}

impl Default for RbDemand {
    fn default() -> Self {
        RbDemand::SINGLE
    }
}

/// Idle devices generate a message at `slot` with probability `v_a`. Active
/// devices keep retransmitting their pending message and are left untouched.
pub fn activation_step<R: Rng + ?Sized>(
    mut device: Device,
    v_a: f64,
    slot: u64,
    demand: RbDemand,
    rng: &mut R,
) -> Result<Device> {
    if !(0.0..=1.0).contains(&v_a) {
        return Err(Error::InvalidProbability {
            name: "v_a",
            value: v_a,
        });
    }
    if device.is_active() || !rng.random_bool(v_a) {
        return Ok(device);
    }
    let aging = device.dtype.draw_aging(rng);
    let n_rbs = demand.draw(rng);
    device.message = Some(Message {
        aging,
        n_rbs,
        remaining_rbs: n_rbs,
        gen_slot: slot,
    });
    Ok(device)
}

/// Completes the pending message at instant `t`. Returns the updated device
/// and the delivery AoI `C_i`.
pub fn deliver_success(mut device: Device, t: u64) -> Result<(Device, f64)> {
    let msg = device.message.ok_or(Error::InactiveDevice(device.id))?;
    let aoi = aoi_value(msg.aging, t, msg.gen_slot)?;
    device.delta = msg.gen_slot;
    device.message = None;
    Ok((device, aoi))
}
