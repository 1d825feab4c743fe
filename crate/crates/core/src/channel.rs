//! Rayleigh-fading outage model and per-slot transmission resolution.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Received-power and noise statistics shared by all devices, with an
/// optional per-device override of the mean SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    /// Mean received signal power.
    pub lambda_inv: f64,
    /// Noise variance.
    pub sigma2: f64,
    /// SNR threshold below which a transmission is lost.
    pub epsilon: f64,
    pub per_device_mean_snr: Option<Vec<f64>>,
}

impl ChannelModel {
    pub fn new(lambda_inv: f64, sigma2: f64, epsilon: f64) -> Result<Self> {
        if !(lambda_inv > 0.0) || !(sigma2 > 0.0) || !(epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "channel needs lambda_inv > 0, sigma2 > 0, epsilon >= 0 \
                 (got {lambda_inv}, {sigma2}, {epsilon})"
            )));
        }
        Ok(ChannelModel {
            lambda_inv,
            sigma2,
            epsilon,
            per_device_mean_snr: None,
        })
    }

    /// Unit noise variance with the mean received power set to the given SNR.
    pub fn from_snr_db(mean_snr_db: f64, epsilon: f64) -> Result<Self> {
        Self::new(db_to_linear(mean_snr_db), 1.0, epsilon)
    }

    /// Per-device mean SNRs drawn uniformly in dB between `lo_db` and `hi_db`.
    pub fn heterogeneous<R: Rng + ?Sized>(
        n_devices: usize,
        lo_db: f64,
        hi_db: f64,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(lo_db <= hi_db) {
            return Err(Error::Config(format!(
                "SNR range [{lo_db}, {hi_db}] dB is empty"
            )));
        }
        let mid = 0.5 * (lo_db + hi_db);
        let snrs = (0..n_devices)
            .map(|_| db_to_linear(lo_db + (hi_db - lo_db) * rng.random::<f64>()))
            .collect();
        Ok(Self::from_snr_db(mid, epsilon)?.with_per_device_snr(snrs))
    }

    pub fn with_per_device_snr(mut self, snrs: Vec<f64>) -> Self {
        self.per_device_mean_snr = Some(snrs);
        self
    }

    pub fn mean_snr(&self, device: usize) -> f64 {
        self.per_device_mean_snr
            .as_ref()
            .and_then(|v| v.get(device).copied())
            .unwrap_or(self.lambda_inv / self.sigma2)
    }

    /// Probability that `device` loses a transmission spread over
    /// `simultaneous` resource blocks (transmit power is split evenly).
    pub fn outage_probability(&self, device: usize, simultaneous: usize) -> Result<f64> {
        if simultaneous == 0 {
            return Err(Error::InvalidRbCount {
                requested: 0,
                max: usize::MAX,
            });
        }
        let x = simultaneous as f64 * self.epsilon / self.mean_snr(device);
        Ok(-(-x).exp_m1())
    }
}

/// Resource blocks claimed by each transmitting device in one slot.
/// Indices run over `0..R`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RbAssignment {
    pub slot: u64,
    pub entries: Vec<(usize, Vec<usize>)>,
}

impl RbAssignment {
    pub fn new(slot: u64) -> Self {
        RbAssignment {
            slot,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, device: usize, rbs: Vec<usize>) {
        self.entries.push((device, rbs));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self, n_rbs: usize) -> Result<()> {
        let mut seen = HashSet::new();
        for (device, rbs) in &self.entries {
            if !seen.insert(*device) {
                return Err(Error::MalformedAssignment(format!(
                    "device {device} listed twice"
                )));
            }
            if rbs.is_empty() {
                return Err(Error::MalformedAssignment(format!(
                    "device {device} has an empty RB set"
                )));
            }
            let mut own = HashSet::new();
            for &rb in rbs {
                if rb >= n_rbs {
                    return Err(Error::MalformedAssignment(format!(
                        "RB {rb} out of range for R = {n_rbs}"
                    )));
                }
                if !own.insert(rb) {
                    return Err(Error::MalformedAssignment(format!(
                        "device {device} lists RB {rb} twice"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of claimants per resource block.
    pub fn usage(&self, n_rbs: usize) -> Vec<u32> {
        let mut usage = vec![0u32; n_rbs];
        for (_, rbs) in &self.entries {
            for &rb in rbs {
                usage[rb] += 1;
            }
        }
        usage
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    /// At least one of the device's resource blocks had another claimant.
    DuplicateFailure,
    /// SNR fell below the threshold.
    OutageFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotResolution {
    /// One outcome per assignment entry, in assignment order.
    pub outcomes: Vec<(usize, Outcome)>,
    pub usage: Vec<u32>,
}

impl SlotResolution {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.outcomes.iter().filter(|(_, o)| *o == outcome).count()
    }

    /// Fraction of resource blocks with exactly one claimant.
    pub fn service_rate(&self) -> f64 {
        if self.usage.is_empty() {
            return 0.0;
        }
        let single = self.usage.iter().filter(|&&u| u == 1).count();
        single as f64 / self.usage.len() as f64
    }

    pub fn unused_rbs(&self) -> usize {
        self.usage.iter().filter(|&&u| u == 0).count()
    }
}

/// Resolves duplicate usage, then draws an independent outage per surviving
/// device. A multi-RB transmission succeeds or fails as a whole.
pub fn resolve_slot<R: Rng + ?Sized>(
    assignment: &RbAssignment,
    n_rbs: usize,
    model: &ChannelModel,
    rng: &mut R,
) -> Result<SlotResolution> {
    assignment.validate(n_rbs)?;
    let usage = assignment.usage(n_rbs);
    let mut outcomes = Vec::with_capacity(assignment.len());
    for (device, rbs) in &assignment.entries {
        let outcome = if rbs.iter().any(|&rb| usage[rb] > 1) {
            Outcome::DuplicateFailure
        } else {
            let p = model.outage_probability(*device, rbs.len())?;
            if rng.random::<f64>() < p {
                Outcome::OutageFailure
            } else {
                Outcome::Success
            }
        };
        outcomes.push((*device, outcome));
    }
    Ok(SlotResolution { outcomes, usage })
}
