//! Stochastic crowd avoidance: keep an RB that worked, leave a crowded one
//! with probability `1 - 1/X`, and pick fresh RBs among those nobody used.

use rand::seq::IndexedRandom;
use rand::Rng;

/// How the device fared in the previous slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LastRound {
    Silent,
    /// The transmission on this RB went through.
    Success(usize),
    /// The transmission failed, by collision or by outage. The device cannot
    /// tell the two apart.
    Failure(usize),
}

impl LastRound {
    pub fn rb(self) -> Option<usize> {
        match self {
            LastRound::Silent => None,
            LastRound::Success(rb) | LastRound::Failure(rb) => Some(rb),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaDecision {
    /// Repeat an RB used alone last slot.
    Keep(usize),
    /// Stay on a crowded RB after a failure.
    Retry(usize),
    /// Fresh uniform draw.
    Draw(usize),
    /// Hand last slot's RB to a neighbor and stay silent.
    Delegate(usize),
    Idle,
}

impl ScaDecision {
    pub fn rb(self) -> Option<usize> {
        match self {
            ScaDecision::Keep(rb) | ScaDecision::Retry(rb) | ScaDecision::Draw(rb) => Some(rb),
            ScaDecision::Delegate(_) | ScaDecision::Idle => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ScaInput<'a> {
    pub last: LastRound,
    pub active: bool,
    /// Outcome of the transmit decision for this slot.
    pub transmit: bool,
    /// Known transmitters on the last RB, self included.
    pub claimants: u32,
    /// RBs unused last slot.
    pub unused: &'a [usize],
    pub n_rbs: usize,
}

/// Uniform over `unused`, or over every RB when `unused` is empty.
pub fn draw_rb<R: Rng + ?Sized>(unused: &[usize], n_rbs: usize, rng: &mut R) -> usize {
    match unused.choose(rng) {
        Some(&rb) => rb,
        None => rng.random_range(0..n_rbs),
    }
}

/// One device's move.
///
/// After a failure the stay probability is `1/X`. A failed device that sees
/// no other claimant within range still assumes the RB was contended, so `X`
/// is taken as at least 2.
pub fn sca_step<R: Rng + ?Sized>(input: &ScaInput<'_>, rng: &mut R) -> ScaDecision {
    match input.last {
        Success(rb) if !input.active => ScaDecision::Delegate(rb),
        _ if !input.transmit => ScaDecision::Idle,
        Success(rb) => ScaDecision::Keep(rb),
        Failure(rb) => {
            let x = input.claimants.max(2);
            if rng.random::<f64>() < 1.0 / x as f64 {
                ScaDecision::Retry(rb)
            } else {
                ScaDecision::Draw(draw_rb(input.unused, input.n_rbs, rng))
            }
        }
        Silent => ScaDecision::Draw(draw_rb(input.unused, input.n_rbs, rng)),
    }
}

use LastRound::{Failure, Silent, Success};

/// Picks a delegate with probability proportional to its future AoI.
/// `candidates` holds `(device, future AoI)`.
pub fn choose_delegate<R: Rng + ?Sized>(candidates: &[(usize, f64)], rng: &mut R) -> Option<usize> {
    let total: f64 = candidates.iter().map(|c| c.1).sum();
    if candidates.is_empty() || !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for &(id, f) in candidates {
        if u < f {
            return Some(id);
        }
        u -= f;
    }
    candidates.last().map(|c| c.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(last: LastRound, active: bool, transmit: bool, unused: &[usize]) -> ScaInput<'_> {
        ScaInput {
            last,
            active,
            transmit,
            claimants: 1,
            unused,
            n_rbs: 8,
        }
    }

    #[test]
    fn winner_keeps_rb() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let d = sca_step(&input(Success(3), true, true, &[0, 1]), &mut rng);
            assert_eq!(d, ScaDecision::Keep(3));
        }
    }

    #[test]
    fn finished_winner_delegates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = sca_step(&input(Success(3), false, false, &[]), &mut rng);
        assert_eq!(d, ScaDecision::Delegate(3));
    }

    #[test]
    fn fresh_transmitter_single_candidate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let d = sca_step(&input(Silent, true, true, &[5]), &mut rng);
            assert_eq!(d, ScaDecision::Draw(5));
        }
    }

    #[test]
    fn empty_unused_set_falls_back_to_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 8];
        for _ in 0..1000 {
            if let ScaDecision::Draw(rb) = sca_step(&input(Silent, true, true, &[]), &mut rng) {
                seen[rb] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn crowded_stay_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let unused = [0, 1, 2];
        let inp = ScaInput {
            claimants: 3,
            ..input(Failure(6), true, true, &unused)
        };
        let trials = 100_000;
        let stays = (0..trials)
            .filter(|_| sca_step(&inp, &mut rng) == ScaDecision::Retry(6))
            .count();
        let frac = stays as f64 / trials as f64;
        assert!((frac - 1.0 / 3.0).abs() < 0.01, "{frac}");
    }

    #[test]
    fn silent_devices_stay_silent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for last in [Silent, Failure(1), Success(1)] {
            assert_eq!(sca_step(&input(last, true, false, &[0]), &mut rng), ScaDecision::Idle);
        }
    }

    #[test]
    fn delegate_weighting() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cands = [(4, 1.0), (7, 3.0)];
        let trials = 40_000;
        let sevens = (0..trials)
            .filter(|_| choose_delegate(&cands, &mut rng) == Some(7))
            .count();
        assert!((sevens as f64 / trials as f64 - 0.75).abs() < 0.01);
        assert_eq!(choose_delegate(&[], &mut rng), None);
    }
}
