//! Self-checks behind `aoisim verify`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::RbAssignment;
use crate::distributed::{
    all_joint_actions, is_nash_equilibrium, random_selection, service_rate_closed_form,
    two_device_table, GameInstance, GameParams,
};
use crate::engine::{derive_seed, Mode, ScenarioConfig, Simulation};
use crate::error::Result;
use crate::pairwise;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Two-device payoff table and its equilibria.
pub fn payoff_table() -> Result<CheckReport> {
    let p = GameParams::default();
    let (r, g, e) = (p.rho, p.gamma, p.eta);
    let expected = [
        [(-g, -g), (r, r), (-(g + e), r)],
        [(r, r), (-g, -g), (-(g + e), r)],
        [(r, -(g + e)), (r, -(g + e)), (-(g + e), -(g + e))],
    ];
    let table = two_device_table(&p);
    let cells = table
        .iter()
        .flatten()
        .zip(expected.iter().flatten())
        .filter(|(a, b)| a == b)
        .count();
    let game = GameInstance::full(vec![Some(1.0), Some(1.0)], 2);
    let mut ne = Vec::new();
    for x in all_joint_actions(2, 2) {
        if is_nash_equilibrium(&x, &game, &p)?.equilibrium {
            ne.push(x.iter().map(|a| a.to_paper()).collect::<Vec<_>>());
        }
    }
    Ok(CheckReport {
        name: "payoff_table",
        passed: cells == 9 && ne == vec![vec![1, 2], vec![2, 1]],
        detail: format!("{cells}/9 cells match, equilibria {ne:?}"),
    })
}

/// Empirical service rate of uniform selection for one `(T, R)`.
pub fn random_service_rate(t: usize, n_rbs: usize, slots: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut singles = 0u64;
    for s in 0..slots {
        let mut a = RbAssignment::new(s);
        for d in 0..t {
            a.push(d, vec![random_selection(n_rbs, &mut rng).rb().unwrap_or(0)]);
        }
        singles += a.usage(n_rbs).iter().filter(|&&u| u == 1).count() as u64;
    }
    singles as f64 / (slots * n_rbs as u64) as f64
}

pub const SERVICE_RATE_CASES: [(usize, usize); 4] = [(2, 2), (10, 50), (50, 50), (200, 50)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ServiceRateRow {
    pub t: usize,
    pub n_rbs: usize,
    pub empirical: f64,
    pub closed_form: f64,
}

pub fn service_rate_table(slots: u64, seed: u64) -> Vec<ServiceRateRow> {
    SERVICE_RATE_CASES
        .iter()
        .enumerate()
        .map(|(i, &(t, r))| ServiceRateRow {
            t,
            n_rbs: r,
            empirical: random_service_rate(t, r, slots, derive_seed(seed, i, 0, 1)),
            closed_form: service_rate_closed_form(t, r),
        })
        .collect()
}

pub fn service_rate(slots: u64, seed: u64) -> CheckReport {
    let rows = service_rate_table(slots, seed);
    let worst = rows
        .iter()
        .map(|r| (r.empirical - r.closed_form).abs())
        .fold(0.0, f64::max);
    CheckReport {
        name: "service_rate",
        passed: worst < 0.01,
        detail: format!("max |empirical - closed form| = {worst:.4} over {slots} slots"),
    }
}

/// Setting of the convergence check: `N = R`, everyone always active, full
/// information, no outage.
pub fn convergence_config(n: usize, slots: u64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        mode: Mode::DistributedSca,
        n_devices: n,
        n_rbs: n,
        v_a: 1.0,
        epsilon: 0.0,
        slots,
        seed,
        ..ScenarioConfig::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRun {
    /// First slot with service rate 1, if any.
    pub converged_at: Option<u64>,
    /// Service rate stayed at 1 after first reaching it.
    pub held: bool,
    pub terminal_equilibrium: bool,
    /// Unused RBs per slot.
    pub unused: Vec<usize>,
}

pub fn convergence_run(n: usize, slots: u64, seed: u64) -> Result<ConvergenceRun> {
    let mut sim = Simulation::new(convergence_config(n, slots, seed))?;
    let mut converged_at = None;
    let mut held = true;
    let mut unused = Vec::with_capacity(slots as usize);
    while !sim.is_finished() {
        let rec = sim.step()?;
        unused.push(sim.last_usage().iter().filter(|&&u| u == 0).count());
        match (converged_at, rec.service_rate == 1.0) {
            (None, true) => converged_at = Some(rec.slot),
            (Some(_), false) => held = false,
            _ => {}
        }
    }
    let snap = sim.game_snapshot().expect("distributed run has a snapshot");
    let terminal_equilibrium =
        is_nash_equilibrium(&snap.actions, &snap.game, &sim.config().game_params())?.equilibrium;
    Ok(ConvergenceRun {
        converged_at,
        held,
        terminal_equilibrium,
        unused,
    })
}

pub fn convergence(runs: usize, seed: u64) -> Result<CheckReport> {
    let mut ok = 0;
    for i in 0..runs {
        let r = convergence_run(50, 200, derive_seed(seed, 0, i, runs))?;
        if r.converged_at.is_some() && r.held && r.terminal_equilibrium {
            ok += 1;
        }
    }
    Ok(CheckReport {
        name: "convergence",
        passed: ok * 100 >= runs * 99,
        detail: format!("{ok}/{runs} runs reached service rate 1 within 200 slots and ended in equilibrium"),
    })
}

/// Future-AoI versus current-AoI service of two devices on one RB.
pub fn pairwise_policies() -> Result<CheckReport> {
    let mut disagreements = 0;
    let mut violations = 0;
    for beta in 1..=3u64 {
        for o in pairwise::enumerate(32, beta)? {
            let threshold = beta as f64 / ((1u64 << beta) - 1) as f64;
            if o.future_policy_avg > o.current_policy_avg {
                violations += 1;
            }
            if o.disagree {
                disagreements += 1;
                if !(o.future_policy_avg < o.current_policy_avg && o.exponential_aoi > threshold) {
                    violations += 1;
                }
            }
        }
    }
    Ok(CheckReport {
        name: "pairwise_policies",
        passed: violations == 0,
        detail: format!("{disagreements} disagreements, {violations} violations"),
    })
}

pub fn run_all(seed: u64) -> Result<Vec<CheckReport>> {
    Ok(vec![
        payoff_table()?,
        service_rate(10_000, seed),
        convergence(100, seed)?,
        pairwise_policies()?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        assert!(payoff_table().unwrap().passed);
        assert!(pairwise_policies().unwrap().passed);
        let r = convergence_run(10, 200, 3).unwrap();
        assert!(r.converged_at.is_some() && r.held && r.terminal_equilibrium);
    }
}
