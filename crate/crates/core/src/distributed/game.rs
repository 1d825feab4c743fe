use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    /// Payoff for transmitting alone on an RB.
    pub rho: f64,
    /// Penalty for sharing an RB.
    pub gamma: f64,
    /// Offset applied to the not-transmitting payoffs, in `(0, 1)`.
    pub eta: f64,
    /// Inflation factor on `N v_a` when estimating the number of active devices.
    pub zeta: f64,
    /// Communication range in meters.
    pub r_c: f64,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            rho: 2.0,
            gamma: 1.0,
            eta: 0.5,
            zeta: 1.2,
            r_c: 15.0,
        }
    }
}

impl GameParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.rho > self.gamma) {
            return Err(Error::Config(format!(
                "payoffs need rho > gamma > 0, got rho = {}, gamma = {}",
                self.rho, self.gamma
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.zeta > 0.0) {
            return Err(Error::Config(format!("zeta must be positive, got {}", self.zeta)));
        }
        if !(self.r_c >= 0.0) {
            return Err(Error::Config(format!("r_c must be nonnegative, got {}", self.r_c)));
        }
        Ok(())
    }
}

/// A device's choice in one round. RB indices are 0-based; use
/// [`Action::from_paper`] for the 1-based convention where 0 means silence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Silent,
    Rb(usize),
}

impl Action {
    pub fn from_paper(value: usize) -> Action {
        match value {
            0 => Action::Silent,
            k => Action::Rb(k - 1),
        }
    }

    pub fn to_paper(self) -> usize {
        match self {
            Action::Silent => 0,
            Action::Rb(k) => k + 1,
        }
    }

    pub fn rb(self) -> Option<usize> {
        match self {
            Action::Silent => None,
            Action::Rb(k) => Some(k),
        }
    }
}

/// What device `i` knows at the start of a slot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborhoodView {
    /// Active devices within range, self included, with their future AoI.
    pub active: Vec<(usize, f64)>,
    /// Transmitters within range seen on each RB last slot, self included.
    pub rb_counts: Vec<u32>,
    /// RBs nobody used last slot.
    pub unused: Vec<usize>,
}

impl NeighborhoodView {
    pub fn future_aois(&self) -> impl Iterator<Item = f64> + '_ {
        self.active.iter().map(|&(_, f)| f)
    }

    /// `A_i(k)`, the k-th largest known future AoI (1-based, clamped).
    pub fn kth_largest(&self, k: usize) -> f64 {
        kth_largest(self.future_aois().collect(), k)
    }
}

/// k-th largest value (1-based), with `k` clamped to `1..=len`.
/// Panics on an empty set.
pub fn kth_largest(mut values: Vec<f64>, k: usize) -> f64 {
    assert!(!values.is_empty(), "k-th largest of an empty set");
    let k = k.clamp(1, values.len());
    let (_, v, _) = values.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    *v
}

/// Rank threshold for the transmit decision.
///
/// With full information every device sees all actives and `kappa = R`.
/// Otherwise the device scales `R` by the fraction of the estimated
/// `N v_a zeta` active devices it can see.
pub fn kappa(
    view: &NeighborhoodView,
    n_rbs: usize,
    n_devices: usize,
    v_a: f64,
    params: &GameParams,
    full_info: bool,
) -> usize {
    if full_info {
        return n_rbs;
    }
    let seen = view.active.len().max(1);
    let estimate = n_devices as f64 * v_a * params.zeta;
    if estimate <= 0.0 {
        return seen;
    }
    let k = (n_rbs as f64 * seen as f64 / estimate).ceil();
    (k as usize).clamp(1, seen)
}

/// Transmit iff the device's future AoI reaches the kappa-th largest it knows.
pub fn transmit_decision(future_aoi: f64, view: &NeighborhoodView, kappa: usize) -> bool {
    future_aoi >= view.kth_largest(kappa)
}

/// What a device brings to the payoff computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Participant {
    Inactive,
    /// `threshold` is `A_i(kappa)`.
    Active { future_aoi: f64, threshold: f64 },
}

impl Participant {
    pub fn should_transmit(&self) -> bool {
        match *self {
            Participant::Inactive => false,
            Participant::Active { future_aoi, threshold } => future_aoi >= threshold,
        }
    }
}

pub fn silent_payoff(who: Participant, params: &GameParams) -> f64 {
    if who.should_transmit() {
        -(params.gamma + params.eta)
    } else {
        params.rho + params.eta
    }
}

/// Payoff of device `i` under the joint action vector.
pub fn payoff(actions: &[Action], i: usize, who: Participant, params: &GameParams) -> f64 {
    match actions[i] {
        Action::Silent => silent_payoff(who, params),
        Action::Rb(rb) => {
            let shared = actions
                .iter()
                .enumerate()
                .any(|(j, &a)| j != i && a == Action::Rb(rb));
            if shared {
                -params.gamma
            } else {
                params.rho
            }
        }
    }
}

/// One round of the game seen with full information.
#[derive(Clone, Debug, PartialEq)]
pub struct GameInstance {
    /// Future AoI per device, `None` when inactive.
    pub future_aoi: Vec<Option<f64>>,
    pub n_rbs: usize,
    pub full_information: bool,
}

impl GameInstance {
    pub fn full(future_aoi: Vec<Option<f64>>, n_rbs: usize) -> Self {
        GameInstance {
            future_aoi,
            n_rbs,
            full_information: true,
        }
    }

    /// `A(R)` over all active devices, `None` when nobody is active.
    pub fn threshold(&self) -> Option<f64> {
        let values: Vec<f64> = self.future_aoi.iter().flatten().copied().collect();
        (!values.is_empty()).then(|| kth_largest(values, self.n_rbs))
    }

    pub fn participants(&self) -> Vec<Participant> {
        let threshold = self.threshold();
        self.future_aoi
            .iter()
            .map(|f| match (f, threshold) {
                (Some(f), Some(t)) => Participant::Active {
                    future_aoi: *f,
                    threshold: t,
                },
                _ => Participant::Inactive,
            })
            .collect()
    }

    pub fn action_space(&self) -> impl Iterator<Item = Action> {
        std::iter::once(Action::Silent).chain((0..self.n_rbs).map(Action::Rb))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeReport {
    /// No device gains by a unilateral deviation.
    pub equilibrium: bool,
    /// First profitable deviation found, by device then action.
    pub witness: Option<(usize, Action)>,
    /// The structural characterization: devices with `F >= A(R)` hold
    /// distinct RBs and everyone else is silent.
    pub structural: bool,
    /// At most `R` devices reach the threshold, so no tie straddles it. Only
    /// then do the two tests have to agree.
    pub in_theorem_scope: bool,
}

/// Exhaustive unilateral-deviation check plus the structural test.
pub fn is_nash_equilibrium(
    actions: &[Action],
    game: &GameInstance,
    params: &GameParams,
) -> Result<NeReport> {
    if !game.full_information {
        return Err(Error::PartialInformation("Nash equilibrium check"));
    }
    if actions.len() != game.future_aoi.len() {
        return Err(Error::MalformedAssignment(format!(
            "{} actions for {} devices",
            actions.len(),
            game.future_aoi.len()
        )));
    }
    if let Some(bad) = actions.iter().find(|a| matches!(a, Action::Rb(k) if *k >= game.n_rbs)) {
        return Err(Error::MalformedAssignment(format!("{bad:?} is out of range")));
    }
    let who = game.participants();

    let mut witness = None;
    let mut trial = actions.to_vec();
    'outer: for i in 0..actions.len() {
        let current = payoff(actions, i, who[i], params);
        for alt in game.action_space() {
            if alt == actions[i] {
                continue;
            }
            trial[i] = alt;
            let p = payoff(&trial, i, who[i], params);
            trial[i] = actions[i];
            if p > current {
                witness = Some((i, alt));
                break 'outer;
            }
        }
    }

    let contenders = who.iter().filter(|w| w.should_transmit()).count();
    let report = NeReport {
        equilibrium: witness.is_none(),
        witness,
        structural: structural_equilibrium(actions, &who),
        in_theorem_scope: contenders <= game.n_rbs,
    };
    debug_assert!(
        !report.in_theorem_scope || report.equilibrium == report.structural,
        "deviation check and structural test disagree on {actions:?}"
    );
    Ok(report)
}

fn structural_equilibrium(actions: &[Action], who: &[Participant]) -> bool {
    let mut taken = std::collections::HashSet::new();
    actions.iter().zip(who).all(|(a, w)| match (a, w.should_transmit()) {
        (Action::Rb(rb), true) => taken.insert(*rb),
        (Action::Silent, false) => true,
        _ => false,
    })
}

/// Every joint action vector over `{Silent} ∪ RBs`, in lexicographic order.
pub fn all_joint_actions(n_devices: usize, n_rbs: usize) -> Vec<Vec<Action>> {
    let space: Vec<Action> = std::iter::once(Action::Silent)
        .chain((0..n_rbs).map(Action::Rb))
        .collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n_devices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                space.iter().map(move |&a| {
                    let mut v = prefix.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> GameParams {
        GameParams::default()
    }

    #[test]
    fn paper_action_encoding() {
        assert_eq!(Action::from_paper(0), Action::Silent);
        assert_eq!(Action::from_paper(3), Action::Rb(2));
        for v in 0..6 {
            assert_eq!(Action::from_paper(v).to_paper(), v);
        }
    }

    #[test]
    fn kappa_examples() {
        let view = |n: usize| NeighborhoodView {
            active: (0..n).map(|i| (i, 1.0)).collect(),
            ..Default::default()
        };
        assert_eq!(kappa(&view(3), 50, 200, 0.35, &p(), true), 50);
        assert_eq!(kappa(&view(60), 50, 200, 0.35, &p(), false), 36);
        assert_eq!(kappa(&view(1), 50, 200, 0.35, &p(), false), 1);
    }

    #[test]
    fn transmit_examples() {
        let view = NeighborhoodView {
            active: vec![(0, 9.0), (1, 4.0), (2, 4.0), (3, 2.0)],
            ..Default::default()
        };
        assert!(transmit_decision(9.0, &view, 1));
        assert!(!transmit_decision(4.0, &view, 1));
        // ties at A(kappa) transmit
        assert!(transmit_decision(4.0, &view, 2));
        assert!(!transmit_decision(2.0, &view, 3));
    }

    #[test]
    fn rank_beyond_rbs_stays_silent() {
        let r = 4;
        let view = NeighborhoodView {
            active: (0..r + 5).map(|i| (i, (100 - i) as f64)).collect(),
            ..Default::default()
        };
        let f = view.active[r].1;
        assert!(!transmit_decision(f, &view, r));
        assert!(transmit_decision(view.active[r - 1].1, &view, r));
    }

    #[test]
    fn shared_rb_is_not_equilibrium() {
        let game = GameInstance::full(vec![Some(3.0), Some(2.0)], 2);
        let r = is_nash_equilibrium(&[Action::Rb(0), Action::Rb(0)], &game, &p()).unwrap();
        assert!(!r.equilibrium);
        let (dev, alt) = r.witness.unwrap();
        assert_eq!(dev, 0);
        assert_eq!(alt, Action::Rb(1));
    }

    #[test]
    fn partial_information_rejected() {
        let mut game = GameInstance::full(vec![Some(1.0)], 1);
        game.full_information = false;
        assert_eq!(
            is_nash_equilibrium(&[Action::Rb(0)], &game, &p()),
            Err(Error::PartialInformation("Nash equilibrium check"))
        );
    }

    #[test]
    fn three_by_three_equilibria_are_bijections() {
        let game = GameInstance::full(vec![Some(5.0), Some(3.0), Some(2.0)], 3);
        let ne: Vec<Vec<Action>> = all_joint_actions(3, 3)
            .into_iter()
            .filter(|x| is_nash_equilibrium(x, &game, &p()).unwrap().equilibrium)
            .collect();
        assert_eq!(ne.len(), 6);
        for x in &ne {
            let mut rbs: Vec<usize> = x.iter().map(|a| a.rb().unwrap()).collect();
            rbs.sort();
            assert_eq!(rbs, vec![0, 1, 2]);
        }
    }

    #[test]
    fn tie_at_threshold_leaves_scope() {
        // Both tied devices want to transmit on the single RB.
        let game = GameInstance::full(vec![Some(5.0), Some(5.0)], 1);
        let r = is_nash_equilibrium(&[Action::Rb(0), Action::Rb(0)], &game, &p()).unwrap();
        assert!(!r.in_theorem_scope);
        assert!(r.equilibrium);
        assert!(!r.structural);
    }

    fn future_vec() -> impl Strategy<Value = Vec<Option<u8>>> {
        prop::collection::vec(prop::option::weighted(0.8, 1u8..12), 1..=4)
    }

    fn params_strategy() -> impl Strategy<Value = GameParams> {
        (0.01f64..10.0, 0.01f64..10.0, 0.01f64..0.99).prop_map(|(g, d, eta)| GameParams {
            rho: g + d,
            gamma: g,
            eta,
            ..GameParams::default()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exhaustive_agrees_with_structure(f in future_vec(), r in 1usize..=3) {
            let game = GameInstance::full(f.iter().map(|x| x.map(f64::from)).collect(), r);
            for x in all_joint_actions(f.len(), r) {
                let rep = is_nash_equilibrium(&x, &game, &p()).unwrap();
                if rep.in_theorem_scope {
                    prop_assert_eq!(rep.equilibrium, rep.structural, "{:?}", x);
                }
            }
        }

        #[test]
        fn decisions_invariant_to_payoff_scale(
            f in future_vec(),
            r in 1usize..=3,
            q in params_strategy(),
        ) {
            let game = GameInstance::full(f.iter().map(|x| x.map(f64::from)).collect(), r);
            for x in all_joint_actions(f.len(), r) {
                let a = is_nash_equilibrium(&x, &game, &p()).unwrap();
                let b = is_nash_equilibrium(&x, &game, &q).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
