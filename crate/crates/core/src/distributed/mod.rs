//! Distributed allocation as a repeated minority game.
//!
//! Each active device compares its future AoI with what its neighbors
//! broadcast, decides whether to transmit, and then picks an RB either with
//! stochastic crowd avoidance or with one of the two baselines.

mod baselines;
mod game;
mod sca;

pub use baselines::{
    predetermined_selection, random_selection, rank_by_future_aoi, service_rate_asymptotic,
    service_rate_closed_form,
};
pub use game::{
    all_joint_actions, is_nash_equilibrium, kappa, kth_largest, payoff, silent_payoff,
    transmit_decision, Action, GameInstance, GameParams, NeReport, NeighborhoodView, Participant,
};
pub use sca::{choose_delegate, draw_rb, sca_step, LastRound, ScaDecision, ScaInput};

/// Payoff pairs `(device 1, device 2)` for the two-device, two-RB game with
/// both devices active. Rows follow device 2's action in the order RB 1,
/// RB 2, silent; columns follow device 1's action in the same order.
pub fn two_device_table(params: &GameParams) -> [[(f64, f64); 3]; 3] {
    // Equal future AoIs: with R = 2 both devices reach A(R).
    let game = GameInstance::full(vec![Some(1.0), Some(1.0)], 2);
    let who = game.participants();
    let order = [Action::Rb(0), Action::Rb(1), Action::Silent];
    let mut table = [[(0.0, 0.0); 3]; 3];
    for (row, &x2) in order.iter().enumerate() {
        for (col, &x1) in order.iter().enumerate() {
            let x = [x1, x2];
            table[row][col] = (payoff(&x, 0, who[0], params), payoff(&x, 1, who[1], params));
        }
    }
    table
}
