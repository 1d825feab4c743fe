use aoisim::channel::ChannelModel;
use aoisim::model::AgingKind;
use aoisim::planner::plan_message;
use proptest::prelude::*;

/// Expected age of the best plan, by walking every way to cut `n` blocks
/// into consecutive slots of at most `max_part` blocks.
fn brute_force(n: usize, max_part: usize, kind: AgingKind, eps: f64, snr: f64, tau: f64, delta: f64) -> f64 {
    fn walk(left: usize, max_part: usize, wait: f64, eps: f64, snr: f64, out: &mut Vec<f64>) {
        if left == 0 {
            out.push(wait);
            return;
        }
        for k in 1..=left.min(max_part) {
            // a k-block slot succeeds with probability exp(-k eps / snr)
            walk(left - k, max_part, wait + (k as f64 * eps / snr).exp(), eps, snr, out);
        }
    }
    let mut waits = Vec::new();
    walk(n, max_part, 0.0, eps, snr, &mut waits);
    waits
        .into_iter()
        .map(|w| match kind {
            AgingKind::Linear => tau + w - delta,
            AgingKind::Exponential => 2f64.powf(tau + w - delta - 1.0),
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_brute_force(
        n in 1usize..=7, extra_rbs in 0usize..3, exp in any::<bool>(),
        eps in 0.01f64..30.0, snr in 1.0f64..200.0, delta in 0u64..20, wait in 1u64..10,
    ) {
        let kind = if exp { AgingKind::Exponential } else { AgingKind::Linear };
        let r = n + extra_rbs;
        let tau = delta + wait;
        let model = ChannelModel::new(snr, 1.0, eps).unwrap();
        let plan = plan_message(n, kind, &model, 0, r, tau, delta).unwrap();
        let best = brute_force(n, r, kind, eps, snr, tau as f64, delta as f64);
        prop_assert_eq!(plan.splits.iter().sum::<usize>(), n);
        if best.is_finite() {
            prop_assert!((plan.expected_aoi - best).abs() <= 1e-9 * best.abs().max(1.0),
                "{:?} vs {}", plan, best);
        } else {
            prop_assert!(plan.expected_aoi.is_infinite());
        }
    }
}

#[test]
fn lossless_channel_sends_everything_at_once() {
    let model = ChannelModel::new(100.0, 1.0, 0.0).unwrap();
    for n in 1..=6 {
        let plan = plan_message(n, AgingKind::Exponential, &model, 0, 6, 5, 0).unwrap();
        assert_eq!(plan.splits, vec![n]);
        assert_eq!(plan.expected_slots, 1.0);
    }
}
