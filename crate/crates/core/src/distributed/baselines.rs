use rand::Rng;

use super::game::Action;
use crate::error::{Error, Result};

/// Uniform over all RBs.
pub fn random_selection<R: Rng + ?Sized>(n_rbs: usize, rng: &mut R) -> Action {
    Action::Rb(rng.random_range(0..n_rbs))
}

/// The device ranked `rank` (1-based, by decreasing future AoI) takes RB
/// `rank`; devices ranked past `n_rbs` stay silent.
pub fn predetermined_selection(rank: usize, n_rbs: usize, full_info: bool) -> Result<Action> {
    if !full_info {
        return Err(Error::PartialInformation("pre-determined selection"));
    }
    Ok(if (1..=n_rbs).contains(&rank) {
        Action::Rb(rank - 1)
    } else {
        Action::Silent
    })
}

/// Ranks active devices by decreasing future AoI, ties by id. Returns the
/// 1-based rank per device, `None` for inactive ones.
pub fn rank_by_future_aoi(future_aoi: &[Option<f64>]) -> Vec<Option<usize>> {
    let mut order: Vec<(usize, f64)> = future_aoi
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.map(|f| (i, f)))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut ranks = vec![None; future_aoi.len()];
    for (r, (i, _)) in order.into_iter().enumerate() {
        ranks[i] = Some(r + 1);
    }
    ranks
}

/// Expected fraction of RBs used by exactly one of `t` uniform transmitters.
pub fn service_rate_closed_form(t: usize, n_rbs: usize) -> f64 {
    if t == 0 || n_rbs == 0 {
        return 0.0;
    }
    let r = n_rbs as f64;
    (t as f64 / r) * ((r - 1.0) / r).powi(t as i32 - 1)
}

/// Large-`N` approximation of [`service_rate_closed_form`].
pub fn service_rate_asymptotic(t: usize, n_rbs: usize) -> f64 {
    let r = n_rbs as f64;
    t as f64 / (r - 1.0) * (-(t as f64) / r).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RbAssignment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_examples() {
        assert!((service_rate_closed_form(50, 50) - 0.3716).abs() < 1e-4);
        assert_eq!(service_rate_closed_form(2, 2), 0.5);
        for r in 1..10 {
            assert!((service_rate_closed_form(1, r) - 1.0 / r as f64).abs() < 1e-15);
        }
        assert_eq!(service_rate_closed_form(5, 1), 0.0);
        assert_eq!(service_rate_closed_form(0, 4), 0.0);
    }

    #[test]
    fn asymptotic_form_tracks_exact() {
        for t in [10, 50, 200] {
            let a = service_rate_asymptotic(t, 500);
            let e = service_rate_closed_form(t, 500);
            assert!((a - e).abs() < 0.01, "{t}: {a} vs {e}");
        }
    }

    #[test]
    fn predetermined_identity() {
        assert_eq!(predetermined_selection(7, 50, true), Ok(Action::Rb(6)));
        assert_eq!(predetermined_selection(51, 50, true), Ok(Action::Silent));
        assert!(predetermined_selection(1, 50, false).is_err());
    }

    #[test]
    fn ranks_break_ties_by_id() {
        let r = rank_by_future_aoi(&[Some(2.0), None, Some(4.0), Some(2.0)]);
        assert_eq!(r, vec![Some(2), None, Some(1), Some(3)]);
    }

    #[test]
    fn random_selection_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = 50;
        for t in [2usize, 10, 50, 200] {
            let slots = 4000;
            let mut singles = 0u64;
            for s in 0..slots {
                let mut a = RbAssignment::new(s);
                for d in 0..t {
                    a.push(d, vec![random_selection(r, &mut rng).rb().unwrap()]);
                }
                singles += a.usage(r).iter().filter(|&&u| u == 1).count() as u64;
            }
            let trials = (slots * r as u64) as f64;
            let p = service_rate_closed_form(t, r);
            // RB indicators within a slot are negatively correlated, so the
            // binomial spread is conservative.
            let sigma = (p * (1.0 - p) / trials).sqrt();
            let emp = singles as f64 / trials;
            assert!((emp - p).abs() <= 3.0 * sigma + 1e-12, "T={t}: {emp} vs {p}");
        }
    }
}
