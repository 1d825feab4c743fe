use aoisim::centralized::RachMode;
use aoisim::{run, Mode, ScenarioConfig, Simulation};
use proptest::prelude::*;

fn small(mode: Mode, n: usize, r: usize, v_a: f64, p: f64, r_c: f64, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        mode,
        n_devices: n,
        n_rbs: r,
        v_a,
        r_c,
        slots: 120,
        seed,
        ..ScenarioConfig::default()
    };
    c.set_outage(p).unwrap();
    c
}

fn any_mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(Mode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn same_seed_same_records(
        mode in any_mode(), n in 1usize..40, r in 1usize..12, v_a in 0.0f64..=1.0,
        p in 0.0f64..0.3, r_c in 0.5f64..20.0, seed in any::<u64>(),
    ) {
        let c = small(mode, n, r, v_a, p, r_c, seed);
        prop_assert_eq!(run(c.clone()).unwrap(), run(c).unwrap());
    }

    #[test]
    fn per_slot_bookkeeping(
        mode in any_mode(), n in 1usize..40, r in 1usize..12, v_a in 0.0f64..=1.0,
        p in 0.0f64..0.3, r_c in 0.5f64..20.0, seed in any::<u64>(),
    ) {
        let c = small(mode, n, r, v_a, p, r_c, seed);
        let out = run(c.clone()).unwrap();
        prop_assert_eq!(out.records.len() as u64, c.slots);
        let mut totals = [0u64; 3];
        for (i, rec) in out.records.iter().enumerate() {
            prop_assert_eq!(rec.slot, i as u64 + 1);
            prop_assert!(rec.n_active <= n);
            prop_assert!(rec.n_transmitting <= rec.n_active);
            prop_assert!(rec.duplicate_failures + rec.outage_failures <= rec.n_transmitting);
            prop_assert!((0.0..=1.0).contains(&rec.service_rate));
            if mode.is_centralized() {
                prop_assert_eq!(rec.duplicate_failures, 0);
                prop_assert!(rec.n_transmitting + rec.rach_failures <= rec.n_active);
            } else {
                prop_assert_eq!(rec.rach_failures, 0);
                prop_assert!(rec.n_transmitting <= rec.n_active);
            }
            if let Some(a) = rec.avg_inst_aoi_slot {
                prop_assert!(a >= 1.0);
            }
            totals[0] += rec.rach_failures as u64;
            totals[1] += rec.duplicate_failures as u64;
            totals[2] += rec.outage_failures as u64;
        }
        let s = &out.summary;
        prop_assert_eq!([s.rach_failures, s.duplicate_failures, s.outage_failures], totals);
        prop_assert!(s.deliveries_after_warmup <= s.deliveries);
        prop_assert_eq!(out.records.last().unwrap().avg_inst_aoi_cum, s.mean_aoi);
    }

    #[test]
    fn centralized_never_exceeds_rbs(
        n in 1usize..60, r in 1usize..8, rb_max in 1usize..4, seed in any::<u64>(),
    ) {
        let rb_max = rb_max.min(r);
        let mut c = small(Mode::CentralizedLearning, n, r, 0.5, 0.05, 15.0, seed);
        c.rb_max = rb_max;
        c.rach_mode = RachMode::Preambles;
        let mut sim = Simulation::new(c).unwrap();
        while !sim.is_finished() {
            sim.step().unwrap();
            prop_assert!(sim.last_usage().iter().all(|&u| u <= 1));
        }
    }
}

#[test]
fn sca_settles_without_outage() {
    for n in [1, 7, 20, 30] {
        for seed in 0..5 {
            let mut c = small(Mode::DistributedSca, n, 30, 1.0, 0.0, 15.0, seed);
            c.epsilon = 0.0;
            c.slots = 300;
            let out = run(c).unwrap();
            let tail = &out.records[150..];
            assert!(tail.iter().all(|r| r.duplicate_failures == 0 && r.n_transmitting == n), "n {n} seed {seed}");
            assert!(out.summary.mean_aoi_after_warmup.unwrap() < 1.0 + 1e-9);
        }
    }
}

#[test]
fn predetermined_full_information_has_no_collisions() {
    let c = small(Mode::DistributedPredetermined, 80, 20, 0.6, 0.0, 15.0, 4);
    let out = run(c).unwrap();
    assert_eq!(out.summary.duplicate_failures, 0);
}

#[test]
fn idle_network_delivers_nothing() {
    let c = small(Mode::CentralizedFullInfo, 10, 5, 0.0, 0.01, 15.0, 1);
    let out = run(c).unwrap();
    assert_eq!(out.summary.deliveries, 0);
    assert_eq!(out.summary.mean_aoi, None);
}
