//! Named scenarios.
//!
//! `fig1` through `fig9` are desk-scale sweeps over the published experiment
//! settings. `table1`, `prop2` and `theorem2` print analytic tables next to
//! their Monte Carlo counterparts.

use aoisim::distributed::{is_nash_equilibrium, two_device_table, Action, GameInstance, GameParams};
use aoisim::engine::{aggregate, derive_seed, Estimate, SweepPoint};
use aoisim::{sweep, verify, Mode, ScenarioConfig, SlotRecord};
use serde_json::json;

use crate::config::{echo, Layers};
use crate::output::{record_cells, Cell, Header, Table};
use crate::CliError;

/// `(name, one-line description)` of every preset.
pub const PRESETS: [(&str, &str); 12] = [
    ("fig1", "centralized schedulers vs activation probability"),
    ("fig2", "fig1 with per-device SNR uniform in 17.0..21.8 dB"),
    ("fig3", "centralized schedulers vs outage probability at v_a = 0.2"),
    ("fig4", "distributed schemes vs activation probability, N = 200, r_c = 10"),
    ("fig5", "fig4 with per-device SNR uniform in 17.0..21.8 dB"),
    ("fig6", "distributed schemes vs outage probability, N = R = 50, v_a = 1"),
    ("fig7", "distributed schemes vs communication range, N = R = 50, v_a = 1"),
    ("fig8", "all six schemes vs lookahead beta, N = 100, v_a = 1"),
    ("fig9", "learning scheduler vs SCA at three ranges, vs activation probability"),
    ("table1", "two-device payoff table and its equilibria"),
    ("prop2", "random selection service rate, Monte Carlo vs closed form"),
    ("theorem2", "SCA unused RBs per slot vs the geometric bound"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub config: ScenarioConfig,
}

impl Series {
    fn of(mode: Mode, base: &ScenarioConfig) -> Series {
        Series {
            label: mode.as_str().to_owned(),
            config: ScenarioConfig { mode, ..base.clone() },
        }
    }
}

/// One or more base configs swept over the same parameter values. Seeds
/// are derived per (value, replicate) from each base seed, so series with
/// equal base seeds run on matched seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub series: Vec<Series>,
    pub param: String,
    pub values: Vec<f64>,
    pub replicates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    Sweep(SweepSpec),
    PayoffTable,
    ServiceRate,
    UnusedBound,
}

const CENTRALIZED: [Mode; 3] = [Mode::CentralizedNoLearning, Mode::CentralizedLearning, Mode::CentralizedFullInfo];
const DISTRIBUTED: [Mode; 3] = [Mode::DistributedPredetermined, Mode::DistributedSca, Mode::DistributedRandom];

fn with_outage(mut c: ScenarioConfig, p: f64) -> ScenarioConfig {
    c.set_outage(p).expect("preset outage probability is valid");
    c
}

fn heterogeneous(c: ScenarioConfig) -> ScenarioConfig {
    let c = ScenarioConfig {
        mean_snr_db: 19.4,
        snr_spread_db: 2.4,
        ..c
    };
    // same per-RB threshold as the homogeneous figure
    ScenarioConfig {
        epsilon: aoisim::engine::epsilon_for_outage(0.01, 20.0),
        ..c
    }
}

fn sweep_of(modes: &[Mode], base: ScenarioConfig, param: &str, values: &[f64], replicates: usize) -> Preset {
    Preset::Sweep(SweepSpec {
        series: modes.iter().map(|&m| Series::of(m, &base)).collect(),
        param: param.to_owned(),
        values: values.to_vec(),
        replicates,
    })
}

fn centralized_base() -> ScenarioConfig {
    with_outage(
        ScenarioConfig {
            n_devices: 200,
            n_rbs: 50,
            slots: 5000,
            ..ScenarioConfig::default()
        },
        0.01,
    )
}

fn distributed_base(n: usize, v_a: f64, r_c: f64) -> ScenarioConfig {
    with_outage(
        ScenarioConfig {
            n_devices: n,
            n_rbs: 50,
            v_a,
            r_c,
            slots: 2000,
            ..ScenarioConfig::default()
        },
        0.01,
    )
}

const ACTIVATION: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

pub fn lookup(name: &str) -> Result<Preset, CliError> {
    let preset = match name {
        "fig1" => sweep_of(&CENTRALIZED, centralized_base(), "v_a", &ACTIVATION, 10),
        "fig2" => sweep_of(&CENTRALIZED, heterogeneous(centralized_base()), "v_a", &ACTIVATION, 10),
        "fig3" => sweep_of(
            &CENTRALIZED,
            ScenarioConfig {
                v_a: 0.2,
                ..centralized_base()
            },
            "p",
            &[0.02, 0.04, 0.08, 0.12, 0.16],
            10,
        ),
        "fig4" => sweep_of(&DISTRIBUTED, distributed_base(200, 0.3, 10.0), "v_a", &[0.15, 0.25, 0.35, 0.45], 3),
        "fig5" => sweep_of(
            &DISTRIBUTED,
            heterogeneous(distributed_base(200, 0.3, 10.0)),
            "v_a",
            &[0.15, 0.25, 0.35, 0.45],
            3,
        ),
        "fig6" => sweep_of(&DISTRIBUTED, distributed_base(50, 1.0, 10.0), "p", &[0.01, 0.03, 0.05], 3),
        "fig7" => sweep_of(&DISTRIBUTED, distributed_base(50, 1.0, 10.0), "r_c", &[1.0, 5.0, 10.0, 15.0], 3),
        "fig8" => {
            let modes: Vec<Mode> = CENTRALIZED.iter().chain(&DISTRIBUTED).copied().collect();
            sweep_of(&modes, distributed_base(100, 1.0, 10.0), "beta", &[1.0, 2.0, 3.0, 4.0, 5.0], 3)
        }
        "fig9" => {
            let base = distributed_base(200, 0.3, 10.0);
            let mut series = vec![Series::of(Mode::CentralizedLearning, &base)];
            for r_c in [5.0, 10.0, 15.0] {
                series.push(Series {
                    label: format!("distributed_sca_rc{r_c}"),
                    config: ScenarioConfig {
                        mode: Mode::DistributedSca,
                        r_c,
                        ..base.clone()
                    },
                });
            }
            Preset::Sweep(SweepSpec {
                series,
                param: "v_a".into(),
                values: ACTIVATION.to_vec(),
                replicates: 3,
            })
        }
        "table1" => Preset::PayoffTable,
        "prop2" => Preset::ServiceRate,
        "theorem2" => Preset::UnusedBound,
        _ => {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            return Err(CliError::Usage(format!(
                "unknown preset `{name}`; expected one of {}",
                names.join(", ")
            )));
        }
    };
    Ok(preset)
}

impl SweepSpec {
    /// Applies overrides to every series. The mode belongs to the series, so
    /// layers that set it are rejected.
    pub fn apply(&mut self, layers: &Layers) -> Result<(), CliError> {
        if layers.sets_mode() {
            return Err(CliError::Config("`mode` is fixed by each series of a preset".into()));
        }
        for s in &mut self.series {
            layers.apply(&mut s.config)?;
            s.config.validate()?;
        }
        Ok(())
    }

    pub fn header(&self, title: &str) -> Header {
        let values: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        let mut comments = vec![
            title.to_owned(),
            format!(
                "sweep {} over [{}], {} replicates per value",
                self.param,
                values.join(", "),
                self.replicates
            ),
        ];
        for s in &self.series {
            comments.push(format!("[series {}]", s.label));
            comments.extend(echo(&s.config));
        }
        let series: Vec<_> = self
            .series
            .iter()
            .map(|s| json!({ "label": s.label, "config": s.config }))
            .collect();
        Header {
            comments,
            config: json!({
                "command": title,
                "param": self.param,
                "values": self.values,
                "replicates": self.replicates,
                "series": series,
            }),
        }
    }

    /// Runs every series, in order.
    pub fn run(&self) -> Result<Vec<(String, Vec<SweepPoint>)>, CliError> {
        self.series
            .iter()
            .map(|s| Ok((s.label.clone(), sweep(&s.config, &self.param, &self.values, self.replicates)?)))
            .collect()
    }

    /// With `per_slot` each run contributes one row per slot, otherwise one
    /// summary row.
    pub fn table(&self, results: &[(String, Vec<SweepPoint>)], per_slot: bool) -> Table {
        let lead = ["series".to_owned(), self.param.clone(), "replicate".to_owned()];
        let fields: &[&str] = if per_slot { &SlotRecord::FIELDS } else { &SUMMARY_FIELDS };
        let mut table = Table::new(lead.into_iter().chain(fields.iter().map(|s| s.to_string())));
        for (label, points) in results {
            for p in points {
                let lead = vec![Cell::Text(label.clone()), Cell::Float(p.value), Cell::Int(p.replicate as u64)];
                if per_slot {
                    for r in &p.output.records {
                        let mut row = lead.clone();
                        row.extend(record_cells(r));
                        table.push(row);
                    }
                } else {
                    let m = &p.output.summary;
                    let mut row = lead;
                    row.extend([
                        Cell::Int(p.config.seed),
                        Cell::Int(m.deliveries),
                        m.mean_aoi.into(),
                        m.mean_aoi_after_warmup.into(),
                        Cell::Float(m.mean_service_rate),
                        Cell::Float(m.mean_service_rate_after_warmup),
                        Cell::Int(m.rach_failures),
                        Cell::Int(m.duplicate_failures),
                        Cell::Int(m.outage_failures),
                    ]);
                    table.push(row);
                }
            }
        }
        table
    }
}

pub const SUMMARY_FIELDS: [&str; 9] = [
    "seed",
    "deliveries",
    "mean_aoi",
    "mean_aoi_after_warmup",
    "mean_service_rate",
    "mean_service_rate_after_warmup",
    "rach_failures",
    "duplicate_failures",
    "outage_failures",
];

fn short(x: f64) -> String {
    if x.abs() >= 1e6 {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

/// Replicate means per (series, value), one line each.
pub fn describe(param: &str, results: &[(String, Vec<SweepPoint>)]) -> Vec<String> {
    let mut out = Vec::new();
    for (label, points) in results {
        for a in aggregate(points) {
            let aoi = a.aoi.map_or("n/a".to_owned(), |e| format!("{} +- {}", short(e.mean), short(e.std_err)));
            let sr = a.service_rate.map_or("n/a".to_owned(), |e| format!("{:.4}", e.mean));
            out.push(format!("{label:<28} {param}={:<6} aoi {aoi:<24} service {sr}", a.value));
        }
    }
    out
}

fn table_header(name: &str, seed: u64, slots: u64) -> Header {
    Header {
        comments: vec![format!("aoisim preset {name}"), format!("seed = {seed}"), format!("slots = {slots}")],
        config: json!({ "command": format!("aoisim preset {name}"), "seed": seed, "slots": slots }),
    }
}

fn action_label(a: Action) -> String {
    match a.rb() {
        Some(rb) => format!("rb{}", rb + 1),
        None => "silent".into(),
    }
}

/// Rows `(x1, x2, u1, u2, equilibrium)` of the two-device game.
pub fn payoff_table() -> Result<Table, CliError> {
    let params = GameParams::default();
    let table = two_device_table(&params);
    let game = GameInstance::full(vec![Some(1.0), Some(1.0)], 2);
    let actions = [Action::Rb(0), Action::Rb(1), Action::Silent];
    let mut out = Table::new(["x1", "x2", "u1", "u2", "equilibrium"]);
    for (row, &x2) in actions.iter().enumerate() {
        for (col, &x1) in actions.iter().enumerate() {
            let (u1, u2) = table[row][col];
            let ne = is_nash_equilibrium(&[x1, x2], &game, &params)?.equilibrium;
            out.push(vec![
                Cell::Text(action_label(x1)),
                Cell::Text(action_label(x2)),
                Cell::Float(u1),
                Cell::Float(u2),
                Cell::Text(ne.to_string()),
            ]);
        }
    }
    Ok(out)
}

pub fn service_rate_table(slots: u64, seed: u64) -> Table {
    let mut out = Table::new(["t", "n_rbs", "empirical", "closed_form", "abs_diff"]);
    for r in verify::service_rate_table(slots, seed) {
        out.push(vec![
            Cell::Int(r.t as u64),
            Cell::Int(r.n_rbs as u64),
            Cell::Float(r.empirical),
            Cell::Float(r.closed_form),
            Cell::Float((r.empirical - r.closed_form).abs()),
        ]);
    }
    out
}

/// Number of seeded SCA runs behind the `theorem2` table.
pub const BOUND_RUNS: usize = 100;

/// Per-slot mean unused RBs over [`BOUND_RUNS`] runs with `N = R = 50`,
/// next to `R ((R-1)/R)^(N (t-1))`.
pub fn unused_bound_table(slots: u64, seed: u64) -> Result<Table, CliError> {
    let n = 50usize;
    let runs: Vec<Vec<usize>> = (0..BOUND_RUNS)
        .map(|i| {
            verify::convergence_run(n, slots, derive_seed(seed, 0, i, BOUND_RUNS)).map(|r| r.unused)
        })
        .collect::<Result<_, _>>()?;
    let mut out = Table::new(["t", "mean_unused", "std_err", "bound"]);
    for t in 0..slots as usize {
        let xs: Vec<f64> = runs.iter().map(|u| u[t] as f64).collect();
        let e = Estimate::from_samples(&xs).expect("at least one run");
        let r = n as f64;
        let bound = r * ((r - 1.0) / r).powf((n * t) as f64);
        out.push(vec![
            Cell::Int(t as u64 + 1),
            Cell::Float(e.mean),
            Cell::Float(e.std_err),
            Cell::Float(bound),
        ]);
    }
    Ok(out)
}

/// Runs a table preset. Only the seed and slot count can be overridden.
pub fn run_table(name: &str, preset: &Preset, layers: &Layers) -> Result<(Header, Table), CliError> {
    if layers.file.is_some() || !layers.sets.is_empty() || layers.mode.is_some() {
        return Err(CliError::Config(format!("preset {name} only takes --seed and --slots")));
    }
    let seed = layers.seed.unwrap_or(0);
    let (slots, table) = match preset {
        Preset::PayoffTable => (0, payoff_table()?),
        Preset::ServiceRate => {
            let slots = layers.slots.unwrap_or(10_000);
            (slots, service_rate_table(slots, seed))
        }
        Preset::UnusedBound => {
            let slots = layers.slots.unwrap_or(50);
            (slots, unused_bound_table(slots, seed)?)
        }
        Preset::Sweep(_) => unreachable!("sweep presets are run through SweepSpec"),
    };
    Ok((table_header(name, seed, slots), table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_expands() {
        for (name, _) in PRESETS {
            if let Preset::Sweep(spec) = lookup(name).unwrap() {
                assert!(!spec.values.is_empty() && spec.replicates > 0);
                for s in &spec.series {
                    for &v in &spec.values {
                        let mut c = s.config.clone();
                        c.set_param(&spec.param, v).unwrap();
                        c.validate().unwrap_or_else(|e| panic!("{name}/{}: {e}", s.label));
                    }
                }
            }
        }
        assert!(matches!(lookup("fig10"), Err(CliError::Usage(_))));
    }

    #[test]
    fn matched_seeds_across_series() {
        let Preset::Sweep(spec) = lookup("fig6").unwrap() else {
            panic!()
        };
        let seeds: Vec<u64> = spec.series.iter().map(|s| s.config.seed).collect();
        assert!(seeds.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn heterogeneous_keeps_threshold() {
        let Preset::Sweep(a) = lookup("fig1").unwrap() else { panic!() };
        let Preset::Sweep(b) = lookup("fig2").unwrap() else { panic!() };
        assert_eq!(a.series[0].config.epsilon, b.series[0].config.epsilon);
        assert!((b.series[0].config.mean_snr_db - b.series[0].config.snr_spread_db - 17.0).abs() < 1e-9);
    }

    #[test]
    fn payoff_table_marks_two_equilibria() {
        let t = payoff_table().unwrap();
        let ne: Vec<_> = t
            .rows
            .iter()
            .filter(|r| r[4] == Cell::Text("true".into()))
            .map(|r| (r[0].clone(), r[1].clone()))
            .collect();
        assert_eq!(
            ne,
            vec![
                (Cell::Text("rb2".into()), Cell::Text("rb1".into())),
                (Cell::Text("rb1".into()), Cell::Text("rb2".into())),
            ]
        );
    }
}
