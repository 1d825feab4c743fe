use std::path::PathBuf;
use std::process::ExitCode;

use aoisim::{run, verify, ScenarioConfig, SlotRecord};
use aoisim_cli::config::{echo, parse_set, Layers};
use aoisim_cli::output::{destination, emit, record_cells, Format, Header, Table};
use aoisim_cli::presets::{self, Preset, Series, SweepSpec};
use aoisim_cli::CliError;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

/// Age-of-information resource block allocation simulator.
#[derive(Debug, Parser)]
#[command(name = "aoisim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and print a row per slot.
    Run(Common),
    /// Sweep one parameter, with replicates per value.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary, e.g. v_a, p, r_c, beta.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// One row per run instead of one per slot.
        #[arg(long)]
        summary: bool,
    },
    /// Run a named scenario (see `aoisim preset --list`).
    Preset {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[command(flatten)]
        common: Common,
        /// Override the preset's replicate count.
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        summary: bool,
        /// Print the preset names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Run the built-in self-checks. Exits 2 when one fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_set)]
    sets: Vec<(String, String)>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    slots: Option<u64>,
    /// Output file. Defaults to $AOISIM_OUT_DIR/<name>.<format>, or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// No progress or summary on stderr.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn layers(&self) -> Result<Layers, CliError> {
        let mut layers = Layers {
            sets: self.sets.clone(),
            mode: self.mode.clone(),
            seed: self.seed,
            slots: self.slots,
            ..Layers::default()
        };
        if let Some(path) = &self.config {
            layers.read_file(path)?;
        }
        Ok(layers)
    }

    fn write(&self, stem: &str, header: &Header, table: &Table) -> Result<(), CliError> {
        let path = destination(self.out.as_deref(), stem, self.format);
        emit(path.as_deref(), self.format, header, table)?;
        if let (Some(p), false) = (path, self.quiet) {
            eprintln!("wrote {}", p.display());
        }
        Ok(())
    }

    fn note(&self, lines: &[String]) {
        if !self.quiet {
            for l in lines {
                eprintln!("{l}");
            }
        }
    }
}

fn single_config(common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut config = ScenarioConfig::default();
    common.layers()?.apply(&mut config)?;
    config.validate()?;
    Ok(config)
}

fn cmd_run(common: &Common) -> Result<(), CliError> {
    let config = single_config(common)?;
    let out = run(config.clone())?;
    let mut table = Table::new(SlotRecord::FIELDS);
    for r in &out.records {
        table.push(record_cells(r));
    }
    let mut comments = vec!["aoisim run".to_owned()];
    comments.extend(echo(&config));
    let header = Header {
        comments,
        config: serde_json::to_value(&config).expect("config serializes"),
    };
    common.write("run", &header, &table)?;
    let s = &out.summary;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |x| format!("{x:.4}"));
    common.note(&[format!(
        "{}: {} deliveries, mean AoI {} (after warm-up {}), service rate {:.4}",
        config.mode,
        s.deliveries,
        fmt(s.mean_aoi),
        fmt(s.mean_aoi_after_warmup),
        s.mean_service_rate_after_warmup
    )]);
    Ok(())
}

fn run_spec(common: &Common, stem: &str, title: &str, spec: &SweepSpec, summary: bool) -> Result<(), CliError> {
    let results = spec.run()?;
    common.write(stem, &spec.header(title), &spec.table(&results, !summary))?;
    common.note(&presets::describe(&spec.param, &results));
    Ok(())
}

fn cmd_sweep(common: &Common, param: &str, values: &[f64], replicates: usize, summary: bool) -> Result<(), CliError> {
    if replicates == 0 {
        return Err(CliError::Config("--replicates must be at least 1".into()));
    }
    let config = single_config(common)?;
    // reject unknown names before running anything
    config.clone().set_param(param, values[0])?;
    let spec = SweepSpec {
        series: vec![Series {
            label: config.mode.as_str().to_owned(),
            config,
        }],
        param: param.to_owned(),
        values: values.to_vec(),
        replicates,
    };
    run_spec(common, "sweep", "aoisim sweep", &spec, summary)
}

fn cmd_preset(common: &Common, name: &str, replicates: Option<usize>, summary: bool) -> Result<(), CliError> {
    let layers = common.layers()?;
    let title = format!("aoisim preset {name}");
    match presets::lookup(name)? {
        Preset::Sweep(mut spec) => {
            spec.apply(&layers)?;
            if let Some(r) = replicates {
                if r == 0 {
                    return Err(CliError::Config("--replicates must be at least 1".into()));
                }
                spec.replicates = r;
            }
            run_spec(common, name, &title, &spec, summary)
        }
        table => {
            if replicates.is_some() || summary {
                return Err(CliError::Config(format!("preset {name} takes neither --replicates nor --summary")));
            }
            let (header, table) = presets::run_table(name, &table, &layers)?;
            common.write(name, &header, &table)
        }
    }
}

fn cmd_verify(seed: u64, quiet: bool) -> Result<(), CliError> {
    let reports = verify::run_all(seed)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    for r in &reports {
        let line = json!({ "check": r.name, "passed": r.passed, "detail": r.detail });
        println!("{line}");
        if !quiet {
            eprintln!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failed.join(", ")))
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => cmd_run(&common),
        Command::Sweep {
            common,
            param,
            values,
            replicates,
            summary,
        } => cmd_sweep(&common, &param, &values, replicates, summary),
        Command::Preset { list: true, .. } => {
            for (name, about) in presets::PRESETS {
                println!("{name:<10} {about}");
            }
            Ok(())
        }
        Command::Preset {
            name,
            common,
            replicates,
            summary,
            ..
        } => cmd_preset(&common, name.as_deref().unwrap_or_default(), replicates, summary),
        Command::Verify { seed, quiet } => cmd_verify(seed, quiet),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aoisim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
