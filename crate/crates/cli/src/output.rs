//! CSV and JSON-lines writers.
//!
//! Both formats open with enough of the configuration to reproduce the
//! output: CSV as `#` comment lines above the header row, JSON-lines as a
//! first `{"config": ...}` object.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use aoisim::SlotRecord;
use serde_json::{json, Value};

use crate::CliError;

/// Directory used for output files when `--out` is not given.
pub const OUT_DIR_VAR: &str = "AOISIM_OUT_DIR";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // Debug keeps huge exponential ages short (1e76, not 77 digits)
            Cell::Float(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// What a reader needs to rerun the command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    /// Lines written after `# ` in CSV output.
    pub comments: Vec<String>,
    pub config: Value,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn record_cells(r: &SlotRecord) -> Vec<Cell> {
    vec![
        Cell::Int(r.slot),
        r.avg_inst_aoi_slot.into(),
        r.avg_inst_aoi_cum.into(),
        Cell::Float(r.service_rate),
        Cell::Int(r.n_active as u64),
        Cell::Int(r.n_transmitting as u64),
        Cell::Int(r.rach_failures as u64),
        Cell::Int(r.duplicate_failures as u64),
        Cell::Int(r.outage_failures as u64),
    ]
}

pub fn write_table(w: &mut dyn Write, format: Format, header: &Header, table: &Table) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            for line in &header.comments {
                writeln!(w, "# {line}")?;
            }
            let mut csv = csv::Writer::from_writer(w);
            let to_io = |e: csv::Error| CliError::Io(e.into());
            csv.write_record(&table.columns).map_err(to_io)?;
            for row in &table.rows {
                csv.write_record(row.iter().map(Cell::csv)).map_err(to_io)?;
            }
            csv.flush()?;
        }
        Format::Jsonl => {
            writeln!(w, "{}", json!({ "config": header.config }))?;
            for row in &table.rows {
                // built by hand so keys keep column order
                let fields: Vec<String> = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, v)| format!("{}:{}", json!(k), v.json()))
                    .collect();
                writeln!(w, "{{{}}}", fields.join(","))?;
            }
        }
    }
    Ok(())
}

/// Where output goes: `--out`, else `$AOISIM_OUT_DIR/<stem>.<ext>`, else
/// stdout. Returns the file path when one is used.
pub fn destination(out: Option<&Path>, stem: &str, format: Format) -> Option<PathBuf> {
    match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_VAR)
            .filter(|d| !d.is_empty())
            .map(|d| Path::new(&d).join(format!("{stem}.{}", format.extension()))),
    }
}

pub fn emit(path: Option<&Path>, format: Format, header: &Header, table: &Table) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(p)?);
            write_table(&mut w, format, header, table)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_table(&mut w, format, header, table)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Header, Table) {
        let header = Header {
            comments: vec!["seed = 3".into()],
            config: json!({ "seed": 3 }),
        };
        let mut t = Table::new(["b", "a", "c"]);
        t.push(vec![Cell::Int(1), Cell::Float(1e76), Cell::Empty]);
        t.push(vec![Cell::Text("x,y".into()), Cell::Float(0.5), Cell::Int(2)]);
        (header, t)
    }

    #[test]
    fn csv_layout() {
        let (h, t) = sample();
        let mut buf = Vec::new();
        write_table(&mut buf, Format::Csv, &h, &t).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "# seed = 3\nb,a,c\n1,1e76,\n\"x,y\",0.5,2\n");
    }

    #[test]
    fn jsonl_keeps_column_order() {
        let (h, t) = sample();
        let mut buf = Vec::new();
        write_table(&mut buf, Format::Jsonl, &h, &t).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], r#"{"config":{"seed":3}}"#);
        assert_eq!(lines[1], r#"{"b":1,"a":1e+76,"c":null}"#);
        let v: Value = serde_json::from_str(lines[2]).unwrap();
        assert_eq!(v["a"], json!(0.5));
    }

    #[test]
    fn record_has_every_field() {
        let r = SlotRecord {
            slot: 4,
            avg_inst_aoi_slot: None,
            avg_inst_aoi_cum: Some(2.0),
            service_rate: 0.5,
            n_active: 3,
            n_transmitting: 2,
            rach_failures: 1,
            duplicate_failures: 0,
            outage_failures: 0,
        };
        assert_eq!(record_cells(&r).len(), SlotRecord::FIELDS.len());
    }
}
