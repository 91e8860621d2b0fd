use std::fs;
use std::path::{Path, PathBuf};

use csv::{Terminator, WriterBuilder};
use gaborfio_core::diagnostics::Report;

use crate::error::CliResult;

/// A CSV cell: floats are written with 17 significant digits.
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
        }
    }
}

pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(&self.name);
        let mut w = WriterBuilder::new()
            .terminator(Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Files produced by one command.
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
}

pub fn write_outcome(out: &Outcome, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    for t in &out.tables {
        let p = t.write(dir)?;
        log::info!("wrote {}", p.display());
    }
    let mut json = out.report.to_json();
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    Ok(())
}
