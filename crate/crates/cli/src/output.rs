//! Tables, their CSV/JSON encodings and the metadata sidecar.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use slipt_core::format::float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // Non-finite values have no JSON number; keep them as text.
            Cell::Float(v) if !v.is_finite() => Value::String(float(*v)),
            Cell::Float(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        serde_json::to_writer_pretty(&mut out, &records)?;
        writeln!(out)
    }
}

/// Where a command writes its tables.
#[derive(Debug, Clone)]
pub struct Sink {
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn open(&self) -> io::Result<Box<dyn Write>> {
        match &self.out {
            Some(p) => Ok(Box::new(BufWriter::new(File::create(p)?))),
            None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        }
    }

    pub fn emit(&self, table: &Table) -> io::Result<()> {
        let mut w = self.open()?;
        table.write(self.format, &mut w)?;
        w.flush()
    }

    /// `<out>.meta.json` next to the output file; none for stdout.
    pub fn sidecar_path(&self) -> Option<PathBuf> {
        self.out.as_ref().map(|p| sidecar_for(p))
    }

    pub fn write_sidecar(&self, meta: &Value) -> io::Result<()> {
        if let Some(path) = self.sidecar_path() {
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut w, meta)?;
            writeln!(w)?;
            w.flush()?;
        }
        Ok(())
    }
}

pub fn sidecar_for(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["N", "model", "p_harv_w", "error"]);
        t.push(vec![4usize.into(), "accurate".into(), 1.5e-9.into(), Cell::Empty]);
        t.push(vec![
            1usize.into(),
            "closed-form-single".into(),
            Cell::Empty,
            "model \"x\", bad".into(),
        ]);
        t
    }

    #[test]
    fn csv_quotes_and_round_trips_floats() {
        let mut buf = Vec::new();
        sample().write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "N,model,p_harv_w,error\n4,accurate,1.5e-9,\n1,closed-form-single,,\"model \"\"x\"\", bad\"\n"
        );
    }

    #[test]
    fn json_records_keep_column_order() {
        let mut buf = Vec::new();
        sample().write(Format::Json, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        let first = v[0].as_object().unwrap();
        assert_eq!(first.keys().collect::<Vec<_>>(), ["N", "model", "p_harv_w", "error"]);
        assert_eq!(first["p_harv_w"], json!(1.5e-9));
        assert!(v[1]["p_harv_w"].is_null());
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_for(Path::new("out/a.csv")), PathBuf::from("out/a.csv.meta.json"));
    }
}
