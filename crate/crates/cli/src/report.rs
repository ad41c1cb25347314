//! CSV and JSON reports. Both carry the same decimal strings for every number.

use std::io::Write;

use serde_json::value::RawValue;

use crate::config::OutputFormat;
use crate::run::ReportRow;

pub const COLUMNS: [&str; 18] = [
    "experiment",
    "manifold",
    "system",
    "functional",
    "h",
    "T",
    "n",
    "m",
    "seed",
    "lhs",
    "lhs_se",
    "rhs",
    "rhs_se",
    "diff",
    "diff_se",
    "z",
    "status",
    "wall_ms",
];

enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
}

/// 17 significant digits, which round-trips every `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn cells(row: &ReportRow) -> [Cell; 18] {
    [
        Cell::Text(row.experiment.clone()),
        Cell::Text(row.manifold.clone()),
        Cell::Text(row.system.clone()),
        Cell::Text(row.functional.clone()),
        Cell::Text(row.h.clone()),
        Cell::Num(row.horizon),
        Cell::Int(row.n),
        Cell::Int(row.m as u64),
        Cell::Int(row.seed),
        Cell::Num(row.lhs),
        Cell::Num(row.lhs_se),
        Cell::Num(row.rhs),
        Cell::Num(row.rhs_se),
        Cell::Num(row.diff),
        Cell::Num(row.diff_se),
        Cell::Num(row.z),
        Cell::Text(row.status.as_str().to_string()),
        Cell::Int(row.wall_ms),
    ]
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        let record = cells(row).map(|c| match c {
            Cell::Text(s) => s,
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_number(x),
        });
        w.write_record(&record)?;
    }
    w.flush()
}

/// A JSON array of objects keyed by the CSV column names. Non-finite numbers
/// become the strings `"NaN"`, `"inf"` and `"-inf"`.
pub fn write_json<W: Write>(rows: &[ReportRow], mut out: W) -> std::io::Result<()> {
    let mut docs = Vec::with_capacity(rows.len());
    for row in rows {
        let mut fields: Vec<(&str, Box<RawValue>)> = Vec::with_capacity(COLUMNS.len());
        for (name, cell) in COLUMNS.iter().zip(cells(row)) {
            let raw = match cell {
                Cell::Text(s) => serde_json::to_string(&s)?,
                Cell::Int(i) => i.to_string(),
                Cell::Num(x) if x.is_finite() => format_number(x),
                Cell::Num(x) => serde_json::to_string(&format_number(x))?,
            };
            fields.push((name, RawValue::from_string(raw).map_err(std::io::Error::other)?));
        }
        docs.push(fields);
    }
    let rendered: Vec<ordered::Object> = docs.into_iter().map(ordered::Object).collect();
    serde_json::to_writer_pretty(&mut out, &rendered)?;
    writeln!(out)
}

pub fn write_report<W: Write>(rows: &[ReportRow], format: OutputFormat, out: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_json(rows, out),
    }
}

/// Serializes ordered `(key, raw value)` pairs as a JSON object without
/// re-parsing the numbers.
mod ordered {
    use serde::ser::{Serialize, SerializeMap, Serializer};
    use serde_json::value::RawValue;

    pub struct Object<'a>(pub Vec<(&'a str, Box<RawValue>)>);

    impl Serialize for Object<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut map = s.serialize_map(Some(self.0.len()))?;
            for (k, v) in &self.0 {
                map.serialize_entry(k, v)?;
            }
            map.end()
        }
    }
}
