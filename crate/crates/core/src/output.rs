//! CSV and JSON artifacts.
//!
//! CSV files start with one `#` comment line holding the metadata block as
//! compact JSON, then a header row, then comma-separated rows in scientific
//! notation with 9 significant digits. JSON documents are pretty-printed
//! objects with a `metadata` key. Maps are key-sorted, so identical inputs
//! give byte-identical files.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::contour::{ContourResult, OrientationScan};
use crate::error::Error;
use crate::scenarios::SpectrumMap;

/// Metadata block echoed into every artifact.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub scenario: String,
    pub artifact: String,
    /// `key=value` overrides applied after the config file, verbatim.
    pub overrides: BTreeMap<String, String>,
    /// Anything else worth recording (argmax, units, ...).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

/// Machine-readable failure record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// Stable error name, e.g. `ConfigInvalid`.
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self { error: e.name().into(), message: e.to_string() }
    }
}

/// Scientific notation with 9 significant digits.
pub fn sci(x: f64) -> String {
    if x == 0.0 {
        // normalise -0
        return format!("{:.8e}", 0.0);
    }
    format!("{x:.8e}")
}

/// A header row plus numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub fn write_csv<W: Write>(mut w: W, meta: &Metadata, table: &Table) -> io::Result<()> {
    let json = serde_json::to_string(meta).map_err(io::Error::other)?;
    writeln!(w, "# {json}")?;
    writeln!(w, "{}", table.header.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&v| sci(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn csv_string(meta: &Metadata, table: &Table) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, meta, table).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// `{"metadata": ..., <body fields>}` pretty-printed with a trailing newline.
pub fn json_string<T: Serialize>(meta: &Metadata, body: &T) -> serde_json::Result<String> {
    let mut doc = match serde_json::to_value(body)? {
        serde_json::Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    doc.insert("metadata".into(), serde_json::to_value(meta)?);
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
    s.push('\n');
    Ok(s)
}

/// theta2_deg, lambda2_nm, lambda1_nm, theta1_deg, weight
pub fn contour_table(c: &ContourResult, lambda: impl Fn(f64) -> f64) -> Table {
    Table {
        header: vec!["theta2_deg", "lambda2_nm", "lambda1_nm", "theta1_deg", "weight"],
        rows: c
            .points
            .iter()
            .map(|p| {
                vec![
                    p.theta2.to_degrees(),
                    lambda(p.omega2) * 1e9,
                    lambda(p.omega1) * 1e9,
                    p.theta1.to_degrees(),
                    p.jacobian_weight,
                ]
            })
            .collect(),
    }
}

pub fn orientation_table(s: &OrientationScan) -> Table {
    Table {
        header: vec!["theta_c_deg", "singles_density"],
        rows: s.points.iter().map(|&(t, v)| vec![t.to_degrees(), v]).collect(),
    }
}

/// Long format, wavelength-major.
pub fn spectrum_table(m: &SpectrumMap) -> Table {
    let mut rows = Vec::with_capacity(m.wavelengths.len() * m.thetas.len());
    for (i, &l) in m.wavelengths.iter().enumerate() {
        for (j, &t) in m.thetas.iter().enumerate() {
            rows.push(vec![l * 1e9, t.to_degrees(), m.values[i][j]]);
        }
    }
    Table { header: vec!["lambda_nm", "theta_deg", "density"], rows }
}
