//! CSV datasets and JSON documents.
//!
//! Dataset CSV has the header `x1,...,xd,y,z1,...,zdp`, one record per line.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::partition::Dataset;

/// Dimensions `(d, d')` encoded by a dataset header.
pub fn parse_header(fields: &[&str]) -> Result<(usize, usize)> {
    let bad = |msg: String| Error::Parse { line: 1, message: msg };
    let d = fields
        .iter()
        .position(|f| f.trim() == "y")
        .ok_or_else(|| bad("header has no `y` column".into()))?;
    let d_prime = fields.len() - d - 1;
    for (i, f) in fields[..d].iter().enumerate() {
        if f.trim() != format!("x{}", i + 1) {
            return Err(bad(format!("expected column x{} but found `{f}`", i + 1)));
        }
    }
    for (i, f) in fields[d + 1..].iter().enumerate() {
        if f.trim() != format!("z{}", i + 1) {
            return Err(bad(format!("expected column z{} but found `{f}`", i + 1)));
        }
    }
    Ok((d, d_prime))
}

pub fn header(d: usize, d_prime: usize) -> String {
    (1..=d)
        .map(|i| format!("x{i}"))
        .chain(std::iter::once("y".to_string()))
        .chain((1..=d_prime).map(|i| format!("z{i}")))
        .collect::<Vec<_>>()
        .join(",")
}

/// Reads a dataset; `dims`, when given, must agree with the header.
pub fn read_dataset_csv<R: Read>(reader: R, dims: Option<(usize, usize)>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let head = rdr.headers()?.clone();
    let fields: Vec<&str> = head.iter().collect();
    let (d, d_prime) = parse_header(&fields)?;
    if let Some(expected) = dims {
        if expected != (d, d_prime) {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "header encodes d = {d}, d' = {d_prime}; expected d = {}, d' = {}",
                    expected.0, expected.1
                ),
            });
        }
    }
    let width = d + 1 + d_prime;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("field {} = `{field}` is not a number", j + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("field {} = `{field}` is not finite", j + 1),
                });
            }
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(d, d_prime, values)
}

pub fn write_dataset_csv<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    let mut buf = String::with_capacity(data.values().len() * 20);
    buf.push_str(&header(data.d(), data.d_prime()));
    buf.push('\n');
    for row in data.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                buf.push(',');
            }
            buf.push_str(&v.to_string());
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn dataset_to_csv_string(data: &Dataset) -> String {
    let mut buf = Vec::new();
    write_dataset_csv(data, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Parses JSON, reporting the field path of the first violation.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema {
            path: if path == "." { "document".into() } else { path },
            message: e.inner().to_string(),
        }
    })
}

pub fn read_json<T: DeserializeOwned, R: Read>(mut reader: R) -> Result<T> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    from_json_str(&text)
}
