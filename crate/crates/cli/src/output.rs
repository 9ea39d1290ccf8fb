//! JSON and CSV emission.
//!
//! Floats are written with 17 significant digits in scientific notation so
//! output is byte-stable and round-trips exactly; non-finite values become
//! `null`. Complex numbers are `[re, im]` pairs.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

pub const CSV_VERSION: &str = "statdisc-csv/1";

struct FixedFloats;

fn write_float<W: ?Sized + Write>(w: &mut W, v: f64) -> io::Result<()> {
    if v.is_finite() {
        write!(w, "{v:.16e}")
    } else {
        w.write_all(b"null")
    }
}

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_float(w, v)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_float(w, v as f64)
    }
}

/// Compact JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn float(v: f64) -> String {
    let mut s = Vec::new();
    write_float(&mut s, v).expect("writing to a Vec");
    String::from_utf8(s).expect("ascii")
}

/// A CSV table with a version comment line.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&str]) -> Self {
        Self { name, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_bytes(&self) -> io::Result<Vec<u8>> {
        let mut out = format!("# {CSV_VERSION} {}\n", self.name).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header).map_err(io::Error::other)?;
            for r in &self.rows {
                w.write_record(r).map_err(io::Error::other)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

/// Flattens a JSON value into `key,value` rows; array entries get `.index`.
pub fn flatten(name: &'static str, value: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, x)| walk(&key(k), x, rows)),
            Value::Array(items) => items.iter().enumerate().for_each(|(i, x)| walk(&key(&i.to_string()), x, rows)),
            Value::Number(n) => rows.push(vec![prefix.to_string(), n.as_f64().map(float).unwrap_or_else(|| n.to_string())]),
            Value::Null => rows.push(vec![prefix.to_string(), String::new()]),
            Value::Bool(b) => rows.push(vec![prefix.to_string(), b.to_string()]),
            Value::String(s) => rows.push(vec![prefix.to_string(), s.clone()]),
        }
    }
    let mut t = Table::new(name, &["key", "value"]);
    walk("", value, &mut t.rows);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use statdisc_core::C64;

    #[test]
    fn seventeen_digits_and_pairs() {
        let out = to_json(&(0.6f64, C64::new(1.0, -0.5), f64::NAN)).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "[5.9999999999999998e-1,[1.0000000000000000e0,-5.0000000000000000e-1],null]\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }
}
