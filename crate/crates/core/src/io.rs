//! CSV and JSON encodings of grid functions and tables.
//!
//! Numbers are written with 17 significant digits so that reading a file back
//! reproduces every `f64` bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridFunction1D, Interval};

/// Formats a float with 17 significant digits (`1.2345678901234567e-3`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV table with the given header and numeric columns of equal length.
pub fn write_table<W: Write>(w: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    assert_eq!(header.len(), columns.len());
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::invalid("table columns differ in length"));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for r in 0..rows {
        wtr.write_record(columns.iter().map(|c| fmt_f64(c[r])))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_table_file(path: impl AsRef<Path>, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_table(std::io::BufWriter::new(f), header, columns)
}

/// Writes `g` as a two-column CSV with header `x,value`.
pub fn write_grid_csv<W: Write>(w: W, g: &GridFunction1D) -> Result<()> {
    let xs: Vec<f64> = g.nodes().collect();
    write_table(w, &["x", "value"], &[&xs, g.values()])
}

/// Reads a grid function from a CSV with header `x,value`; the interval is
/// taken from the first and last `x`, and the spacing must be uniform.
pub fn read_grid_csv<R: Read>(r: R) -> Result<GridFunction1D> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let xi = column_index(&headers, "x")?;
    let vi = column_index(&headers, "value")?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        xs.push(parse_field(&rec, xi)?);
        vs.push(parse_field(&rec, vi)?);
    }
    if xs.len() < 2 {
        return Err(Error::InvalidGrid(format!("{} rows", xs.len())));
    }
    let interval = Interval::new(xs[0], xs[xs.len() - 1])?;
    let g = GridFunction1D::new(interval, vs)?;
    let tol = 1e-9 * g.h();
    for (i, &x) in xs.iter().enumerate() {
        if (x - g.x(i)).abs() > tol {
            return Err(Error::InvalidGrid(format!(
                "non-uniform spacing: row {i} has x = {x}, expected {}",
                g.x(i)
            )));
        }
    }
    Ok(g)
}

pub fn read_grid_csv_file(path: impl AsRef<Path>) -> Result<GridFunction1D> {
    read_grid_csv(std::fs::File::open(path)?)
}

pub fn write_grid_json<W: Write>(w: W, g: &GridFunction1D) -> Result<()> {
    serde_json::to_writer(w, g)?;
    Ok(())
}

pub fn read_grid_json<R: Read>(r: R) -> Result<GridFunction1D> {
    Ok(serde_json::from_reader(r)?)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::InvalidGrid(format!("missing CSV column {name:?}")))
}

fn parse_field(rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let s = rec
        .get(i)
        .ok_or_else(|| Error::InvalidGrid("short CSV row".into()))?;
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidGrid(format!("cannot parse {s:?} as a number")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_header_and_shape() {
        let g = GridFunction1D::from_fn(Interval::unit(), 4, |x| x * x).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,value\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn json_layout() {
        let g = GridFunction1D::from_fn(Interval::unit(), 2, |x| x).unwrap();
        let mut buf = Vec::new();
        write_grid_json(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            r#"{"interval":[0.0,1.0],"n":2,"values":[0.0,0.5,1.0]}"#
        );
        let bad = r#"{"interval":[0.0,1.0],"n":3,"values":[0.0,0.5,1.0]}"#;
        assert!(read_grid_json(bad.as_bytes()).is_err());
    }

    #[test]
    fn rejects_nonuniform_csv() {
        let text = "x,value\n0,1\n0.2,1\n1,1\n";
        assert!(read_grid_csv(text.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_and_json_roundtrip_bit_exact(
            lo in -10.0f64..10.0,
            len in 1e-3f64..10.0,
            vals in prop::collection::vec(-1e6f64..1e6, 2..40),
        ) {
            let g = GridFunction1D::new(Interval::new(lo, lo + len).unwrap(), vals).unwrap();
            let mut buf = Vec::new();
            write_grid_csv(&mut buf, &g).unwrap();
            let back = read_grid_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.values(), g.values());
            prop_assert_eq!(back.interval(), g.interval());

            let mut buf = Vec::new();
            write_grid_json(&mut buf, &g).unwrap();
            let back = read_grid_json(buf.as_slice()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
