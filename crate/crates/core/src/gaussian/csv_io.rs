use nalgebra::DMatrix;

use super::CovMatrix;
use crate::error::{Error, Result};

/// Reads a labelled covariance matrix: a header row of labels followed by
/// one numeric row per vertex.
pub fn read_cov_csv(src: &str) -> Result<CovMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let n = labels.len();
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if rec.len() != n {
            return Err(Error::Parse {
                line,
                msg: format!("expected {n} fields, found {}", rec.len()),
            });
        }
        for field in rec.iter() {
            let x: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("not a number: `{field}`"),
            })?;
            values.push(x);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::SizeMismatch(format!("{n} labels but {rows} rows")));
    }
    CovMatrix::new(labels, DMatrix::from_row_slice(n, n, &values))
}

/// Writes the matrix with 17 significant digits, enough to round-trip `f64`.
pub fn write_cov_csv(s: &CovMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(s.labels()).expect("in-memory write");
    for i in 0..s.n() {
        let row: Vec<String> = (0..s.n()).map(|j| format!("{:.16e}", s.get(i, j))).collect();
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}
