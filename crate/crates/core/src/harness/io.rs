//! Headerless numeric CSV for matrices and vectors, and the trace/certificate tables.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::diagnostics::BoundCertificate;
use crate::error::{Error, Result};
use crate::solvers::SolveTrace;

pub const TRACE_HEADER: [&str; 6] = [
    "iter",
    "objective",
    "rel_change",
    "feasibility_gap",
    "bound_lhs",
    "bound_rhs",
];
pub const CERTIFICATE_HEADER: [&str; 4] = ["N", "lhs", "rhs", "slack"];

fn parse_rows<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: {field:?} is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn parse_matrix<R: Read>(reader: R) -> Result<Array2<f64>> {
    let rows = parse_rows(reader)?;
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
        return Err(Error::Parse(format!(
            "line {} has {} fields, expected {n_cols}",
            bad + 1,
            rows[bad].len()
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n_rows, n_cols), flat).map_err(|e| Error::Parse(e.to_string()))
}

/// A vector stored either as one column or as one row.
pub fn parse_vector<R: Read>(reader: R) -> Result<Array1<f64>> {
    let m = parse_matrix(reader)?;
    match m.dim() {
        (_, 1) | (1, _) => Ok(m.iter().copied().collect()),
        (0, 0) => Ok(Array1::zeros(0)),
        (r, c) => Err(Error::Parse(format!("expected a vector, found a {r}×{c} matrix"))),
    }
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    parse_matrix(File::open(path)?)
}

pub fn read_vector(path: &Path) -> Result<Array1<f64>> {
    parse_vector(File::open(path)?)
}

pub fn write_matrix<W: Write>(out: W, m: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One value per line.
pub fn write_vector<W: Write>(out: W, v: ArrayView1<'_, f64>) -> Result<()> {
    let col = v.to_shape((v.len(), 1)).map_err(|e| Error::Parse(e.to_string()))?;
    write_matrix(out, col.view())
}

pub fn write_matrix_file(path: &Path, m: ArrayView2<'_, f64>) -> Result<()> {
    write_matrix(BufWriter::new(File::create(path)?), m)
}

pub fn write_vector_file(path: &Path, v: ArrayView1<'_, f64>) -> Result<()> {
    write_vector(BufWriter::new(File::create(path)?), v)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-iteration trace with the fixed header; absent values are left empty.
/// `certificates[k]` must describe iteration `k + 1` when given.
pub fn write_trace<W: Write>(
    out: W,
    trace: &SolveTrace,
    certificates: Option<&[BoundCertificate]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (k, r) in trace.records.iter().enumerate() {
        let cert = certificates.and_then(|c| c.get(k));
        w.write_record([
            r.iteration.to_string(),
            opt(r.objective),
            r.rel_change.to_string(),
            opt(r.feasibility_gap),
            opt(cert.map(|c| c.lhs)),
            opt(cert.map(|c| c.rhs)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(
    path: &Path,
    trace: &SolveTrace,
    certificates: Option<&[BoundCertificate]>,
) -> Result<()> {
    write_trace(BufWriter::new(File::create(path)?), trace, certificates)
}

/// Reads the `objective` column of a trace written by [`write_trace`].
pub fn read_trace_objectives<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "objective")
        .ok_or_else(|| Error::Parse("trace has no `objective` column".into()))?;
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let field = record.get(col).unwrap_or("");
        if field.is_empty() {
            return Err(Error::MissingObjectiveTrace);
        }
        out.push(field.parse::<f64>().map_err(|_| {
            Error::Parse(format!("trace line {}: {field:?} is not a number", line + 2))
        })?);
    }
    Ok(out)
}

pub fn write_certificates<W: Write>(out: W, certs: &[BoundCertificate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CERTIFICATE_HEADER)?;
    for c in certs {
        w.write_record([
            c.iteration.to_string(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.slack.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{IterationRecord, Termination};
    use ndarray::array;

    #[test]
    fn matrix_and_vector_parsing() {
        let m = parse_matrix("1, 2.5\n3,4e-1\n".as_bytes()).unwrap();
        assert_eq!(m, array![[1.0, 2.5], [3.0, 0.4]]);
        assert_eq!(parse_vector("1\n2\n3\n".as_bytes()).unwrap(), array![1.0, 2.0, 3.0]);
        assert_eq!(parse_vector("1,2,3\n".as_bytes()).unwrap(), array![1.0, 2.0, 3.0]);
        assert!(parse_vector("1,2\n3,4\n".as_bytes()).is_err());
        assert!(parse_matrix("1,2\n3\n".as_bytes()).is_err());
        assert!(parse_matrix("1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = array![[0.1, 1.0 / 3.0], [1e-300, 7.0]];
        let mut buf = Vec::new();
        write_matrix(&mut buf, m.view()).unwrap();
        assert_eq!(parse_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn trace_layout() {
        let trace = SolveTrace {
            initial_objective: Some(3.0),
            records: vec![
                IterationRecord {
                    iteration: 1,
                    objective: Some(2.0),
                    rel_change: 0.5,
                    feasibility_gap: None,
                },
                IterationRecord {
                    iteration: 2,
                    objective: Some(1.5),
                    rel_change: 0.25,
                    feasibility_gap: None,
                },
            ],
            termination: Termination::MaxIters,
            iterations: 2,
        };
        let certs = [BoundCertificate {
            iteration: 1,
            lhs: 1.0,
            rhs: 4.0,
            slack: 3.0,
        }];
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace, Some(&certs)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "iter,objective,rel_change,feasibility_gap,bound_lhs,bound_rhs\n1,2,0.5,,1,4\n2,1.5,0.25,,,\n"
        );
        assert_eq!(read_trace_objectives(buf.as_slice()).unwrap(), vec![2.0, 1.5]);
    }
}
