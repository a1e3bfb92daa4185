//! File formats: CSV matrices with a JSON sidecar, measure and trajectory
//! CSVs, and JSON-lines trajectories behind a header line.
//!
//! Signatures are written in their text encoding `λ1,λ2,…`; the CSV writer
//! quotes them. Floats use [`fmt_f64`], so equal values always produce
//! equal bytes.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Path;
use crate::generators::{Deformation, KernelKind, KernelMatrix, Measure};
use crate::signatures::{Signature, SignatureBox};
use crate::voiculescu::OmegaPoint;

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes (`3e-13`, `0.25`, `1.0`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `m` with signatures in the first row and column.
pub fn write_matrix_csv<W: Write>(w: W, m: &KernelMatrix) -> Result<()> {
    write_labeled_csv(w, &m.rows, &m.cols, &m.entries)
}

/// Writes `entries` labelled by the signatures of `rows` and `cols`.
pub fn write_labeled_csv<W: Write>(w: W, rows: &SignatureBox, cols: &SignatureBox, entries: &DMatrix<f64>) -> Result<()> {
    if entries.nrows() != rows.len() || entries.ncols() != cols.len() {
        return Err(Error::invalid(format!(
            "matrix is {}x{} but the boxes have {} rows and {} columns",
            entries.nrows(),
            entries.ncols(),
            rows.len(),
            cols.len()
        )));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![String::new()];
    header.extend(cols.items().iter().map(|s| s.to_string()));
    out.write_record(&header)?;
    for (i, lam) in rows.items().iter().enumerate() {
        let mut rec = vec![lam.to_string()];
        rec.extend(entries.row(i).iter().map(|v| fmt_f64(*v)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Matrix CSV as written by [`write_matrix_csv`]: row labels, column labels
/// and entries.
pub struct MatrixCsv {
    pub rows: Vec<Signature>,
    pub cols: Vec<Signature>,
    pub entries: DMatrix<f64>,
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<MatrixCsv> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let cols = header
        .iter()
        .skip(1)
        .map(|s| s.parse())
        .collect::<Result<Vec<Signature>>>()?;
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for rec in records {
        let rec = rec?;
        if rec.len() != cols.len() + 1 {
            return Err(Error::Parse(format!(
                "matrix row has {} fields, expected {}",
                rec.len(),
                cols.len() + 1
            )));
        }
        rows.push(rec[0].parse()?);
        for v in rec.iter().skip(1) {
            data.push(parse_f64(v)?);
        }
    }
    let entries = DMatrix::from_row_slice(rows.len(), cols.len(), &data);
    Ok(MatrixCsv { rows, cols, entries })
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub level: usize,
    pub lo: i64,
    pub hi: i64,
}

impl From<&SignatureBox> for BoxSpec {
    fn from(b: &SignatureBox) -> Self {
        BoxSpec {
            level: b.level(),
            lo: b.lo(),
            hi: b.hi(),
        }
    }
}

/// Metadata written next to a matrix CSV.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixSidecar {
    pub kind: KernelKind,
    pub omega: Option<OmegaPoint>,
    pub level: usize,
    pub q: Deformation,
    pub rows: BoxSpec,
    pub cols: BoxSpec,
    pub route: String,
    pub radius: Option<(i64, i64)>,
    /// Certified bound on the mass lost from an interior row.
    pub escape_bound: f64,
    pub interior_rows: usize,
    /// Largest `1 − Σ_μ` over interior rows of the transition form.
    pub max_interior_deficit: f64,
    /// Largest `1 − Σ_μ` over all rows.
    pub max_deficit: f64,
}

impl MatrixSidecar {
    pub fn of(m: &KernelMatrix) -> Self {
        let deficits = match m.kind {
            KernelKind::Generator => m.transition().deficits(),
            _ => m.deficits(),
        };
        let interior = m.interior_rows();
        let max_interior_deficit = interior.iter().map(|&i| deficits[i]).fold(0.0, f64::max);
        MatrixSidecar {
            kind: m.kind,
            omega: m.meta.omega.clone(),
            level: m.meta.level,
            q: m.meta.q,
            rows: (&m.rows).into(),
            cols: (&m.cols).into(),
            route: m.meta.route.clone(),
            radius: m.meta.radius,
            escape_bound: m.meta.escape_bound,
            interior_rows: interior.len(),
            max_interior_deficit,
            max_deficit: deficits.iter().copied().fold(0.0, f64::max),
        }
    }
}

pub fn write_sidecar<W: Write>(mut w: W, m: &KernelMatrix) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &MatrixSidecar::of(m))?;
    writeln!(w)?;
    Ok(())
}

/// `signature,probability` rows for the states of `m` (zeros included).
pub fn write_measure_csv<W: Write>(w: W, m: &Measure) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["signature", "probability"])?;
    for (s, p) in m.states.items().iter().zip(&m.probs) {
        out.write_record([s.to_string(), fmt_f64(*p)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `signature,probability` rows; the header line is required.
pub fn read_measure_csv<R: Read>(r: R) -> Result<Vec<(Signature, f64)>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "signature" || &header[1] != "probability" {
        return Err(Error::Parse(format!(
            "measure CSV must start with the header signature,probability, got {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push((rec[0].parse()?, parse_f64(&rec[1])?));
    }
    Ok(out)
}

/// Places `weights` on `states`; every weighted signature must lie in the box.
pub fn measure_on_box(states: &SignatureBox, weights: &[(Signature, f64)]) -> Result<Measure> {
    let mut probs = vec![0.0; states.len()];
    for (s, p) in weights {
        if !(p.is_finite() && *p >= 0.0) {
            return Err(Error::invalid(format!("probability of {s} must be nonnegative, got {p}")));
        }
        let i = states.index_of(s).ok_or_else(|| {
            Error::invalid(format!(
                "{s} is outside the box (N={}, [{}, {}])",
                states.level(),
                states.lo(),
                states.hi()
            ))
        })?;
        probs[i] += p;
    }
    Ok(Measure {
        states: states.clone(),
        probs,
    })
}

/// `time,signature` rows, one per recorded state change.
pub fn write_path_csv<W: Write>(w: W, path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "signature"])?;
    for (t, s) in path {
        out.write_record([fmt_f64(*t), s.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(r: R) -> Result<Path> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push((parse_f64(&rec[0])?, rec[1].parse()?));
    }
    Ok(out)
}

/// JSON-lines output: a header object carrying the seed, then one record
/// per line.
pub struct JsonLines<W: Write> {
    out: W,
}

impl<W: Write> JsonLines<W> {
    pub fn new<H: Serialize>(mut out: W, header: &H) -> Result<Self> {
        serde_json::to_writer(&mut out, header)?;
        writeln!(out)?;
        Ok(JsonLines { out })
    }

    pub fn record<T: Serialize>(&mut self, rec: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, rec)?;
        writeln!(self.out)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generator_un;
    use crate::GTPattern;

    fn sig(p: &[i64]) -> Signature {
        Signature::new(p.to_vec()).unwrap()
    }

    #[test]
    fn matrix_round_trip() {
        let bx = SignatureBox::new(2, -1, 1).unwrap();
        let q = generator_un(&OmegaPoint::pure_beta_plus(0.3), 2, &bx).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &q).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(",\"1,1\",\"1,0\""));
        let back = read_matrix_csv(&buf[..]).unwrap();
        assert_eq!(back.rows, bx.items());
        assert_eq!(back.entries, q.entries);
        let mut side = Vec::new();
        write_sidecar(&mut side, &q).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&side).unwrap();
        assert_eq!(v["kind"], "generator");
        assert_eq!(v["q"], "classical");
        assert_eq!(v["rows"]["lo"], -1);
    }

    #[test]
    fn measure_round_trip_and_support_check() {
        let bx = SignatureBox::new(1, 0, 3).unwrap();
        let m = measure_on_box(&bx, &[(sig(&[1]), 0.25), (sig(&[3]), 0.75)]).unwrap();
        let mut buf = Vec::new();
        write_measure_csv(&mut buf, &m).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "signature,probability\n3,0.75\n2,0.0\n1,0.25\n0,0.0\n"
        );
        let w = read_measure_csv(&buf[..]).unwrap();
        assert_eq!(measure_on_box(&bx, &w).unwrap().probs, m.probs);
        assert!(measure_on_box(&bx, &[(sig(&[4]), 1.0)]).is_err());
        assert!(read_measure_csv("sig,p\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn small_values_use_exponents() {
        assert_eq!(fmt_f64(3e-13), "3e-13");
        assert_eq!(fmt_f64(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(fmt_f64(3e-13).parse::<f64>().unwrap(), 3e-13);
    }

    #[test]
    fn path_and_jsonl_formats() {
        let path = vec![(0.0, sig(&[1, 0])), (0.5, sig(&[2, 0]))];
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &path).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "time,signature\n0.0,\"1,0\"\n0.5,\"2,0\"\n");
        assert_eq!(read_path_csv(&buf[..]).unwrap(), path);

        let mut jl = JsonLines::new(Vec::new(), &serde_json::json!({"seed": 5})).unwrap();
        let p = GTPattern::new(vec![sig(&[1]), sig(&[1, 0])]).unwrap();
        jl.record(&p).unwrap();
        let text = String::from_utf8(jl.finish().unwrap()).unwrap();
        assert_eq!(text, "{\"seed\":5}\n[[1],[1,0]]\n");
    }
}
