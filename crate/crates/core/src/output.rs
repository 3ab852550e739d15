//! CSV files written by the harness. Each starts with a `# hvi-… v1` line;
//! readers skip `#` lines. Missing values are empty cells.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::solver::TraceRecord;

pub const TRACE_MAGIC: &str = "# hvi-trace v1";
pub const AUX_MAGIC: &str = "# hvi-aux v1";
pub const SWEEP_MAGIC: &str = "# hvi-sweep v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    k: usize,
    t: f64,
    sigma: f64,
    step_norm: f64,
    feas_gap: Option<f64>,
    opt_gap: Option<f64>,
    dist: Option<f64>,
    #[serde(rename = "E")]
    e: Option<f64>,
    #[serde(rename = "D")]
    d: Option<f64>,
    #[serde(rename = "W")]
    w: Option<f64>,
    resid: Option<f64>,
}

const TRACE_HEADER: [&str; 11] = [
    "k",
    "t",
    "sigma",
    "step_norm",
    "feas_gap",
    "opt_gap",
    "dist",
    "E",
    "D",
    "W",
    "resid",
];

/// One row of the long-format sweep table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub k: usize,
    pub feas_gap: Option<f64>,
    pub opt_gap: Option<f64>,
    pub dist: Option<f64>,
}

fn writer<W: Write>(mut w: W, magic: &str) -> Result<csv::Writer<W>> {
    writeln!(w, "{magic}")?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(w))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

pub fn write_trace<W: Write>(w: W, records: &[TraceRecord]) -> Result<()> {
    let mut out = writer(w, TRACE_MAGIC)?;
    out.write_record(TRACE_HEADER)?;
    for r in records {
        out.serialize(TraceRow {
            k: r.k,
            t: r.t,
            sigma: r.sigma,
            step_norm: r.step_norm,
            feas_gap: r.feas_gap,
            opt_gap: r.opt_gap,
            dist: r.dist,
            e: r.e,
            d: r.d,
            w: r.w,
            resid: r.resid,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a trace back. `aux` is not part of the trace file and comes back
/// as `None`.
pub fn read_trace<R: Read>(r: R) -> Result<Vec<TraceRecord>> {
    reader(r)
        .deserialize::<TraceRow>()
        .map(|row| {
            let r = row?;
            Ok(TraceRecord {
                k: r.k,
                t: r.t,
                sigma: r.sigma,
                step_norm: r.step_norm,
                feas_gap: r.feas_gap,
                opt_gap: r.opt_gap,
                dist: r.dist,
                e: r.e,
                d: r.d,
                w: r.w,
                resid: r.resid,
                aux: None,
            })
        })
        .collect()
}

/// `k,aux` rows for records that carry a monitor value.
pub fn write_aux<W: Write>(w: W, monitor: &str, records: &[TraceRecord]) -> Result<()> {
    let mut out = writer(w, &format!("{AUX_MAGIC}\n# monitor: {monitor}"))?;
    out.write_record(["k", "aux"])?;
    for r in records {
        if let Some(a) = r.aux {
            out.serialize((r.k, a))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_aux<R: Read>(r: R) -> Result<Vec<(usize, f64)>> {
    Ok(reader(r).deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_sweep<W: Write>(w: W, points: &[SweepPoint]) -> Result<()> {
    let mut out = writer(w, SWEEP_MAGIC)?;
    out.write_record(["delta", "k", "feas_gap", "opt_gap", "dist"])?;
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sweep<R: Read>(r: R) -> Result<Vec<SweepPoint>> {
    Ok(reader(r).deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Create `path` and hand a buffered writer to `f`.
pub fn to_file(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    f(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize, gap: Option<f64>) -> TraceRecord {
        TraceRecord {
            k,
            t: 0.1,
            sigma: 1.0 / 3.0,
            step_norm: 1e-300,
            feas_gap: gap,
            opt_gap: Some(-2.5),
            dist: None,
            e: Some(f64::INFINITY),
            d: None,
            w: None,
            resid: Some(-1e-17),
            aux: None,
        }
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let recs = vec![rec(1, Some(0.123456789012345)), rec(2, None)];
        let mut buf = Vec::new();
        write_trace(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# hvi-trace v1\nk,t,sigma,step_norm,feas_gap,opt_gap,dist,E,D,W,resid\n"));
        assert_eq!(read_trace(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn empty_trace_has_header_only() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 2);
        assert!(read_trace(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn aux_and_sweep_round_trip() {
        let mut recs = vec![rec(5, None), rec(9, None)];
        recs[1].aux = Some(6.8e-4);
        let mut buf = Vec::new();
        write_aux(&mut buf, "ave_residual", &recs).unwrap();
        assert_eq!(read_aux(&buf[..]).unwrap(), vec![(9, 6.8e-4)]);

        let pts = vec![SweepPoint {
            delta: 0.3,
            k: 1000,
            feas_gap: Some(1.5),
            opt_gap: None,
            dist: Some(2.0),
        }];
        let mut buf = Vec::new();
        write_sweep(&mut buf, &pts).unwrap();
        assert_eq!(read_sweep(&buf[..]).unwrap(), pts);
    }
}
