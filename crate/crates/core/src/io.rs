//! On-disk formats: raw traces, phase-scan CSV and double-homodyne CSV.
//!
//! Data files are written with shortest round-trip float formatting so that a
//! write → read cycle is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{DhdBatch, HomodyneScan};
use crate::error::{Error, Result};
use crate::simulator::RawTrace;

pub const TRACE_MAGIC: &str = "squeezelab-trace v1";
pub const SCAN_HEADER: [&str; 2] = ["psi_rad", "q"];
pub const DHD_HEADER: [&str; 2] = ["q1", "p2"];

/// Which kind of data a CSV file holds, detected from its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Scan,
    Dhd,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

/// Header line `squeezelab-trace v1, rate_hz=<int>, count=<int>` followed by
/// little-endian `f32` samples.
pub fn write_trace(path: &Path, trace: &RawTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(w, "{TRACE_MAGIC}, rate_hz={}, count={}", trace.sample_rate_hz, trace.samples.len())
        .map_err(|e| io_err(path, e))?;
    for x in &trace.samples {
        w.write_all(&x.to_le_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_trace(path: &Path) -> Result<RawTrace> {
    let mut r = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut header = Vec::new();
    r.read_until(b'\n', &mut header).map_err(|e| io_err(path, e))?;
    let header = std::str::from_utf8(&header)
        .map_err(|_| parse_err(path, 1, "trace header is not UTF-8"))?
        .trim_end();
    let (sample_rate_hz, count) = parse_trace_header(header).ok_or_else(|| {
        parse_err(path, 1, format!("expected `{TRACE_MAGIC}, rate_hz=<int>, count=<int>`, got `{header}`"))
    })?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| io_err(path, e))?;
    if bytes.len() != count * 4 {
        return Err(parse_err(
            path,
            1,
            format!("header declares {count} samples but payload holds {} bytes", bytes.len()),
        ));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(RawTrace { sample_rate_hz, samples })
}

fn parse_trace_header(header: &str) -> Option<(u64, usize)> {
    let mut parts = header.split(',').map(str::trim);
    if parts.next()? != TRACE_MAGIC {
        return None;
    }
    let rate = parts.next()?.strip_prefix("rate_hz=")?.parse().ok()?;
    let count = parts.next()?.strip_prefix("count=")?.parse().ok()?;
    parts.next().is_none().then_some((rate, count))
}

/// True if the file starts with the trace magic.
pub fn is_trace_file(path: &Path) -> Result<bool> {
    let mut buf = vec![0u8; TRACE_MAGIC.len()];
    let mut f = File::open(path).map_err(|e| io_err(path, e))?;
    match f.read_exact(&mut buf) {
        Ok(()) => Ok(buf == TRACE_MAGIC.as_bytes()),
        Err(_) => Ok(false),
    }
}

fn write_pairs(
    path: &Path,
    comment: Option<&str>,
    header: [&str; 2],
    rows: impl Iterator<Item = (f64, f64)>,
) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for line in comment.into_iter().flat_map(str::lines) {
        writeln!(file, "# {line}").map_err(|e| io_err(path, e))?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()]).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn read_pairs(path: &Path) -> Result<(DataKind, Vec<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let headers = r.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let kind = if cols == SCAN_HEADER {
        DataKind::Scan
    } else if cols == DHD_HEADER {
        DataKind::Dhd
    } else {
        return Err(parse_err(
            path,
            headers.position().map_or(1, |p| p.line()),
            format!("unrecognized header {cols:?}; expected `psi_rad,q` or `q1,p2`"),
        ));
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, got {}", rec.len())));
        }
        let field = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| parse_err(path, line, format!("`{}` is not a number", &rec[i])))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite value `{}`", &rec[i])));
            }
            Ok(v)
        };
        a.push(field(0)?);
        b.push(field(1)?);
    }
    Ok((kind, a, b))
}

/// Writes a `psi_rad,q` CSV. Each line of `comment` becomes a leading `# `
/// line, which the readers skip.
pub fn write_scan(path: &Path, scan: &HomodyneScan<f64>, comment: Option<&str>) -> Result<()> {
    write_pairs(path, comment, SCAN_HEADER, scan.iter())
}

/// Writes a `q1,p2` CSV; see [`write_scan`] for `comment`.
pub fn write_dhd(path: &Path, batch: &DhdBatch<f64>, comment: Option<&str>) -> Result<()> {
    write_pairs(path, comment, DHD_HEADER, batch.iter())
}

/// Parsed contents of a data file.
#[derive(Debug, Clone, PartialEq)]
pub enum DataFile {
    Scan(HomodyneScan<f64>),
    Dhd(DhdBatch<f64>),
    Trace(RawTrace),
}

/// Reads a scan CSV, DHD CSV or raw trace, detecting the format from the
/// file contents.
pub fn read_data(path: &Path) -> Result<DataFile> {
    if is_trace_file(path)? {
        return read_trace(path).map(DataFile::Trace);
    }
    let (kind, a, b) = read_pairs(path)?;
    if a.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    Ok(match kind {
        DataKind::Scan => DataFile::Scan(HomodyneScan::new(a, b)?),
        DataKind::Dhd => DataFile::Dhd(DhdBatch::new(a, b)?),
    })
}

pub fn read_scan(path: &Path) -> Result<HomodyneScan<f64>> {
    match read_data(path)? {
        DataFile::Scan(s) => Ok(s),
        _ => Err(parse_err(path, 1, "expected a phase-scan file with header `psi_rad,q`")),
    }
}

pub fn read_dhd(path: &Path) -> Result<DhdBatch<f64>> {
    match read_data(path)? {
        DataFile::Dhd(b) => Ok(b),
        _ => Err(parse_err(path, 1, "expected a double-homodyne file with header `q1,p2`")),
    }
}
