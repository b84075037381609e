//! Matrix file formats.
//!
//! `CMX1` is a little-endian binary layout: the four magic bytes `CMX1`,
//! `rows` and `cols` as `u64`, then `rows * cols` IEEE-754 doubles in
//! row-major order.
//!
//! The CSV layout starts with a single `rows,cols` line giving the shape,
//! followed by one line per matrix row.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CcmError, Result};
use crate::matrix::Matrix;

pub const CMX1_MAGIC: &[u8; 4] = b"CMX1";

pub fn write_cmx1<W: Write>(m: &Matrix, mut w: W) -> Result<()> {
    w.write_all(CMX1_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cmx1<R: Read>(mut r: R) -> Result<Matrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CMX1_MAGIC {
        return Err(CcmError::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word);
    let len = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| CcmError::Format(format!("shape {rows}x{cols} too large")))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(CcmError::Format(format!("{} trailing bytes", rest.len())));
    }
    Matrix::new(rows as usize, cols as usize, data)
}

pub fn save_cmx1(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    write_cmx1(m, BufWriter::new(File::create(path)?))
}

pub fn load_cmx1(path: impl AsRef<Path>) -> Result<Matrix> {
    read_cmx1(BufReader::new(File::open(path)?))
}

pub fn write_csv<W: Write>(m: &Matrix, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    out.write_record([m.rows().to_string(), m.cols().to_string()])?;
    for i in 0..m.rows() {
        // `{:?}` prints the shortest representation that round-trips.
        out.write_record(m.row(i).iter().map(|v| format!("{v:?}")))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| CcmError::Format("empty csv".into()))??;
    if header.len() != 2 {
        return Err(CcmError::Format("first line must be rows,cols".into()));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| CcmError::Format(format!("bad dimension {s:?}: {e}")))
    };
    let (rows, cols) = (parse_dim(&header[0])?, parse_dim(&header[1])?);
    let mut data = Vec::with_capacity(rows.saturating_mul(cols));
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(CcmError::Format(format!(
                "row {i} has {} values, expected {cols}",
                rec.len()
            )));
        }
        for field in rec.iter() {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|e| CcmError::Format(format!("bad value {field:?}: {e}")))?,
            );
        }
    }
    if data.len() != rows * cols {
        return Err(CcmError::Format(format!(
            "expected {rows} rows, found {}",
            data.len() / cols.max(1)
        )));
    }
    Matrix::new(rows, cols, data)
}

pub fn save_csv(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    write_csv(m, BufWriter::new(File::create(path)?))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    read_csv(BufReader::new(File::open(path)?))
}

/// Load by extension: `.csv` is CSV, anything else CMX1.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => load_csv(path),
        _ => load_cmx1(path),
    }
}
